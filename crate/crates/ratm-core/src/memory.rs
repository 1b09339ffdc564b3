//! View-based operational semantics for release/acquire/relaxed atomics.
//!
//! Timestamps are represented by positions in a per-location modification
//! order. A fresh write is inserted directly after a chosen predecessor, so
//! enumerating predecessors enumerates every legal timestamp.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::{Loc, ThreadId, Value};

/// Identifier of a write event, stable for the lifetime of a state lineage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WriteId(pub u32);

impl WriteId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

/// A total map from location to write.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct View(Vec<WriteId>);

impl View {
    pub fn get(&self, x: Loc) -> WriteId {
        self.0[x]
    }

    pub fn set(&mut self, x: Loc, w: WriteId) {
        self.0[x] = w;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = WriteId> + '_ {
        self.0.iter().copied()
    }

    pub fn renamed(&self, renaming: &Renaming) -> View {
        View(self.0.iter().map(|w| renaming.apply(*w)).collect())
    }
}

/// A write event as seen from outside the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Write {
    pub id: WriteId,
    pub loc: Loc,
    pub val: Value,
    pub release: bool,
}

/// Maps write ids of one state onto the canonical numbering of
/// [`ClientMemoryState::canonical`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Renaming(Vec<WriteId>);

impl Renaming {
    pub fn apply(&self, w: WriteId) -> WriteId {
        self.0[w.index()]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct WriteRecord {
    loc: Loc,
    val: Value,
    release: bool,
    pos: u32,
    mview: View,
    /// The update that consumed this write, if any.
    covered_by: Option<WriteId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MemoryError {
    #[error("writes {0:?} and {1:?} are to different locations")]
    LocationMismatch(WriteId, WriteId),
    #[error("write {write:?} is not observable by thread {thread} at location {loc}")]
    NotObservable { thread: ThreadId, loc: Loc, write: WriteId },
    #[error("write {0:?} is covered by an update")]
    Covered(WriteId),
    #[error("write {0:?} does not exist")]
    UnknownWrite(WriteId),
}

/// Outcome of a compare-and-swap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmwOutcome {
    Success(WriteId),
    /// The update read a write whose value differed from the expected one.
    Failure(Value),
}

/// Writes, modification order, thread views, modification views and the
/// covered set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClientMemoryState {
    writes: Vec<WriteRecord>,
    mo: Vec<Vec<WriteId>>,
    tview: Vec<View>,
}

impl ClientMemoryState {
    /// One initial write of 0 per location; every view points at them.
    pub fn new(num_locs: usize, num_threads: usize) -> Self {
        let init = View((0..num_locs as u32).map(WriteId).collect());
        let writes = (0..num_locs)
            .map(|loc| WriteRecord { loc, val: 0, release: false, pos: 0, mview: init.clone(), covered_by: None })
            .collect();
        ClientMemoryState {
            writes,
            mo: (0..num_locs as u32).map(|i| alloc::vec![WriteId(i)]).collect(),
            tview: alloc::vec![init; num_threads],
        }
    }

    pub fn num_locs(&self) -> usize {
        self.mo.len()
    }

    pub fn num_threads(&self) -> usize {
        self.tview.len()
    }

    pub fn num_writes(&self) -> usize {
        self.writes.len()
    }

    fn rec(&self, w: WriteId) -> Result<&WriteRecord, MemoryError> {
        self.writes.get(w.index()).ok_or(MemoryError::UnknownWrite(w))
    }

    pub fn write(&self, w: WriteId) -> Write {
        let r = &self.writes[w.index()];
        Write { id: w, loc: r.loc, val: r.val, release: r.release }
    }

    pub fn writes(&self) -> impl Iterator<Item = Write> + '_ {
        (0..self.writes.len() as u32).map(|i| self.write(WriteId(i)))
    }

    pub fn val(&self, w: WriteId) -> Value {
        self.writes[w.index()].val
    }

    pub fn loc(&self, w: WriteId) -> Loc {
        self.writes[w.index()].loc
    }

    pub fn is_released(&self, w: WriteId) -> bool {
        self.writes[w.index()].release
    }

    pub fn is_covered(&self, w: WriteId) -> bool {
        self.writes[w.index()].covered_by.is_some()
    }

    pub fn covered_by(&self, w: WriteId) -> Option<WriteId> {
        self.writes[w.index()].covered_by
    }

    pub fn covered(&self) -> BTreeSet<WriteId> {
        self.writes().filter(|w| self.is_covered(w.id)).map(|w| w.id).collect()
    }

    pub fn mview(&self, w: WriteId) -> &View {
        &self.writes[w.index()].mview
    }

    pub fn tview(&self, t: ThreadId) -> &View {
        &self.tview[t]
    }

    /// The initial-writes view, minimal in every location.
    pub fn initial_view(&self) -> View {
        View(self.mo.iter().map(|seq| seq[0]).collect())
    }

    pub fn mo(&self, x: Loc) -> &[WriteId] {
        &self.mo[x]
    }

    /// The modification-order-last write to `x`.
    pub fn last(&self, x: Loc) -> WriteId {
        *self.mo[x].last().expect("every location has an initial write")
    }

    pub fn last_val(&self, x: Loc) -> Value {
        self.val(self.last(x))
    }

    pub fn position(&self, w: WriteId) -> usize {
        self.writes[w.index()].pos as usize
    }

    /// Timestamp comparison on two writes to the same location.
    pub fn tst_leq(&self, w1: WriteId, w2: WriteId) -> Result<bool, MemoryError> {
        let (a, b) = (self.rec(w1)?, self.rec(w2)?);
        if a.loc != b.loc {
            return Err(MemoryError::LocationMismatch(w1, w2));
        }
        Ok(a.pos <= b.pos)
    }

    /// Writes to `x` no older than `t`'s view of `x`, in modification order.
    pub fn observable_writes(&self, t: ThreadId, x: Loc) -> &[WriteId] {
        let from = self.position(self.tview[t].get(x));
        &self.mo[x][from..]
    }

    pub fn observable_values(&self, t: ThreadId, x: Loc) -> BTreeSet<Value> {
        self.observable_writes(t, x).iter().map(|w| self.val(*w)).collect()
    }

    pub fn is_observable(&self, t: ThreadId, x: Loc, w: WriteId) -> bool {
        match self.rec(w) {
            Ok(r) => r.loc == x && self.position(w) >= self.position(self.tview[t].get(x)),
            Err(_) => false,
        }
    }

    /// Per location, the later of the two writes.
    pub fn view_merge(&self, v1: &View, v2: &View) -> View {
        View(v1.iter().zip(v2.iter()).map(|(a, b)| if self.position(b) > self.position(a) { b } else { a }).collect())
    }

    fn check_observable(&self, t: ThreadId, x: Loc, w: WriteId) -> Result<(), MemoryError> {
        self.rec(w)?;
        if self.is_observable(t, x, w) {
            Ok(())
        } else {
            Err(MemoryError::NotObservable { thread: t, loc: x, write: w })
        }
    }

    fn read_view(&self, t: ThreadId, x: Loc, w: WriteId, acquiring: bool) -> View {
        let rec = &self.writes[w.index()];
        if acquiring && rec.release {
            self.view_merge(&self.tview[t], &rec.mview)
        } else {
            let mut v = self.tview[t].clone();
            v.set(x, w);
            v
        }
    }

    /// Read `w` at `x`; an acquiring read of a releasing write adopts the
    /// writer's modification view.
    pub fn read(&self, t: ThreadId, x: Loc, w: WriteId, acquiring: bool) -> Result<(Self, Value), MemoryError> {
        self.check_observable(t, x, w)?;
        let mut next = self.clone();
        next.tview[t] = self.read_view(t, x, w, acquiring);
        Ok((next, self.val(w)))
    }

    /// Writes after which `t` may place a new write to `x`: observable and
    /// not covered. Each yields a distinct insertion slot.
    pub fn write_predecessors(&self, t: ThreadId, x: Loc) -> Vec<WriteId> {
        self.observable_writes(t, x).iter().copied().filter(|w| !self.is_covered(*w)).collect()
    }

    fn insert_after(&mut self, pred: WriteId, val: Value, release: bool, mview: View) -> WriteId {
        let loc = self.loc(pred);
        let id = WriteId(self.writes.len() as u32);
        let at = self.position(pred) + 1;
        self.mo[loc].insert(at, id);
        self.writes.push(WriteRecord { loc, val, release, pos: at as u32, mview, covered_by: None });
        for p in at + 1..self.mo[loc].len() {
            let later = self.mo[loc][p];
            self.writes[later.index()].pos = p as u32;
        }
        id
    }

    /// Write `v` to `x` immediately after `pred` in modification order.
    pub fn write_after(
        &self,
        t: ThreadId,
        x: Loc,
        v: Value,
        pred: WriteId,
        releasing: bool,
    ) -> Result<(Self, WriteId), MemoryError> {
        self.check_observable(t, x, pred)?;
        if self.is_covered(pred) {
            return Err(MemoryError::Covered(pred));
        }
        let mut next = self.clone();
        // mview is fixed after the tview update; patch it in below.
        let id = next.insert_after(pred, v, releasing, self.tview[t].clone());
        next.tview[t].set(x, id);
        next.writes[id.index()].mview = next.tview[t].clone();
        Ok((next, id))
    }

    /// Compare-and-swap reading `pred`. Success places the new write directly
    /// after `pred` and covers it; failure behaves as a read of `pred`.
    #[allow(clippy::too_many_arguments)]
    pub fn rmw(
        &self,
        t: ThreadId,
        x: Loc,
        expected: Value,
        new: Value,
        pred: WriteId,
        releasing: bool,
        acquiring: bool,
    ) -> Result<(Self, RmwOutcome), MemoryError> {
        self.check_observable(t, x, pred)?;
        if self.val(pred) != expected {
            let (next, v) = self.read(t, x, pred, acquiring)?;
            return Ok((next, RmwOutcome::Failure(v)));
        }
        if self.is_covered(pred) {
            return Err(MemoryError::Covered(pred));
        }
        let view = self.read_view(t, x, pred, acquiring);
        let mut next = self.clone();
        let id = next.insert_after(pred, new, releasing, view.clone());
        next.writes[pred.index()].covered_by = Some(id);
        let mut view = view;
        view.set(x, id);
        next.writes[id.index()].mview = view.clone();
        next.tview[t] = view;
        Ok((next, RmwOutcome::Success(id)))
    }

    /// Replace `t`'s view wholesale, e.g. on a synchronising commit.
    pub fn with_tview(&self, t: ThreadId, view: View) -> Self {
        let mut next = self.clone();
        next.tview[t] = view;
        next
    }

    /// Move `t`'s view of `loc(w)` forward to `w`, if `w` is later.
    pub fn advance_view(&self, t: ThreadId, w: WriteId) -> Self {
        let x = self.loc(w);
        let mut next = self.clone();
        if self.position(w) > self.position(self.tview[t].get(x)) {
            next.tview[t].set(x, w);
        }
        next
    }

    /// Renumber writes by (location, modification-order position). Two states
    /// equal up to write identity have equal canonical forms.
    pub fn canonical(&self) -> (Self, Renaming) {
        let mut renaming = alloc::vec![WriteId(0); self.writes.len()];
        let mut next_id = 0u32;
        for seq in &self.mo {
            for w in seq {
                renaming[w.index()] = WriteId(next_id);
                next_id += 1;
            }
        }
        let renaming = Renaming(renaming);
        let mut writes = self.writes.clone();
        for (old, rec) in self.writes.iter().enumerate() {
            let new = renaming.apply(WriteId(old as u32));
            writes[new.index()] = WriteRecord {
                mview: rec.mview.renamed(&renaming),
                covered_by: rec.covered_by.map(|c| renaming.apply(c)),
                ..rec.clone()
            };
        }
        let state = ClientMemoryState {
            writes,
            mo: self.mo.iter().map(|seq| seq.iter().map(|w| renaming.apply(*w)).collect()).collect(),
            tview: self.tview.iter().map(|v| v.renamed(&renaming)).collect(),
        };
        (state, renaming)
    }

    /// Rank of `w` among the writes to its location carrying its value.
    /// Together with location and value this identifies a write across
    /// states that were built by matching steps.
    pub fn value_rank(&self, w: WriteId) -> usize {
        let x = self.loc(w);
        let v = self.val(w);
        self.mo[x][..self.position(w)].iter().filter(|o| self.val(**o) == v).count()
    }

    /// The write to `x` with value `val` and the given value rank.
    pub fn find_by_rank(&self, x: Loc, val: Value, rank: usize) -> Option<WriteId> {
        self.mo[x].iter().copied().filter(|w| self.val(*w) == val).nth(rank)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: Loc = 0;
    const F: Loc = 1;
    const T1: ThreadId = 0;
    const T2: ThreadId = 1;

    /// The message-passing states: after `d := 5`, after `f :=R 1`, after the
    /// acquiring read of `f`.
    fn mp_states() -> [ClientMemoryState; 4] {
        let s0 = ClientMemoryState::new(2, 2);
        let (s1, _) = s0.write_after(T1, D, 5, s0.last(D), false).unwrap();
        let (s2, wf) = s1.write_after(T1, F, 1, s1.last(F), true).unwrap();
        let (s3, _) = s2.read(T2, F, wf, true).unwrap();
        [s0, s1, s2, s3]
    }

    #[test]
    fn tst_leq_examples() {
        let [_, s1, ..] = mp_states();
        let init = s1.mo(D)[0];
        let later = s1.mo(D)[1];
        assert!(s1.tst_leq(init, init).unwrap());
        assert!(s1.tst_leq(init, later).unwrap());
        assert!(!s1.tst_leq(later, init).unwrap());
        assert_eq!(s1.tst_leq(init, s1.last(F)), Err(MemoryError::LocationMismatch(init, s1.last(F))));
    }

    #[test]
    fn observable_writes_track_the_reader_view() {
        let [s0, _, s2, s3] = mp_states();
        assert_eq!(s0.observable_writes(T2, D), &[s0.mo(D)[0]]);
        assert_eq!(s2.observable_writes(T2, D).len(), 2);
        assert_eq!(s3.observable_writes(T2, D), &[s3.last(D)]);
        assert_eq!(s2.observable_values(T2, D), [0, 5].into());
        assert_eq!(s3.observable_values(T2, D), [5].into());
        for t in [T1, T2] {
            for x in [D, F] {
                assert_eq!(s0.observable_values(t, x), [0].into());
            }
        }
    }

    #[test]
    fn merge_examples() {
        let [s0, _, s2, _] = mp_states();
        let v = s2.tview(T1).clone();
        assert_eq!(s2.view_merge(&v, &v), v);
        assert_eq!(s2.view_merge(&s2.initial_view(), &v), v);
        assert_eq!(s2.view_merge(&v, &s2.initial_view()), v);
        let merged = s2.view_merge(s2.tview(T2), s2.mview(s2.last(F)));
        assert_eq!(s2.val(merged.get(D)), 5);
        assert_eq!(s2.val(merged.get(F)), 1);
        assert_eq!(s0.tview(T2), &s0.initial_view());
    }

    #[test]
    fn relaxed_read_does_not_synchronise() {
        let [_, _, s2, s3] = mp_states();
        let wf = s2.last(F);
        let (relaxed, v) = s2.read(T2, F, wf, false).unwrap();
        assert_eq!(v, 1);
        assert_eq!(relaxed.tview(T2).get(D), s2.tview(T2).get(D));
        assert_eq!(s3.tview(T2).get(D), s3.last(D));
        let own = s2.tview(T1).get(D);
        let (same, _) = s2.read(T1, D, own, true).unwrap();
        assert_eq!(same, s2);
    }

    #[test]
    fn releasing_write_records_writer_view() {
        let [s0, _, s2, _] = mp_states();
        let wf = s2.last(F);
        assert!(s2.is_released(wf));
        assert_eq!(s2.mview(wf).get(D), s2.last(D));
        assert_eq!(s2.mview(wf).get(F), wf);
        let (s, w) = s0.write_after(T1, D, 3, s0.last(D), false).unwrap();
        assert_eq!(s.mo(D), &[s0.last(D), w]);
    }

    #[test]
    fn unobservable_read_is_rejected() {
        let [_, _, _, s3] = mp_states();
        let stale = s3.mo(D)[0];
        assert!(matches!(s3.read(T2, D, stale, false), Err(MemoryError::NotObservable { .. })));
    }

    #[test]
    fn cas_from_initial_state() {
        let s0 = ClientMemoryState::new(1, 2);
        let init = s0.last(0);
        let (s1, out) = s0.rmw(T1, 0, 0, 1, init, true, true).unwrap();
        let RmwOutcome::Success(w) = out else { panic!("expected success") };
        assert_eq!(s1.mo(0), &[init, w]);
        assert!(s1.is_covered(init));
        assert_eq!(s1.covered_by(init), Some(w));
        let (_, fail) = s0.rmw(T1, 0, 1, 2, init, true, true).unwrap();
        assert_eq!(fail, RmwOutcome::Failure(0));
        assert_eq!(s1.write_predecessors(T2, 0), [w]);
        assert_eq!(s1.rmw(T2, 0, 0, 1, init, true, true), Err(MemoryError::Covered(init)));
    }

    #[test]
    fn insertion_in_the_middle_shifts_positions() {
        let s0 = ClientMemoryState::new(1, 2);
        let init = s0.last(0);
        let (s1, a) = s0.write_after(T1, 0, 1, init, false).unwrap();
        let (s2, b) = s1.write_after(T2, 0, 2, init, false).unwrap();
        assert_eq!(s2.mo(0), &[init, b, a]);
        assert_eq!(s2.position(a), 2);
        assert_eq!(s2.position(b), 1);
        let (canon, ren) = s2.canonical();
        assert_eq!(canon.mo(0), &[WriteId(0), WriteId(1), WriteId(2)]);
        assert_eq!(ren.apply(a), WriteId(2));
        assert_eq!(canon.val(WriteId(1)), 2);
        assert_eq!(canon.tview(T1).get(0), WriteId(2));
    }

    #[test]
    fn value_rank_identifies_writes() {
        let s0 = ClientMemoryState::new(1, 1);
        let (s1, a) = s0.write_after(T1, 0, 0, s0.last(0), false).unwrap();
        assert_eq!(s1.value_rank(a), 1);
        assert_eq!(s1.find_by_rank(0, 0, 1), Some(a));
        assert_eq!(s1.find_by_rank(0, 7, 0), None);
    }
}
