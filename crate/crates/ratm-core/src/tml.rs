//! The TML-RA transactional mutex lock, interpreted one labelled line at a
//! time over the client memory. A global counter `glb` is even exactly when
//! no writer holds the lock.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::memory::{ClientMemoryState, RmwOutcome};
use crate::{Loc, Reg, ThreadId, Value};

/// Lines of the algorithm. `Idle` means no operation is in flight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TmlLabel {
    Idle,
    B1,
    B2,
    B3,
    B4,
    W1,
    W2,
    W3,
    W4,
    W5,
    W6,
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R9,
    R10,
    R11,
    R12,
    E1,
    E2,
}

/// A transactional operation in flight. Locations index the transactional
/// locations.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TxCall {
    Begin { regs: BTreeSet<Reg> },
    Read { loc: Loc, reg: Reg },
    Write { loc: Loc, val: Value },
    End,
}

/// Algorithm variants used to check that the checkers notice broken locks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mutation {
    /// E2's write to `glb` is relaxed instead of releasing.
    DropE2Release,
    /// B3's read of `glb` is relaxed instead of acquiring.
    DropB3Acquire,
    /// R10 also accepts a counter that moved on by one full writer.
    WeakenR10,
    /// R4 reads `glb` with a relaxed load instead of a release-acquire CAS.
    R4PlainRead,
}

impl Mutation {
    pub const ALL: [Mutation; 4] =
        [Mutation::DropE2Release, Mutation::DropB3Acquire, Mutation::WeakenR10, Mutation::R4PlainRead];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::DropE2Release => "drop-e2-release",
            Mutation::DropB3Acquire => "drop-b3-acquire",
            Mutation::WeakenR10 => "weaken-r10",
            Mutation::R4PlainRead => "r4-plain-read",
        }
    }

    pub fn from_name(name: &str) -> Option<Mutation> {
        Mutation::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Thread-local state of the lock.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TmlLocals {
    pub loc: Value,
    pub has_read: bool,
    /// Ghost: set by the first W6 of a transaction.
    pub has_written: bool,
    /// Ghost: set by a successful W2, cleared by E2.
    pub holds_lock: bool,
    pub regs: BTreeSet<Reg>,
    pub pc: TmlLabel,
    /// Result of the last CAS (0 or 1), or the last relaxed read of `glb`.
    pub r1: Value,
    /// Value fetched at R2; handed to the register when the read returns.
    pub fetched: Value,
    pub call: Option<TxCall>,
}

impl Default for TmlLocals {
    fn default() -> Self {
        TmlLocals {
            loc: 0,
            has_read: false,
            has_written: false,
            holds_lock: false,
            regs: BTreeSet::new(),
            pc: TmlLabel::Idle,
            r1: 0,
            fetched: 0,
            call: None,
        }
    }
}

/// Where the lock's shared variables live in client memory: transactional
/// location `j` is client location `tx_base + j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TmlLayout {
    pub tx_base: Loc,
    pub glb: Loc,
}

impl TmlLayout {
    pub fn tx_loc(&self, x: Loc) -> Loc {
        self.tx_base + x
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Completion {
    Running,
    /// The operation returned; a read hands back its register and value.
    Returned(Option<(Reg, Value)>),
    /// The transaction aborted; these registers become ⊥.
    Aborted(BTreeSet<Reg>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmlSuccessor {
    /// The line that was executed.
    pub label: TmlLabel,
    /// The value read or written by the line, when there is one.
    pub value: Option<Value>,
    pub locals: TmlLocals,
    pub mem: ClientMemoryState,
    pub completion: Completion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum TmlError {
    #[error("an operation is already in flight")]
    Busy,
}

/// Bind an operation to its entry line.
pub fn tml_api(locals: &TmlLocals, call: TxCall) -> Result<TmlLocals, TmlError> {
    if locals.pc != TmlLabel::Idle {
        return Err(TmlError::Busy);
    }
    let pc = match call {
        TxCall::Begin { .. } => TmlLabel::B1,
        TxCall::Read { .. } => TmlLabel::R1,
        TxCall::Write { .. } => TmlLabel::W1,
        TxCall::End => TmlLabel::E1,
    };
    Ok(TmlLocals { pc, call: Some(call), ..locals.clone() })
}

fn even(v: Value) -> bool {
    v.rem_euclid(2) == 0
}

struct Ctx<'a> {
    layout: TmlLayout,
    mem: &'a ClientMemoryState,
    locals: &'a TmlLocals,
    t: ThreadId,
    mutations: &'a BTreeSet<Mutation>,
    out: Vec<TmlSuccessor>,
}

impl Ctx<'_> {
    fn has(&self, m: Mutation) -> bool {
        self.mutations.contains(&m)
    }

    fn push(&mut self, value: Option<Value>, locals: TmlLocals, mem: ClientMemoryState, completion: Completion) {
        self.out.push(TmlSuccessor { label: self.locals.pc, value, locals, mem, completion });
    }

    /// A purely local line moving to `pc`.
    fn goto(&mut self, pc: TmlLabel, edit: impl FnOnce(&mut TmlLocals)) {
        let mut l = self.locals.clone();
        l.pc = pc;
        edit(&mut l);
        self.push(None, l, self.mem.clone(), Completion::Running);
    }

    fn finish(&mut self, value: Option<Value>, mut l: TmlLocals, mem: ClientMemoryState, c: Completion) {
        l.pc = TmlLabel::Idle;
        l.call = None;
        self.push(value, l, mem, c);
    }

    fn abort(&mut self) {
        let regs = self.locals.regs.clone();
        self.finish(None, self.locals.clone(), self.mem.clone(), Completion::Aborted(regs));
    }

    /// One successor per observable write of `glb`.
    fn read_glb(&mut self, acquiring: bool, next: TmlLabel, edit: impl Fn(&mut TmlLocals, Value)) {
        let glb = self.layout.glb;
        for w in self.mem.observable_writes(self.t, glb).to_vec() {
            let (mem, v) = self.mem.read(self.t, glb, w, acquiring).expect("observable");
            let mut l = self.locals.clone();
            l.pc = next;
            edit(&mut l, v);
            self.push(Some(v), l, mem, Completion::Running);
        }
    }

    /// Release-acquire CAS on `glb`; `r1` records success.
    fn cas_glb(&mut self, expected: Value, new: Value, next: TmlLabel, on_success: impl Fn(&mut TmlLocals)) {
        let glb = self.layout.glb;
        for w in self.mem.observable_writes(self.t, glb).to_vec() {
            if self.mem.val(w) == expected && self.mem.is_covered(w) {
                continue;
            }
            let (mem, out) = self.mem.rmw(self.t, glb, expected, new, w, true, true).expect("observable and uncovered");
            let mut l = self.locals.clone();
            l.pc = next;
            match out {
                RmwOutcome::Success(_) => {
                    l.r1 = 1;
                    on_success(&mut l);
                    self.push(Some(new), l, mem, Completion::Running);
                }
                RmwOutcome::Failure(v) => {
                    l.r1 = 0;
                    self.push(Some(v), l, mem, Completion::Running);
                }
            }
        }
    }

    fn write(&mut self, x: Loc, v: Value, releasing: bool, edit: impl Fn(&mut TmlLocals)) {
        for pred in self.mem.write_predecessors(self.t, x) {
            let (mem, _) = self.mem.write_after(self.t, x, v, pred, releasing).expect("legal predecessor");
            let mut l = self.locals.clone();
            edit(&mut l);
            self.finish(Some(v), l, mem, Completion::Returned(None));
        }
    }
}

/// Execute the current line of thread `t`. Returns no successors when the
/// thread is idle or blocked on an ill-formed read.
pub fn tml_step(
    layout: TmlLayout,
    mem: &ClientMemoryState,
    locals: &TmlLocals,
    t: ThreadId,
    mutations: &BTreeSet<Mutation>,
) -> Vec<TmlSuccessor> {
    use TmlLabel::*;
    let mut cx = Ctx { layout, mem, locals, t, mutations, out: Vec::new() };
    let loc = locals.loc;
    match (locals.pc, locals.call.clone()) {
        (B1, Some(TxCall::Begin { regs })) => cx.goto(B2, |l| l.regs = regs),
        (B2, _) => cx.goto(B3, |l| {
            l.has_read = false;
            l.has_written = false;
        }),
        (B3, _) => {
            let acquiring = !cx.has(Mutation::DropB3Acquire);
            cx.read_glb(acquiring, B4, |l, v| l.loc = v);
        }
        (B4, _) => {
            if even(loc) {
                cx.finish(None, locals.clone(), mem.clone(), Completion::Returned(None));
            } else {
                cx.goto(B3, |_| {});
            }
        }
        (W1, _) => cx.goto(if even(loc) { W2 } else { W6 }, |_| {}),
        (W2, _) => cx.cas_glb(loc, loc + 1, W3, |l| l.holds_lock = true),
        (W3, _) => cx.goto(if locals.r1 == 0 { W4 } else { W5 }, |_| {}),
        (W4, _) => cx.abort(),
        (W5, _) => cx.goto(W6, |l| l.loc += 1),
        (W6, Some(TxCall::Write { loc: x, val })) => cx.write(layout.tx_loc(x), val, true, |l| l.has_written = true),
        (R1, Some(TxCall::Read { reg, .. })) => {
            if locals.regs.contains(&reg) {
                cx.goto(R2, |_| {});
            }
        }
        (R2, Some(TxCall::Read { loc: x, .. })) => {
            let x = layout.tx_loc(x);
            for w in mem.observable_writes(t, x).to_vec() {
                let (m, v) = mem.read(t, x, w, true).expect("observable");
                let mut l = locals.clone();
                l.pc = R3;
                l.fetched = v;
                cx.push(Some(v), l, m, Completion::Running);
            }
        }
        (R3, _) => cx.goto(if !locals.has_read && even(loc) { R4 } else { R9 }, |_| {}),
        (R4, _) => {
            if cx.has(Mutation::R4PlainRead) {
                cx.read_glb(false, R5, move |l, v| l.r1 = Value::from(v == loc));
            } else {
                cx.cas_glb(loc, loc, R5, |_| {});
            }
        }
        (R5, _) => cx.goto(if locals.r1 != 0 { R6 } else { R12 }, |_| {}),
        (R6, _) => cx.goto(R7, |l| l.has_read = true),
        (R7 | R11, Some(TxCall::Read { reg, .. })) => {
            let v = locals.fetched;
            cx.finish(Some(v), locals.clone(), mem.clone(), Completion::Returned(Some((reg, v))));
        }
        (R9, _) => cx.read_glb(false, R10, |l, v| l.r1 = v),
        (R10, _) => {
            let ok = locals.r1 == loc || (cx.has(Mutation::WeakenR10) && locals.r1 == loc + 2);
            cx.goto(if ok { R11 } else { R12 }, |_| {});
        }
        (R12, _) => cx.abort(),
        (E1, _) => {
            if even(loc) {
                cx.finish(None, locals.clone(), mem.clone(), Completion::Returned(None));
            } else {
                cx.goto(E2, |_| {});
            }
        }
        (E2, _) => {
            let releasing = !cx.has(Mutation::DropE2Release);
            cx.write(layout.glb, loc + 1, releasing, |l| l.holds_lock = false);
        }
        _ => {}
    }
    cx.out
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAYOUT: TmlLayout = TmlLayout { tx_base: 0, glb: 1 };

    /// Run a single thread's operation to completion, always taking the
    /// last successor (the mo-latest write when reading).
    fn run(
        mem: ClientMemoryState,
        locals: TmlLocals,
        t: ThreadId,
        call: TxCall,
    ) -> (ClientMemoryState, TmlLocals, Completion, Vec<TmlLabel>) {
        let none = BTreeSet::new();
        let mut l = tml_api(&locals, call).unwrap();
        let mut m = mem;
        let mut trace = Vec::new();
        loop {
            let mut succ = tml_step(LAYOUT, &m, &l, t, &none);
            let s = succ.pop().expect("not blocked");
            trace.push(s.label);
            m = s.mem;
            l = s.locals;
            if s.completion != Completion::Running {
                return (m, l, s.completion, trace);
            }
        }
    }

    #[test]
    fn single_writer_walks_the_lock() {
        let mem = ClientMemoryState::new(2, 1);
        let l = TmlLocals::default();
        let (mem, l, c, trace) = run(mem, l, 0, TxCall::Begin { regs: BTreeSet::new() });
        assert_eq!(c, Completion::Returned(None));
        assert_eq!(trace, [TmlLabel::B1, TmlLabel::B2, TmlLabel::B3, TmlLabel::B4]);
        let (mem, l, _, trace) = run(mem, l, 0, TxCall::Write { loc: 0, val: 7 });
        use TmlLabel::*;
        assert_eq!(trace, [W1, W2, W3, W5, W6]);
        assert!(l.has_written && l.holds_lock);
        assert_eq!(l.loc, 1);
        let (mem, l, _, trace) = run(mem, l, 0, TxCall::End);
        assert_eq!(trace, [E1, E2]);
        assert!(!l.holds_lock);
        let glb: Vec<Value> = mem.mo(1).iter().map(|w| mem.val(*w)).collect();
        assert_eq!(glb, [0, 1, 2]);
        assert_eq!(mem.last_val(0), 7);
    }

    #[test]
    fn first_read_takes_the_cas_path_once() {
        let mem = ClientMemoryState::new(2, 1);
        let (mem, l, _, _) = run(mem, TmlLocals::default(), 0, TxCall::Begin { regs: [3].into() });
        let (mem, l, c, trace) = run(mem, l, 0, TxCall::Read { loc: 0, reg: 3 });
        use TmlLabel::*;
        assert_eq!(trace, [R1, R2, R3, R4, R5, R6, R7]);
        assert_eq!(c, Completion::Returned(Some((3, 0))));
        assert!(l.has_read);
        let (_, _, c, trace) = run(mem, l, 0, TxCall::Read { loc: 0, reg: 3 });
        assert_eq!(trace, [R1, R2, R3, R9, R10, R11]);
        assert_eq!(c, Completion::Returned(Some((3, 0))));
    }

    #[test]
    fn read_only_end_falls_through() {
        let mem = ClientMemoryState::new(2, 1);
        let (mem, l, _, _) = run(mem, TmlLocals::default(), 0, TxCall::Begin { regs: BTreeSet::new() });
        let (after, _, c, trace) = run(mem.clone(), l, 0, TxCall::End);
        assert_eq!(trace, [TmlLabel::E1]);
        assert_eq!(c, Completion::Returned(None));
        assert_eq!(after, mem);
    }

    #[test]
    fn read_outside_register_scope_blocks() {
        let mem = ClientMemoryState::new(2, 1);
        let l = tml_api(&TmlLocals::default(), TxCall::Read { loc: 0, reg: 9 }).unwrap();
        assert!(tml_step(LAYOUT, &mem, &l, 0, &BTreeSet::new()).is_empty());
        assert_eq!(tml_api(&l, TxCall::End), Err(TmlError::Busy));
    }

    #[test]
    fn reader_aborts_after_concurrent_commit() {
        // Thread 1 reads once (R4 path) at glb = 0; thread 0 then runs a whole
        // writer; thread 1's validation at R10 sees glb = 2.
        let mem = ClientMemoryState::new(2, 2);
        let (mem, reader, _, _) = run(mem, TmlLocals::default(), 1, TxCall::Begin { regs: [0].into() });
        let (mem, reader, _, _) = run(mem, reader, 1, TxCall::Read { loc: 0, reg: 0 });
        let (mem, w, _, _) = run(mem, TmlLocals::default(), 0, TxCall::Begin { regs: BTreeSet::new() });
        let (mem, w, _, _) = run(mem, w, 0, TxCall::Write { loc: 0, val: 5 });
        let (mem, _, _, _) = run(mem, w, 0, TxCall::End);
        // Second read: R2 may fetch 0 or 5, R9 may see 0, 1 or 2.
        let none = BTreeSet::new();
        let mut frontier = alloc::vec![(mem, tml_api(&reader, TxCall::Read { loc: 0, reg: 0 }).unwrap())];
        let mut outcomes = Vec::new();
        while let Some((m, l)) = frontier.pop() {
            for s in tml_step(LAYOUT, &m, &l, 1, &none) {
                match s.completion {
                    Completion::Running => frontier.push((s.mem, s.locals)),
                    c => outcomes.push((l.fetched, c)),
                }
            }
        }
        // Fetching the new value forces the abort.
        assert!(outcomes.iter().any(|(_, c)| matches!(c, Completion::Aborted(_))));
        for (fetched, c) in &outcomes {
            if *fetched == 5 {
                assert_eq!(c, &Completion::Aborted([0].into()));
            }
        }
    }

    #[test]
    fn mutation_names_round_trip() {
        for m in Mutation::ALL {
            assert_eq!(Mutation::from_name(m.name()), Some(m));
        }
        assert_eq!(Mutation::from_name("nope"), None);
    }
}
