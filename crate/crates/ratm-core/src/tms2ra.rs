//! The TMS2-RA specification automaton: a sequence of memory snapshots, each
//! tagged with a synchronisation flag and a modification view, plus
//! per-transaction read/write sets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::memory::{ClientMemoryState, Renaming, View};
use crate::{Loc, Reg, RegFile, ThreadId, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SyncFlag {
    Rx,
    R,
    A,
    Ra,
}

impl SyncFlag {
    pub fn is_releasing(self) -> bool {
        matches!(self, SyncFlag::R | SyncFlag::Ra)
    }

    pub fn is_acquiring(self) -> bool {
        matches!(self, SyncFlag::A | SyncFlag::Ra)
    }

    pub fn name(self) -> &'static str {
        match self {
            SyncFlag::Rx => "RX",
            SyncFlag::R => "R",
            SyncFlag::A => "A",
            SyncFlag::Ra => "RA",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TxnStatus {
    NotStarted,
    Ready,
    Committed,
    Aborted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TxnId {
    pub thread: ThreadId,
    pub seq: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxnLocal {
    pub id: TxnId,
    pub status: TxnStatus,
    pub rd_set: BTreeMap<Loc, Value>,
    pub wr_set: BTreeMap<Loc, Value>,
    pub begin_idx: usize,
    pub seen_idxs: BTreeSet<usize>,
    pub synctype: SyncFlag,
    pub regs: BTreeSet<Reg>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct ThreadTx {
    /// The live transaction, or the most recently finished one.
    current: Option<TxnLocal>,
    txview: usize,
    next_seq: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum Disabled {
    #[error("thread has no live transaction")]
    NoLiveTxn,
    #[error("thread already runs a transaction")]
    Busy,
    #[error("memory index outside the permitted window")]
    IndexOutOfRange,
    #[error("read set is inconsistent with the chosen memory")]
    InconsistentReadSet,
    #[error("register is not declared by the transaction")]
    RegisterNotInScope,
    #[error("read-only commit with a non-empty write set")]
    HasWrites,
    #[error("writing commit with an empty write set")]
    NoWrites,
    #[error("empty index set")]
    EmptyIndexSet,
}

/// Memory snapshots `M`, flags `S`, views `V` and transaction locals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TmSpecState {
    memories: Vec<Vec<Value>>,
    sync: Vec<SyncFlag>,
    views: Vec<View>,
    threads: Vec<ThreadTx>,
}

fn consistent(rd_set: &BTreeMap<Loc, Value>, mem: &[Value]) -> bool {
    rd_set.iter().all(|(x, v)| mem[*x] == *v)
}

impl TmSpecState {
    /// A single all-zero snapshot tagged relaxed whose view is `init_view`.
    pub fn new(num_tx_locs: usize, num_threads: usize, init_view: View) -> Self {
        TmSpecState {
            memories: alloc::vec![alloc::vec![0; num_tx_locs]],
            sync: alloc::vec![SyncFlag::Rx],
            views: alloc::vec![init_view],
            threads: alloc::vec![
                ThreadTx {
                    current: None,
                    txview: 0,
                    next_seq: 0,
                };
                num_threads
            ],
        }
    }

    pub fn memories(&self) -> &[Vec<Value>] {
        &self.memories
    }

    pub fn sync_flags(&self) -> &[SyncFlag] {
        &self.sync
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn last_memory(&self) -> &[Value] {
        self.memories.last().expect("memory sequence is never empty")
    }

    pub fn last_index(&self) -> usize {
        self.memories.len() - 1
    }

    pub fn num_threads(&self) -> usize {
        self.threads.len()
    }

    pub fn txview(&self, t: ThreadId) -> usize {
        self.threads[t].txview
    }

    /// The live transaction of `t`, if any.
    pub fn txn(&self, t: ThreadId) -> Option<&TxnLocal> {
        self.threads[t].current.as_ref().filter(|x| x.status == TxnStatus::Ready)
    }

    /// The live or most recently finished transaction of `t`.
    pub fn latest_txn(&self, t: ThreadId) -> Option<&TxnLocal> {
        self.threads[t].current.as_ref()
    }

    /// Status of `t`'s latest transaction; `NotStarted` before any.
    pub fn status(&self, t: ThreadId) -> TxnStatus {
        self.latest_txn(t).map_or(TxnStatus::NotStarted, |x| x.status)
    }

    pub fn visible_memories(&self, t: ThreadId) -> RangeInclusive<usize> {
        self.threads[t].txview..=self.last_index()
    }

    /// Per location, the modification-order-latest write among the views of
    /// the given snapshots.
    pub fn view_of_indices(&self, mem: &ClientMemoryState, idxs: &BTreeSet<usize>) -> Result<View, Disabled> {
        let mut it = idxs.iter();
        let first = it.next().ok_or(Disabled::EmptyIndexSet)?;
        let mut view = self.views.get(*first).ok_or(Disabled::IndexOutOfRange)?.clone();
        for i in it {
            let v = self.views.get(*i).ok_or(Disabled::IndexOutOfRange)?;
            view = mem.view_merge(&view, v);
        }
        Ok(view)
    }

    fn live_mut(&mut self, t: ThreadId) -> Result<&mut TxnLocal, Disabled> {
        self.threads[t].current.as_mut().filter(|x| x.status == TxnStatus::Ready).ok_or(Disabled::NoLiveTxn)
    }

    pub fn tx_begin(&self, t: ThreadId, flag: SyncFlag, m: usize, regs: BTreeSet<Reg>) -> Result<Self, Disabled> {
        if self.txn(t).is_some() {
            return Err(Disabled::Busy);
        }
        if !self.visible_memories(t).contains(&m) {
            return Err(Disabled::IndexOutOfRange);
        }
        let mut next = self.clone();
        let th = &mut next.threads[t];
        th.current = Some(TxnLocal {
            id: TxnId { thread: t, seq: th.next_seq },
            status: TxnStatus::Ready,
            rd_set: BTreeMap::new(),
            wr_set: BTreeMap::new(),
            begin_idx: m,
            seen_idxs: BTreeSet::new(),
            synctype: flag,
            regs,
        });
        th.next_seq += 1;
        Ok(next)
    }

    pub fn tx_write(&self, t: ThreadId, x: Loc, v: Value) -> Result<Self, Disabled> {
        let mut next = self.clone();
        next.live_mut(t)?.wr_set.insert(x, v);
        Ok(next)
    }

    /// Indices an external read of `x` may use; empty when the read would
    /// be internal or no transaction is live.
    pub fn read_indices(&self, t: ThreadId, x: Loc) -> Vec<usize> {
        let Some(txn) = self.txn(t) else {
            return Vec::new();
        };
        if txn.wr_set.contains_key(&x) {
            return Vec::new();
        }
        (txn.begin_idx..self.memories.len()).filter(|i| consistent(&txn.rd_set, &self.memories[*i])).collect()
    }

    /// Internal read when `x` is in the write set (the index is ignored),
    /// otherwise an external read of snapshot `i`.
    pub fn tx_read(&self, t: ThreadId, x: Loc, r: Reg, i: Option<usize>) -> Result<(Self, Value), Disabled> {
        let mut next = self.clone();
        let memories = &self.memories;
        let sync = &self.sync;
        let txn = next.live_mut(t)?;
        if !txn.regs.contains(&r) {
            return Err(Disabled::RegisterNotInScope);
        }
        if let Some(v) = txn.wr_set.get(&x) {
            let v = *v;
            return Ok((next, v));
        }
        let i = i.ok_or(Disabled::IndexOutOfRange)?;
        if i < txn.begin_idx || i >= memories.len() {
            return Err(Disabled::IndexOutOfRange);
        }
        if !consistent(&txn.rd_set, &memories[i]) {
            return Err(Disabled::InconsistentReadSet);
        }
        let v = memories[i][x];
        txn.rd_set.insert(x, v);
        if sync[i].is_releasing() {
            txn.seen_idxs.insert(i);
        }
        Ok((next, v))
    }

    fn commit_view(&self, mem: &ClientMemoryState, t: ThreadId, txn: &TxnLocal) -> View {
        let tview = mem.tview(t);
        let syncs = !txn.rd_set.is_empty() && txn.synctype.is_acquiring() && !txn.seen_idxs.is_empty();
        if syncs {
            let nv = self.view_of_indices(mem, &txn.seen_idxs).expect("seen indices are valid snapshots");
            mem.view_merge(tview, &nv)
        } else {
            tview.clone()
        }
    }

    fn finish(&mut self, t: ThreadId, status: TxnStatus) {
        let th = &mut self.threads[t];
        let txn = th.current.as_mut().expect("caller checked liveness");
        txn.status = status;
        if let Some(max) = txn.seen_idxs.iter().next_back() {
            th.txview = *max;
        }
    }

    pub fn tx_end_ro(&self, mem: &ClientMemoryState, t: ThreadId) -> Result<(Self, ClientMemoryState), Disabled> {
        let txn = self.txn(t).ok_or(Disabled::NoLiveTxn)?;
        if !txn.wr_set.is_empty() {
            return Err(Disabled::HasWrites);
        }
        let view = self.commit_view(mem, t, txn);
        let mut next = self.clone();
        next.finish(t, TxnStatus::Committed);
        Ok((next, mem.with_tview(t, view)))
    }

    pub fn tx_end_wr(&self, mem: &ClientMemoryState, t: ThreadId) -> Result<(Self, ClientMemoryState), Disabled> {
        let txn = self.txn(t).ok_or(Disabled::NoLiveTxn)?;
        if txn.wr_set.is_empty() {
            return Err(Disabled::NoWrites);
        }
        if !consistent(&txn.rd_set, self.last_memory()) {
            return Err(Disabled::InconsistentReadSet);
        }
        let view = self.commit_view(mem, t, txn);
        let mut snapshot = self.last_memory().to_vec();
        for (x, v) in &txn.wr_set {
            snapshot[*x] = *v;
        }
        let flag = txn.synctype;
        let mut next = self.clone();
        next.memories.push(snapshot);
        next.sync.push(flag);
        next.views.push(view.clone());
        next.finish(t, TxnStatus::Committed);
        Ok((next, mem.with_tview(t, view)))
    }

    /// Abort the live transaction, clearing every register it declared.
    pub fn tx_abort(&self, regs: &RegFile, t: ThreadId) -> Result<(Self, RegFile), Disabled> {
        let txn = self.txn(t).ok_or(Disabled::NoLiveTxn)?;
        let mut out = regs.clone();
        for r in &txn.regs {
            out[*r] = None;
        }
        let mut next = self.clone();
        next.threads[t].current.as_mut().expect("live").status = TxnStatus::Aborted;
        Ok((next, out))
    }

    /// Rename the write ids held in snapshot views.
    pub fn renamed(&self, renaming: &Renaming) -> Self {
        TmSpecState { views: self.views.iter().map(|v| v.renamed(renaming)).collect(), ..self.clone() }
    }

    /// Forget transaction sequence numbers; they only name transactions.
    pub fn without_sequence_numbers(&self) -> Self {
        let mut next = self.clone();
        for th in &mut next.threads {
            th.next_seq = 0;
            if let Some(txn) = &mut th.current {
                txn.id.seq = 0;
            }
        }
        next
    }
}
