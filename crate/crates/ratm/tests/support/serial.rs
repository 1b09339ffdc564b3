//! Brute-force serializability oracle over recorded transaction histories.
//!
//! A history is accepted when some total order of its committed
//! transactions makes every read explainable by the transactions placed
//! earlier plus the transaction's own earlier writes. Aborted transactions
//! are dropped. Which pairs are forced into order is chosen by [`Order`].

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratm_core::explorer::{explore, ExplorationResult, ExploreOptions};
use ratm_core::lts::{Backend, TxEvent, TxEventKind};
use ratm_core::program::{lower, AtomicCommand, BoolExpr, Expr, Postcondition, Program, Quantifier, Stmt};
use ratm_core::tms2ra::{SyncFlag, TxnId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// A transaction that ended before another began must precede it.
    RealTime,
    /// Only transactions of the same thread keep their order.
    PerThread,
}

#[derive(Debug, Clone)]
enum Op {
    Read(usize, i64),
    Write(usize, i64),
}

#[derive(Debug, Clone)]
struct Txn {
    thread: usize,
    begin: usize,
    end: Option<usize>,
    committed: bool,
    ops: Vec<Op>,
}

fn transactions(history: &[TxEvent]) -> Vec<Txn> {
    let mut order: Vec<TxnId> = Vec::new();
    let mut txns: BTreeMap<TxnId, Txn> = BTreeMap::new();
    for (pos, ev) in history.iter().enumerate() {
        if ev.kind == TxEventKind::Begin {
            order.push(ev.txn);
            txns.insert(
                ev.txn,
                Txn { thread: ev.txn.thread, begin: pos, end: None, committed: false, ops: Vec::new() },
            );
            continue;
        }
        let t = txns.get_mut(&ev.txn).expect("event before begin");
        match ev.kind {
            // The recorded internal flag is ignored; the oracle decides.
            TxEventKind::Read { loc, val, .. } => t.ops.push(Op::Read(loc, val)),
            TxEventKind::Write { loc, val } => t.ops.push(Op::Write(loc, val)),
            TxEventKind::Commit => {
                t.end = Some(pos);
                t.committed = true;
            }
            TxEventKind::Abort => t.end = Some(pos),
            TxEventKind::Begin => unreachable!(),
        }
    }
    order.into_iter().map(|id| txns.remove(&id).unwrap()).filter(|t| t.committed).collect()
}

/// Checks the reads of `t` against `mem`; returns the memory after `t`.
fn replay(t: &Txn, mem: &[i64]) -> Option<Vec<i64>> {
    let mut local: BTreeMap<usize, i64> = BTreeMap::new();
    for op in &t.ops {
        match *op {
            Op::Read(x, v) => {
                if local.get(&x).copied().unwrap_or(mem[x]) != v {
                    return None;
                }
            }
            Op::Write(x, v) => {
                local.insert(x, v);
            }
        }
    }
    let mut next = mem.to_vec();
    for (x, v) in local {
        next[x] = v;
    }
    Some(next)
}

fn must_precede(order: Order, earlier: &Txn, later: &Txn) -> bool {
    match order {
        Order::RealTime => earlier.end.is_some_and(|e| e < later.begin),
        Order::PerThread => earlier.thread == later.thread && earlier.begin < later.begin,
    }
}

fn search(txns: &[Txn], order: Order, placed: &mut Vec<usize>, mem: &[i64]) -> bool {
    if placed.len() == txns.len() {
        return true;
    }
    for k in 0..txns.len() {
        if placed.contains(&k) {
            continue;
        }
        let ready =
            txns.iter().enumerate().all(|(j, o)| j == k || placed.contains(&j) || !must_precede(order, o, &txns[k]));
        if !ready {
            continue;
        }
        if let Some(next) = replay(&txns[k], mem) {
            placed.push(k);
            if search(txns, order, placed, &next) {
                return true;
            }
            placed.pop();
        }
    }
    false
}

pub fn serializable(history: &[TxEvent], tx_locs: usize, order: Order) -> bool {
    let txns = transactions(history);
    search(&txns, order, &mut Vec::new(), &vec![0; tx_locs])
}

fn explore_histories(prog: &Program) -> ExplorationResult {
    let opts = ExploreOptions { record_history: true, ..ExploreOptions::default() };
    explore(prog, &Backend::Tms2Ra, &opts).unwrap()
}

/// Every complete TMS2-RA history of `prog`.
pub fn histories(prog: &Program) -> BTreeSet<Vec<TxEvent>> {
    let result = explore_histories(prog);
    assert!(result.violations.is_empty(), "{}: {:?}", prog.name, result.violations);
    result.histories
}

/// Two or three threads, each running one transaction over `x`/`y`,
/// optionally preceded by a client store. Three-thread programs get a single
/// access per transaction; every interleaving is a distinct history, so
/// anything larger does not fit in memory.
pub fn random_program(rng: &mut ChaCha8Rng, seed: u64) -> Program {
    let threads = rng.random_range(2..=3);
    let flags = [SyncFlag::Rx, SyncFlag::R, SyncFlag::A, SyncFlag::Ra];
    let mut registers = Vec::new();
    let mut code = Vec::new();
    for t in 0..threads {
        let mut body = Vec::new();
        if rng.random_bool(0.5) {
            body.push(Stmt::Atomic(AtomicCommand::Store {
                loc: 0,
                expr: Expr::Const(rng.random_range(1..=3)),
                release: rng.random_bool(0.5),
            }));
        }
        let mut read_regs = BTreeSet::new();
        let mut ops = Vec::new();
        let accesses = if threads == 3 { 1 } else { rng.random_range(1..=2) };
        for _ in 0..accesses {
            let loc = rng.random_range(0..2);
            if rng.random_bool(0.5) {
                let reg = registers.len();
                registers.push((format!("r{reg}"), t));
                read_regs.insert(reg);
                ops.push(Stmt::Atomic(AtomicCommand::TxRead { loc, reg }));
            } else {
                let val = rng.random_range(1..=3);
                ops.push(Stmt::Atomic(AtomicCommand::TxWrite { loc, expr: Expr::Const(val) }));
            }
        }
        body.push(Stmt::Atomic(AtomicCommand::TxBegin {
            flag: flags[rng.random_range(0..flags.len())],
            regs: read_regs,
        }));
        body.extend(ops);
        body.push(Stmt::Atomic(AtomicCommand::TxEnd));
        code.push(lower(&format!("t{}", t + 1), &body));
    }
    Program {
        name: format!("random-{seed}"),
        locations: vec!["z".into()],
        tx_locations: vec!["x".into(), "y".into()],
        registers,
        threads: code,
        postcondition: Postcondition { quantifier: Quantifier::Forall, predicate: BoolExpr::Const(true) },
    }
}

pub const RANDOM_SEED: u64 = 0x5eed;

pub fn random_programs(count: u64) -> Vec<Program> {
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED);
    (0..count).map(|seed| random_program(&mut rng, seed)).collect()
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Tally {
    pub histories: usize,
    pub real_time: usize,
    pub per_thread: usize,
    /// Invariant violations met while exploring.
    pub violations: usize,
}

impl Tally {
    pub fn add(&mut self, prog: &Program) {
        let result = explore_histories(prog);
        self.violations += result.violations.len();
        for h in result.histories {
            let locs = prog.tx_locations.len();
            self.histories += 1;
            self.real_time += usize::from(serializable(&h, locs, Order::RealTime));
            self.per_thread += usize::from(serializable(&h, locs, Order::PerThread));
        }
    }
}
