//! The built-in litmus programs.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::program::{lower, AtomicCommand, BoolExpr, CmpOp, Expr, Postcondition, Program, Quantifier, Stmt};
use crate::tms2ra::SyncFlag;
use crate::{Loc, Reg, Value};

pub const IDS: [&str; 5] = ["mp-relaxed", "mp-ra", "tx-mp", "tx-relaxed", "tx-chain"];

/// Programs outside the corpus that reach lock paths the corpus leaves
/// unexercised. Their postconditions hold under the unmutated lock.
pub const HARNESS_IDS: [&str; 2] = ["tx-snapshot", "tx-causal"];

pub fn builtin_corpus() -> Vec<Program> {
    alloc::vec![mp(false), mp(true), tx_mp(), tx_relaxed(), tx_chain()]
}

pub fn harness_programs() -> Vec<Program> {
    alloc::vec![tx_snapshot(), tx_causal()]
}

/// Looks up both the corpus and the harness programs.
pub fn builtin(id: &str) -> Option<Program> {
    builtin_corpus().into_iter().chain(harness_programs()).find(|p| p.name == id)
}

fn store(loc: Loc, val: Value, release: bool) -> Stmt {
    Stmt::Atomic(AtomicCommand::Store { loc, expr: Expr::Const(val), release })
}

fn load(reg: Reg, loc: Loc, acquire: bool) -> Stmt {
    Stmt::Atomic(AtomicCommand::Load { reg, loc, acquire })
}

fn begin(flag: SyncFlag, regs: &[Reg]) -> Stmt {
    Stmt::Atomic(AtomicCommand::TxBegin { flag, regs: regs.iter().copied().collect::<BTreeSet<_>>() })
}

fn tx_read(loc: Loc, reg: Reg) -> Stmt {
    Stmt::Atomic(AtomicCommand::TxRead { loc, reg })
}

fn tx_write(loc: Loc, val: Value) -> Stmt {
    Stmt::Atomic(AtomicCommand::TxWrite { loc, expr: Expr::Const(val) })
}

fn end() -> Stmt {
    Stmt::Atomic(AtomicCommand::TxEnd)
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| String::from(*s)).collect()
}

fn regs(xs: &[(&str, usize)]) -> Vec<(String, usize)> {
    xs.iter().map(|(n, t)| (String::from(*n), *t)).collect()
}

fn forall(predicate: BoolExpr) -> Postcondition {
    Postcondition { quantifier: Quantifier::Forall, predicate }
}

/// Message passing over plain accesses, relaxed or release-acquire.
fn mp(synchronised: bool) -> Program {
    let (d, f) = (0, 1);
    let (r1, r2) = (0, 1);
    let predicate = if synchronised {
        BoolExpr::reg_eq(r2, 5)
    } else {
        BoolExpr::or(BoolExpr::reg_eq(r2, 0), BoolExpr::reg_eq(r2, 5))
    };
    Program {
        name: (if synchronised { "mp-ra" } else { "mp-relaxed" }).into(),
        locations: names(&["d", "f"]),
        tx_locations: Vec::new(),
        registers: regs(&[("r1", 1), ("r2", 1)]),
        threads: alloc::vec![
            lower("t1", &[store(d, 5, false), store(f, 1, synchronised)]),
            lower(
                "t2",
                &[
                    Stmt::DoUntil { body: alloc::vec![load(r1, f, synchronised)], cond: BoolExpr::reg_eq(r1, 1) },
                    load(r2, d, false),
                ],
            ),
        ],
        postcondition: forall(predicate),
    }
}

fn tx_mp() -> Program {
    let d = 0;
    let f = 0;
    let (r1, r2) = (0, 1);
    Program {
        name: "tx-mp".into(),
        locations: names(&["d"]),
        tx_locations: names(&["f"]),
        registers: regs(&[("r1", 1), ("r2", 1)]),
        threads: alloc::vec![
            lower("t1", &[store(d, 5, false), begin(SyncFlag::R, &[]), tx_write(f, 1), end()],),
            lower(
                "t2",
                &[
                    Stmt::DoUntil {
                        body: alloc::vec![begin(SyncFlag::A, &[r1]), tx_read(f, r1), end()],
                        cond: BoolExpr::reg_eq(r1, 1),
                    },
                    load(r2, d, false),
                ],
            ),
        ],
        postcondition: forall(BoolExpr::reg_eq(r2, 5)),
    }
}

fn tx_relaxed() -> Program {
    let d1 = 0;
    let (f, d2) = (0, 1);
    let (r1, r2, r3) = (0, 1, 2);
    Program {
        name: "tx-relaxed".into(),
        locations: names(&["d1"]),
        tx_locations: names(&["f", "d2"]),
        registers: regs(&[("r1", 1), ("r2", 1), ("r3", 1)]),
        threads: alloc::vec![
            lower("t1", &[store(d1, 5, false), begin(SyncFlag::Rx, &[]), tx_write(d2, 10), tx_write(f, 1), end(),],),
            lower(
                "t2",
                &[
                    begin(SyncFlag::Rx, &[r1, r2]),
                    tx_read(f, r1),
                    Stmt::If { cond: BoolExpr::reg_eq(r1, 1), then: alloc::vec![tx_read(d2, r2)], els: Vec::new() },
                    end(),
                    load(r3, d1, false),
                ],
            ),
        ],
        postcondition: forall(BoolExpr::implies(
            BoolExpr::reg_eq(r1, 1),
            BoolExpr::and(BoolExpr::reg_eq(r2, 10), BoolExpr::In(Expr::Reg(r3), alloc::vec![0, 5])),
        )),
    }
}

fn tx_chain() -> Program {
    let (d1, d2) = (0, 1);
    let f = 0;
    let (r2, r3, s1, s2) = (0, 1, 2, 3);
    Program {
        name: "tx-chain".into(),
        locations: names(&["d1", "d2"]),
        tx_locations: names(&["f"]),
        registers: regs(&[("r2", 1), ("r3", 2), ("s1", 2), ("s2", 2)]),
        threads: alloc::vec![
            lower("t1", &[store(d1, 5, false), begin(SyncFlag::R, &[]), tx_write(f, 1), end()],),
            lower(
                "t2",
                &[
                    store(d2, 10, false),
                    begin(SyncFlag::Ra, &[r2]),
                    tx_read(f, r2),
                    Stmt::If { cond: BoolExpr::reg_eq(r2, 1), then: alloc::vec![tx_write(f, 2)], els: Vec::new() },
                    end(),
                ],
            ),
            lower(
                "t3",
                &[
                    begin(SyncFlag::A, &[r3]),
                    tx_read(f, r3),
                    end(),
                    Stmt::If {
                        cond: BoolExpr::reg_eq(r3, 2),
                        then: alloc::vec![load(s1, d1, false), load(s2, d2, false)],
                        els: Vec::new(),
                    },
                ],
            ),
        ],
        postcondition: forall(BoolExpr::implies(
            BoolExpr::reg_eq(r3, 2),
            BoolExpr::and(BoolExpr::reg_eq(s1, 5), BoolExpr::reg_eq(s2, 10)),
        )),
    }
}

/// A reader that sees one location of a two-location commit must see the
/// other. Needs a writer to commit between the reader's first and second
/// read, which is the only route to the validation at R9.
fn tx_snapshot() -> Program {
    let (f, g) = (0, 1);
    let (r1, r2) = (0, 1);
    Program {
        name: "tx-snapshot".into(),
        locations: Vec::new(),
        tx_locations: names(&["f", "g"]),
        registers: regs(&[("r1", 1), ("r2", 1)]),
        threads: alloc::vec![
            lower("t1", &[begin(SyncFlag::Ra, &[]), tx_write(f, 1), tx_write(g, 1), end()]),
            lower("t2", &[begin(SyncFlag::Ra, &[r1, r2]), tx_read(f, r1), tx_read(g, r2), end()]),
        ],
        postcondition: forall(BoolExpr::implies(
            BoolExpr::Defined(r1),
            BoolExpr::Cmp(CmpOp::Eq, Expr::Reg(r1), Expr::Reg(r2)),
        )),
    }
}

/// A committed read-only transaction that precedes a writer in glb's
/// order must happen before it, so the writer's thread sees `d`.
fn tx_causal() -> Program {
    let d = 0;
    let f = 0;
    let (r1, r2) = (0, 1);
    Program {
        name: "tx-causal".into(),
        locations: names(&["d"]),
        tx_locations: names(&["f"]),
        registers: regs(&[("r1", 0), ("r2", 1)]),
        threads: alloc::vec![
            lower("t1", &[store(d, 5, false), begin(SyncFlag::Ra, &[r1]), tx_read(f, r1), end()]),
            lower("t2", &[begin(SyncFlag::Ra, &[]), tx_write(f, 1), end(), load(r2, d, false)]),
        ],
        postcondition: forall(BoolExpr::implies(BoolExpr::reg_eq(r1, 0), BoolExpr::reg_eq(r2, 5))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_well_formed() {
        let corpus = builtin_corpus();
        let ids: Vec<&str> = corpus.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(ids, IDS);
        for p in &corpus {
            p.validate().unwrap();
        }
        assert!(!corpus[0].has_transactions() && !corpus[1].has_transactions());
        assert!(corpus[2..].iter().all(|p| p.has_transactions()));
    }

    #[test]
    fn message_passing_has_a_loop() {
        let p = builtin("mp-ra").unwrap();
        // load f; until guard; load d
        assert_eq!(p.threads[1].commands.len(), 3);
        assert_eq!(p.threads[0].commands.len(), 2);
    }
}
