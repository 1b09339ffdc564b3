//! Hoare-triple proof rules over single commands, checked semantically: a
//! rule holds when, in every reachable configuration of a family of small
//! scaffold programs where its precondition holds, every execution of its
//! command ends in a state satisfying its postcondition.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::explorer::{walk, ExploreError, ExploreOptions};
use crate::lts::{Action, Backend, Configuration, Step};
use crate::program::{
    lower, AtomicCommand, BoolExpr, CmpOp, Expr, LabelledCommand, Postcondition, Program, Quantifier, Stmt,
};
use crate::taro::{Assertion, EvalError, EvalOptions, Term};
use crate::tms2ra::{SyncFlag, TxnStatus};
use crate::{Loc, Reg, ThreadId, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CommandKind {
    TxBegin,
    TxRead,
    TxWrite,
    TxEnd,
    Load,
    Store,
}

/// Which thread runs the command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Actor {
    /// The rule's own thread `tau`.
    Tau,
    /// Any thread; `tau` is then a free parameter.
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlagReq {
    Any,
    Releasing,
    Acquiring,
}

/// Where the command's location operand goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocSlot {
    Free,
    X,
    Y,
    Z2,
}

/// Where the command's value operand goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValSlot {
    Free,
    V,
    W,
    M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub kind: CommandKind,
    pub actor: Actor,
    pub flag: FlagReq,
    pub loc: LocSlot,
    pub val: ValSlot,
    /// The command's register (TxRead, Load) binds `reg`.
    pub binds_reg: bool,
}

impl Pattern {
    const fn new(kind: CommandKind, actor: Actor) -> Pattern {
        Pattern { kind, actor, flag: FlagReq::Any, loc: LocSlot::Free, val: ValSlot::Free, binds_reg: false }
    }

    const fn flag(mut self, flag: FlagReq) -> Pattern {
        self.flag = flag;
        self
    }

    const fn loc(mut self, loc: LocSlot) -> Pattern {
        self.loc = loc;
        self
    }

    const fn val(mut self, val: ValSlot) -> Pattern {
        self.val = val;
        self
    }

    const fn reg(mut self) -> Pattern {
        self.binds_reg = true;
        self
    }
}

/// Parameters enumerated over the bounds when not bound by the command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Param {
    Tau,
    /// A thread other than `tau`.
    Tau2,
    /// Any thread, stored in `tau2`.
    Other,
    X,
    Y,
    Z,
    Z2,
    U,
    V,
    W,
    M,
    I,
    Reg,
}

/// One instantiation of a rule's schema variables. `x`, `y` are
/// transactional locations, `z`, `z2` client locations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Instance {
    pub tau: ThreadId,
    pub tau2: ThreadId,
    pub x: Loc,
    pub y: Loc,
    pub z: Loc,
    pub z2: Loc,
    pub u: Value,
    pub v: Value,
    pub w: Value,
    pub m: Value,
    pub i: Value,
    pub reg: Reg,
}

type Schema = fn(&Instance) -> Assertion;

#[derive(Clone, Copy)]
pub struct Rule {
    pub name: &'static str,
    pub pattern: Pattern,
    pub free: &'static [Param],
    pub pre: Schema,
    pub post: Schema,
    /// Count aborts at the command as executions of it. Only rules whose
    /// postcondition is guarded by the transaction status set this.
    pub include_aborts: bool,
}

impl core::fmt::Debug for Rule {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Rule").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Rule {
    /// Rules that speak about a thread other than the one acting are also
    /// checked on three-thread scaffolds.
    pub fn is_chain(&self) -> bool {
        self.pattern.actor == Actor::Any || self.free.iter().any(|p| matches!(p, Param::Tau2 | Param::Other))
    }

    /// Every parameter the rule mentions, bound or free.
    pub fn params(&self) -> BTreeSet<Param> {
        let mut out: BTreeSet<Param> = self.free.iter().copied().collect();
        let p = &self.pattern;
        if p.actor == Actor::Tau {
            out.insert(Param::Tau);
        }
        match p.loc {
            LocSlot::X => {
                out.insert(Param::X);
            }
            LocSlot::Y => {
                out.insert(Param::Y);
            }
            LocSlot::Z2 => {
                out.insert(Param::Z2);
            }
            LocSlot::Free => {}
        }
        match p.val {
            ValSlot::V => {
                out.insert(Param::V);
            }
            ValSlot::W => {
                out.insert(Param::W);
            }
            ValSlot::M => {
                out.insert(Param::M);
            }
            ValSlot::Free => {}
        }
        if p.binds_reg {
            out.insert(Param::Reg);
        }
        out
    }

    /// `tau=t1 x=f u=1 ...` for the parameters the rule mentions.
    pub fn describe_instance(&self, inst: &Instance, prog: &Program) -> String {
        let thread = |t: ThreadId| prog.threads.get(t).map_or_else(|| format!("#{t}"), |c| c.name.clone());
        let tx = |x: Loc| prog.tx_locations.get(x).cloned().unwrap_or_default();
        let client = |x: Loc| prog.locations.get(x).cloned().unwrap_or_default();
        let parts: Vec<String> = self
            .params()
            .into_iter()
            .map(|p| match p {
                Param::Tau => format!("tau={}", thread(inst.tau)),
                Param::Tau2 | Param::Other => format!("tau'={}", thread(inst.tau2)),
                Param::X => format!("x={}", tx(inst.x)),
                Param::Y => format!("y={}", tx(inst.y)),
                Param::Z => format!("z={}", client(inst.z)),
                Param::Z2 => format!("z'={}", client(inst.z2)),
                Param::U => format!("u={}", inst.u),
                Param::V => format!("v={}", inst.v),
                Param::W => format!("w={}", inst.w),
                Param::M => format!("m={}", inst.m),
                Param::I => format!("i={}", inst.i),
                Param::Reg => format!("r={}", prog.registers.get(inst.reg).map_or("?", |r| r.0.as_str())),
            })
            .collect();
        parts.join(" ")
    }
}

/// Finite domains for the schema variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleBounds {
    /// Values range over `0..=max_value`.
    pub max_value: Value,
    /// Memory indices range over `0..=max_index`.
    pub max_index: Value,
    pub explore: ExploreOptions,
}

impl Default for RuleBounds {
    fn default() -> Self {
        RuleBounds {
            max_value: 3,
            max_index: 3,
            explore: ExploreOptions { check_invariants: false, ..ExploreOptions::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleCounterexample {
    pub program: Program,
    /// Steps to the pre-state, then the command's step.
    pub trace: Vec<Step>,
    pub instance: Instance,
    pub pre: String,
    pub post: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleReport {
    pub rule: &'static str,
    pub holds: bool,
    /// Command executions from a state satisfying the precondition.
    pub exercised: usize,
    pub counterexample: Option<RuleCounterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("rule {rule}: {source}")]
    Eval { rule: &'static str, source: EvalError },
}

// Assertion shorthands.

fn c(v: Value) -> Term {
    Term::Const(v)
}

fn and(items: impl IntoIterator<Item = Assertion>) -> Assertion {
    Assertion::all(items)
}

fn not(a: Assertion) -> Assertion {
    Assertion::negate(a)
}

fn implies(a: Assertion, b: Assertion) -> Assertion {
    Assertion::implies(a, b)
}

fn truth() -> Assertion {
    Assertion::Const(true)
}

fn ne(a: Value, b: Value) -> Assertion {
    Assertion::Const(a != b)
}

fn definite(t: ThreadId, z: Loc, v: Value) -> Assertion {
    Assertion::Definite { thread: t, loc: z, val: c(v) }
}

fn possible(t: ThreadId, z: Loc, v: Value) -> Assertion {
    Assertion::Possible { thread: t, loc: z, val: c(v) }
}

fn tx_definite(t: ThreadId, x: Loc, v: Value) -> Assertion {
    Assertion::TxDefinite { thread: t, loc: x, val: c(v) }
}

fn tx_possible(t: ThreadId, x: Loc, v: Term) -> Assertion {
    Assertion::TxPossible { thread: t, loc: x, val: v }
}

fn tx_cond(t: ThreadId, x: Loc, u: Value, z: Loc, v: Value) -> Assertion {
    Assertion::TxConditional { thread: t, guard_loc: x, guard_val: c(u), loc: z, val: c(v) }
}

fn commit_view(t: ThreadId, z: Loc, v: Value) -> Assertion {
    Assertion::CommitView { thread: t, loc: z, val: c(v) }
}

fn in_ws(t: ThreadId, x: Loc, v: Term) -> Assertion {
    Assertion::InWriteSet { thread: t, loc: x, val: Some(v) }
}

fn in_ws_dom(t: ThreadId, x: Loc) -> Assertion {
    Assertion::InWriteSet { thread: t, loc: x, val: None }
}

fn in_rs(t: ThreadId, x: Loc, v: Term) -> Assertion {
    Assertion::InReadSet { thread: t, loc: x, val: Some(v) }
}

fn ws_empty(t: ThreadId) -> Assertion {
    Assertion::WriteSetIs { thread: t, entries: Vec::new() }
}

fn status(t: ThreadId, s: TxnStatus) -> Assertion {
    Assertion::StatusIs { thread: t, status: s }
}

fn mem_value(i: Term, x: Loc, v: Value) -> Assertion {
    Assertion::MemValue { index: i, loc: x, val: c(v) }
}

fn never_written(x: Loc, v: Value) -> Assertion {
    Assertion::NeverWritten { loc: x, val: c(v) }
}

fn reg(r: Reg) -> Term {
    Term::Reg(r)
}

fn last_index() -> Term {
    Term::Offset(alloc::boxed::Box::new(Term::MemCount), -1)
}

use Actor::{Any, Tau};
use CommandKind::{TxBegin, TxEnd, TxRead, TxWrite};
use Param as P;

fn publisher_pre(k: &Instance, with_rel: bool) -> Assertion {
    let mut parts = alloc::vec![in_ws(k.tau, k.x, c(k.u))];
    if with_rel {
        parts.push(Assertion::Rel(k.tau));
    }
    parts.push(not(tx_possible(k.tau2, k.x, c(k.u))));
    parts.push(definite(k.tau, k.z, k.v));
    and(parts)
}

/// The introductory rules for transactional message passing.
pub fn message_passing_rules() -> Vec<Rule> {
    alloc::vec![
        Rule {
            name: "mp-1",
            pattern: Pattern::new(TxWrite, Tau).loc(LocSlot::X).val(ValSlot::V),
            free: &[],
            pre: |_| truth(),
            post: |k| in_ws(k.tau, k.x, c(k.v)),
            include_aborts: false,
        },
        Rule {
            name: "mp-2",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::Tau2, P::X, P::Z, P::U, P::V],
            pre: |k| publisher_pre(k, true),
            post: |k| tx_cond(k.tau2, k.x, k.u, k.z, k.v),
            include_aborts: false,
        },
        Rule {
            name: "mp-3",
            pattern: Pattern::new(TxRead, Tau).loc(LocSlot::X).reg(),
            free: &[P::Z, P::U, P::V],
            pre: |k| and([not(in_ws_dom(k.tau, k.x)), Assertion::Acq(k.tau), tx_cond(k.tau, k.x, k.u, k.z, k.v)]),
            post: |k| {
                and([
                    in_rs(k.tau, k.x, reg(k.reg)),
                    implies(Assertion::reg_eq(k.reg, k.u), commit_view(k.tau, k.z, k.v)),
                ])
            },
            include_aborts: false,
        },
        Rule {
            name: "mp-4",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::X, P::Reg, P::Z, P::U, P::V],
            pre: |k| {
                and([
                    in_rs(k.tau, k.x, reg(k.reg)),
                    implies(Assertion::reg_eq(k.reg, k.u), commit_view(k.tau, k.z, k.v)),
                ])
            },
            post: |k| implies(Assertion::reg_eq(k.reg, k.u), definite(k.tau, k.z, k.v)),
            include_aborts: false,
        },
    ]
}

/// The second message-passing rule with the writer's release flag dropped. A relaxed
/// writer does not publish its view, so this must be refuted.
pub fn falsified_rule() -> Rule {
    Rule {
        name: "mp-2-without-rel",
        pattern: Pattern::new(TxEnd, Tau),
        free: &[P::Tau2, P::X, P::Z, P::U, P::V],
        pre: |k| publisher_pre(k, false),
        post: |k| tx_cond(k.tau2, k.x, k.u, k.z, k.v),
        include_aborts: false,
    }
}

/// Rules for each transactional command and for client reads and writes.
pub fn command_rules() -> Vec<Rule> {
    alloc::vec![
        // TxBegin
        Rule {
            name: "txbegin-1",
            pattern: Pattern::new(TxBegin, Any),
            free: &[P::Tau, P::X, P::U],
            pre: |k| not(tx_possible(k.tau, k.x, c(k.u))),
            post: |k| not(tx_possible(k.tau, k.x, c(k.u))),
            include_aborts: false,
        },
        Rule {
            name: "txbegin-2",
            pattern: Pattern::new(TxBegin, Any),
            free: &[P::Tau, P::X, P::Z, P::U, P::V],
            pre: |k| tx_cond(k.tau, k.x, k.u, k.z, k.v),
            post: |k| tx_cond(k.tau, k.x, k.u, k.z, k.v),
            include_aborts: false,
        },
        Rule {
            name: "txbegin-3",
            pattern: Pattern::new(TxBegin, Any),
            free: &[P::Tau, P::Z, P::U],
            pre: |k| definite(k.tau, k.z, k.u),
            post: |k| definite(k.tau, k.z, k.u),
            include_aborts: false,
        },
        Rule {
            name: "txbegin-4",
            pattern: Pattern::new(TxBegin, Tau).flag(FlagReq::Releasing),
            free: &[],
            pre: |_| truth(),
            post: |k| Assertion::Rel(k.tau),
            include_aborts: false,
        },
        Rule {
            name: "txbegin-5",
            pattern: Pattern::new(TxBegin, Tau).flag(FlagReq::Acquiring),
            free: &[],
            pre: |_| truth(),
            post: |k| Assertion::Acq(k.tau),
            include_aborts: false,
        },
        Rule {
            name: "txbegin-6",
            pattern: Pattern::new(TxBegin, Tau),
            free: &[P::Tau2, P::Y, P::V],
            pre: |k| in_ws(k.tau2, k.y, c(k.v)),
            post: |k| in_ws(k.tau2, k.y, c(k.v)),
            include_aborts: false,
        },
        // TxRead
        Rule {
            name: "txread-1",
            pattern: Pattern::new(TxRead, Any),
            free: &[P::Tau, P::X, P::U],
            pre: |k| not(tx_possible(k.tau, k.x, c(k.u))),
            post: |k| not(tx_possible(k.tau, k.x, c(k.u))),
            include_aborts: false,
        },
        Rule {
            name: "txread-2",
            pattern: Pattern::new(TxRead, Tau),
            free: &[P::Other, P::X, P::U],
            pre: |k| tx_definite(k.tau2, k.x, k.u),
            post: |k| implies(status(k.tau, TxnStatus::Ready), tx_definite(k.tau2, k.x, k.u)),
            include_aborts: true,
        },
        Rule {
            name: "txread-3",
            pattern: Pattern::new(TxRead, Tau).loc(LocSlot::X).reg(),
            free: &[],
            pre: |k| ws_empty(k.tau),
            post: |k| in_rs(k.tau, k.x, reg(k.reg)),
            include_aborts: false,
        },
        Rule {
            name: "txread-4",
            pattern: Pattern::new(TxRead, Tau).loc(LocSlot::X).reg(),
            free: &[],
            pre: |k| not(in_ws_dom(k.tau, k.x)),
            post: |k| tx_possible(k.tau, k.x, reg(k.reg)),
            include_aborts: false,
        },
        Rule {
            name: "txread-5",
            pattern: Pattern::new(TxRead, Tau).loc(LocSlot::X).reg(),
            free: &[P::U],
            pre: |k| and([tx_definite(k.tau, k.x, k.u), not(in_ws_dom(k.tau, k.x))]),
            post: |k| Assertion::reg_eq(k.reg, k.u),
            include_aborts: false,
        },
        Rule {
            name: "txread-6",
            pattern: Pattern::new(TxRead, Any),
            free: &[P::Tau, P::Y, P::V],
            pre: |k| in_ws(k.tau, k.y, c(k.v)),
            post: |k| in_ws(k.tau, k.y, c(k.v)),
            include_aborts: false,
        },
        Rule {
            name: "txread-7",
            pattern: Pattern::new(TxRead, Tau),
            free: &[P::Tau2, P::Y, P::V],
            pre: |k| in_rs(k.tau2, k.y, c(k.v)),
            post: |k| in_rs(k.tau2, k.y, c(k.v)),
            include_aborts: false,
        },
        // TxWrite
        Rule {
            name: "txwrite-1",
            pattern: Pattern::new(TxWrite, Any),
            free: &[P::Tau, P::X, P::U],
            pre: |k| not(tx_possible(k.tau, k.x, c(k.u))),
            post: |k| not(tx_possible(k.tau, k.x, c(k.u))),
            include_aborts: false,
        },
        Rule {
            name: "txwrite-2",
            pattern: Pattern::new(TxWrite, Any),
            free: &[P::Tau, P::Z, P::U],
            pre: |k| definite(k.tau, k.z, k.u),
            post: |k| definite(k.tau, k.z, k.u),
            include_aborts: false,
        },
        Rule {
            name: "txwrite-3",
            pattern: Pattern::new(TxWrite, Tau).loc(LocSlot::Y).val(ValSlot::V),
            free: &[],
            pre: |_| truth(),
            post: |k| in_ws(k.tau, k.y, c(k.v)),
            include_aborts: false,
        },
        Rule {
            name: "txwrite-4",
            pattern: Pattern::new(TxWrite, Tau).loc(LocSlot::Y).val(ValSlot::W),
            free: &[P::X, P::Z, P::U, P::V],
            pre: |k| and([tx_cond(k.tau, k.x, k.u, k.z, k.v), ne(k.w, k.u)]),
            post: |k| tx_cond(k.tau, k.x, k.u, k.z, k.v),
            include_aborts: false,
        },
        Rule {
            name: "txwrite-5",
            pattern: Pattern::new(TxWrite, Any).loc(LocSlot::X),
            free: &[P::Tau, P::Y, P::V],
            pre: |k| and([Assertion::Const(k.x != k.y), in_ws(k.tau, k.y, c(k.v))]),
            post: |k| in_ws(k.tau, k.y, c(k.v)),
            include_aborts: false,
        },
        // TxEnd
        Rule {
            name: "txend-1",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::Other, P::X, P::Z, P::U, P::V],
            pre: |k| and([tx_cond(k.tau2, k.x, k.u, k.z, k.v), ws_empty(k.tau)]),
            post: |k| tx_cond(k.tau2, k.x, k.u, k.z, k.v),
            include_aborts: false,
        },
        Rule {
            name: "txend-2",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::Tau2, P::X, P::Z, P::U, P::V],
            pre: |k| {
                and([
                    in_ws(k.tau, k.x, c(k.u)),
                    not(tx_possible(k.tau2, k.x, c(k.u))),
                    definite(k.tau, k.z, k.v),
                    Assertion::Rel(k.tau),
                ])
            },
            post: |k| implies(status(k.tau, TxnStatus::Committed), tx_cond(k.tau2, k.x, k.u, k.z, k.v)),
            include_aborts: true,
        },
        Rule {
            name: "txend-3",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::X, P::Z, P::U, P::V],
            pre: |k| {
                and([tx_cond(k.tau, k.x, k.u, k.z, k.v), not(in_ws(k.tau, k.x, c(k.u))), Assertion::Rel(k.tau)])
            },
            post: |k| tx_cond(k.tau, k.x, k.u, k.z, k.v),
            include_aborts: false,
        },
        Rule {
            name: "txend-4",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::Other, P::X, P::Z, P::U, P::V],
            pre: |k| tx_cond(k.tau2, k.x, k.u, k.z, k.v),
            post: |k| implies(status(k.tau, TxnStatus::Aborted), tx_cond(k.tau2, k.x, k.u, k.z, k.v)),
            include_aborts: true,
        },
        Rule {
            name: "txend-5",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::X, P::Z, P::U, P::V],
            pre: |k| {
                and([
                    tx_cond(k.tau, k.x, k.u, k.z, k.v),
                    in_rs(k.tau, k.x, c(k.u)),
                    Assertion::Acq(k.tau),
                    ws_empty(k.tau),
                ])
            },
            post: |k| implies(status(k.tau, TxnStatus::Committed), definite(k.tau, k.z, k.v)),
            include_aborts: true,
        },
        Rule {
            name: "txend-6",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::Other, P::X, P::U],
            pre: |k| and([not(tx_possible(k.tau2, k.x, c(k.u))), not(in_ws(k.tau, k.x, c(k.u)))]),
            post: |k| not(tx_possible(k.tau2, k.x, c(k.u))),
            include_aborts: false,
        },
        Rule {
            name: "txend-7",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::Z, P::V],
            pre: |k| definite(k.tau, k.z, k.v),
            post: |k| definite(k.tau, k.z, k.v),
            include_aborts: false,
        },
        Rule {
            name: "txend-8",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::Other, P::Z, P::U],
            pre: |k| and([possible(k.tau2, k.z, k.u), not(Assertion::Acq(k.tau))]),
            post: |k| possible(k.tau2, k.z, k.u),
            include_aborts: false,
        },
        Rule {
            name: "txend-9",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::Other, P::Y, P::V],
            pre: |k| in_ws(k.tau2, k.y, c(k.v)),
            post: |k| in_ws(k.tau2, k.y, c(k.v)),
            include_aborts: false,
        },
        // Client reads and writes
        Rule {
            name: "client-1",
            pattern: Pattern::new(CommandKind::Load, Tau),
            free: &[P::Other, P::X, P::Z, P::U, P::V],
            pre: |k| tx_cond(k.tau2, k.x, k.u, k.z, k.v),
            post: |k| tx_cond(k.tau2, k.x, k.u, k.z, k.v),
            include_aborts: false,
        },
        Rule {
            name: "client-2",
            pattern: Pattern::new(CommandKind::Store, Tau).loc(LocSlot::Z2).val(ValSlot::M),
            free: &[P::X, P::Z, P::U, P::V],
            pre: |k| and([tx_cond(k.tau, k.x, k.u, k.z, k.v), Assertion::Const(k.z != k.z2)]),
            post: |k| tx_cond(k.tau, k.x, k.u, k.z, k.v),
            include_aborts: false,
        },
    ]
}

/// Rules over memory-value and never-written assertions.
pub fn memory_rules() -> Vec<Rule> {
    alloc::vec![
        Rule {
            name: "memory-1",
            pattern: Pattern::new(TxBegin, Tau),
            free: &[P::X, P::U, P::I],
            pre: |k| mem_value(c(k.i), k.x, k.u),
            post: |k| mem_value(c(k.i), k.x, k.u),
            include_aborts: false,
        },
        Rule {
            name: "memory-2",
            pattern: Pattern::new(TxRead, Tau),
            free: &[P::X, P::U, P::I],
            pre: |k| mem_value(c(k.i), k.x, k.u),
            post: |k| mem_value(c(k.i), k.x, k.u),
            include_aborts: false,
        },
        Rule {
            name: "memory-3",
            pattern: Pattern::new(TxWrite, Tau),
            free: &[P::X, P::U, P::I],
            pre: |k| mem_value(c(k.i), k.x, k.u),
            post: |k| mem_value(c(k.i), k.x, k.u),
            include_aborts: false,
        },
        Rule {
            name: "memory-4",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::X, P::U, P::I],
            pre: |k| and([in_ws(k.tau, k.x, c(k.u)), Assertion::Cmp(CmpOp::Eq, Term::MemCount, c(k.i))]),
            post: |k| implies(status(k.tau, TxnStatus::Committed), mem_value(c(k.i), k.x, k.u)),
            include_aborts: true,
        },
        Rule {
            name: "memory-5",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::X, P::V, P::I],
            pre: |k| and([mem_value(c(k.i), k.x, k.v), Assertion::Cmp(CmpOp::Lt, c(k.i), last_index())]),
            post: |k| mem_value(c(k.i), k.x, k.v),
            include_aborts: false,
        },
        Rule {
            // u, v: x before and after; w, m: y before and after.
            name: "memory-6",
            pattern: Pattern::new(TxRead, Tau).loc(LocSlot::Y).reg(),
            free: &[P::X, P::U, P::V, P::W, P::M, P::I],
            pre: |k| {
                and([
                    ne(k.u, k.v),
                    ne(k.w, k.m),
                    Assertion::Cmp(CmpOp::Eq, c(k.i), last_index()),
                    mem_value(c(k.i - 1), k.x, k.u),
                    mem_value(c(k.i), k.x, k.v),
                    mem_value(c(k.i - 1), k.y, k.w),
                    mem_value(c(k.i), k.y, k.m),
                    status(k.tau, TxnStatus::Ready),
                    Assertion::BeginIndex { thread: k.tau, index: c(k.i - 1) },
                    in_rs(k.tau, k.x, c(k.v)),
                    ws_empty(k.tau),
                ])
            },
            post: |k| implies(status(k.tau, TxnStatus::Ready), Assertion::reg_eq(k.reg, k.m)),
            include_aborts: true,
        },
        Rule {
            name: "memory-7",
            pattern: Pattern::new(TxBegin, Tau),
            free: &[P::Other, P::X, P::V],
            pre: |k| never_written(k.x, k.v),
            post: |k| not(tx_possible(k.tau2, k.x, c(k.v))),
            include_aborts: false,
        },
        Rule {
            name: "memory-8",
            pattern: Pattern::new(TxBegin, Tau),
            free: &[P::X, P::V],
            pre: |k| never_written(k.x, k.v),
            post: |k| never_written(k.x, k.v),
            include_aborts: false,
        },
        Rule {
            name: "memory-9",
            pattern: Pattern::new(TxRead, Tau),
            free: &[P::X, P::V],
            pre: |k| never_written(k.x, k.v),
            post: |k| never_written(k.x, k.v),
            include_aborts: false,
        },
        Rule {
            name: "memory-10",
            pattern: Pattern::new(TxWrite, Tau),
            free: &[P::X, P::V],
            pre: |k| never_written(k.x, k.v),
            post: |k| never_written(k.x, k.v),
            include_aborts: false,
        },
        Rule {
            name: "memory-11",
            pattern: Pattern::new(TxEnd, Tau),
            free: &[P::X, P::V],
            pre: |k| and([never_written(k.x, k.v), not(in_ws(k.tau, k.x, c(k.v)))]),
            post: |k| never_written(k.x, k.v),
            include_aborts: false,
        },
    ]
}

/// Every catalogued rule that is expected to hold.
pub fn catalogue() -> Vec<Rule> {
    let mut out = message_passing_rules();
    out.extend(command_rules());
    out.extend(memory_rules());
    out
}

pub fn find_rule(name: &str) -> Option<Rule> {
    catalogue().into_iter().chain(core::iter::once(falsified_rule())).find(|r| r.name == name)
}

// Scaffolds.

/// Thread shapes the scaffolds are assembled from. Each uses transactional
/// locations `x0`, `x1` and client locations `z0`, `z1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `z0 := a; TxBegin; TxWrite(x0, a); TxWrite(x1, a); TxEnd`
    Writer(SyncFlag),
    /// `TxBegin; TxRead(x0, r0); TxRead(x1, r1); TxEnd; r2 <- z0`
    Reader(SyncFlag),
    /// `TxBegin; TxRead(x0, r0); TxWrite(x0, 3); TxRead(x0, r1); TxEnd; z1 := 3`
    Updater(SyncFlag),
}

impl Shape {
    fn tag(self) -> String {
        let (kind, flag) = match self {
            Shape::Writer(f) => ("w", f),
            Shape::Reader(f) => ("r", f),
            Shape::Updater(f) => ("u", f),
        };
        format!("{kind}{}", flag.name().to_lowercase())
    }
}

const SHAPES_TWO: [Shape; 6] = [
    Shape::Writer(SyncFlag::R),
    Shape::Writer(SyncFlag::Rx),
    Shape::Reader(SyncFlag::A),
    Shape::Reader(SyncFlag::Rx),
    Shape::Updater(SyncFlag::Ra),
    Shape::Updater(SyncFlag::Rx),
];

const SHAPES_THREE: [Shape; 3] = [Shape::Writer(SyncFlag::R), Shape::Reader(SyncFlag::A), Shape::Updater(SyncFlag::Ra)];

/// A scaffold program running `shapes` in parallel. Thread `k`'s writer
/// writes value `k + 1`.
pub fn scaffold(shapes: &[Shape]) -> Program {
    let (z0, z1, x0, x1) = (0, 1, 0, 1);
    let mut registers = Vec::new();
    let mut threads = Vec::new();
    for (t, shape) in shapes.iter().enumerate() {
        let base = registers.len();
        for k in 0..3 {
            registers.push((format!("r{k}_{}", t + 1), t));
        }
        let (r0, r1, r2) = (base, base + 1, base + 2);
        let a = t as Value + 1;
        let atom = Stmt::Atomic;
        let begin =
            |flag: SyncFlag, regs: &[Reg]| atom(AtomicCommand::TxBegin { flag, regs: regs.iter().copied().collect() });
        let write = |loc: Loc, val: Value| atom(AtomicCommand::TxWrite { loc, expr: Expr::Const(val) });
        let read = |loc: Loc, reg: Reg| atom(AtomicCommand::TxRead { loc, reg });
        let store = |loc: Loc, val: Value| atom(AtomicCommand::Store { loc, expr: Expr::Const(val), release: false });
        let body = match *shape {
            Shape::Writer(f) => {
                alloc::vec![store(z0, a), begin(f, &[]), write(x0, a), write(x1, a), atom(AtomicCommand::TxEnd),]
            }
            Shape::Reader(f) => alloc::vec![
                begin(f, &[r0, r1]),
                read(x0, r0),
                read(x1, r1),
                atom(AtomicCommand::TxEnd),
                atom(AtomicCommand::Load { reg: r2, loc: z0, acquire: false }),
            ],
            Shape::Updater(f) => alloc::vec![
                begin(f, &[r0, r1]),
                read(x0, r0),
                write(x0, 3),
                read(x0, r1),
                atom(AtomicCommand::TxEnd),
                store(z1, 3),
            ],
        };
        threads.push(lower(&format!("t{}", t + 1), &body));
    }
    let tags: Vec<String> = shapes.iter().map(|s| s.tag()).collect();
    Program {
        name: format!("scaffold-{}", tags.join("-")),
        locations: alloc::vec!["z0".into(), "z1".into()],
        tx_locations: alloc::vec!["x0".into(), "x1".into()],
        registers,
        threads,
        postcondition: Postcondition { quantifier: Quantifier::Forall, predicate: BoolExpr::Const(true) },
    }
}

/// Every multiset of `threads` shapes. Rules range over all thread
/// assignments, so permuting a scaffold's threads adds nothing.
pub fn scaffolds(threads: usize) -> Vec<Program> {
    let shapes: &[Shape] = if threads >= 3 { &SHAPES_THREE } else { &SHAPES_TWO };
    // Non-decreasing index sequences.
    let mut combos: Vec<Vec<usize>> = alloc::vec![Vec::new()];
    for _ in 0..threads {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                let from = prefix.last().copied().unwrap_or(0);
                (from..shapes.len()).map(move |k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }
    combos.iter().map(|c| scaffold(&c.iter().map(|k| shapes[*k]).collect::<Vec<_>>())).collect()
}

// Checking.

/// The command a step executes, with its operands, if the step counts as
/// an execution of it.
struct Executed {
    kind: CommandKind,
    flag: Option<SyncFlag>,
    loc: Option<Loc>,
    val: Option<Value>,
    reg: Option<Reg>,
    aborted: bool,
}

fn executed(prog: &Program, cfg: &Configuration, step: &Step) -> Option<Executed> {
    let aborted = match step.action {
        Action::Skip | Action::Exhausted => return None,
        Action::Abort => true,
        _ => false,
    };
    let Some(LabelledCommand::Step(cmd, _)) = prog.threads[step.thread].command(step.pc) else {
        return None;
    };
    let mut out = Executed { kind: CommandKind::TxEnd, flag: None, loc: None, val: None, reg: None, aborted };
    match cmd {
        AtomicCommand::TxBegin { flag, .. } => {
            out.kind = CommandKind::TxBegin;
            out.flag = Some(*flag);
        }
        AtomicCommand::TxRead { loc, reg } => {
            out.kind = CommandKind::TxRead;
            out.loc = Some(*loc);
            out.reg = Some(*reg);
        }
        AtomicCommand::TxWrite { loc, expr } => {
            out.kind = CommandKind::TxWrite;
            out.loc = Some(*loc);
            out.val = expr.eval(&cfg.regs);
        }
        AtomicCommand::TxEnd => {}
        AtomicCommand::Load { reg, loc, .. } => {
            out.kind = CommandKind::Load;
            out.loc = Some(*loc);
            out.reg = Some(*reg);
        }
        AtomicCommand::Store { loc, expr, .. } => {
            out.kind = CommandKind::Store;
            out.loc = Some(*loc);
            out.val = expr.eval(&cfg.regs);
        }
        AtomicCommand::Assign { .. } | AtomicCommand::Cas { .. } => return None,
    }
    Some(out)
}

/// The instance fixed by the command, or `None` if the pattern does not
/// match it.
fn bind(rule: &Rule, step: &Step, ex: &Executed) -> Option<Instance> {
    let p = &rule.pattern;
    if p.kind != ex.kind || (ex.aborted && !rule.include_aborts) {
        return None;
    }
    let flag_ok = match (p.flag, ex.flag) {
        (FlagReq::Any, _) => true,
        (FlagReq::Releasing, Some(f)) => f.is_releasing(),
        (FlagReq::Acquiring, Some(f)) => f.is_acquiring(),
        _ => false,
    };
    if !flag_ok {
        return None;
    }
    let mut inst = Instance::default();
    if p.actor == Actor::Tau {
        inst.tau = step.thread;
    }
    match p.loc {
        LocSlot::Free => {}
        LocSlot::X => inst.x = ex.loc?,
        LocSlot::Y => inst.y = ex.loc?,
        LocSlot::Z2 => inst.z2 = ex.loc?,
    }
    match p.val {
        ValSlot::Free => {}
        ValSlot::V => inst.v = ex.val?,
        ValSlot::W => inst.w = ex.val?,
        ValSlot::M => inst.m = ex.val?,
    }
    if p.binds_reg {
        inst.reg = ex.reg?;
    }
    Some(inst)
}

/// Expand the free parameters of `rule` over `bounds` in `prog`.
fn expand(rule: &Rule, base: Instance, prog: &Program, bounds: &RuleBounds) -> Vec<Instance> {
    let threads = prog.threads.len();
    let mut out = alloc::vec![base];
    let mut free: Vec<Param> = rule.free.to_vec();
    // `Tau` first, so `Tau2` and `Reg` can depend on it.
    free.sort();
    for param in free {
        let mut next = Vec::with_capacity(out.len());
        for inst in out {
            let choices: Vec<Value> = match param {
                Param::Tau | Param::Other => (0..threads as Value).collect(),
                Param::Tau2 => (0..threads as Value).filter(|t| *t as usize != inst.tau).collect(),
                Param::X | Param::Y => (0..prog.tx_locations.len() as Value).collect(),
                Param::Z | Param::Z2 => (0..prog.locations.len() as Value).collect(),
                Param::U | Param::V | Param::W | Param::M => (0..=bounds.max_value).collect(),
                Param::I => (0..=bounds.max_index).collect(),
                Param::Reg => prog
                    .registers
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, owner))| *owner == inst.tau)
                    .map(|(r, _)| r as Value)
                    .collect(),
            };
            for k in choices {
                let mut i = inst;
                let idx = k as usize;
                match param {
                    Param::Tau => i.tau = idx,
                    Param::Tau2 | Param::Other => i.tau2 = idx,
                    Param::X => i.x = idx,
                    Param::Y => i.y = idx,
                    Param::Z => i.z = idx,
                    Param::Z2 => i.z2 = idx,
                    Param::U => i.u = k,
                    Param::V => i.v = k,
                    Param::W => i.w = k,
                    Param::M => i.m = k,
                    Param::I => i.i = k,
                    Param::Reg => i.reg = idx,
                }
                next.push(i);
            }
        }
        out = next;
    }
    out
}

struct Tally {
    exercised: usize,
    counterexample: Option<RuleCounterexample>,
}

/// A rule instance with its precondition and postcondition.
type Expanded = (Instance, Assertion, Assertion);

/// Check several rules in one pass over each scaffold.
pub fn check_rules(rules: &[Rule], bounds: &RuleBounds) -> Result<Vec<RuleReport>, RuleError> {
    let eval_opts = EvalOptions::default();
    let mut tallies: Vec<Tally> = rules.iter().map(|_| Tally { exercised: 0, counterexample: None }).collect();

    let two = scaffolds(2);
    let three = if rules.iter().any(Rule::is_chain) { scaffolds(3) } else { Vec::new() };
    let programs = two.iter().map(|p| (p, false)).chain(three.iter().map(|p| (p, true)));

    for (prog, chain_only) in programs {
        // (rule, bound instance) -> expanded (instance, pre, post)
        let mut cache: HashMap<(usize, Instance), Vec<Expanded>> = HashMap::new();
        let mut error: Option<RuleError> = None;
        walk(prog, &Backend::Tms2Ra, &bounds.explore, |path, cfg, succ| {
            if error.is_some() {
                return;
            }
            // Successors grouped by the rule instance they execute, so each
            // precondition is evaluated once per configuration.
            let mut groups: Vec<((usize, Instance), Vec<usize>)> = Vec::new();
            for (si, (step, _)) in succ.iter().enumerate() {
                let Some(ex) = executed(prog, cfg, step) else { continue };
                for (ri, rule) in rules.iter().enumerate() {
                    if chain_only && !rule.is_chain() {
                        continue;
                    }
                    let Some(base) = bind(rule, step, &ex) else { continue };
                    match groups.iter_mut().find(|(key, _)| *key == (ri, base)) {
                        Some((_, members)) => members.push(si),
                        None => groups.push(((ri, base), alloc::vec![si])),
                    }
                }
            }
            for ((ri, base), members) in groups {
                let rule = &rules[ri];
                let insts = cache.entry((ri, base)).or_insert_with(|| {
                    expand(rule, base, prog, bounds).into_iter().map(|i| (i, (rule.pre)(&i), (rule.post)(&i))).collect()
                });
                let tally = &mut tallies[ri];
                for (inst, pre, post) in insts.iter() {
                    match pre.eval(cfg, &eval_opts) {
                        Ok(true) => {}
                        Ok(false) => continue,
                        Err(source) => {
                            error = Some(RuleError::Eval { rule: rule.name, source });
                            return;
                        }
                    }
                    tally.exercised += members.len();
                    if tally.counterexample.is_some() {
                        continue;
                    }
                    for &si in &members {
                        let (step, next) = &succ[si];
                        match post.eval(next, &eval_opts) {
                            Ok(true) => {}
                            Ok(false) => {
                                let mut trace = path.to_vec();
                                trace.push(step.clone());
                                tally.counterexample = Some(RuleCounterexample {
                                    program: prog.clone(),
                                    trace,
                                    instance: *inst,
                                    pre: pre.render(prog),
                                    post: post.render(prog),
                                });
                                break;
                            }
                            Err(source) => {
                                error = Some(RuleError::Eval { rule: rule.name, source });
                                return;
                            }
                        }
                    }
                }
            }
        })?;
        if let Some(e) = error {
            return Err(e);
        }
    }

    Ok(rules
        .iter()
        .zip(tallies)
        .map(|(rule, t)| RuleReport {
            rule: rule.name,
            holds: t.counterexample.is_none(),
            exercised: t.exercised,
            counterexample: t.counterexample,
        })
        .collect())
}

pub fn check_rule(rule: &Rule, bounds: &RuleBounds) -> Result<RuleReport, RuleError> {
    Ok(check_rules(core::slice::from_ref(rule), bounds)?.remove(0))
}
