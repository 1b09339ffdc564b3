//! View-based and transactional assertions, evaluated against a single
//! configuration.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::lts::Configuration;
use crate::program::{CmpOp, Program};
use crate::tms2ra::{TmSpecState, TxnLocal, TxnStatus};
use crate::{Loc, Reg, ThreadId, Value};

/// A value or memory-index expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Const(Value),
    Reg(Reg),
    /// Bound by an enclosing quantifier.
    Var(String),
    /// `|M|`, the number of memory snapshots.
    MemCount,
    Offset(Box<Term>, Value),
}

/// What a quantifier ranges over.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Indices of the snapshot sequence.
    Memories,
    Values(Vec<Value>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Assertion {
    Const(bool),
    /// `[x = v]@t`: `t` sees the last write to client location `x`, of value `v`.
    Definite {
        thread: ThreadId,
        loc: Loc,
        val: Term,
    },
    /// `[x ~ v]@t`
    Possible {
        thread: ThreadId,
        loc: Loc,
        val: Term,
    },
    /// `<y = u>[x = v]@t` over client locations.
    Conditional {
        thread: ThreadId,
        guard_loc: Loc,
        guard_val: Term,
        loc: Loc,
        val: Term,
    },
    /// `[x^ = v]@t`: every visible snapshot maps `x` to `v`.
    TxDefinite {
        thread: ThreadId,
        loc: Loc,
        val: Term,
    },
    /// `[x^ ~ v]@t`
    TxPossible {
        thread: ThreadId,
        loc: Loc,
        val: Term,
    },
    /// `<y^ = u>[x = v]@t`; `loc` is a client location.
    TxConditional {
        thread: ThreadId,
        guard_loc: Loc,
        guard_val: Term,
        loc: Loc,
        val: Term,
    },
    /// `[x S= v]@t`: committing the live transaction yields `[x = v]@t`.
    CommitView {
        thread: ThreadId,
        loc: Loc,
        val: Term,
    },
    /// `(x^, v) in WS@t`; a missing value matches any.
    InWriteSet {
        thread: ThreadId,
        loc: Loc,
        val: Option<Term>,
    },
    InReadSet {
        thread: ThreadId,
        loc: Loc,
        val: Option<Term>,
    },
    /// `WS@t = {(x^, v), ...}`
    WriteSetIs {
        thread: ThreadId,
        entries: Vec<(Loc, Term)>,
    },
    Rel(ThreadId),
    Acq(ThreadId),
    /// `M[x^ = v]@i`
    MemValue {
        index: Term,
        loc: Loc,
        val: Term,
    },
    /// `NW[x^, v]`
    NeverWritten {
        loc: Loc,
        val: Term,
    },
    StatusIs {
        thread: ThreadId,
        status: TxnStatus,
    },
    BeginIndex {
        thread: ThreadId,
        index: Term,
    },
    Cmp(CmpOp, Term, Term),
    In(Term, Vec<Value>),
    Not(Box<Assertion>),
    And(Box<Assertion>, Box<Assertion>),
    Or(Box<Assertion>, Box<Assertion>),
    Implies(Box<Assertion>, Box<Assertion>),
    Forall {
        var: String,
        domain: Domain,
        body: Box<Assertion>,
    },
    Exists {
        var: String,
        domain: Domain,
        body: Box<Assertion>,
    },
}

/// How the snapshot flag inside a transactional conditional is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlagReading {
    /// The snapshot must have been committed by a releasing transaction.
    #[default]
    Releasing,
    /// The flag conjunct is dropped.
    Ignored,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub flag_reading: FlagReading,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("transactional assertion on a configuration without the TMS2-RA state")]
    NotSpec,
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("thread {0} out of range")]
    Thread(ThreadId),
    #[error("location {0} out of range")]
    Location(Loc),
    #[error("register {0} out of range")]
    Register(Reg),
}

type Env = BTreeMap<String, Value>;

struct Ctx<'a> {
    cfg: &'a Configuration,
    opts: &'a EvalOptions,
}

impl Ctx<'_> {
    fn spec(&self) -> Result<&TmSpecState, EvalError> {
        self.cfg.spec().ok_or(EvalError::NotSpec)
    }

    fn thread(&self, t: ThreadId) -> Result<ThreadId, EvalError> {
        if t < self.cfg.threads.len() {
            Ok(t)
        } else {
            Err(EvalError::Thread(t))
        }
    }

    fn client_loc(&self, x: Loc) -> Result<Loc, EvalError> {
        if x < self.cfg.mem.num_locs() {
            Ok(x)
        } else {
            Err(EvalError::Location(x))
        }
    }

    fn tx_loc(&self, x: Loc) -> Result<Loc, EvalError> {
        if x < self.spec()?.last_memory().len() {
            Ok(x)
        } else {
            Err(EvalError::Location(x))
        }
    }

    /// `None` is ⊥.
    fn term(&self, t: &Term, env: &Env) -> Result<Option<Value>, EvalError> {
        Ok(match t {
            Term::Const(v) => Some(*v),
            Term::Reg(r) => *self.cfg.regs.get(*r).ok_or(EvalError::Register(*r))?,
            Term::Var(name) => Some(*env.get(name).ok_or_else(|| EvalError::Unbound(name.clone()))?),
            Term::MemCount => Some(self.spec()?.memories().len() as Value),
            Term::Offset(inner, k) => self.term(inner, env)?.map(|v| v + k),
        })
    }

    fn latest(&self, t: ThreadId) -> Result<Option<&TxnLocal>, EvalError> {
        let t = self.thread(t)?;
        Ok(self.spec()?.latest_txn(t))
    }

    fn definite(&self, cfg: &Configuration, t: ThreadId, x: Loc, v: Value) -> bool {
        let last = cfg.mem.last(x);
        cfg.mem.tview(t).get(x) == last && cfg.mem.val(last) == v
    }

    fn eval(&self, a: &Assertion, env: &mut Env) -> Result<bool, EvalError> {
        use Assertion::*;
        let mem = &self.cfg.mem;
        Ok(match a {
            Const(b) => *b,
            Definite { thread, loc, val } => {
                let (t, x) = (self.thread(*thread)?, self.client_loc(*loc)?);
                match self.term(val, env)? {
                    Some(v) => self.definite(self.cfg, t, x, v),
                    None => false,
                }
            }
            Possible { thread, loc, val } => {
                let (t, x) = (self.thread(*thread)?, self.client_loc(*loc)?);
                match self.term(val, env)? {
                    Some(v) => mem.observable_values(t, x).contains(&v),
                    None => false,
                }
            }
            Conditional { thread, guard_loc, guard_val, loc, val } => {
                let (t, y, x) = (self.thread(*thread)?, self.client_loc(*guard_loc)?, self.client_loc(*loc)?);
                let (Some(u), Some(v)) = (self.term(guard_val, env)?, self.term(val, env)?) else {
                    return Ok(false);
                };
                let last = mem.last(x);
                mem.observable_writes(t, y)
                    .iter()
                    .filter(|w| mem.val(**w) == u)
                    .all(|w| mem.is_released(*w) && mem.mview(*w).get(x) == last && mem.val(last) == v)
            }
            TxDefinite { thread, loc, val } | TxPossible { thread, loc, val } => {
                let (t, x) = (self.thread(*thread)?, self.tx_loc(*loc)?);
                let Some(v) = self.term(val, env)? else {
                    return Ok(false);
                };
                let s = self.spec()?;
                let mut hits = s.visible_memories(t).map(|i| s.memories()[i][x] == v);
                if matches!(a, TxDefinite { .. }) {
                    hits.all(|h| h)
                } else {
                    hits.any(|h| h)
                }
            }
            TxConditional { thread, guard_loc, guard_val, loc, val } => {
                let (t, y, x) = (self.thread(*thread)?, self.tx_loc(*guard_loc)?, self.client_loc(*loc)?);
                let (Some(u), Some(v)) = (self.term(guard_val, env)?, self.term(val, env)?) else {
                    return Ok(false);
                };
                let s = self.spec()?;
                let last = mem.last(x);
                s.visible_memories(t).filter(|i| s.memories()[*i][y] == u).all(|i| {
                    let flag_ok = match self.opts.flag_reading {
                        FlagReading::Releasing => s.sync_flags()[i].is_releasing(),
                        FlagReading::Ignored => true,
                    };
                    s.views()[i].get(x) == last && mem.val(last) == v && flag_ok
                })
            }
            CommitView { thread, loc, val } => {
                let (t, x) = (self.thread(*thread)?, self.client_loc(*loc)?);
                let s = self.spec()?;
                let Some(txn) = s.txn(t) else {
                    return Ok(true);
                };
                let Some(v) = self.term(val, env)? else {
                    return Ok(false);
                };
                let committed = if txn.wr_set.is_empty() { s.tx_end_ro(mem, t) } else { s.tx_end_wr(mem, t) };
                match committed {
                    Ok((_, after)) => {
                        let last = after.last(x);
                        after.tview(t).get(x) == last && after.val(last) == v
                    }
                    Err(_) => true,
                }
            }
            InWriteSet { thread, loc, val } | InReadSet { thread, loc, val } => {
                let x = self.tx_loc(*loc)?;
                let want = match val {
                    Some(term) => match self.term(term, env)? {
                        Some(v) => Some(v),
                        None => return Ok(false),
                    },
                    None => None,
                };
                let Some(txn) = self.latest(*thread)? else {
                    return Ok(false);
                };
                let set = if matches!(a, InWriteSet { .. }) { &txn.wr_set } else { &txn.rd_set };
                match (set.get(&x), want) {
                    (Some(_), None) => true,
                    (Some(got), Some(v)) => *got == v,
                    (None, _) => false,
                }
            }
            WriteSetIs { thread, entries } => {
                let mut want = BTreeMap::new();
                for (loc, term) in entries {
                    let x = self.tx_loc(*loc)?;
                    match self.term(term, env)? {
                        Some(v) => {
                            want.insert(x, v);
                        }
                        None => return Ok(false),
                    }
                }
                match self.latest(*thread)? {
                    Some(txn) => txn.wr_set == want,
                    None => want.is_empty(),
                }
            }
            Rel(t) => self.latest(*t)?.is_some_and(|x| x.synctype.is_releasing()),
            Acq(t) => self.latest(*t)?.is_some_and(|x| x.synctype.is_acquiring()),
            MemValue { index, loc, val } => {
                let x = self.tx_loc(*loc)?;
                let (Some(i), Some(v)) = (self.term(index, env)?, self.term(val, env)?) else {
                    return Ok(false);
                };
                let s = self.spec()?;
                usize::try_from(i).ok().and_then(|i| s.memories().get(i)).is_some_and(|m| m[x] == v)
            }
            NeverWritten { loc, val } => {
                let x = self.tx_loc(*loc)?;
                let Some(v) = self.term(val, env)? else {
                    return Ok(false);
                };
                self.spec()?.memories().iter().all(|m| m[x] != v)
            }
            StatusIs { thread, status } => {
                let t = self.thread(*thread)?;
                self.spec()?.status(t) == *status
            }
            BeginIndex { thread, index } => {
                let Some(i) = self.term(index, env)? else {
                    return Ok(false);
                };
                self.latest(*thread)?.is_some_and(|x| x.begin_idx as Value == i)
            }
            Cmp(op, l, r) => match (self.term(l, env)?, self.term(r, env)?) {
                (Some(x), Some(y)) => op.apply(x, y),
                _ => false,
            },
            In(term, vs) => self.term(term, env)?.is_some_and(|v| vs.contains(&v)),
            Not(inner) => !self.eval(inner, env)?,
            And(l, r) => self.eval(l, env)? && self.eval(r, env)?,
            Or(l, r) => self.eval(l, env)? || self.eval(r, env)?,
            Implies(l, r) => !self.eval(l, env)? || self.eval(r, env)?,
            Forall { var, domain, body } | Exists { var, domain, body } => {
                let values: Vec<Value> = match domain {
                    Domain::Memories => (0..self.spec()?.memories().len() as Value).collect(),
                    Domain::Values(vs) => vs.clone(),
                };
                let universal = matches!(a, Forall { .. });
                let saved = env.get(var).copied();
                let mut result = universal;
                for v in values {
                    env.insert(var.clone(), v);
                    if self.eval(body, env)? != universal {
                        result = !universal;
                        break;
                    }
                }
                match saved {
                    Some(v) => env.insert(var.clone(), v),
                    None => env.remove(var),
                };
                result
            }
        })
    }
}

impl Assertion {
    pub fn and(a: Assertion, b: Assertion) -> Assertion {
        Assertion::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Assertion, b: Assertion) -> Assertion {
        Assertion::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Assertion, b: Assertion) -> Assertion {
        Assertion::Implies(Box::new(a), Box::new(b))
    }

    pub fn negate(a: Assertion) -> Assertion {
        Assertion::Not(Box::new(a))
    }

    /// Conjunction of all items; `true` when empty.
    pub fn all(items: impl IntoIterator<Item = Assertion>) -> Assertion {
        let mut items: Vec<Assertion> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Assertion::Const(true);
        };
        while let Some(a) = items.pop() {
            acc = Assertion::and(a, acc);
        }
        acc
    }

    pub fn reg_eq(r: Reg, v: Value) -> Assertion {
        Assertion::Cmp(CmpOp::Eq, Term::Reg(r), Term::Const(v))
    }

    pub fn eval(&self, cfg: &Configuration, opts: &EvalOptions) -> Result<bool, EvalError> {
        Ctx { cfg, opts }.eval(self, &mut Env::new())
    }

    /// Whether any node needs the TMS2-RA state.
    pub fn is_transactional(&self) -> bool {
        use Assertion::*;
        match self {
            Const(_) | Definite { .. } | Possible { .. } | Conditional { .. } | Cmp(..) | In(..) => false,
            Not(a) => a.is_transactional(),
            And(a, b) | Or(a, b) | Implies(a, b) => a.is_transactional() || b.is_transactional(),
            Forall { domain, body, .. } | Exists { domain, body, .. } => {
                *domain == Domain::Memories || body.is_transactional()
            }
            _ => true,
        }
    }

    /// Concrete syntax, using the program's names.
    pub fn render(&self, prog: &Program) -> String {
        Renderer { prog }.assertion(self, 0)
    }
}

struct Renderer<'a> {
    prog: &'a Program,
}

impl Renderer<'_> {
    fn thread(&self, t: ThreadId) -> String {
        self.prog.threads.get(t).map_or_else(|| format!("t{t}?"), |c| c.name.clone())
    }

    fn loc(&self, x: Loc) -> String {
        self.prog.locations.get(x).cloned().unwrap_or_else(|| format!("x{x}?"))
    }

    fn tx_loc(&self, x: Loc) -> String {
        let name = self.prog.tx_locations.get(x).cloned().unwrap_or_else(|| format!("x{x}?"));
        format!("{name}^")
    }

    fn term(&self, t: &Term) -> String {
        match t {
            Term::Const(v) => v.to_string(),
            Term::Reg(r) => self.prog.registers.get(*r).map_or_else(|| format!("r{r}?"), |(n, _)| n.clone()),
            Term::Var(name) => name.clone(),
            Term::MemCount => "|M|".into(),
            Term::Offset(inner, k) if *k < 0 => format!("{} - {}", self.term(inner), -k),
            Term::Offset(inner, k) => format!("{} + {}", self.term(inner), k),
        }
    }

    fn opt_term(&self, t: &Option<Term>) -> String {
        t.as_ref().map_or_else(|| "_".into(), |t| self.term(t))
    }

    fn values(vs: &[Value]) -> String {
        let parts: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// Precedence: 0 implication, 1 disjunction, 2 conjunction, 3 atoms.
    fn assertion(&self, a: &Assertion, ctx: u8) -> String {
        use Assertion::*;
        let (text, prec) = match a {
            Const(b) => (b.to_string(), 3),
            Definite { thread, loc, val } => {
                (format!("[{} = {}]@{}", self.loc(*loc), self.term(val), self.thread(*thread)), 3)
            }
            Possible { thread, loc, val } => {
                (format!("[{} ~ {}]@{}", self.loc(*loc), self.term(val), self.thread(*thread)), 3)
            }
            Conditional { thread, guard_loc, guard_val, loc, val } => (
                format!(
                    "<{} = {}>[{} = {}]@{}",
                    self.loc(*guard_loc),
                    self.term(guard_val),
                    self.loc(*loc),
                    self.term(val),
                    self.thread(*thread)
                ),
                3,
            ),
            TxDefinite { thread, loc, val } => {
                (format!("[{} = {}]@{}", self.tx_loc(*loc), self.term(val), self.thread(*thread)), 3)
            }
            TxPossible { thread, loc, val } => {
                (format!("[{} ~ {}]@{}", self.tx_loc(*loc), self.term(val), self.thread(*thread)), 3)
            }
            TxConditional { thread, guard_loc, guard_val, loc, val } => (
                format!(
                    "<{} = {}>[{} = {}]@{}",
                    self.tx_loc(*guard_loc),
                    self.term(guard_val),
                    self.loc(*loc),
                    self.term(val),
                    self.thread(*thread)
                ),
                3,
            ),
            CommitView { thread, loc, val } => {
                (format!("[{} S= {}]@{}", self.loc(*loc), self.term(val), self.thread(*thread)), 3)
            }
            InWriteSet { thread, loc, val } => {
                (format!("({}, {}) in WS@{}", self.tx_loc(*loc), self.opt_term(val), self.thread(*thread)), 3)
            }
            InReadSet { thread, loc, val } => {
                (format!("({}, {}) in RS@{}", self.tx_loc(*loc), self.opt_term(val), self.thread(*thread)), 3)
            }
            WriteSetIs { thread, entries } => {
                let parts: Vec<String> =
                    entries.iter().map(|(x, v)| format!("({}, {})", self.tx_loc(*x), self.term(v))).collect();
                (format!("WS@{} = {{{}}}", self.thread(*thread), parts.join(", ")), 3)
            }
            Rel(t) => (format!("Rel@{}", self.thread(*t)), 3),
            Acq(t) => (format!("Acq@{}", self.thread(*t)), 3),
            MemValue { index, loc, val } => {
                let index = match index {
                    Term::Const(_) | Term::Var(_) => self.term(index),
                    _ => format!("({})", self.term(index)),
                };
                (format!("M[{} = {}]@{}", self.tx_loc(*loc), self.term(val), index), 3)
            }
            NeverWritten { loc, val } => (format!("NW[{}, {}]", self.tx_loc(*loc), self.term(val)), 3),
            StatusIs { thread, status } => (format!("status@{} = {}", self.thread(*thread), status_name(*status)), 3),
            BeginIndex { thread, index } => (format!("beginIdx@{} = {}", self.thread(*thread), self.term(index)), 3),
            Cmp(op, l, r) => (format!("{} {} {}", self.term(l), op.symbol(), self.term(r)), 3),
            In(t, vs) => (format!("{} in {}", self.term(t), Self::values(vs)), 3),
            Not(inner) => (format!("!{}", self.assertion(inner, 3)), 3),
            // All binary connectives associate to the right.
            And(l, r) => (format!("{} && {}", self.assertion(l, 3), self.assertion(r, 2)), 2),
            Or(l, r) => (format!("{} || {}", self.assertion(l, 2), self.assertion(r, 1)), 1),
            Implies(l, r) => (format!("{} => {}", self.assertion(l, 1), self.assertion(r, 0)), 0),
            Forall { var, domain, body } | Exists { var, domain, body } => {
                let q = if matches!(a, Forall { .. }) { "forall" } else { "exists" };
                let dom = match domain {
                    Domain::Memories => "dom(M)".into(),
                    Domain::Values(vs) => Self::values(vs),
                };
                (format!("{q} {var} in {dom}: {}", self.assertion(body, 0)), 0)
            }
        };
        if prec < ctx {
            format!("({text})")
        } else {
            text
        }
    }
}

pub fn status_name(s: TxnStatus) -> &'static str {
    match s {
        TxnStatus::NotStarted => "NOTSTARTED",
        TxnStatus::Ready => "READY",
        TxnStatus::Committed => "COMMITTED",
        TxnStatus::Aborted => "ABORTED",
    }
}

pub fn status_from_name(name: &str) -> Option<TxnStatus> {
    [TxnStatus::NotStarted, TxnStatus::Ready, TxnStatus::Committed, TxnStatus::Aborted]
        .into_iter()
        .find(|s| status_name(*s) == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin;
    use crate::lts::{thread_steps, Action, Backend, StepOptions};

    const T1: ThreadId = 0;
    const T2: ThreadId = 1;

    fn eval(a: &Assertion, cfg: &Configuration) -> bool {
        a.eval(cfg, &EvalOptions::default()).unwrap()
    }

    /// Runs the first enabled step of `t` whose action satisfies `pick`.
    fn step(prog: &Program, cfg: &Configuration, t: ThreadId, pick: impl Fn(&Action) -> bool) -> Configuration {
        thread_steps(prog, &Backend::Tms2Ra, &StepOptions::default(), cfg, t)
            .into_iter()
            .find(|(s, _)| pick(&s.action))
            .expect("step enabled")
            .1
    }

    #[test]
    fn initial_state_is_definite() {
        let p = builtin("mp-ra").unwrap();
        let cfg = Configuration::initial(&p, &Backend::Plain, false);
        let def = |t, v| Assertion::Definite { thread: t, loc: 0, val: Term::Const(v) };
        assert!(eval(&def(T1, 0), &cfg));
        assert!(eval(&def(T2, 0), &cfg));
        assert!(!eval(&def(T1, 5), &cfg));
    }

    #[test]
    fn message_passing_conditional_after_release() {
        let p = builtin("mp-ra").unwrap();
        let cfg = Configuration::initial(&p, &Backend::Plain, false);
        let cond =
            Assertion::Conditional { thread: T2, guard_loc: 1, guard_val: Term::Const(1), loc: 0, val: Term::Const(5) };
        // Vacuous before any write of f = 1.
        assert!(eval(&cond, &cfg));
        let pick_first = |_: &Action| true;
        let after_d = step(&p, &cfg, T1, pick_first);
        let after_f = step(&p, &after_d, T1, pick_first);
        assert!(eval(&cond, &after_f));
        for v in [0, 1] {
            let possible = Assertion::Possible { thread: T2, loc: 1, val: Term::Const(v) };
            assert!(eval(&possible, &after_f));
        }
        // Relaxed flag: the write of 1 is not released.
        let rx = builtin("mp-relaxed").unwrap();
        let cfg = Configuration::initial(&rx, &Backend::Plain, false);
        let done = step(&rx, &step(&rx, &cfg, T1, pick_first), T1, pick_first);
        assert!(!eval(&cond, &done));
    }

    #[test]
    fn transactional_conditional_after_releasing_commit() {
        let p = builtin("tx-mp").unwrap();
        let mut cfg = Configuration::initial(&p, &Backend::Tms2Ra, false);
        for _ in 0..4 {
            cfg = step(&p, &cfg, T1, |a| !matches!(a, Action::Abort));
        }
        let cond = Assertion::TxConditional {
            thread: T2,
            guard_loc: 0,
            guard_val: Term::Const(1),
            loc: 0,
            val: Term::Const(5),
        };
        assert!(eval(&cond, &cfg));
        assert!(eval(&Assertion::MemValue { index: Term::Const(1), loc: 0, val: Term::Const(1) }, &cfg));
        assert!(!eval(&Assertion::NeverWritten { loc: 0, val: Term::Const(1) }, &cfg));
        assert!(eval(&Assertion::TxPossible { thread: T2, loc: 0, val: Term::Const(1) }, &cfg));
        assert!(!eval(&Assertion::TxDefinite { thread: T2, loc: 0, val: Term::Const(1) }, &cfg));
        assert!(eval(&Assertion::StatusIs { thread: T1, status: TxnStatus::Committed }, &cfg));
        assert!(eval(&Assertion::Rel(T1), &cfg) && !eval(&Assertion::Acq(T1), &cfg));
    }

    #[test]
    fn flag_reading_switch() {
        // A relaxed writing transaction: tx-relaxed's writer.
        let p = builtin("tx-relaxed").unwrap();
        let mut cfg = Configuration::initial(&p, &Backend::Tms2Ra, false);
        for _ in 0..5 {
            cfg = step(&p, &cfg, T1, |a| !matches!(a, Action::Abort));
        }
        let cond = Assertion::TxConditional {
            thread: T2,
            guard_loc: 0,
            guard_val: Term::Const(1),
            loc: 0,
            val: Term::Const(5),
        };
        assert!(!eval(&cond, &cfg));
        let ignored = EvalOptions { flag_reading: FlagReading::Ignored };
        assert!(cond.eval(&cfg, &ignored).unwrap());
    }

    #[test]
    fn transactional_node_needs_the_specification() {
        let p = builtin("tx-mp").unwrap();
        let cfg = Configuration::initial(&p, &Backend::tml(), false);
        let a = Assertion::Rel(T1);
        assert!(a.is_transactional());
        assert_eq!(a.eval(&cfg, &EvalOptions::default()), Err(EvalError::NotSpec));
    }

    #[test]
    fn quantifiers_bind_variables() {
        let p = builtin("tx-mp").unwrap();
        let cfg = Configuration::initial(&p, &Backend::Tms2Ra, false);
        let body = Assertion::MemValue { index: Term::Var("i".into()), loc: 0, val: Term::Const(0) };
        let all = Assertion::Forall { var: "i".into(), domain: Domain::Memories, body: Box::new(body) };
        assert!(eval(&all, &cfg));
        let some = Assertion::Exists {
            var: "v".into(),
            domain: Domain::Values(alloc::vec![3, 4]),
            body: Box::new(Assertion::Cmp(CmpOp::Eq, Term::Var("v".into()), Term::Const(4))),
        };
        assert!(eval(&some, &cfg));
        let free = Assertion::Cmp(CmpOp::Eq, Term::Var("k".into()), Term::Const(0));
        assert!(matches!(free.eval(&cfg, &EvalOptions::default()), Err(EvalError::Unbound(_))));
    }

    #[test]
    fn undefined_registers_falsify_atoms() {
        let p = builtin("tx-mp").unwrap();
        let mut cfg = Configuration::initial(&p, &Backend::Tms2Ra, false);
        cfg.regs[0] = None;
        assert!(!eval(&Assertion::reg_eq(0, 1), &cfg));
        assert!(eval(&Assertion::implies(Assertion::reg_eq(0, 1), Assertion::Const(false)), &cfg));
    }

    #[test]
    fn rendering_uses_names() {
        let p = builtin("tx-mp").unwrap();
        let a = Assertion::implies(
            Assertion::reg_eq(0, 1),
            Assertion::and(
                Assertion::CommitView { thread: T2, loc: 0, val: Term::Const(5) },
                Assertion::InReadSet { thread: T2, loc: 0, val: Some(Term::Reg(0)) },
            ),
        );
        assert_eq!(a.render(&p), "r1 = 1 => [d S= 5]@t2 && (f^, r1) in RS@t2");
    }
}
