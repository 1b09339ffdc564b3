//! Configurations of a client program running over a memory backend, and
//! their labelled transitions.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::memory::{ClientMemoryState, RmwOutcome};
use crate::program::{AtomicCommand, Label, LabelledCommand, Program};
use crate::tml::{self, Completion, Mutation, TmlLabel, TmlLayout, TmlLocals, TxCall};
use crate::tms2ra::{TmSpecState, TxnId};
use crate::{Loc, Reg, RegFile, ThreadId, Value};

/// What implements the transactional commands.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    /// No transactional support; programs must be transaction-free.
    Plain,
    Tms2Ra,
    TmlRa(BTreeSet<Mutation>),
}

impl Backend {
    pub fn tml() -> Backend {
        Backend::TmlRa(BTreeSet::new())
    }

    pub fn name(&self) -> String {
        match self {
            Backend::Plain => "plain".into(),
            Backend::Tms2Ra => "tms2-ra".into(),
            Backend::TmlRa(m) if m.is_empty() => "tml-ra".into(),
            Backend::TmlRa(m) => {
                let names: Vec<&str> = m.iter().map(|m| m.name()).collect();
                format!("tml-ra[{}]", names.join(","))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StepOptions {
    /// Maximum number of loop iterations per thread.
    pub budget: u32,
    /// Offer spontaneous aborts of live TMS2-RA transactions.
    pub abort_branches: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { budget: 4, abort_branches: true }
    }
}

/// Program-level control state of one thread.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThreadCtl {
    pub pc: Label,
    /// Loop back edges taken so far.
    pub back_edges: u32,
    /// The current transaction aborted; its remaining transactional
    /// commands are skipped up to and including `TxEnd`.
    pub skipping: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TmState {
    Plain,
    Spec(TmSpecState),
    Tml(Vec<TmlLocals>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TxEventKind {
    Begin,
    Read { loc: Loc, val: Value, internal: bool },
    Write { loc: Loc, val: Value },
    Commit,
    Abort,
}

/// One event of a transactional history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TxEvent {
    pub txn: TxnId,
    pub kind: TxEventKind,
}

/// Program counters, loop counters and registers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalState {
    pub threads: Vec<ThreadCtl>,
    pub regs: RegFile,
    pub exhausted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub threads: Vec<ThreadCtl>,
    pub regs: RegFile,
    pub tm: TmState,
    pub mem: ClientMemoryState,
    /// Some loop ran past the retry budget; the execution stops here.
    pub exhausted: bool,
    /// Transactional history, recorded on request under TMS2-RA.
    pub history: Option<Vec<TxEvent>>,
}

/// Client memory layout for the lock: client locations, then one location
/// per transactional variable, then `glb`.
pub fn tml_layout(prog: &Program) -> TmlLayout {
    TmlLayout { tx_base: prog.locations.len(), glb: prog.locations.len() + prog.tx_locations.len() }
}

impl Configuration {
    pub fn initial(prog: &Program, backend: &Backend, record_history: bool) -> Configuration {
        let n = prog.threads.len();
        let (mem, tm) = match backend {
            Backend::Plain => (ClientMemoryState::new(prog.locations.len(), n), TmState::Plain),
            Backend::Tms2Ra => {
                let mem = ClientMemoryState::new(prog.locations.len(), n);
                let spec = TmSpecState::new(prog.tx_locations.len(), n, mem.initial_view());
                (mem, TmState::Spec(spec))
            }
            Backend::TmlRa(_) => {
                let locs = prog.locations.len() + prog.tx_locations.len() + 1;
                (ClientMemoryState::new(locs, n), TmState::Tml(alloc::vec![TmlLocals::default(); n]))
            }
        };
        Configuration {
            threads: alloc::vec![
                ThreadCtl {
                    pc: 0,
                    back_edges: 0,
                    skipping: false,
                };
                n
            ],
            regs: prog.initial_registers(),
            tm,
            mem,
            exhausted: false,
            history: record_history.then(Vec::new),
        }
    }

    pub fn spec(&self) -> Option<&TmSpecState> {
        match &self.tm {
            TmState::Spec(s) => Some(s),
            _ => None,
        }
    }

    pub fn tml(&self) -> Option<&[TmlLocals]> {
        match &self.tm {
            TmState::Tml(l) => Some(l),
            _ => None,
        }
    }

    /// The thread has no lock operation in flight.
    pub fn is_idle(&self, t: ThreadId) -> bool {
        self.tml().is_none_or(|l| l[t].pc == TmlLabel::Idle)
    }

    /// Every thread reached its terminal label within budget.
    pub fn is_final(&self, prog: &Program) -> bool {
        !self.exhausted
            && self
                .threads
                .iter()
                .zip(&prog.threads)
                .enumerate()
                .all(|(t, (c, code))| c.pc == code.terminal() && self.is_idle(t))
    }

    /// Rename writes canonically so that configurations equal up to write
    /// identity compare equal. Transaction sequence numbers are dropped
    /// unless a history is being recorded.
    pub fn canonical(&self) -> Configuration {
        let (mem, renaming) = self.mem.canonical();
        let tm = match &self.tm {
            TmState::Spec(s) if self.history.is_none() => {
                TmState::Spec(s.without_sequence_numbers().renamed(&renaming))
            }
            TmState::Spec(s) => TmState::Spec(s.renamed(&renaming)),
            other => other.clone(),
        };
        Configuration { mem, tm, ..self.clone() }
    }

    /// The client's local state.
    pub fn local_state(&self) -> LocalState {
        LocalState { threads: self.threads.clone(), regs: self.regs.clone(), exhausted: self.exhausted }
    }
}

/// The choice a transition resolved.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Action {
    Assign {
        reg: Reg,
        val: Option<Value>,
    },
    Branch {
        taken: bool,
    },
    Load {
        loc: Loc,
        val: Value,
    },
    Store {
        loc: Loc,
        val: Value,
        position: usize,
    },
    Cas {
        loc: Loc,
        val: Value,
        success: bool,
    },
    TxBegin {
        index: Option<usize>,
    },
    TxRead {
        loc: Loc,
        val: Value,
        index: Option<usize>,
    },
    TxWrite {
        loc: Loc,
        val: Value,
    },
    TxEnd {
        writer: bool,
    },
    Abort,
    /// A transactional command of an aborted transaction.
    Skip,
    Tml {
        label: TmlLabel,
        value: Option<Value>,
    },
    /// A loop exceeded the retry budget.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Step {
    pub thread: ThreadId,
    /// Program label before the step.
    pub pc: Label,
    pub action: Action,
}

impl Step {
    pub fn describe(&self, prog: &Program) -> String {
        let th = &prog.threads[self.thread].name;
        let loc = |x: &Loc| prog.locations.get(*x).cloned().unwrap_or_default();
        let txl = |x: &Loc| prog.tx_locations.get(*x).cloned().unwrap_or_default();
        let body = match &self.action {
            Action::Assign { reg, val } => format!("{} := {}", prog.registers[*reg].0, show(*val)),
            Action::Branch { taken } => format!("branch {}", if *taken { "then" } else { "else" }),
            Action::Load { loc: x, val } => format!("load {} = {}", loc(x), val),
            Action::Store { loc: x, val, position } => {
                format!("store {} := {} at mo position {}", loc(x), val, position)
            }
            Action::Cas { loc: x, val, success } => {
                format!("cas {} read {} ({})", loc(x), val, if *success { "success" } else { "failure" })
            }
            Action::TxBegin { index } => match index {
                Some(m) => format!("TxBegin from snapshot {m}"),
                None => "TxBegin".into(),
            },
            Action::TxRead { loc: x, val, index } => match index {
                Some(i) => format!("TxRead {} = {} from snapshot {}", txl(x), val, i),
                None => format!("TxRead {} = {}", txl(x), val),
            },
            Action::TxWrite { loc: x, val } => format!("TxWrite {} := {}", txl(x), val),
            Action::TxEnd { writer } => {
                format!("TxEnd ({})", if *writer { "writer" } else { "read-only" })
            }
            Action::Abort => "abort".into(),
            Action::Skip => "skip (aborted transaction)".into(),
            Action::Tml { label, value } => match value {
                Some(v) => format!("{label:?} [{v}]"),
                None => format!("{label:?}"),
            },
            Action::Exhausted => "retry budget exhausted".into(),
        };
        format!("{}@{}: {}", th, self.pc, body)
    }
}

fn show(v: Option<Value>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => "⊥".into(),
    }
}

/// All transitions of all threads.
pub fn enabled_steps(
    prog: &Program,
    backend: &Backend,
    opts: &StepOptions,
    cfg: &Configuration,
) -> Vec<(Step, Configuration)> {
    (0..prog.threads.len()).flat_map(|t| thread_steps(prog, backend, opts, cfg, t)).collect()
}

/// Move thread `t` to `target`, counting loop back edges. Returns false when
/// the budget is exceeded, in which case the configuration is marked.
fn goto(cfg: &mut Configuration, t: ThreadId, target: Label, budget: u32) -> bool {
    let ctl = &mut cfg.threads[t];
    if target <= ctl.pc {
        if ctl.back_edges + 1 >= budget.max(1) {
            cfg.exhausted = true;
            return false;
        }
        ctl.back_edges += 1;
    }
    ctl.pc = target;
    true
}

fn record(cfg: &mut Configuration, t: ThreadId, kind: TxEventKind) {
    let txn = match &cfg.tm {
        TmState::Spec(s) => s.latest_txn(t).map(|x| x.id),
        _ => None,
    };
    if let (Some(h), Some(txn)) = (cfg.history.as_mut(), txn) {
        h.push(TxEvent { txn, kind });
    }
}

struct Emit<'a> {
    cfg: &'a Configuration,
    t: ThreadId,
    pc: Label,
    budget: u32,
    out: Vec<(Step, Configuration)>,
}

impl Emit<'_> {
    /// Emit a step that moves the thread to `next`.
    fn to(&mut self, action: Action, mut cfg: Configuration, next: Label) {
        let action = if goto(&mut cfg, self.t, next, self.budget) { action } else { Action::Exhausted };
        self.stay(action, cfg);
    }

    /// Emit a step that leaves the program counter alone.
    fn stay(&mut self, action: Action, cfg: Configuration) {
        self.out.push((Step { thread: self.t, pc: self.pc, action }, cfg));
    }

    fn with_mem(&self, mem: ClientMemoryState) -> Configuration {
        Configuration { mem, ..self.cfg.clone() }
    }
}

/// Transitions of thread `t` only.
pub fn thread_steps(
    prog: &Program,
    backend: &Backend,
    opts: &StepOptions,
    cfg: &Configuration,
    t: ThreadId,
) -> Vec<(Step, Configuration)> {
    if cfg.exhausted {
        return Vec::new();
    }
    let code = &prog.threads[t];
    let ctl = &cfg.threads[t];
    let mut em = Emit { cfg, t, pc: ctl.pc, budget: opts.budget, out: Vec::new() };

    if let TmState::Spec(spec) = &cfg.tm {
        if opts.abort_branches && spec.txn(t).is_some() {
            let (s, regs) = spec.tx_abort(&cfg.regs, t).expect("live transaction");
            let mut next = cfg.clone();
            next.tm = TmState::Spec(s);
            next.regs = regs;
            next.threads[t].skipping = true;
            record(&mut next, t, TxEventKind::Abort);
            em.stay(Action::Abort, next);
        }
    }

    if let TmState::Tml(locals) = &cfg.tm {
        if locals[t].pc != TmlLabel::Idle {
            let Some(LabelledCommand::Step(_, next)) = code.command(ctl.pc) else {
                return em.out;
            };
            tml_successors(&mut em, prog, backend, &locals[t], *next);
            return em.out;
        }
    }

    let Some(cmd) = code.command(ctl.pc) else {
        return em.out;
    };
    let (cmd, next) = match cmd {
        LabelledCommand::If(cond, a, b) => {
            // An undefined guard blocks the thread.
            if let Some(taken) = cond.eval3(&cfg.regs) {
                em.to(Action::Branch { taken }, cfg.clone(), if taken { *a } else { *b });
            }
            return em.out;
        }
        LabelledCommand::Step(cmd, next) => (cmd, *next),
    };

    if ctl.skipping && cmd.is_transactional() {
        let mut c = cfg.clone();
        if matches!(cmd, AtomicCommand::TxEnd) {
            c.threads[t].skipping = false;
        }
        em.to(Action::Skip, c, next);
        return em.out;
    }

    match cmd {
        AtomicCommand::Assign { reg, expr } => {
            let val = expr.eval(&cfg.regs);
            let mut c = cfg.clone();
            c.regs[*reg] = val;
            em.to(Action::Assign { reg: *reg, val }, c, next);
        }
        AtomicCommand::Store { loc, expr, release } => {
            if let Some(val) = expr.eval(&cfg.regs) {
                for pred in cfg.mem.write_predecessors(t, *loc) {
                    let (mem, w) = cfg.mem.write_after(t, *loc, val, pred, *release).expect("legal");
                    let position = mem.position(w);
                    let c = em.with_mem(mem);
                    em.to(Action::Store { loc: *loc, val, position }, c, next);
                }
            }
        }
        AtomicCommand::Load { reg, loc, acquire } => {
            for w in cfg.mem.observable_writes(t, *loc) {
                let (mem, val) = cfg.mem.read(t, *loc, *w, *acquire).expect("observable");
                let mut c = em.with_mem(mem);
                c.regs[*reg] = Some(val);
                em.to(Action::Load { loc: *loc, val }, c, next);
            }
        }
        AtomicCommand::Cas { reg, loc, expected, new, release, acquire } => {
            let (Some(exp), Some(new)) = (expected.eval(&cfg.regs), new.eval(&cfg.regs)) else {
                return em.out;
            };
            for w in cfg.mem.observable_writes(t, *loc) {
                if cfg.mem.val(*w) == exp && cfg.mem.is_covered(*w) {
                    continue;
                }
                let (mem, outcome) =
                    cfg.mem.rmw(t, *loc, exp, new, *w, *release, *acquire).expect("observable and uncovered");
                let success = matches!(outcome, RmwOutcome::Success(_));
                let mut c = em.with_mem(mem);
                c.regs[*reg] = Some(Value::from(success));
                let val = cfg.mem.val(*w);
                em.to(Action::Cas { loc: *loc, val, success }, c, next);
            }
        }
        _ => match (&cfg.tm, backend) {
            (TmState::Spec(spec), _) => spec_command(&mut em, spec, cmd, next),
            (TmState::Tml(locals), _) => {
                let call = match cmd {
                    AtomicCommand::TxBegin { regs, .. } => TxCall::Begin { regs: regs.clone() },
                    AtomicCommand::TxRead { loc, reg } => TxCall::Read { loc: *loc, reg: *reg },
                    AtomicCommand::TxWrite { loc, expr } => match expr.eval(&cfg.regs) {
                        Some(val) => TxCall::Write { loc: *loc, val },
                        None => return em.out,
                    },
                    _ => TxCall::End,
                };
                if let Ok(bound) = tml::tml_api(&locals[t], call) {
                    tml_successors(&mut em, prog, backend, &bound, next);
                }
            }
            (TmState::Plain, _) => {}
        },
    }
    em.out
}

fn spec_command(em: &mut Emit<'_>, spec: &TmSpecState, cmd: &AtomicCommand, next: Label) {
    let (cfg, t) = (em.cfg, em.t);
    let with = |s: TmSpecState| Configuration { tm: TmState::Spec(s), ..cfg.clone() };
    match cmd {
        AtomicCommand::TxBegin { flag, regs } => {
            for m in spec.visible_memories(t) {
                if let Ok(s) = spec.tx_begin(t, *flag, m, regs.clone()) {
                    let mut c = with(s);
                    record(&mut c, t, TxEventKind::Begin);
                    em.to(Action::TxBegin { index: Some(m) }, c, next);
                }
            }
        }
        AtomicCommand::TxRead { loc, reg } => {
            let Some(txn) = spec.txn(t) else { return };
            let internal = txn.wr_set.contains_key(loc);
            let choices: Vec<Option<usize>> =
                if internal { alloc::vec![None] } else { spec.read_indices(t, *loc).into_iter().map(Some).collect() };
            for i in choices {
                if let Ok((s, val)) = spec.tx_read(t, *loc, *reg, i) {
                    let mut c = with(s);
                    c.regs[*reg] = Some(val);
                    record(&mut c, t, TxEventKind::Read { loc: *loc, val, internal });
                    em.to(Action::TxRead { loc: *loc, val, index: i }, c, next);
                }
            }
        }
        AtomicCommand::TxWrite { loc, expr } => {
            if let Some(val) = expr.eval(&cfg.regs) {
                if let Ok(s) = spec.tx_write(t, *loc, val) {
                    let mut c = with(s);
                    record(&mut c, t, TxEventKind::Write { loc: *loc, val });
                    em.to(Action::TxWrite { loc: *loc, val }, c, next);
                }
            }
        }
        AtomicCommand::TxEnd => {
            let Some(txn) = spec.txn(t) else { return };
            let writer = !txn.wr_set.is_empty();
            let res = if writer { spec.tx_end_wr(&cfg.mem, t) } else { spec.tx_end_ro(&cfg.mem, t) };
            if let Ok((s, mem)) = res {
                let mut c = with(s);
                c.mem = mem;
                record(&mut c, t, TxEventKind::Commit);
                em.to(Action::TxEnd { writer }, c, next);
            }
        }
        _ => {}
    }
}

fn tml_successors(em: &mut Emit<'_>, prog: &Program, backend: &Backend, locals: &TmlLocals, next: Label) {
    let Backend::TmlRa(mutations) = backend else {
        return;
    };
    let (cfg, t) = (em.cfg, em.t);
    for s in tml::tml_step(tml_layout(prog), &cfg.mem, locals, t, mutations) {
        let mut c = cfg.clone();
        c.mem = s.mem;
        let TmState::Tml(ls) = &mut c.tm else { unreachable!() };
        ls[t] = s.locals;
        let action = Action::Tml { label: s.label, value: s.value };
        match s.completion {
            Completion::Running => em.stay(action, c),
            Completion::Returned(ret) => {
                if let Some((r, v)) = ret {
                    c.regs[r] = Some(v);
                }
                em.to(action, c, next);
            }
            Completion::Aborted(regs) => {
                for r in regs {
                    c.regs[r] = None;
                }
                c.threads[t].skipping = true;
                em.stay(action, c);
            }
        }
    }
}
