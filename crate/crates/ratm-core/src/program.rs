//! Client programs: labelled commands, the structured surface form they are
//! lowered from, and static well-formedness checks.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::tms2ra::SyncFlag;
use crate::{Loc, Reg, RegFile, ThreadId, Value};

pub type Label = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Expr {
    Const(Value),
    Reg(Reg),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// `None` when a register operand is undefined.
    pub fn eval(&self, regs: &RegFile) -> Option<Value> {
        match self {
            Expr::Const(v) => Some(*v),
            Expr::Reg(r) => regs[*r],
            Expr::Add(a, b) => Some(a.eval(regs)? + b.eval(regs)?),
            Expr::Sub(a, b) => Some(a.eval(regs)? - b.eval(regs)?),
        }
    }

    fn registers(&self, out: &mut BTreeSet<Reg>) {
        match self {
            Expr::Const(_) => {}
            Expr::Reg(r) => {
                out.insert(*r);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.registers(out);
                b.registers(out);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn apply(self, a: Value, b: Value) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Boolean expressions over registers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BoolExpr {
    Const(bool),
    Cmp(CmpOp, Expr, Expr),
    In(Expr, Vec<Value>),
    /// True iff the register holds a value (is not ⊥).
    Defined(Reg),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Implies(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn and(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Implies(Box::new(a), Box::new(b))
    }

    pub fn negate(a: BoolExpr) -> BoolExpr {
        BoolExpr::Not(Box::new(a))
    }

    pub fn reg_eq(r: Reg, v: Value) -> BoolExpr {
        BoolExpr::Cmp(CmpOp::Eq, Expr::Reg(r), Expr::Const(v))
    }

    /// Kleene three-valued evaluation; `None` means undefined. Guards use
    /// this form and block on `None`.
    pub fn eval3(&self, regs: &RegFile) -> Option<bool> {
        match self {
            BoolExpr::Const(b) => Some(*b),
            BoolExpr::Cmp(op, a, b) => Some(op.apply(a.eval(regs)?, b.eval(regs)?)),
            BoolExpr::In(e, vs) => Some(vs.contains(&e.eval(regs)?)),
            BoolExpr::Defined(r) => Some(regs[*r].is_some()),
            BoolExpr::Not(a) => a.eval3(regs).map(|b| !b),
            BoolExpr::And(a, b) => match (a.eval3(regs), b.eval3(regs)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            BoolExpr::Or(a, b) => match (a.eval3(regs), b.eval3(regs)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            BoolExpr::Implies(a, b) => BoolExpr::or(BoolExpr::negate((**a).clone()), (**b).clone()).eval3(regs),
        }
    }

    /// Two-valued evaluation for postconditions: an atom mentioning an
    /// undefined register is false; only `Defined` can observe ⊥ as true.
    pub fn eval_post(&self, regs: &RegFile) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Cmp(op, a, b) => match (a.eval(regs), b.eval(regs)) {
                (Some(x), Some(y)) => op.apply(x, y),
                _ => false,
            },
            BoolExpr::In(e, vs) => e.eval(regs).is_some_and(|v| vs.contains(&v)),
            BoolExpr::Defined(r) => regs[*r].is_some(),
            BoolExpr::Not(a) => !a.eval_post(regs),
            BoolExpr::And(a, b) => a.eval_post(regs) && b.eval_post(regs),
            BoolExpr::Or(a, b) => a.eval_post(regs) || b.eval_post(regs),
            BoolExpr::Implies(a, b) => !a.eval_post(regs) || b.eval_post(regs),
        }
    }

    pub fn registers(&self) -> BTreeSet<Reg> {
        let mut out = BTreeSet::new();
        self.collect_registers(&mut out);
        out
    }

    fn collect_registers(&self, out: &mut BTreeSet<Reg>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Cmp(_, a, b) => {
                a.registers(out);
                b.registers(out);
            }
            BoolExpr::In(e, _) => e.registers(out),
            BoolExpr::Defined(r) => {
                out.insert(*r);
            }
            BoolExpr::Not(a) => a.collect_registers(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) | BoolExpr::Implies(a, b) => {
                a.collect_registers(out);
                b.collect_registers(out);
            }
        }
    }
}

/// Locations in `Store`, `Load` and `Cas` index the client locations;
/// those in `TxRead` and `TxWrite` index the transactional locations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AtomicCommand {
    Assign {
        reg: Reg,
        expr: Expr,
    },
    Store {
        loc: Loc,
        expr: Expr,
        release: bool,
    },
    Load {
        reg: Reg,
        loc: Loc,
        acquire: bool,
    },
    /// Stores 1 in `reg` on success and 0 on failure.
    Cas {
        reg: Reg,
        loc: Loc,
        expected: Expr,
        new: Expr,
        release: bool,
        acquire: bool,
    },
    TxBegin {
        flag: SyncFlag,
        regs: BTreeSet<Reg>,
    },
    TxRead {
        loc: Loc,
        reg: Reg,
    },
    TxWrite {
        loc: Loc,
        expr: Expr,
    },
    TxEnd,
}

impl AtomicCommand {
    pub fn is_transactional(&self) -> bool {
        matches!(
            self,
            AtomicCommand::TxBegin { .. }
                | AtomicCommand::TxRead { .. }
                | AtomicCommand::TxWrite { .. }
                | AtomicCommand::TxEnd
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LabelledCommand {
    Step(AtomicCommand, Label),
    If(BoolExpr, Label, Label),
}

impl LabelledCommand {
    pub fn targets(&self) -> Vec<Label> {
        match self {
            LabelledCommand::Step(_, next) => alloc::vec![*next],
            LabelledCommand::If(_, a, b) => alloc::vec![*a, *b],
        }
    }
}

/// One thread's code. Label 0 is the entry; `commands.len()` is terminal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThreadCode {
    pub name: String,
    pub commands: Vec<LabelledCommand>,
    /// Named program points, from `Stmt::Mark`.
    pub marks: BTreeMap<String, Label>,
}

impl ThreadCode {
    pub fn terminal(&self) -> Label {
        self.commands.len()
    }

    pub fn command(&self, pc: Label) -> Option<&LabelledCommand> {
        self.commands.get(pc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Quantifier {
    /// Every completed execution satisfies the predicate.
    Forall,
    /// Some completed execution satisfies the predicate.
    Exists,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Postcondition {
    pub quantifier: Quantifier,
    pub predicate: BoolExpr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Program {
    pub name: String,
    pub locations: Vec<String>,
    pub tx_locations: Vec<String>,
    /// Register names with the thread owning each.
    pub registers: Vec<(String, ThreadId)>,
    pub threads: Vec<ThreadCode>,
    pub postcondition: Postcondition,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("thread {thread}: label {label} jumps to missing label {target}")]
    MissingLabel { thread: String, label: Label, target: Label },
    #[error("thread {thread}: label {label} refers to unknown {what} {index}")]
    UnknownIndex { thread: String, label: Label, what: &'static str, index: usize },
    #[error("thread {thread}: label {label} uses register {reg} owned by another thread")]
    ForeignRegister { thread: String, label: Label, reg: String },
    #[error("thread {thread}: label {label}: {reason}")]
    TransactionNesting { thread: String, label: Label, reason: &'static str },
    #[error("thread {thread}: terminal label is unreachable")]
    UnreachableTerminal { thread: String },
}

impl Program {
    pub fn reg_index(&self, name: &str) -> Option<Reg> {
        self.registers.iter().position(|(n, _)| n == name)
    }

    pub fn loc_index(&self, name: &str) -> Option<Loc> {
        self.locations.iter().position(|n| n == name)
    }

    pub fn tx_loc_index(&self, name: &str) -> Option<Loc> {
        self.tx_locations.iter().position(|n| n == name)
    }

    pub fn thread_index(&self, name: &str) -> Option<ThreadId> {
        self.threads.iter().position(|t| t.name == name)
    }

    pub fn initial_registers(&self) -> RegFile {
        alloc::vec![Some(0); self.registers.len()]
    }

    pub fn has_transactions(&self) -> bool {
        self.threads
            .iter()
            .any(|t| t.commands.iter().any(|c| matches!(c, LabelledCommand::Step(cmd, _) if cmd.is_transactional())))
    }

    /// Check label targets, indices, register ownership, transaction
    /// bracketing and register scoping of transactional reads.
    pub fn validate(&self) -> Result<(), ProgramError> {
        for (tid, th) in self.threads.iter().enumerate() {
            self.validate_thread(tid, th)?;
        }
        Ok(())
    }

    fn validate_thread(&self, tid: ThreadId, th: &ThreadCode) -> Result<(), ProgramError> {
        let name = || th.name.clone();
        let unknown = |label, what, index| ProgramError::UnknownIndex { thread: th.name.clone(), label, what, index };
        let own = |label: Label, r: Reg| -> Result<(), ProgramError> {
            match self.registers.get(r) {
                None => Err(unknown(label, "register", r)),
                Some((n, owner)) if *owner != tid => {
                    Err(ProgramError::ForeignRegister { thread: th.name.clone(), label, reg: n.clone() })
                }
                Some(_) => Ok(()),
            }
        };
        for (label, cmd) in th.commands.iter().enumerate() {
            for target in cmd.targets() {
                if target > th.terminal() {
                    return Err(ProgramError::MissingLabel { thread: name(), label, target });
                }
            }
            let mut regs = BTreeSet::new();
            match cmd {
                LabelledCommand::If(c, _, _) => regs = c.registers(),
                LabelledCommand::Step(a, _) => match a {
                    AtomicCommand::Assign { reg, expr } => {
                        regs.insert(*reg);
                        expr.registers(&mut regs);
                    }
                    AtomicCommand::Store { loc, expr, .. } => {
                        if *loc >= self.locations.len() {
                            return Err(unknown(label, "location", *loc));
                        }
                        expr.registers(&mut regs);
                    }
                    AtomicCommand::Load { reg, loc, .. } => {
                        if *loc >= self.locations.len() {
                            return Err(unknown(label, "location", *loc));
                        }
                        regs.insert(*reg);
                    }
                    AtomicCommand::Cas { reg, loc, expected, new, .. } => {
                        if *loc >= self.locations.len() {
                            return Err(unknown(label, "location", *loc));
                        }
                        regs.insert(*reg);
                        expected.registers(&mut regs);
                        new.registers(&mut regs);
                    }
                    AtomicCommand::TxBegin { regs: set, .. } => regs.extend(set),
                    AtomicCommand::TxRead { loc, reg } => {
                        if *loc >= self.tx_locations.len() {
                            return Err(unknown(label, "transactional location", *loc));
                        }
                        regs.insert(*reg);
                    }
                    AtomicCommand::TxWrite { loc, expr } => {
                        if *loc >= self.tx_locations.len() {
                            return Err(unknown(label, "transactional location", *loc));
                        }
                        expr.registers(&mut regs);
                    }
                    AtomicCommand::TxEnd => {}
                },
            }
            for r in regs {
                own(label, r)?;
            }
        }
        self.validate_scopes(th)
    }

    /// Walk every path, tracking the register set of the enclosing
    /// transaction.
    fn validate_scopes(&self, th: &ThreadCode) -> Result<(), ProgramError> {
        let nesting = |label, reason| ProgramError::TransactionNesting { thread: th.name.clone(), label, reason };
        let mut seen: BTreeSet<(Label, Option<BTreeSet<Reg>>)> = BTreeSet::new();
        let mut stack = alloc::vec![(0usize, None::<BTreeSet<Reg>>)];
        let mut terminal_reached = false;
        while let Some((pc, scope)) = stack.pop() {
            if !seen.insert((pc, scope.clone())) {
                continue;
            }
            let Some(cmd) = th.command(pc) else {
                if scope.is_some() {
                    return Err(nesting(pc, "thread ends inside a transaction"));
                }
                terminal_reached = true;
                continue;
            };
            match cmd {
                LabelledCommand::If(_, a, b) => {
                    stack.push((*a, scope.clone()));
                    stack.push((*b, scope));
                }
                LabelledCommand::Step(a, next) => {
                    let next_scope = match a {
                        AtomicCommand::TxBegin { regs, .. } => {
                            if scope.is_some() {
                                return Err(nesting(pc, "nested TxBegin"));
                            }
                            Some(regs.clone())
                        }
                        AtomicCommand::TxRead { reg, .. } => match &scope {
                            None => return Err(nesting(pc, "TxRead outside a transaction")),
                            Some(set) if !set.contains(reg) => {
                                return Err(nesting(pc, "TxRead target is not among the transaction's registers"))
                            }
                            Some(_) => scope,
                        },
                        AtomicCommand::TxWrite { .. } => {
                            if scope.is_none() {
                                return Err(nesting(pc, "TxWrite outside a transaction"));
                            }
                            scope
                        }
                        AtomicCommand::TxEnd => {
                            if scope.is_none() {
                                return Err(nesting(pc, "TxEnd outside a transaction"));
                            }
                            None
                        }
                        _ => scope,
                    };
                    stack.push((*next, next_scope));
                }
            }
        }
        if !terminal_reached {
            return Err(ProgramError::UnreachableTerminal { thread: th.name.clone() });
        }
        Ok(())
    }
}

/// Structured statements, lowered to labelled commands by [`lower`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Atomic(AtomicCommand),
    If {
        cond: BoolExpr,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
    },
    /// Runs `body` until `cond` holds. An undefined `cond` counts as not
    /// holding, so a loop around an aborted transaction retries.
    DoUntil {
        body: Vec<Stmt>,
        cond: BoolExpr,
    },
    /// Names the label of the next command.
    Mark(String),
}

/// Lower structured code into labelled commands. Labels are allocated in
/// program order, so a jump to an earlier label is a loop back edge.
pub fn lower(name: &str, body: &[Stmt]) -> ThreadCode {
    let mut lw = Lowering { commands: Vec::new(), marks: BTreeMap::new() };
    let (_, holes) = lw.block(body);
    let end = lw.commands.len();
    lw.fill(holes, end);
    ThreadCode { name: name.into(), commands: lw.commands, marks: lw.marks }
}

const PENDING: Label = usize::MAX;

/// A control-flow exit whose target is not known yet.
enum Hole {
    Next(Label),
    Then(Label),
    Else(Label),
    Mark(String),
}

struct Lowering {
    commands: Vec<LabelledCommand>,
    marks: BTreeMap<String, Label>,
}

impl Lowering {
    fn fill(&mut self, holes: Vec<Hole>, target: Label) {
        for hole in holes {
            match hole {
                Hole::Next(at) => {
                    if let LabelledCommand::Step(_, next) = &mut self.commands[at] {
                        *next = target;
                    }
                }
                Hole::Then(at) => {
                    if let LabelledCommand::If(_, a, _) = &mut self.commands[at] {
                        *a = target;
                    }
                }
                Hole::Else(at) => {
                    if let LabelledCommand::If(_, _, b) = &mut self.commands[at] {
                        *b = target;
                    }
                }
                Hole::Mark(name) => {
                    self.marks.insert(name, target);
                }
            }
        }
    }

    /// Returns the entry label (if the block emits any command) and the
    /// block's unresolved exits.
    fn block(&mut self, body: &[Stmt]) -> (Option<Label>, Vec<Hole>) {
        let mut entry = None;
        let mut pending = Vec::new();
        for stmt in body {
            let (e, holes) = self.stmt(stmt);
            if let Some(e) = e {
                self.fill(core::mem::take(&mut pending), e);
                entry.get_or_insert(e);
            }
            pending.extend(holes);
        }
        (entry, pending)
    }

    fn stmt(&mut self, stmt: &Stmt) -> (Option<Label>, Vec<Hole>) {
        match stmt {
            Stmt::Atomic(cmd) => {
                let at = self.commands.len();
                self.commands.push(LabelledCommand::Step(cmd.clone(), PENDING));
                (Some(at), alloc::vec![Hole::Next(at)])
            }
            Stmt::Mark(name) => (None, alloc::vec![Hole::Mark(name.clone())]),
            Stmt::If { cond, then, els } => {
                let at = self.commands.len();
                self.commands.push(LabelledCommand::If(cond.clone(), PENDING, PENDING));
                let mut holes = Vec::new();
                let (te, th) = self.block(then);
                match te {
                    Some(e) => self.fill(alloc::vec![Hole::Then(at)], e),
                    None => holes.push(Hole::Then(at)),
                }
                holes.extend(th);
                let (ee, eh) = self.block(els);
                match ee {
                    Some(e) => self.fill(alloc::vec![Hole::Else(at)], e),
                    None => holes.push(Hole::Else(at)),
                }
                holes.extend(eh);
                (Some(at), holes)
            }
            Stmt::DoUntil { body, cond } => {
                let (entry, body_holes) = self.block(body);
                let guard = self.commands.len();
                let head = entry.unwrap_or(guard);
                self.commands.push(LabelledCommand::If(defined_guard(cond), PENDING, head));
                self.fill(body_holes, guard);
                (Some(head), alloc::vec![Hole::Then(guard)])
            }
        }
    }
}

/// `cond` guarded by definedness of every register it mentions.
pub fn defined_guard(cond: &BoolExpr) -> BoolExpr {
    cond.registers().into_iter().rev().fold(cond.clone(), |acc, r| BoolExpr::and(BoolExpr::Defined(r), acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(loc: Loc, v: Value) -> Stmt {
        Stmt::Atomic(AtomicCommand::Store { loc, expr: Expr::Const(v), release: false })
    }

    fn load(reg: Reg, loc: Loc) -> Stmt {
        Stmt::Atomic(AtomicCommand::Load { reg, loc, acquire: false })
    }

    #[test]
    fn straight_line() {
        let th = lower("t", &[store(0, 1), store(1, 2)]);
        assert_eq!(th.terminal(), 2);
        assert!(matches!(th.commands[0], LabelledCommand::Step(_, 1)));
        assert!(matches!(th.commands[1], LabelledCommand::Step(_, 2)));
    }

    #[test]
    fn empty_body_is_terminal() {
        let th = lower("t", &[]);
        assert_eq!(th.terminal(), 0);
    }

    #[test]
    fn do_until_has_back_edge() {
        let th =
            lower("t", &[Stmt::DoUntil { body: alloc::vec![load(0, 1)], cond: BoolExpr::reg_eq(0, 1) }, load(1, 0)]);
        assert_eq!(th.commands.len(), 3);
        let LabelledCommand::If(guard, exit, back) = &th.commands[1] else { panic!("guard expected") };
        assert_eq!((*exit, *back), (2, 0));
        let mut regs = alloc::vec![None, Some(0)];
        assert_eq!(guard.eval3(&regs), Some(false));
        regs[0] = Some(1);
        assert_eq!(guard.eval3(&regs), Some(true));
    }

    #[test]
    fn if_then_else_joins() {
        let th = lower(
            "t",
            &[
                Stmt::If {
                    cond: BoolExpr::reg_eq(0, 1),
                    then: alloc::vec![store(0, 1)],
                    els: alloc::vec![store(0, 2)],
                },
                store(1, 3),
            ],
        );
        assert_eq!(th.commands[0], LabelledCommand::If(BoolExpr::reg_eq(0, 1), 1, 2));
        assert!(matches!(th.commands[1], LabelledCommand::Step(_, 3)));
        assert!(matches!(th.commands[2], LabelledCommand::Step(_, 3)));
    }

    #[test]
    fn if_without_else_and_marks() {
        let th = lower(
            "t",
            &[
                Stmt::If {
                    cond: BoolExpr::reg_eq(0, 1),
                    then: alloc::vec![store(0, 1), store(0, 2)],
                    els: alloc::vec![],
                },
                Stmt::Mark("after".into()),
            ],
        );
        assert_eq!(th.commands[0], LabelledCommand::If(BoolExpr::reg_eq(0, 1), 1, 3));
        assert!(matches!(th.commands[2], LabelledCommand::Step(_, 3)));
        assert_eq!(th.marks["after"], 3);
    }

    #[test]
    fn nested_ifs_resolve() {
        let th = lower(
            "t",
            &[
                Stmt::If {
                    cond: BoolExpr::reg_eq(0, 1),
                    then: alloc::vec![Stmt::If {
                        cond: BoolExpr::reg_eq(0, 2),
                        then: alloc::vec![store(0, 1)],
                        els: alloc::vec![],
                    }],
                    els: alloc::vec![store(0, 3)],
                },
                store(1, 4),
            ],
        );
        // 0: if, 1: inner if, 2: store 1, 3: store 3, 4: store 4
        assert_eq!(th.commands[0], LabelledCommand::If(BoolExpr::reg_eq(0, 1), 1, 3));
        assert_eq!(th.commands[1], LabelledCommand::If(BoolExpr::reg_eq(0, 2), 2, 4));
        assert!(matches!(th.commands[2], LabelledCommand::Step(_, 4)));
        assert!(matches!(th.commands[3], LabelledCommand::Step(_, 4)));
    }

    #[test]
    fn kleene_connectives() {
        let regs: RegFile = alloc::vec![None, Some(1)];
        let undef = BoolExpr::reg_eq(0, 1);
        let yes = BoolExpr::reg_eq(1, 1);
        let no = BoolExpr::reg_eq(1, 2);
        assert_eq!(undef.eval3(&regs), None);
        assert_eq!(BoolExpr::and(undef.clone(), no.clone()).eval3(&regs), Some(false));
        assert_eq!(BoolExpr::or(undef.clone(), yes.clone()).eval3(&regs), Some(true));
        assert_eq!(BoolExpr::and(undef.clone(), yes).eval3(&regs), None);
        assert!(!undef.eval_post(&regs));
        assert!(BoolExpr::implies(undef, no).eval_post(&regs));
    }
}
