//! Proof outlines: per-label annotations checked against every reachable
//! configuration, and the four validity clauses discharged on reachable
//! states.
//!
//! A thread inside an aborted transaction (skipping to its `TxEnd`) is not
//! held to its annotations until it leaves the transaction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::explorer::{walk, ExploreError, ExploreOptions};
use crate::lts::{Backend, Configuration, Step};
use crate::program::{Label, Program};
use crate::taro::{Assertion, EvalError, EvalOptions};
use crate::ThreadId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofOutline {
    pub initial: Assertion,
    /// Missing entries read as `true`.
    pub annotations: BTreeMap<(ThreadId, Label), Assertion>,
    pub fin: Assertion,
}

const TRUE: Assertion = Assertion::Const(true);

impl ProofOutline {
    pub fn trivial() -> ProofOutline {
        ProofOutline { initial: TRUE, annotations: BTreeMap::new(), fin: TRUE }
    }

    pub fn ann(&self, t: ThreadId, label: Label) -> &Assertion {
        self.annotations.get(&(t, label)).unwrap_or(&TRUE)
    }

    /// Conjoin `a` onto the annotation at `(t, label)`.
    pub fn annotate(&mut self, t: ThreadId, label: Label, a: Assertion) {
        let slot = self.annotations.entry((t, label)).or_insert(TRUE);
        *slot = match core::mem::replace(slot, TRUE) {
            Assertion::Const(true) => a,
            old => Assertion::and(old, a),
        };
    }

    fn check_labels(&self, prog: &Program) -> Result<(), OutlineError> {
        for (t, label) in self.annotations.keys() {
            let ok = prog.threads.get(*t).is_some_and(|c| *label <= c.terminal());
            if !ok {
                return Err(OutlineError::UnknownPoint { thread: *t, label: *label });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Clause {
    /// An annotation fails in a reachable configuration.
    Reachable,
    Initialisation,
    Finalisation,
    LocalCorrectness,
    Stability,
}

impl Clause {
    pub fn name(self) -> &'static str {
        match self {
            Clause::Reachable => "reachable",
            Clause::Initialisation => "initialisation",
            Clause::Finalisation => "finalisation",
            Clause::LocalCorrectness => "local-correctness",
            Clause::Stability => "stability",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutlineFailure {
    pub clause: Clause,
    /// The thread whose annotation failed, if any.
    pub thread: Option<ThreadId>,
    pub label: Option<Label>,
    /// Trace to the configuration where the failure shows, including the
    /// offending step for triple clauses.
    pub trace: Vec<Step>,
    pub assertion: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutlineReport {
    pub program: String,
    pub holds: bool,
    pub states: usize,
    pub failure: Option<OutlineFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OutlineError {
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("annotation for thread {thread} at missing label {label}")]
    UnknownPoint { thread: ThreadId, label: Label },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutlineOptions {
    pub explore: ExploreOptions,
    pub eval: EvalOptions,
    pub backend: Backend,
}

impl Default for OutlineOptions {
    fn default() -> Self {
        OutlineOptions {
            explore: ExploreOptions { check_invariants: false, ..ExploreOptions::default() },
            eval: EvalOptions::default(),
            backend: Backend::Tms2Ra,
        }
    }
}

struct Checker<'a> {
    prog: &'a Program,
    outline: &'a ProofOutline,
    opts: &'a OutlineOptions,
    failure: Option<OutlineFailure>,
    error: Option<OutlineError>,
}

impl Checker<'_> {
    fn eval(&mut self, a: &Assertion, cfg: &Configuration) -> bool {
        match a.eval(cfg, &self.opts.eval) {
            Ok(b) => b,
            Err(e) => {
                self.error.get_or_insert(e.into());
                // Treated as satisfied so the walk stops on the error alone.
                true
            }
        }
    }

    /// The annotation `t` is held to in `cfg`, if any.
    fn current<'o>(&self, outline: &'o ProofOutline, cfg: &Configuration, t: ThreadId) -> Option<&'o Assertion> {
        let ctl = &cfg.threads[t];
        (!ctl.skipping).then(|| outline.ann(t, ctl.pc))
    }

    fn fail(
        &mut self,
        clause: Clause,
        thread: Option<ThreadId>,
        label: Option<Label>,
        trace: Vec<Step>,
        a: &Assertion,
    ) {
        if self.failure.is_none() {
            self.failure = Some(OutlineFailure { clause, thread, label, trace, assertion: a.render(self.prog) });
        }
    }

    fn done(&self) -> bool {
        self.failure.is_some() || self.error.is_some()
    }

    fn trace_with(path: &[Step], step: &Step) -> Vec<Step> {
        let mut t = path.to_vec();
        t.push(step.clone());
        t
    }

    fn initialisation(&mut self, cfg: &Configuration) {
        let outline = self.outline;
        if !self.eval(&outline.initial, cfg) {
            return;
        }
        for t in 0..self.prog.threads.len() {
            let a = outline.ann(t, 0);
            if !self.eval(a, cfg) {
                self.fail(Clause::Initialisation, Some(t), Some(0), Vec::new(), a);
                return;
            }
        }
    }

    fn finalisation(&mut self, path: &[Step], cfg: &Configuration) {
        let outline = self.outline;
        for (t, code) in self.prog.threads.iter().enumerate() {
            if !self.eval(outline.ann(t, code.terminal()), cfg) {
                return;
            }
        }
        if !self.eval(&outline.fin, cfg) {
            self.fail(Clause::Finalisation, None, None, path.to_vec(), &outline.fin);
        }
    }

    fn reachable(&mut self, path: &[Step], cfg: &Configuration) {
        let outline = self.outline;
        if path.is_empty() && !self.eval(&outline.initial, cfg) {
            self.fail(Clause::Initialisation, None, None, Vec::new(), &outline.initial);
            return;
        }
        for t in 0..self.prog.threads.len() {
            if let Some(a) = self.current(outline, cfg, t) {
                if !self.eval(a, cfg) {
                    self.fail(Clause::Reachable, Some(t), Some(cfg.threads[t].pc), path.to_vec(), a);
                    return;
                }
            }
        }
        if cfg.is_final(self.prog) && !self.eval(&outline.fin, cfg) {
            self.fail(Clause::Finalisation, None, None, path.to_vec(), &outline.fin);
        }
    }

    fn triples(&mut self, path: &[Step], cfg: &Configuration, succ: &[(Step, Configuration)]) {
        let outline = self.outline;
        let threads = self.prog.threads.len();
        for (step, next) in succ {
            let actor = step.thread;
            let pre = self.current(outline, cfg, actor).unwrap_or(&TRUE);
            if !self.eval(pre, cfg) {
                continue;
            }
            if let Some(post) = self.current(outline, next, actor) {
                if !self.eval(post, next) {
                    let label = next.threads[actor].pc;
                    self.fail(Clause::LocalCorrectness, Some(actor), Some(label), Self::trace_with(path, step), post);
                    return;
                }
            }
            for other in (0..threads).filter(|o| *o != actor) {
                for label in 0..=self.prog.threads[other].terminal() {
                    let a = outline.ann(other, label);
                    if self.eval(a, cfg) && !self.eval(a, next) {
                        self.fail(Clause::Stability, Some(other), Some(label), Self::trace_with(path, step), a);
                        return;
                    }
                }
            }
        }
    }
}

fn run(
    prog: &Program,
    outline: &ProofOutline,
    opts: &OutlineOptions,
    validity: bool,
) -> Result<OutlineReport, OutlineError> {
    outline.check_labels(prog)?;
    let mut ck = Checker { prog, outline, opts, failure: None, error: None };
    let stats = walk(prog, &opts.backend, &opts.explore, |path, cfg, succ| {
        if ck.done() {
            return;
        }
        if !validity {
            ck.reachable(path, cfg);
            return;
        }
        if path.is_empty() {
            ck.initialisation(cfg);
        }
        if succ.is_empty() && cfg.is_final(prog) {
            ck.finalisation(path, cfg);
        }
        ck.triples(path, cfg, succ);
    })?;
    if let Some(e) = ck.error {
        return Err(e);
    }
    Ok(OutlineReport {
        program: prog.name.clone(),
        holds: ck.failure.is_none(),
        states: stats.states,
        failure: ck.failure,
    })
}

/// Every annotation holds wherever its thread is, `initial` holds at the
/// start and `fin` at every final configuration.
pub fn check_reachable_annotations(
    prog: &Program,
    outline: &ProofOutline,
    opts: &OutlineOptions,
) -> Result<OutlineReport, OutlineError> {
    run(prog, outline, opts, false)
}

/// Initialisation, finalisation, local correctness and stability, each
/// discharged on the reachable configurations satisfying its precondition.
/// Stability is checked against every label of the interfered thread, not
/// only its current one.
pub fn check_og_validity(
    prog: &Program,
    outline: &ProofOutline,
    opts: &OutlineOptions,
) -> Result<OutlineReport, OutlineError> {
    run(prog, outline, opts, true)
}

impl OutlineFailure {
    pub fn describe(&self, prog: &Program) -> String {
        let at = match (self.thread, self.label) {
            (Some(t), Some(l)) => format!(" at {}@{}", prog.threads[t].name, l),
            _ => String::new(),
        };
        format!("{}{}: {}", self.clause.name(), at, self.assertion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin;
    use crate::taro::Term;

    #[test]
    fn trivial_outline_passes() {
        let p = builtin("tx-mp").unwrap();
        let o = ProofOutline::trivial();
        let opts = OutlineOptions::default();
        assert!(check_reachable_annotations(&p, &o, &opts).unwrap().holds);
        assert!(check_og_validity(&p, &o, &opts).unwrap().holds);
    }

    #[test]
    fn contradicting_fin_fails_finalisation() {
        let p = builtin("mp-ra").unwrap();
        let mut o = ProofOutline::trivial();
        o.fin = Assertion::reg_eq(1, 0);
        let opts = OutlineOptions { backend: Backend::Plain, ..OutlineOptions::default() };
        let r = check_og_validity(&p, &o, &opts).unwrap();
        assert_eq!(r.failure.unwrap().clause, Clause::Finalisation);
        let r = check_reachable_annotations(&p, &o, &opts).unwrap();
        assert_eq!(r.failure.unwrap().clause, Clause::Finalisation);
    }

    #[test]
    fn unstable_annotation_is_reported() {
        // t2 claims d stays 0 while t1 writes it.
        let p = builtin("mp-ra").unwrap();
        let mut o = ProofOutline::trivial();
        o.annotate(1, 0, Assertion::Definite { thread: 1, loc: 0, val: Term::Const(0) });
        let opts = OutlineOptions { backend: Backend::Plain, ..OutlineOptions::default() };
        let r = check_og_validity(&p, &o, &opts).unwrap();
        let f = r.failure.unwrap();
        assert_eq!((f.clause, f.thread), (Clause::Stability, Some(1)));
        assert_eq!(f.trace.last().unwrap().thread, 0);
        let r = check_reachable_annotations(&p, &o, &opts).unwrap();
        assert_eq!(r.failure.unwrap().clause, Clause::Reachable);
    }

    #[test]
    fn annotations_need_existing_labels() {
        let p = builtin("mp-ra").unwrap();
        let mut o = ProofOutline::trivial();
        o.annotate(0, 9, TRUE);
        let opts = OutlineOptions::default();
        assert_eq!(check_og_validity(&p, &o, &opts), Err(OutlineError::UnknownPoint { thread: 0, label: 9 }));
    }
}
