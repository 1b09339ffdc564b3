//! Exhaustive depth-first exploration of a program's executions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashSet;

use crate::invariants::{check_state, check_transition, InvariantViolation};
use crate::lts::{enabled_steps, tml_layout, Backend, Configuration, Step, StepOptions, TxEvent};
use crate::program::{Label, Program, ProgramError, Quantifier};
use crate::{Loc, RegFile, ThreadId, Value};

pub const DEFAULT_CEILING: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    pub step: StepOptions,
    /// Identify configurations up to write renaming. Without it every
    /// path is walked separately, cycles excepted.
    pub memoize: bool,
    /// Maximum number of visited configurations.
    pub ceiling: usize,
    /// Keep transactional histories (TMS2-RA only).
    pub record_history: bool,
    /// Keep one trace per distinct final register file.
    pub witnesses: bool,
    pub check_invariants: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            step: StepOptions::default(),
            memoize: true,
            ceiling: DEFAULT_CEILING,
            record_history: false,
            witnesses: false,
            check_invariants: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stats {
    pub states: usize,
    pub transitions: usize,
    /// Distinct final configurations.
    pub finals: usize,
    /// Configurations cut off by the retry budget.
    pub exhausted: usize,
    /// Non-final configurations without successors, e.g. a guard on ⊥.
    pub stuck: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplorationResult {
    pub program: String,
    pub backend: String,
    pub finals: BTreeSet<RegFile>,
    pub holds: bool,
    /// A trace to a final state violating a universal postcondition.
    pub counterexample: Option<Vec<Step>>,
    pub witnesses: BTreeMap<RegFile, Vec<Step>>,
    /// Histories of all dead-end configurations, when recorded.
    pub histories: BTreeSet<Vec<TxEvent>>,
    pub violations: Vec<InvariantViolation>,
    pub stats: Stats,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("state ceiling of {0} configurations exceeded")]
    Ceiling(usize),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("program uses transactions but the backend has none")]
    NoTransactions,
    #[error("thread {thread} has no label {label}")]
    UnknownLabel { thread: ThreadId, label: Label },
}

fn check_program(prog: &Program, backend: &Backend) -> Result<(), ExploreError> {
    prog.validate()?;
    if *backend == Backend::Plain && prog.has_transactions() {
        return Err(ExploreError::NoTransactions);
    }
    Ok(())
}

/// Depth-first walk over reachable configurations. `visit` sees each
/// configuration once (per path when memoisation is off) together with
/// the path leading to it and its successors.
pub fn walk(
    prog: &Program,
    backend: &Backend,
    opts: &ExploreOptions,
    mut visit: impl FnMut(&[Step], &Configuration, &[(Step, Configuration)]),
) -> Result<Stats, ExploreError> {
    check_program(prog, backend)?;
    let mut stats = Stats::default();
    let root = Configuration::initial(prog, backend, opts.record_history).canonical();
    let mut seen: HashSet<Configuration> = HashSet::new();
    let mut on_path: HashSet<Configuration> = HashSet::new();
    let mut path: Vec<Step> = Vec::new();

    struct Frame {
        cfg: Configuration,
        succ: Vec<(Step, Configuration)>,
        next: usize,
    }

    let mut expand = |cfg: Configuration, path: &[Step], stats: &mut Stats| -> Result<Frame, ExploreError> {
        stats.states += 1;
        if stats.states > opts.ceiling {
            return Err(ExploreError::Ceiling(opts.ceiling));
        }
        let succ = enabled_steps(prog, backend, &opts.step, &cfg);
        stats.transitions += succ.len();
        if succ.is_empty() {
            if cfg.exhausted {
                stats.exhausted += 1;
            } else if cfg.is_final(prog) {
                stats.finals += 1;
            } else {
                stats.stuck += 1;
            }
        }
        visit(path, &cfg, &succ);
        Ok(Frame { cfg, succ, next: 0 })
    };

    if opts.memoize {
        seen.insert(root.clone());
    } else {
        on_path.insert(root.clone());
    }
    let mut stack = alloc::vec![expand(root, &path, &mut stats)?];
    while let Some(top) = stack.last_mut() {
        if top.next == top.succ.len() {
            let done = stack.pop().expect("non-empty");
            if !opts.memoize {
                on_path.remove(&done.cfg);
            }
            path.pop();
            continue;
        }
        let (step, next) = top.succ[top.next].clone();
        top.next += 1;
        let key = next.canonical();
        let fresh = if opts.memoize { seen.insert(key.clone()) } else { on_path.insert(key.clone()) };
        if fresh {
            path.push(step);
            let frame = expand(key, &path, &mut stats)?;
            stack.push(frame);
        }
    }
    Ok(stats)
}

pub fn explore(prog: &Program, backend: &Backend, opts: &ExploreOptions) -> Result<ExplorationResult, ExploreError> {
    let layout = matches!(backend, Backend::TmlRa(_)).then(|| tml_layout(prog));
    let post = &prog.postcondition;
    let mut finals = BTreeSet::new();
    let mut witnesses = BTreeMap::new();
    let mut histories = BTreeSet::new();
    let mut violations = Vec::new();
    let mut counterexample = None;
    let mut satisfied = false;

    let stats = walk(prog, backend, opts, |path, cfg, succ| {
        if opts.check_invariants {
            violations.extend(check_state(cfg, layout));
            for (_, next) in succ {
                violations.extend(check_transition(cfg, next));
            }
        }
        if !succ.is_empty() {
            return;
        }
        if let Some(h) = &cfg.history {
            histories.insert(h.clone());
        }
        if !cfg.is_final(prog) {
            return;
        }
        let ok = post.predicate.eval_post(&cfg.regs);
        satisfied |= ok;
        if !ok && post.quantifier == Quantifier::Forall && counterexample.is_none() {
            counterexample = Some(path.to_vec());
        }
        if opts.witnesses && !witnesses.contains_key(&cfg.regs) {
            witnesses.insert(cfg.regs.clone(), path.to_vec());
        }
        finals.insert(cfg.regs.clone());
    })?;

    let holds = match post.quantifier {
        Quantifier::Forall => counterexample.is_none(),
        Quantifier::Exists => satisfied,
    };
    Ok(ExplorationResult {
        program: prog.name.clone(),
        backend: backend.name(),
        finals,
        holds,
        counterexample,
        witnesses,
        histories,
        violations,
        stats,
    })
}

/// Values of client location `x` observable by `thread` in any reachable
/// configuration where it is at `label`.
pub fn reachable_values(
    prog: &Program,
    backend: &Backend,
    opts: &ExploreOptions,
    (thread, label): (ThreadId, Label),
    x: Loc,
) -> Result<BTreeSet<Value>, ExploreError> {
    if prog.threads.get(thread).is_none_or(|c| label > c.terminal()) {
        return Err(ExploreError::UnknownLabel { thread, label });
    }
    let mut out = BTreeSet::new();
    walk(prog, backend, opts, |_, cfg, _| {
        if cfg.threads[thread].pc == label && cfg.is_idle(thread) {
            out.extend(cfg.mem.observable_values(thread, x));
        }
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin;

    fn r2_values(res: &ExplorationResult, reg: usize) -> BTreeSet<Value> {
        res.finals.iter().filter_map(|f| f[reg]).collect()
    }

    #[test]
    fn relaxed_message_passing_can_read_stale() {
        let p = builtin("mp-relaxed").unwrap();
        let res = explore(&p, &Backend::Plain, &ExploreOptions::default()).unwrap();
        assert_eq!(r2_values(&res, 1), [0, 5].into());
        assert!(res.holds);
        assert!(res.violations.is_empty());
        assert!(res.stats.exhausted > 0);
    }

    #[test]
    fn release_acquire_message_passing() {
        let p = builtin("mp-ra").unwrap();
        let res = explore(&p, &Backend::Plain, &ExploreOptions::default()).unwrap();
        assert_eq!(r2_values(&res, 1), [5].into());
        assert!(res.holds && res.counterexample.is_none());
    }

    #[test]
    fn memoisation_does_not_change_finals() {
        for id in ["mp-relaxed", "mp-ra"] {
            let p = builtin(id).unwrap();
            let on = explore(&p, &Backend::Plain, &ExploreOptions::default()).unwrap();
            let opts = ExploreOptions { memoize: false, ..Default::default() };
            let off = explore(&p, &Backend::Plain, &opts).unwrap();
            assert_eq!(on.finals, off.finals);
            assert!(off.stats.states >= on.stats.states);
        }
    }

    #[test]
    fn ceiling_is_an_error() {
        let p = builtin("mp-ra").unwrap();
        let opts = ExploreOptions { ceiling: 3, ..Default::default() };
        assert_eq!(explore(&p, &Backend::Plain, &opts), Err(ExploreError::Ceiling(3)));
    }

    #[test]
    fn transactions_need_a_backend() {
        let p = builtin("tx-mp").unwrap();
        assert_eq!(explore(&p, &Backend::Plain, &ExploreOptions::default()), Err(ExploreError::NoTransactions));
    }

    #[test]
    fn reachable_values_at_the_final_read() {
        let opts = ExploreOptions::default();
        let ra = builtin("mp-ra").unwrap();
        // t2's load of d sits at label 2.
        assert_eq!(reachable_values(&ra, &Backend::Plain, &opts, (1, 2), 0).unwrap(), [5].into());
        let rx = builtin("mp-relaxed").unwrap();
        assert_eq!(reachable_values(&rx, &Backend::Plain, &opts, (1, 2), 0).unwrap(), [0, 5].into());
        assert_eq!(reachable_values(&ra, &Backend::Plain, &opts, (1, 0), 1).unwrap().first(), Some(&0));
        assert!(reachable_values(&ra, &Backend::Plain, &opts, (1, 9), 0).is_err());
    }
}
