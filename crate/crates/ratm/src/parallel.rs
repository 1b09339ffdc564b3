//! Level-synchronous breadth-first exploration with successor generation
//! fanned out over a rayon pool.
//!
//! Each level is expanded in parallel and merged in frontier order, so the
//! result does not depend on the number of workers. Traces come out as
//! shortest paths, which makes them differ from the depth-first explorer's;
//! everything else (finals, verdict, stats, violations up to order) agrees.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use ratm_core::explorer::{explore, ExplorationResult, ExploreError, ExploreOptions, Stats};
use ratm_core::invariants::{check_state, check_transition, InvariantViolation};
use ratm_core::lts::{enabled_steps, tml_layout, Backend, Configuration, Step};
use ratm_core::program::{Program, Quantifier};
use rayon::prelude::*;

/// Explores `prog` with `workers` threads. History recording and
/// unmemoised runs need per-path state and go to the sequential explorer.
pub fn explore_parallel(
    prog: &Program,
    backend: &Backend,
    opts: &ExploreOptions,
    workers: usize,
) -> Result<ExplorationResult, ExploreError> {
    if opts.record_history || !opts.memoize {
        return explore(prog, backend, opts);
    }
    prog.validate()?;
    if *backend == Backend::Plain && prog.has_transactions() {
        return Err(ExploreError::NoTransactions);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
    pool.install(|| bfs(prog, backend, opts))
}

struct Expanded {
    succ: Vec<(Step, Configuration)>,
    violations: Vec<InvariantViolation>,
}

fn bfs(prog: &Program, backend: &Backend, opts: &ExploreOptions) -> Result<ExplorationResult, ExploreError> {
    let layout = matches!(backend, Backend::TmlRa(_)).then(|| tml_layout(prog));
    let post = &prog.postcondition;

    // Parent link of every configuration, by discovery order.
    let mut parents: Vec<Option<(usize, Step)>> = vec![None];
    let root = Configuration::initial(prog, backend, false).canonical();
    let mut seen: HashSet<Configuration> = HashSet::from([root.clone()]);
    let mut frontier: Vec<(usize, Configuration)> = vec![(0, root)];

    let mut stats = Stats::default();
    let mut finals = BTreeSet::new();
    let mut witnesses = BTreeMap::new();
    let mut violations = Vec::new();
    let mut counterexample = None;
    let mut satisfied = false;

    let trace = |parents: &[Option<(usize, Step)>], mut at: usize| {
        let mut steps = Vec::new();
        while let Some((up, step)) = &parents[at] {
            steps.push(step.clone());
            at = *up;
        }
        steps.reverse();
        steps
    };

    while !frontier.is_empty() {
        stats.states += frontier.len();
        if stats.states > opts.ceiling {
            return Err(ExploreError::Ceiling(opts.ceiling));
        }
        let expanded: Vec<Expanded> = frontier
            .par_iter()
            .map(|(_, cfg)| {
                let raw = enabled_steps(prog, backend, &opts.step, cfg);
                let mut violations = Vec::new();
                if opts.check_invariants {
                    violations.extend(check_state(cfg, layout));
                    // Write ids only line up before renaming.
                    for (_, next) in &raw {
                        violations.extend(check_transition(cfg, next));
                    }
                }
                let succ = raw.into_iter().map(|(step, next)| (step, next.canonical())).collect();
                Expanded { succ, violations }
            })
            .collect();

        let mut next_frontier = Vec::new();
        for ((idx, cfg), exp) in frontier.into_iter().zip(expanded) {
            violations.extend(exp.violations);
            stats.transitions += exp.succ.len();
            if exp.succ.is_empty() {
                if cfg.exhausted {
                    stats.exhausted += 1;
                } else if cfg.is_final(prog) {
                    stats.finals += 1;
                    let ok = post.predicate.eval_post(&cfg.regs);
                    satisfied |= ok;
                    if !ok && post.quantifier == Quantifier::Forall && counterexample.is_none() {
                        counterexample = Some(trace(&parents, idx));
                    }
                    if opts.witnesses && !witnesses.contains_key(&cfg.regs) {
                        witnesses.insert(cfg.regs.clone(), trace(&parents, idx));
                    }
                    finals.insert(cfg.regs);
                } else {
                    stats.stuck += 1;
                }
                continue;
            }
            for (step, next) in exp.succ {
                if !seen.insert(next.clone()) {
                    continue;
                }
                let id = parents.len();
                parents.push(Some((idx, step)));
                next_frontier.push((id, next));
            }
        }
        frontier = next_frontier;
    }

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
        histories: BTreeSet::new(),
        violations,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ratm_core::corpus::builtin;

    #[test]
    fn worker_count_does_not_change_the_result() {
        let prog = builtin("tx-relaxed").unwrap();
        let opts = ExploreOptions { witnesses: true, ..ExploreOptions::default() };
        let one = explore_parallel(&prog, &Backend::Tms2Ra, &opts, 1).unwrap();
        let four = explore_parallel(&prog, &Backend::Tms2Ra, &opts, 4).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn ceiling_is_reported() {
        let prog = builtin("tx-mp").unwrap();
        let opts = ExploreOptions { ceiling: 10, ..ExploreOptions::default() };
        assert_eq!(explore_parallel(&prog, &Backend::Tms2Ra, &opts, 2), Err(ExploreError::Ceiling(10)));
    }

    #[test]
    fn counterexamples_are_shortest_traces() {
        let prog = builtin("mp-relaxed").unwrap();
        let seq = explore(&prog, &Backend::Plain, &ExploreOptions::default()).unwrap();
        let par = explore_parallel(&prog, &Backend::Plain, &ExploreOptions::default(), 2).unwrap();
        if let (Some(a), Some(b)) = (&seq.counterexample, &par.counterexample) {
            assert!(b.len() <= a.len());
        }
        assert_eq!(seq.counterexample.is_some(), par.counterexample.is_some());
    }
}
