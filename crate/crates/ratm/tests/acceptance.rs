//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 3 and 5 are not met by this implementation. Their lines print
//! FAIL with the measured numbers, and the facts behind the failure are
//! asserted so a change in either direction is noticed. Every other
//! criterion is asserted outright.

mod support;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ratm::dsl::{parse_outline, parse_postcondition};
use ratm_core::corpus::{builtin, builtin_corpus, harness_programs};
use ratm_core::explorer::{explore, ExplorationResult, ExploreOptions};
use ratm_core::lts::Backend;
use ratm_core::outline::{check_og_validity, check_reachable_annotations, OutlineOptions};
use ratm_core::program::{BoolExpr, Program};
use ratm_core::refinement::{check_forward_simulation, check_program_refinement};
use ratm_core::rules::{catalogue, check_rule, check_rules, falsified_rule, RuleBounds};
use ratm_core::tml::Mutation;
use ratm_core::RegFile;
use support::serial::{random_programs, Tally};

/// Writes past the test harness's output capture.
fn line(n: u8, pass: bool, summary: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n}: {verdict}  {summary}");
    let _ = out.flush();
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn reg(prog: &Program, name: &str) -> usize {
    prog.registers.iter().position(|(r, _)| r == name).unwrap_or_else(|| panic!("{} has no register {name}", prog.name))
}

fn predicate(prog: &Program, src: &str) -> BoolExpr {
    parse_postcondition(src, prog).unwrap().predicate
}

/// Runs every exploration with invariant checking on and remembers the
/// violations for criterion 8.
#[derive(Default)]
struct Runs {
    explorations: usize,
    violations: usize,
    /// Finals per (program, backend name), for the inclusion check.
    finals: HashMap<(String, String), BTreeSet<RegFile>>,
}

impl Runs {
    fn explore(&mut self, prog: &Program, backend: &Backend, opts: &ExploreOptions) -> ExplorationResult {
        assert!(opts.check_invariants);
        let result = explore(prog, backend, opts).unwrap();
        self.explorations += 1;
        self.violations += result.violations.len();
        self.finals
            .entry((prog.name.clone(), result.backend.clone()))
            .or_default()
            .extend(result.finals.iter().cloned());
        result
    }
}

fn criterion_1(runs: &mut Runs) {
    let opts = ExploreOptions::default();
    let mut parts = Vec::new();
    for (id, expected) in [("mp-relaxed", vec![0, 5]), ("mp-ra", vec![5])] {
        let prog = builtin(id).unwrap();
        let r2 = reg(&prog, "r2");
        let start = Instant::now();
        let result = runs.explore(&prog, &Backend::Plain, &opts);
        let took = start.elapsed();
        let got: BTreeSet<i64> = result.finals.iter().map(|f| f[r2].unwrap()).collect();
        assert_eq!(got, expected.iter().copied().collect(), "{id}");
        assert!(took < Duration::from_secs(1), "{id} took {}", secs(took));
        parts.push(format!("{id} r2 in {got:?} ({})", secs(took)));
    }
    line(1, true, &parts.join(", "));
}

struct Litmus {
    holds: bool,
    took: Duration,
    /// tx-relaxed only: the reader saw the commit but still reads d1 = 0.
    stale_after_commit: bool,
}

/// The transactional litmus property of one program under one backend.
fn litmus_property(runs: &mut Runs, prog: &Program, backend: &Backend) -> Litmus {
    let opts = ExploreOptions { witnesses: true, ..ExploreOptions::default() };
    let start = Instant::now();
    let result = runs.explore(prog, backend, &opts);
    let took = start.elapsed();
    let all = |src: &str| {
        let p = predicate(prog, src);
        !result.finals.is_empty() && result.finals.iter().all(|f| p.eval_post(f))
    };
    let witness = |src: &str| {
        let p = predicate(prog, src);
        result.witnesses.iter().any(|(f, trace)| p.eval_post(f) && !trace.is_empty())
    };
    let mut stale_after_commit = false;
    let holds = match prog.name.as_str() {
        "tx-mp" => all("r2 = 5"),
        "tx-relaxed" => {
            stale_after_commit = witness("r1 = 1 && r3 = 0");
            all("r1 = 1 => r2 = 10 && r3 in {0, 5}") && witness("r3 = 0")
        }
        "tx-chain" => all("r3 = 2 => s1 = 5 && s2 = 10"),
        other => panic!("no litmus property for {other}"),
    };
    Litmus { holds, took, stale_after_commit }
}

const TX_PROGRAMS: [&str; 3] = ["tx-mp", "tx-relaxed", "tx-chain"];

fn criterion_2(runs: &mut Runs) {
    let mut parts = Vec::new();
    for id in TX_PROGRAMS {
        let prog = builtin(id).unwrap();
        for backend in [Backend::Tms2Ra, Backend::tml()] {
            let run = litmus_property(runs, &prog, &backend);
            assert!(run.holds, "{id} under {}", backend.name());
            assert!(run.took < Duration::from_secs(60));
            parts.push(format!("{id}/{} {}", backend.name(), secs(run.took)));
            if id == "tx-relaxed" {
                // The lock synchronises on every access, so only the
                // specification lets a reader that saw the commit miss d1.
                assert_eq!(run.stale_after_commit, backend == Backend::Tms2Ra);
            }
        }
    }
    parts.push("r1=1 with r3=0 reachable under tms2-ra only".into());
    line(2, true, &parts.join(", "));
}

fn criterion_3(runs: &mut Runs) {
    let start = Instant::now();
    let mut corpus = Tally::default();
    for prog in builtin_corpus().iter().filter(|p| p.has_transactions()) {
        corpus.add(prog);
    }
    let mut random = Tally::default();
    let programs = random_programs(20);
    let mut random_failing = 0;
    for prog in &programs {
        let before = random;
        random.add(prog);
        assert!(random.histories > before.histories, "{} has no complete history", prog.name);
        random_failing += usize::from(random.real_time - before.real_time < random.histories - before.histories);
    }
    runs.explorations += 3 + programs.len();
    runs.violations += corpus.violations + random.violations;

    let total = corpus.histories + random.histories;
    let strict = corpus.real_time + random.real_time;
    let pass = strict == total;
    // Why it fails: non-acquiring transactions may begin from an older
    // visible snapshot. Ordering only each thread's own transactions, every
    // history serializes.
    assert_eq!(corpus.per_thread, corpus.histories);
    assert_eq!(random.per_thread, random.histories);
    line(
        3,
        pass,
        &format!(
            "{strict}/{total} histories strictly serializable (corpus {}/{}, random {}/{} with {random_failing}/20 programs affected); \
             {}/{total} serializable in per-thread order ({})",
            corpus.real_time,
            corpus.histories,
            random.real_time,
            random.histories,
            corpus.per_thread + random.per_thread,
            secs(start.elapsed()),
        ),
    );
}

fn simulation_fails(prog: &Program, mutations: &BTreeSet<Mutation>) -> bool {
    let opts = ExploreOptions::default();
    !check_forward_simulation(prog, mutations, &opts).unwrap().holds
        || !check_program_refinement(prog, mutations, &opts).unwrap().holds
}

fn criterion_4() {
    let start = Instant::now();
    let opts = ExploreOptions::default();
    let none = BTreeSet::new();
    for prog in builtin_corpus() {
        let sim = check_forward_simulation(&prog, &none, &opts).unwrap();
        assert!(sim.holds, "{}: {:?}", prog.name, sim.failure);
        let refines = check_program_refinement(&prog, &none, &opts).unwrap();
        assert!(refines.holds, "{}: {:?}", prog.name, refines.failure);
    }
    let took = start.elapsed();
    assert!(took < Duration::from_secs(300));
    line(4, true, &format!("simulation and refinement hold on all 5 corpus programs ({})", secs(took)));
}

fn criterion_5(runs: &mut Runs) {
    let start = Instant::now();
    let mut detected = Vec::new();
    let mut missed = Vec::new();
    let mut by_harness = 0;
    for m in Mutation::ALL {
        let set = BTreeSet::from([m]);
        let backend = Backend::TmlRa(set.clone());
        let litmus = TX_PROGRAMS.iter().any(|id| !litmus_property(runs, &builtin(id).unwrap(), &backend).holds);
        let simulation = builtin_corpus().iter().any(|p| simulation_fails(p, &set));
        if litmus || simulation {
            detected.push(m.name());
        } else {
            missed.push(m.name());
        }
        let harness = harness_programs().iter().any(|p| {
            let result = runs.explore(p, &backend, &ExploreOptions::default());
            !result.holds || simulation_fails(p, &set)
        });
        by_harness += usize::from(harness);
    }
    // The two lock mutations the corpus cannot reach are caught by the
    // extra harness programs.
    assert_eq!(detected, ["drop-e2-release", "drop-b3-acquire"]);
    assert_eq!(by_harness, 4);
    line(
        5,
        detected.len() == Mutation::ALL.len(),
        &format!(
            "{}/4 mutations detected on the corpus ({}); missed {}; harness programs detect {by_harness}/4 ({})",
            detected.len(),
            detected.join(", "),
            missed.join(", "),
            secs(start.elapsed()),
        ),
    );
}

fn criterion_6() {
    let start = Instant::now();
    let bounds = RuleBounds::default();
    let rules = catalogue();
    let reports = check_rules(&rules, &bounds).unwrap();
    for r in &reports {
        assert!(r.holds, "{} fails: {:?}", r.rule, r.counterexample);
        assert!(r.exercised > 0, "{} never exercised", r.rule);
    }
    let falsified = check_rule(&falsified_rule(), &bounds).unwrap();
    assert!(!falsified.holds && falsified.counterexample.is_some());
    let least = reports.iter().map(|r| r.exercised).min().unwrap();
    line(
        6,
        true,
        &format!(
            "{} rules hold (each exercised at least {least} times); {} refuted ({})",
            reports.len(),
            falsified.rule,
            secs(start.elapsed())
        ),
    );
}

fn criterion_7() {
    let opts = OutlineOptions::default();
    let check = |name: &str| {
        let path = format!("{}/fixtures/outlines/{name}.ann", env!("CARGO_MANIFEST_DIR"));
        let (prog, outline) = parse_outline(&std::fs::read_to_string(path).unwrap()).unwrap();
        let reach = check_reachable_annotations(&prog, &outline, &opts).unwrap().holds;
        let og = check_og_validity(&prog, &outline, &opts).unwrap().holds;
        (reach, og)
    };
    for id in TX_PROGRAMS {
        assert_eq!(check(id), (true, true), "{id}");
        assert_eq!(check(&format!("{id}.weak")), (false, false), "{id}.weak");
    }
    line(7, true, "3 outlines valid by both checks; 3 weakened variants refuted by both");
}

fn criterion_8(runs: &Runs) {
    assert_eq!(runs.violations, 0);
    let mut checked = 0;
    for id in TX_PROGRAMS {
        let key = |b: &Backend| (id.to_string(), b.name());
        let concrete = &runs.finals[&key(&Backend::tml())];
        let abstract_ = &runs.finals[&key(&Backend::Tms2Ra)];
        assert!(concrete.is_subset(abstract_), "{id}");
        checked += 1;
    }
    line(
        8,
        true,
        &format!(
            "0 invariant violations over {} explorations; TML-RA finals within TMS2-RA finals on {checked} programs",
            runs.explorations
        ),
    );
}

fn main() -> ExitCode {
    // Test-harness flags such as --nocapture are ignored.
    let mut runs = Runs::default();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        criterion_1(&mut runs);
        criterion_2(&mut runs);
        criterion_3(&mut runs);
        criterion_4();
        criterion_5(&mut runs);
        criterion_6();
        criterion_7();
        criterion_8(&runs);
    }));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(_) => ExitCode::FAILURE,
    }
}
