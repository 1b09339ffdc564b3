//! Serializable reports for every command, with a plain-text rendering.
//!
//! Traces are rendered to strings against the program, so a report can be
//! read without the program at hand and round-trips through JSON unchanged.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ratm_core::explorer::{ExplorationResult, Stats};
use ratm_core::invariants::InvariantViolation;
use ratm_core::lts::Step;
use ratm_core::outline::OutlineReport as CoreOutlineReport;
use ratm_core::program::Program;
use ratm_core::refinement::{RefinementReport as CoreRefinementReport, SimulationReport as CoreSimulationReport};
use ratm_core::rules::RuleReport;
use ratm_core::RegFile;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_holds(holds: bool) -> Verdict {
        if holds {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

/// Register name to value; `None` is an undefined register.
pub type Valuation = BTreeMap<String, Option<i64>>;

pub fn valuation(prog: &Program, regs: &RegFile) -> Valuation {
    prog.registers.iter().zip(regs).map(|((name, _), v)| (name.clone(), *v)).collect()
}

pub fn trace(prog: &Program, steps: &[Step]) -> Vec<String> {
    steps.iter().map(|s| s.describe(prog)).collect()
}

fn show_valuation(v: &Valuation) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|(r, val)| match val {
            Some(n) => format!("{r}={n}"),
            None => format!("{r}=⊥"),
        })
        .collect();
    parts.join(" ")
}

fn show_trace(out: &mut String, steps: &[String]) {
    for (i, s) in steps.iter().enumerate() {
        let _ = writeln!(out, "    {:>3}. {s}", i + 1);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LitmusReport {
    pub program: String,
    pub backend: String,
    pub verdict: Verdict,
    /// The `--expect` predicate, when it replaced the program's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expectation: Option<String>,
    pub finals: Vec<Valuation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample_trace: Option<Vec<String>>,
    pub stats: Stats,
    pub violations: Vec<InvariantViolation>,
}

impl LitmusReport {
    pub fn new(prog: &Program, result: &ExplorationResult, expectation: Option<String>) -> LitmusReport {
        LitmusReport {
            program: result.program.clone(),
            backend: result.backend.clone(),
            verdict: Verdict::from_holds(result.holds && result.violations.is_empty()),
            expectation,
            finals: result.finals.iter().map(|r| valuation(prog, r)).collect(),
            counterexample_trace: result.counterexample.as_deref().map(|t| trace(prog, t)),
            stats: result.stats,
            violations: result.violations.clone(),
        }
    }

    pub fn text(&self) -> String {
        let mut out = format!("litmus {} [{}]: {}\n", self.program, self.backend, self.verdict.label());
        if let Some(e) = &self.expectation {
            let _ = writeln!(out, "  expected: {e}");
        }
        let _ = writeln!(out, "  finals ({}):", self.finals.len());
        for f in &self.finals {
            let _ = writeln!(out, "    {}", show_valuation(f));
        }
        let s = &self.stats;
        let _ = writeln!(
            out,
            "  states {}, transitions {}, final configurations {}, budget-exhausted {}, stuck {}",
            s.states, s.transitions, s.finals, s.exhausted, s.stuck
        );
        if let Some(t) = &self.counterexample_trace {
            let _ = writeln!(out, "  counterexample:");
            show_trace(&mut out, t);
        }
        for v in &self.violations {
            let _ = writeln!(out, "  invariant violated ({:?}): {}", v.kind, v.detail);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlineCheck {
    /// `reachable` or `owicki-gries`.
    pub method: String,
    pub verdict: Verdict,
    pub states: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
}

impl OutlineCheck {
    pub fn new(method: &str, prog: &Program, report: &CoreOutlineReport) -> OutlineCheck {
        OutlineCheck {
            method: method.into(),
            verdict: Verdict::from_holds(report.holds),
            states: report.states,
            failure: report.failure.as_ref().map(|f| f.describe(prog)),
            trace: report.failure.as_ref().map(|f| trace(prog, &f.trace)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlineReport {
    pub program: String,
    pub verdict: Verdict,
    pub checks: Vec<OutlineCheck>,
}

impl OutlineReport {
    pub fn new(program: &str, checks: Vec<OutlineCheck>) -> OutlineReport {
        OutlineReport {
            program: program.into(),
            verdict: Verdict::from_holds(checks.iter().all(|c| c.verdict.passed())),
            checks,
        }
    }

    pub fn text(&self) -> String {
        let mut out = format!("outline {}: {}\n", self.program, self.verdict.label());
        for c in &self.checks {
            let _ = writeln!(out, "  {}: {} ({} states)", c.method, c.verdict.label(), c.states);
            if let Some(f) = &c.failure {
                let _ = writeln!(out, "    {f}");
            }
            if let Some(t) = &c.trace {
                show_trace(&mut out, t);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCounterexampleReport {
    pub scaffold: String,
    pub instance: String,
    pub pre: String,
    pub post: String,
    pub trace: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub rule: String,
    pub verdict: Verdict,
    /// Matching steps whose pre-state satisfied the precondition.
    pub exercised: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<RuleCounterexampleReport>,
}

impl RuleEntry {
    pub fn new(report: &RuleReport) -> RuleEntry {
        let counterexample = report.counterexample.as_ref().map(|c| {
            let rule = ratm_core::rules::find_rule(report.rule).expect("reported rules are catalogued");
            RuleCounterexampleReport {
                scaffold: c.program.name.clone(),
                instance: rule.describe_instance(&c.instance, &c.program),
                pre: c.pre.clone(),
                post: c.post.clone(),
                trace: trace(&c.program, &c.trace),
            }
        });
        RuleEntry {
            rule: report.rule.into(),
            verdict: Verdict::from_holds(report.holds),
            exercised: report.exercised,
            counterexample,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulesReport {
    pub verdict: Verdict,
    pub rules: Vec<RuleEntry>,
}

impl RulesReport {
    pub fn new(rules: Vec<RuleEntry>) -> RulesReport {
        RulesReport { verdict: Verdict::from_holds(rules.iter().all(|r| r.verdict.passed())), rules }
    }

    pub fn text(&self) -> String {
        let passed = self.rules.iter().filter(|r| r.verdict.passed()).count();
        let mut out = format!("rules: {} ({passed}/{} hold)\n", self.verdict.label(), self.rules.len());
        for r in &self.rules {
            let _ = writeln!(out, "  {:<22} {} exercised {}", r.rule, r.verdict.label(), r.exercised);
            if let Some(c) = &r.counterexample {
                let _ = writeln!(out, "    on {} with {}", c.scaffold, c.instance);
                let _ = writeln!(out, "    pre  {}", c.pre);
                let _ = writeln!(out, "    post {}", c.post);
                show_trace(&mut out, &c.trace);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctReport {
    pub conjunct: String,
    pub detail: String,
    pub trace: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub program: String,
    pub backend: String,
    pub verdict: Verdict,
    /// Related (concrete, abstract) pairs in the final relation.
    pub pairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<ConjunctReport>,
}

impl SimulationReport {
    pub fn new(prog: &Program, report: &CoreSimulationReport) -> SimulationReport {
        SimulationReport {
            program: report.program.clone(),
            backend: report.backend.clone(),
            verdict: Verdict::from_holds(report.holds),
            pairs: report.pairs,
            failure: report.failure.as_ref().map(|f| ConjunctReport {
                conjunct: f.conjunct.name().into(),
                detail: f.detail.clone(),
                trace: trace(prog, &f.trace),
            }),
        }
    }

    pub fn text(&self) -> String {
        let mut out = format!(
            "simulation {} [{}]: {} ({} related pairs)\n",
            self.program,
            self.backend,
            self.verdict.label(),
            self.pairs
        );
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "  conjunct {} fails: {}", f.conjunct, f.detail);
            show_trace(&mut out, &f.trace);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementFailureReport {
    pub detail: String,
    pub trace: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub program: String,
    pub backend: String,
    pub verdict: Verdict,
    pub states: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<RefinementFailureReport>,
}

impl RefinementReport {
    pub fn new(prog: &Program, report: &CoreRefinementReport) -> RefinementReport {
        RefinementReport {
            program: report.program.clone(),
            backend: report.backend.clone(),
            verdict: Verdict::from_holds(report.holds),
            states: report.states,
            failure: report
                .failure
                .as_ref()
                .map(|f| RefinementFailureReport { detail: f.detail.clone(), trace: trace(prog, &f.trace) }),
        }
    }

    pub fn text(&self) -> String {
        let mut out = format!(
            "refinement {} [{}]: {} ({} states)\n",
            self.program,
            self.backend,
            self.verdict.label(),
            self.states
        );
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "  {}", f.detail);
            show_trace(&mut out, &f.trace);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ratm_core::corpus::builtin;
    use ratm_core::explorer::{explore, ExploreOptions};
    use ratm_core::lts::Backend;

    #[test]
    fn undefined_registers_serialise_as_null() {
        let prog = builtin("mp-ra").unwrap();
        let v = valuation(&prog, &vec![Some(1), None]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"r1":1,"r2":null}"#);
    }

    #[test]
    fn litmus_report_has_the_documented_fields() {
        let prog = builtin("mp-relaxed").unwrap();
        let result = explore(&prog, &Backend::Plain, &ExploreOptions::default()).unwrap();
        let json = serde_json::to_value(LitmusReport::new(&prog, &result, None)).unwrap();
        for key in ["program", "backend", "finals", "verdict", "stats"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["verdict"], "pass");
        assert!(json.get("counterexample_trace").is_none());
    }
}
