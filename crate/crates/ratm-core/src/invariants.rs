//! Safety invariants checked on every explored state and transition.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::lts::{Configuration, TmState};
use crate::memory::ClientMemoryState;
use crate::tml::{TmlLabel, TmlLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InvariantKind {
    /// A thread view moved backwards in modification order.
    ViewMonotonicity,
    /// A covered write is not immediately followed by its covering update.
    CoveredAtomicity,
    /// The memory, sync-flag and view sequences differ in length.
    SequenceLengths,
    /// A transaction's view index moved backwards.
    TxViewMonotonicity,
    /// The parity of the lock counter disagrees with lock ownership.
    LockParity,
    /// Two threads believe they hold the lock.
    LockExclusivity,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvariantViolation {
    pub kind: InvariantKind,
    pub detail: String,
}

fn violation(kind: InvariantKind, detail: String) -> InvariantViolation {
    InvariantViolation { kind, detail }
}

/// Invariants of a single state.
pub fn check_state(cfg: &Configuration, layout: Option<TmlLayout>) -> Vec<InvariantViolation> {
    let mut out = covered_atomicity(&cfg.mem);
    match &cfg.tm {
        TmState::Spec(s) => {
            let (m, f, v) = (s.memories().len(), s.sync_flags().len(), s.views().len());
            if m != f || m != v {
                out.push(violation(InvariantKind::SequenceLengths, format!("|M| = {m}, |S| = {f}, |V| = {v}")));
            }
        }
        TmState::Tml(locals) => {
            let Some(layout) = layout else { return out };
            let last = cfg.mem.last_val(layout.glb);
            let holders = locals.iter().filter(|l| l.holds_lock).count();
            if holders > 1 {
                out.push(violation(InvariantKind::LockExclusivity, format!("{holders} threads hold the lock")));
            }
            if (holders == 1) != (last.rem_euclid(2) == 1) {
                out.push(violation(InvariantKind::LockParity, format!("glb = {last} with {holders} lock holders")));
            }
            // A thread spinning in TxBegin may hold an odd snapshot without
            // claiming the lock.
            let claimants = locals
                .iter()
                .filter(|l| !matches!(l.pc, TmlLabel::B3 | TmlLabel::B4))
                .filter(|l| l.loc.rem_euclid(2) == 1 && l.loc == last)
                .count();
            if claimants > 1 {
                out.push(violation(
                    InvariantKind::LockExclusivity,
                    format!("{claimants} threads have an odd snapshot equal to glb = {last}"),
                ));
            }
        }
        TmState::Plain => {}
    }
    out
}

fn covered_atomicity(mem: &ClientMemoryState) -> Vec<InvariantViolation> {
    let mut out = Vec::new();
    for c in mem.covered() {
        let mo = mem.mo(mem.loc(c));
        let next = mo.get(mem.position(c) + 1).copied();
        if next.is_none() || next != mem.covered_by(c) {
            out.push(violation(
                InvariantKind::CoveredAtomicity,
                format!("write {:?} is covered but not followed by its update", c),
            ));
        }
    }
    out
}

/// Invariants relating a state to its successor. Both must share write
/// identities, i.e. `after` is computed from `before` without renaming.
pub fn check_transition(before: &Configuration, after: &Configuration) -> Vec<InvariantViolation> {
    let mut out = Vec::new();
    for t in 0..before.mem.num_threads() {
        let (old, new) = (before.mem.tview(t), after.mem.tview(t));
        for (x, (w0, w1)) in old.iter().zip(new.iter()).enumerate() {
            if after.mem.tst_leq(w0, w1) != Ok(true) {
                out.push(violation(
                    InvariantKind::ViewMonotonicity,
                    format!("thread {t} location {x}: view moved from {:?} to {:?}", w0, w1),
                ));
            }
        }
    }
    if let (TmState::Spec(a), TmState::Spec(b)) = (&before.tm, &after.tm) {
        for t in 0..a.num_threads() {
            if b.txview(t) < a.txview(t) {
                out.push(violation(
                    InvariantKind::TxViewMonotonicity,
                    format!("thread {t}: txview {} -> {}", a.txview(t), b.txview(t)),
                ));
            }
        }
    }
    out
}
