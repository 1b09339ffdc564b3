//! Refinement between the TML-RA lock and the TMS2-RA specification:
//! client-state refinement, a simulation relation with an exhaustive
//! forward-simulation check, and a direct trace-refinement search.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::explorer::{ExploreError, ExploreOptions};
use crate::lts::{enabled_steps, thread_steps, tml_layout, Backend, Configuration, Step, TmState};
use crate::memory::{ClientMemoryState, WriteId};
use crate::program::Program;
use crate::tml::Mutation;
use crate::{Loc, ThreadId, Value};

/// Write count encoded by a lock counter value.
pub fn wc(n: Value) -> Value {
    n.div_euclid(2)
}

/// The write of `other` corresponding to `w` of `mem`, matched by location,
/// value and rank among equal-valued writes.
fn counterpart(mem: &ClientMemoryState, w: WriteId, other: &ClientMemoryState) -> Option<WriteId> {
    other.find_by_rank(mem.loc(w), mem.val(w), mem.value_rank(w))
}

/// Every write `thread` can observe at `x` in `concrete` is observable in
/// `abstract_`.
pub fn observable_included(
    concrete: &ClientMemoryState,
    abstract_: &ClientMemoryState,
    thread: ThreadId,
    x: Loc,
) -> bool {
    concrete
        .observable_writes(thread, x)
        .iter()
        .all(|w| counterpart(concrete, *w, abstract_).is_some_and(|a| abstract_.is_observable(thread, x, a)))
}

/// Client-state refinement: equal local state and, on the first
/// `client_locs` locations, observable-write inclusion for every thread.
pub fn state_refines(concrete: &Configuration, abstract_: &Configuration, client_locs: usize) -> bool {
    concrete.local_state() == abstract_.local_state()
        && (0..concrete.mem.num_threads())
            .all(|t| (0..client_locs).all(|x| observable_included(&concrete.mem, &abstract_.mem, t, x)))
}

/// A client trace element: local state and client memory.
pub type ClientTrace = Vec<Configuration>;

/// Collapse consecutive elements with equal local state and equal client
/// memory.
pub fn remove_stutter(trace: &[Configuration], client_locs: usize) -> ClientTrace {
    let mut out: ClientTrace = Vec::new();
    for c in trace {
        let same = out.last().is_some_and(|p| {
            p.local_state() == c.local_state() && state_refines(p, c, client_locs) && state_refines(c, p, client_locs)
        });
        if !same {
            out.push(c.clone());
        }
    }
    out
}

/// Pointwise refinement of equal-length traces.
pub fn trace_refines(concrete: &[Configuration], abstract_: &[Configuration], client_locs: usize) -> bool {
    concrete.len() == abstract_.len() && concrete.iter().zip(abstract_).all(|(c, a)| state_refines(c, a, client_locs))
}

/// Conjuncts of the simulation relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Conjunct {
    /// Program counters, loop counters and registers agree.
    LocalState,
    /// Client locations carry the same writes in the same order.
    ClientWrites,
    /// Abstract thread views are no later than concrete ones.
    ClientViews,
    /// The lock counter encodes the number of committed writers.
    WriteCount,
    /// Transactional locations hold the last snapshot or a pending write.
    LastValue,
    /// A live transaction began no later than its snapshot and read from it.
    BeginIndex,
    /// An even snapshot means no pending writes.
    EvenNoWrites,
    /// A transaction that wrote has pending writes.
    HasWritten,
    /// A transaction that has not read has an empty read set.
    HasRead,
    /// Pending writes are the last values in memory.
    WriteSetValues,
    /// Observable lock values map to visible snapshots.
    VisibleSnapshots,
    /// Synchronised snapshots are covered by the view of the lock.
    SeenIndices,
    /// The lock-side relation survives advancing a thread view.
    ViewStability,
}

impl Conjunct {
    pub fn name(self) -> &'static str {
        match self {
            Conjunct::LocalState => "local-state",
            Conjunct::ClientWrites => "client-writes",
            Conjunct::ClientViews => "client-views",
            Conjunct::WriteCount => "write-count",
            Conjunct::LastValue => "last-value",
            Conjunct::BeginIndex => "begin-index",
            Conjunct::EvenNoWrites => "even-no-writes",
            Conjunct::HasWritten => "has-written",
            Conjunct::HasRead => "has-read",
            Conjunct::WriteSetValues => "write-set-values",
            Conjunct::VisibleSnapshots => "visible-snapshots",
            Conjunct::SeenIndices => "seen-indices",
            Conjunct::ViewStability => "view-stability",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctFailure {
    pub conjunct: Conjunct,
    pub detail: String,
}

fn fail(conjunct: Conjunct, detail: String) -> Result<(), ConjunctFailure> {
    Err(ConjunctFailure { conjunct, detail })
}

/// The client-observation half of the relation.
pub fn client_relation(
    prog: &Program,
    abstract_: &Configuration,
    concrete: &Configuration,
) -> Result<(), ConjunctFailure> {
    if abstract_.local_state() != concrete.local_state() {
        return fail(Conjunct::LocalState, "local states differ".into());
    }
    let (ma, mc) = (&abstract_.mem, &concrete.mem);
    for x in 0..prog.locations.len() {
        let vals = |m: &ClientMemoryState| -> Vec<(Value, bool)> {
            m.mo(x).iter().map(|w| (m.val(*w), m.is_released(*w))).collect()
        };
        if vals(ma) != vals(mc) {
            return fail(Conjunct::ClientWrites, format!("location {} has different writes", prog.locations[x]));
        }
        for t in 0..prog.threads.len() {
            let a = ma.tview(t).get(x);
            let ok = counterpart(ma, a, mc).is_some_and(|c| mc.tst_leq(c, mc.tview(t).get(x)) == Ok(true));
            if !ok {
                return fail(
                    Conjunct::ClientViews,
                    format!("thread {} sees an older write of {} concretely", prog.threads[t].name, prog.locations[x]),
                );
            }
        }
    }
    Ok(())
}

/// The lock-side half of the relation.
pub fn lock_relation(
    prog: &Program,
    abstract_: &Configuration,
    concrete: &Configuration,
) -> Result<(), ConjunctFailure> {
    let (TmState::Spec(spec), TmState::Tml(locals)) = (&abstract_.tm, &concrete.tm) else {
        return fail(Conjunct::LocalState, "expected a specification and a lock state".into());
    };
    let layout = tml_layout(prog);
    let mem = &concrete.mem;
    let glb = mem.last_val(layout.glb);
    let last_idx = spec.last_index() as Value;
    if wc(glb) != last_idx {
        return fail(Conjunct::WriteCount, format!("glb = {glb} but the last snapshot index is {last_idx}"));
    }
    let last = spec.last_memory();
    for (l, name) in prog.tx_locations.iter().enumerate() {
        let v = mem.last_val(layout.tx_loc(l));
        let pending = (0..prog.threads.len()).filter_map(|t| spec.txn(t)).any(|txn| txn.wr_set.get(&l) == Some(&v));
        if v != last[l] && !pending {
            return fail(Conjunct::LastValue, format!("{name} = {v} is neither committed nor pending"));
        }
    }
    for (t, ls) in locals.iter().enumerate() {
        let name = &prog.threads[t].name;
        let glb_view = mem.val(mem.tview(t).get(layout.glb));
        let visible = spec.visible_memories(t);
        for w in mem.observable_writes(t, layout.glb) {
            let idx = wc(mem.val(*w));
            if idx < 0 || !visible.contains(&(idx as usize)) {
                return fail(
                    Conjunct::VisibleSnapshots,
                    format!("{name} can observe glb = {} outside its visible snapshots", mem.val(*w)),
                );
            }
        }
        let Some(txn) = spec.txn(t) else { continue };
        let snap = wc(ls.loc);
        let consistent = usize::try_from(snap)
            .ok()
            .and_then(|s| spec.memories().get(s))
            .is_some_and(|m| txn.rd_set.iter().all(|(x, v)| m[*x] == *v));
        if (txn.begin_idx as Value) > snap || !consistent {
            return fail(
                Conjunct::BeginIndex,
                format!("{name}: begin index {} or read set against snapshot {snap}", txn.begin_idx),
            );
        }
        if ls.loc.rem_euclid(2) == 0 && !txn.wr_set.is_empty() {
            return fail(Conjunct::EvenNoWrites, format!("{name} has writes with even loc"));
        }
        if ls.has_written && txn.wr_set.is_empty() {
            return fail(Conjunct::HasWritten, format!("{name} wrote but has no pending writes"));
        }
        if !ls.has_read && !txn.rd_set.is_empty() {
            return fail(Conjunct::HasRead, format!("{name} has reads before its first read"));
        }
        for (l, v) in &txn.wr_set {
            if mem.last_val(layout.tx_loc(*l)) != *v {
                return fail(
                    Conjunct::WriteSetValues,
                    format!("{name}: pending {} = {v} is not in memory", prog.tx_locations[*l]),
                );
            }
        }
        if let Some(i) = txn.seen_idxs.iter().find(|i| (**i as Value) > wc(glb_view)) {
            return fail(
                Conjunct::SeenIndices,
                format!("{name} synchronised with snapshot {i} but sees glb = {glb_view}"),
            );
        }
    }
    Ok(())
}

/// The full simulation relation.
pub fn simulation_holds(
    prog: &Program,
    abstract_: &Configuration,
    concrete: &Configuration,
) -> Result<(), ConjunctFailure> {
    client_relation(prog, abstract_, concrete)?;
    lock_relation(prog, abstract_, concrete)
}

/// Advance each thread view of the concrete state to every later write and
/// re-check the lock-side relation.
fn view_stability(prog: &Program, abstract_: &Configuration, concrete: &Configuration) -> Result<(), ConjunctFailure> {
    let mem = &concrete.mem;
    for t in 0..mem.num_threads() {
        for x in 0..mem.num_locs() {
            for w in mem.observable_writes(t, x).iter().skip(1) {
                let moved = Configuration { mem: mem.advance_view(t, *w), ..concrete.clone() };
                if let Err(e) = lock_relation(prog, abstract_, &moved) {
                    return fail(
                        Conjunct::ViewStability,
                        format!("advancing thread {t} at location {x}: {}", e.detail),
                    );
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationFailure {
    /// Concrete steps from the initial state; the last one has no matching
    /// abstract step.
    pub trace: Vec<Step>,
    pub conjunct: Conjunct,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationReport {
    pub program: String,
    pub backend: String,
    pub holds: bool,
    /// Related (concrete, abstract) pairs explored.
    pub pairs: usize,
    pub failure: Option<SimulationFailure>,
}

struct Node {
    concrete: Configuration,
    abstract_: Configuration,
    /// Per concrete step, the related successor pairs, and why the first
    /// candidate was rejected.
    obligations: Vec<(Step, Vec<usize>, Option<ConjunctFailure>)>,
    /// The pair fails view stability.
    unstable: Option<ConjunctFailure>,
}

fn abstract_options(opts: &ExploreOptions) -> crate::lts::StepOptions {
    crate::lts::StepOptions { abort_branches: true, ..opts.step }
}

/// Check that the simulation relation is a forward simulation on every
/// execution of `prog` over the lock with the given mutations. Each
/// concrete step is matched by a stutter or by one step of the same
/// thread in the specification; a pair is accepted when every concrete
/// step has some matching pair that is itself accepted.
pub fn check_forward_simulation(
    prog: &Program,
    mutations: &BTreeSet<Mutation>,
    opts: &ExploreOptions,
) -> Result<SimulationReport, ExploreError> {
    prog.validate()?;
    let concrete_backend = Backend::TmlRa(mutations.clone());
    let aopts = abstract_options(opts);
    let mut index: HashMap<(Configuration, Configuration), usize> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut parent: Vec<Option<(usize, Step)>> = Vec::new();

    let c0 = Configuration::initial(prog, &concrete_backend, false).canonical();
    let a0 = Configuration::initial(prog, &Backend::Tms2Ra, false).canonical();
    let report = |holds, pairs, failure| SimulationReport {
        program: prog.name.clone(),
        backend: concrete_backend.name(),
        holds,
        pairs,
        failure,
    };
    if let Err(e) = simulation_holds(prog, &a0, &c0) {
        return Ok(report(
            false,
            0,
            Some(SimulationFailure { trace: Vec::new(), conjunct: e.conjunct, detail: e.detail }),
        ));
    }

    let mut intern = |c: Configuration,
                      a: Configuration,
                      from: Option<(usize, Step)>,
                      nodes: &mut Vec<Node>,
                      parent: &mut Vec<Option<(usize, Step)>>,
                      work: &mut Vec<usize>|
     -> Result<usize, ExploreError> {
        let key = (c, a);
        if let Some(id) = index.get(&key) {
            return Ok(*id);
        }
        if nodes.len() >= opts.ceiling {
            return Err(ExploreError::Ceiling(opts.ceiling));
        }
        let id = nodes.len();
        nodes.push(Node { concrete: key.0.clone(), abstract_: key.1.clone(), obligations: Vec::new(), unstable: None });
        parent.push(from);
        index.insert(key, id);
        work.push(id);
        Ok(id)
    };

    let mut work = Vec::new();
    intern(c0, a0, None, &mut nodes, &mut parent, &mut work)?;
    while let Some(id) = work.pop() {
        let (c, a) = (nodes[id].concrete.clone(), nodes[id].abstract_.clone());
        nodes[id].unstable = view_stability(prog, &a, &c).err();
        for (step, c2) in enabled_steps(prog, &concrete_backend, &opts.step, &c) {
            let mut first_err = None;
            let mut cands = Vec::new();
            let mut try_pair = |a2: &Configuration| match simulation_holds(prog, a2, &c2) {
                Ok(()) => Some((c2.canonical(), a2.canonical())),
                Err(e) => {
                    // Prefer a reason beyond a mismatched local state.
                    if first_err.as_ref().is_none_or(|f: &ConjunctFailure| f.conjunct == Conjunct::LocalState) {
                        first_err = Some(e);
                    }
                    None
                }
            };
            let mut pairs = Vec::new();
            pairs.extend(try_pair(&a));
            for (_, a2) in thread_steps(prog, &Backend::Tms2Ra, &aopts, &a, step.thread) {
                pairs.extend(try_pair(&a2));
            }
            for (c2k, a2k) in pairs {
                let from = Some((id, step.clone()));
                let n = intern(c2k, a2k, from, &mut nodes, &mut parent, &mut work)?;
                if !cands.contains(&n) {
                    cands.push(n);
                }
            }
            let why = cands.is_empty().then(|| first_err.expect("stutter candidate tried"));
            nodes[id].obligations.push((step, cands, why));
        }
    }

    // Greatest fixpoint: discard pairs with an unmatched concrete step.
    let n = nodes.len();
    let mut alive: Vec<Vec<usize>> =
        nodes.iter().map(|nd| nd.obligations.iter().map(|o| o.1.len()).collect()).collect();
    let mut users: Vec<Vec<(usize, usize)>> = alloc::vec![Vec::new(); n];
    for (i, nd) in nodes.iter().enumerate() {
        for (k, (_, cands, _)) in nd.obligations.iter().enumerate() {
            for m in cands {
                users[*m].push((i, k));
            }
        }
    }
    let mut bad_at: Vec<Option<usize>> = alloc::vec![None; n];
    let mut order = 0;
    let mut queue: Vec<usize> = Vec::new();
    for (i, nd) in nodes.iter().enumerate() {
        if nd.unstable.is_some() || alive[i].contains(&0) {
            bad_at[i] = Some(order);
            order += 1;
            queue.push(i);
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let m = queue[head];
        head += 1;
        for (i, k) in users[m].clone() {
            alive[i][k] -= 1;
            if alive[i][k] == 0 && bad_at[i].is_none() {
                bad_at[i] = Some(order);
                order += 1;
                queue.push(i);
            }
        }
    }
    if bad_at[0].is_none() {
        return Ok(report(true, n, None));
    }

    // Explain: follow pairs in the order they were discarded, which ends
    // at a pair with a directly failing obligation.
    let mut at = 0;
    let mut trace = Vec::new();
    let failure = loop {
        let nd = &nodes[at];
        if let Some(e) = &nd.unstable {
            break SimulationFailure { trace, conjunct: e.conjunct, detail: e.detail.clone() };
        }
        let mine = bad_at[at].expect("discarded");
        let earlier = |m: &usize| *m != at && bad_at[*m].is_some_and(|b| b < mine);
        let (step, cands, why) = nd
            .obligations
            .iter()
            .find(|(_, c, _)| c.iter().all(|m| *m == at || earlier(m)) && c.iter().any(earlier) || c.is_empty())
            .expect("an unmatched obligation");
        trace.push(step.clone());
        let next = cands.iter().copied().filter(earlier).min_by_key(|m| bad_at[*m]);
        match (why, next) {
            (Some(e), _) => {
                let detail = if e.conjunct == Conjunct::LocalState {
                    format!("no specification step matches {}", step.describe(prog))
                } else {
                    e.detail.clone()
                };
                break SimulationFailure { trace, conjunct: e.conjunct, detail };
            }
            (None, Some(m)) => at = m,
            (None, None) => unreachable!("empty obligations carry a reason"),
        }
    };
    Ok(report(false, n, Some(failure)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementFailure {
    pub trace: Vec<Step>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementReport {
    pub program: String,
    pub backend: String,
    pub holds: bool,
    /// (concrete state, abstract frontier) pairs explored.
    pub states: usize,
    pub failure: Option<RefinementFailure>,
}

/// Search, for every concrete client trace, for a specification trace
/// that refines it pointwise. The abstract side is tracked as the set of
/// specification configurations that can stand opposite the current
/// concrete state; a step that leaves the client's local state unchanged
/// is a stutter.
pub fn check_program_refinement(
    prog: &Program,
    mutations: &BTreeSet<Mutation>,
    opts: &ExploreOptions,
) -> Result<RefinementReport, ExploreError> {
    prog.validate()?;
    let concrete_backend = Backend::TmlRa(mutations.clone());
    let aopts = abstract_options(opts);
    let locs = prog.locations.len();
    let refines = |c: &Configuration, a: &Configuration| state_refines(c, a, locs);

    let close = |frontier: BTreeSet<Configuration>| -> BTreeSet<Configuration> {
        let mut out = frontier.clone();
        let mut todo: Vec<Configuration> = frontier.into_iter().collect();
        while let Some(a) = todo.pop() {
            for (_, a2) in enabled_steps(prog, &Backend::Tms2Ra, &aopts, &a) {
                if a2.local_state() == a.local_state() {
                    let k = a2.canonical();
                    if out.insert(k.clone()) {
                        todo.push(k);
                    }
                }
            }
        }
        out
    };

    let c0 = Configuration::initial(prog, &concrete_backend, false).canonical();
    let a0 = Configuration::initial(prog, &Backend::Tms2Ra, false).canonical();
    let f0: BTreeSet<Configuration> = close([a0].into()).into_iter().filter(|a| refines(&c0, a)).collect();
    let report = |holds, states, failure| RefinementReport {
        program: prog.name.clone(),
        backend: concrete_backend.name(),
        holds,
        states,
        failure,
    };
    if f0.is_empty() {
        return Ok(report(
            false,
            0,
            Some(RefinementFailure { trace: Vec::new(), detail: "initial states differ".into() }),
        ));
    }

    let mut seen: HashMap<(Configuration, BTreeSet<Configuration>), ()> = HashMap::new();
    let mut stack: Vec<(Configuration, BTreeSet<Configuration>, Vec<Step>)> = alloc::vec![(c0, f0, Vec::new())];
    while let Some((c, frontier, trace)) = stack.pop() {
        if seen.insert((c.clone(), frontier.clone()), ()).is_some() {
            continue;
        }
        if seen.len() > opts.ceiling {
            return Err(ExploreError::Ceiling(opts.ceiling));
        }
        for (step, c2) in enabled_steps(prog, &concrete_backend, &opts.step, &c) {
            let c2 = c2.canonical();
            let candidates: BTreeSet<Configuration> = if c2.local_state() == c.local_state() {
                frontier.clone()
            } else {
                let mut next = BTreeSet::new();
                for a in &frontier {
                    for (_, a2) in enabled_steps(prog, &Backend::Tms2Ra, &aopts, a) {
                        if a2.local_state() == c2.local_state() {
                            next.insert(a2.canonical());
                        }
                    }
                }
                close(next)
            };
            let next: BTreeSet<Configuration> = candidates.into_iter().filter(|a| refines(&c2, a)).collect();
            let mut t2 = trace.clone();
            t2.push(step);
            if next.is_empty() {
                return Ok(report(
                    false,
                    seen.len(),
                    Some(RefinementFailure {
                        trace: t2,
                        detail: "no specification state refines the concrete client state".into(),
                    }),
                ));
            }
            stack.push((c2, next, t2));
        }
    }
    Ok(report(true, seen.len(), None))
}

/// Final register files reachable over the lock but not the specification.
pub fn finals_outside_spec(
    tml: &BTreeSet<crate::RegFile>,
    spec: &BTreeSet<crate::RegFile>,
) -> BTreeSet<crate::RegFile> {
    tml.difference(spec).cloned().collect()
}

/// Lines of the mutation catalogue: name and description.
pub fn mutation_catalogue() -> BTreeMap<&'static str, &'static str> {
    [
        (Mutation::DropE2Release, "E2 writes glb relaxed instead of releasing"),
        (Mutation::DropB3Acquire, "B3 reads glb relaxed instead of acquiring"),
        (Mutation::WeakenR10, "R10 also accepts glb = loc + 2"),
        (Mutation::R4PlainRead, "R4 is a relaxed read of glb instead of a release-acquire CAS"),
    ]
    .into_iter()
    .map(|(m, d)| (m.name(), d))
    .collect()
}
