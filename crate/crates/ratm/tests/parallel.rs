use ratm::parallel::explore_parallel;
use ratm_core::corpus::builtin_corpus;
use ratm_core::explorer::{explore, ExploreOptions};
use ratm_core::lts::Backend;

fn sorted<T: std::fmt::Debug>(items: &[T]) -> Vec<String> {
    let mut out: Vec<String> = items.iter().map(|v| format!("{v:?}")).collect();
    out.sort();
    out
}

#[test]
fn breadth_first_agrees_with_depth_first_on_the_corpus() {
    let opts = ExploreOptions::default();
    for prog in builtin_corpus() {
        let mut backends = vec![Backend::Tms2Ra, Backend::tml()];
        if !prog.has_transactions() {
            backends.push(Backend::Plain);
        }
        for backend in backends {
            let seq = explore(&prog, &backend, &opts).unwrap();
            let par = explore_parallel(&prog, &backend, &opts, 4).unwrap();
            let what = format!("{} under {}", prog.name, seq.backend);
            assert_eq!(seq.finals, par.finals, "{what}");
            assert_eq!(seq.holds, par.holds, "{what}");
            assert_eq!(seq.stats, par.stats, "{what}");
            assert_eq!(seq.counterexample.is_some(), par.counterexample.is_some(), "{what}");
            assert_eq!(sorted(&seq.violations), sorted(&par.violations), "{what}");
        }
    }
}
