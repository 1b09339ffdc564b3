use ratm::dsl::parse_outline;
use ratm_core::corpus::builtin;
use ratm_core::outline::{check_og_validity, check_reachable_annotations, OutlineOptions, OutlineReport, ProofOutline};
use ratm_core::program::Program;

fn load(name: &str) -> (Program, ProofOutline) {
    let path = format!("{}/fixtures/outlines/{name}.ann", env!("CARGO_MANIFEST_DIR"));
    parse_outline(&std::fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{path}:{e}"))
}

fn check(name: &str) -> (OutlineReport, OutlineReport) {
    let (prog, outline) = load(name);
    let opts = OutlineOptions::default();
    (check_reachable_annotations(&prog, &outline, &opts).unwrap(), check_og_validity(&prog, &outline, &opts).unwrap())
}

#[test]
fn outlines_annotate_the_builtin_programs() {
    for id in ["tx-mp", "tx-relaxed", "tx-chain"] {
        for name in [id.to_string(), format!("{id}.weak")] {
            assert_eq!(load(&name).0, builtin(id).unwrap(), "{name}");
        }
    }
}

#[test]
fn outlines_are_valid() {
    for id in ["tx-mp", "tx-relaxed", "tx-chain"] {
        let (reach, og) = check(id);
        assert!(reach.holds, "{id}: {:?}", reach.failure);
        assert!(og.holds, "{id}: {:?}", og.failure);
        assert!(reach.states > 0);
    }
}

#[test]
fn weakened_outlines_are_refuted() {
    for id in ["tx-mp", "tx-relaxed", "tx-chain"] {
        let (reach, og) = check(&format!("{id}.weak"));
        assert!(!reach.holds, "{id}: reachability");
        assert!(!og.holds, "{id}: Owicki-Gries");
        assert!(og.failure.is_some());
    }
}
