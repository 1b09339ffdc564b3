use std::fs;
use std::path::PathBuf;

use ratm::dsl::{parse_outline, parse_program, Pos};
use ratm_core::corpus::{builtin, HARNESS_IDS, IDS};

fn fixture(rel: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn corpus_files_parse_to_the_builtin_programs() {
    for id in IDS.iter().chain(HARNESS_IDS.iter()) {
        let parsed = parse_program(&fixture(&format!("corpus/{id}.lit"))).unwrap_or_else(|e| panic!("{id}: {e}"));
        assert_eq!(parsed, builtin(id).unwrap(), "{id}");
    }
}

#[test]
fn message_passing_has_four_labels_and_a_back_edge() {
    let p = parse_program(&fixture("corpus/mp-ra.lit")).unwrap();
    let t2 = &p.threads[1];
    // Loop body, guard, final load, terminal.
    assert_eq!(t2.terminal() + 1, 4);
    let back = t2.commands.iter().enumerate().any(|(at, c)| c.targets().iter().any(|&to| to <= at));
    assert!(back);
}

#[test]
fn empty_thread_starts_at_its_terminal_label() {
    let p = parse_program("locations x\nthread t1 { }\nthread t2 { x := 1 }").unwrap();
    assert_eq!(p.threads[0].terminal(), 0);
}

#[test]
fn invalid_annotation_is_a_positioned_error() {
    let err = parse_program("locations x\nthread t1 {\n  x :=^Q 1\n}").unwrap_err();
    assert_eq!(err.pos, Pos { line: 3, col: 8 });
    assert!(err.message.contains("annotation"), "{err}");
}

#[test]
fn outline_without_blocks_is_trivial() {
    let (_, outline) = parse_outline(&fixture("corpus/tx-mp.lit")).unwrap();
    assert!(outline.annotations.is_empty());
}
