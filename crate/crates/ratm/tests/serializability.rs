mod support;

use ratm_core::corpus::{builtin, builtin_corpus};
use ratm_core::lts::{TxEvent, TxEventKind};
use ratm_core::program::Program;
use ratm_core::tms2ra::TxnId;
use support::serial::{histories, random_programs, serializable, Order, Tally};

fn ev(thread: usize, kind: TxEventKind) -> TxEvent {
    TxEvent { txn: TxnId { thread, seq: 0 }, kind }
}

fn stale_read_after_commit() -> Vec<TxEvent> {
    vec![
        ev(0, TxEventKind::Begin),
        ev(0, TxEventKind::Write { loc: 0, val: 1 }),
        ev(0, TxEventKind::Commit),
        ev(1, TxEventKind::Begin),
        ev(1, TxEventKind::Read { loc: 0, val: 0, internal: false }),
        ev(1, TxEventKind::Commit),
    ]
}

#[test]
fn oracle_accepts_a_serial_history() {
    let h = [
        ev(0, TxEventKind::Begin),
        ev(0, TxEventKind::Write { loc: 0, val: 1 }),
        ev(0, TxEventKind::Commit),
        ev(1, TxEventKind::Begin),
        ev(1, TxEventKind::Read { loc: 0, val: 1, internal: false }),
        ev(1, TxEventKind::Commit),
    ];
    assert!(serializable(&h, 1, Order::RealTime));
}

#[test]
fn real_time_order_rejects_a_stale_read_after_commit() {
    let h = stale_read_after_commit();
    assert!(!serializable(&h, 1, Order::RealTime));
    assert!(serializable(&h, 1, Order::PerThread));
}

#[test]
fn per_thread_order_rejects_going_back_in_time() {
    let mut h = stale_read_after_commit();
    // The reader is now a later transaction of the writer's own thread.
    for e in &mut h[3..] {
        e.txn = TxnId { thread: 0, seq: 1 };
    }
    assert!(!serializable(&h, 1, Order::PerThread));
}

#[test]
fn oracle_rejects_reading_from_an_aborted_writer() {
    let h = [
        ev(0, TxEventKind::Begin),
        ev(0, TxEventKind::Write { loc: 0, val: 1 }),
        ev(1, TxEventKind::Begin),
        ev(1, TxEventKind::Read { loc: 0, val: 1, internal: false }),
        ev(0, TxEventKind::Abort),
        ev(1, TxEventKind::Commit),
    ];
    assert!(!serializable(&h, 1, Order::PerThread));
}

#[test]
fn oracle_rejects_inconsistent_snapshots() {
    // t1 writes x and y; t2 sees the new x but the old y.
    let h = [
        ev(0, TxEventKind::Begin),
        ev(1, TxEventKind::Begin),
        ev(0, TxEventKind::Write { loc: 0, val: 1 }),
        ev(0, TxEventKind::Write { loc: 1, val: 1 }),
        ev(0, TxEventKind::Commit),
        ev(1, TxEventKind::Read { loc: 0, val: 1, internal: false }),
        ev(1, TxEventKind::Read { loc: 1, val: 0, internal: false }),
        ev(1, TxEventKind::Commit),
    ];
    assert!(!serializable(&h, 2, Order::PerThread));
}

#[test]
fn corpus_histories_serialize_in_thread_order() {
    let mut tally = Tally::default();
    for prog in builtin_corpus().into_iter().filter(Program::has_transactions) {
        tally.add(&prog);
    }
    assert!(tally.histories > 0);
    assert_eq!(tally.per_thread, tally.histories, "{tally:?}");
    assert_eq!(tally.violations, 0);
}

// The three-thread programs are left to the acceptance sweep.
#[test]
fn random_histories_serialize_in_thread_order() {
    let mut tally = Tally::default();
    for prog in random_programs(20).into_iter().filter(|p| p.threads.len() == 2) {
        prog.validate().unwrap();
        let before = tally.histories;
        tally.add(&prog);
        assert!(tally.histories > before, "{} has no complete history", prog.name);
    }
    assert_eq!(tally.per_thread, tally.histories, "{tally:?}");
    assert_eq!(tally.violations, 0);
}

/// A non-acquiring reader may begin from the snapshot it last saw, even
/// after a newer one was committed.
#[test]
fn stale_begin_snapshots_break_real_time_order() {
    let prog = builtin("tx-relaxed").unwrap();
    let locs = prog.tx_locations.len();
    let hs = histories(&prog);
    assert!(hs.iter().any(|h| !serializable(h, locs, Order::RealTime)));
}
