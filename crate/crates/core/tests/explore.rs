mod common;

use std::collections::BTreeSet;

use minimc::exec::{run_schedule, EventKind, ExecConfig, Outcome, Tid, Trace};
use minimc::explore::{
    canonical_form, detect_races, explore, explore_naive, explore_with, happens_before, ordered,
    Algorithm, ErrorKind, ExploreConfig, ExploreError, StopMode, VerdictResult,
};
use minimc::ir::{Program, SrcLoc};
use minimc::passes::PassConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn keep_going(algorithm: Algorithm) -> ExploreConfig {
    ExploreConfig {
        algorithm,
        stop_mode: StopMode::KeepGoing,
        record_classes: true,
        ..ExploreConfig::default()
    }
}

fn traces(p: &Program, cfg: &ExploreConfig) -> Result<Vec<Trace>, ExploreError> {
    let mut out = Vec::new();
    explore_with(p, cfg, &mut |t| out.push(t.clone()))?;
    Ok(out)
}

fn observations(ts: &[Trace], globals: usize) -> BTreeSet<common::Observation> {
    ts.iter().map(|t| common::observe(t, globals)).collect()
}

fn race_sites(t: &Trace, pairs: impl IntoIterator<Item = (usize, usize)>) -> BTreeSet<(SrcLoc, SrcLoc)> {
    pairs
        .into_iter()
        .map(|(i, j)| (t.events[i].src.clone(), t.events[j].src.clone()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    /// DPOR, the naive enumeration and an independent interleaving simulator
    /// see the same behaviours, and DPOR visits exactly the oracle's classes.
    #[test]
    fn dpor_agrees_with_oracle_and_reference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::gen_conc(&mut rng, &common::ConcParams::default());
        let p = common::compile(&g.text);
        let naive = match explore(&p, &keep_going(Algorithm::Naive)) {
            Ok(v) => v,
            Err(ExploreError::CapExceeded { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let dpor = explore(&p, &keep_going(Algorithm::Dpor)).unwrap();
        prop_assert_eq!(dpor.error_kinds(), naive.error_kinds());
        prop_assert_eq!(dpor.result.kind(), naive.result.kind());
        prop_assert_eq!(&dpor.classes, &naive.classes, "{}", g.text);
        // One execution per class: nothing explored twice.
        prop_assert_eq!(dpor.stats.executions, dpor.classes.as_ref().unwrap().len());

        let want = common::reference_observations(&g);
        let d = observations(&traces(&p, &keep_going(Algorithm::Dpor)).unwrap(), g.globals);
        let n = observations(&traces(&p, &keep_going(Algorithm::Naive)).unwrap(), g.globals);
        prop_assert_eq!(&d, &want, "{}", g.text);
        prop_assert_eq!(&n, &want);
    }

    /// Vector-clock happens-before and race detection agree with a
    /// transitive-closure reference on random schedules.
    #[test]
    fn happens_before_matches_closure(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::gen_conc(&mut rng, &common::ConcParams::default());
        let p = common::compile(&g.text);
        let schedule: Vec<Tid> = (0..24).map(|_| Tid(rng.gen_range(0..g.threads.len()))).collect();
        let t = run_schedule(&p, &schedule, &ExecConfig::default()).unwrap();
        let clocks = happens_before(&t);
        let hb = common::reference_hb(&t);
        for j in 0..t.events.len() {
            for i in 0..j {
                prop_assert_eq!(ordered(&t, &clocks, i, j), hb[i][j], "events {} {}", i, j);
            }
        }
        let got = detect_races(&t).into_iter().map(|r| (r.first, r.second));
        prop_assert_eq!(race_sites(&t, got), race_sites(&t, common::reference_races(&t)));
    }

    /// Interleavings with the same canonical form show the same behaviour.
    #[test]
    fn canonical_form_is_schedule_independent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::gen_conc(&mut rng, &common::ConcParams { max_children: 1, ..Default::default() });
        let p = common::compile(&g.text);
        let Ok(ts) = traces(&p, &keep_going(Algorithm::Naive)) else { return Ok(()) };
        let mut seen = std::collections::BTreeMap::new();
        for t in &ts {
            let obs = common::observe(t, g.globals);
            let prev = seen.entry(canonical_form(&t.events)).or_insert_with(|| obs.clone());
            prop_assert_eq!(&*prev, &obs);
        }
    }
}

#[test]
fn conflict_serialization_counts_are_factorial() {
    for k in 2..=4 {
        let p = common::compile(&common::serial_writers(k));
        let dpor = explore(&p, &keep_going(Algorithm::Dpor)).unwrap();
        assert_eq!(dpor.stats.executions, common::factorial(k), "k={k}");
        assert_eq!(dpor.stats.blocked, 0);
        if k <= 3 {
            let (naive, classes) = explore_naive(&p, &keep_going(Algorithm::Naive)).unwrap();
            assert_eq!(classes, common::factorial(k));
            assert_eq!(naive.classes, dpor.classes);
        }
    }
}

#[test]
fn exploration_is_deterministic() {
    for set in common::corpus_sets() {
        let modules = minimc::driver::read_modules(&set).unwrap();
        let (p, _) = minimc::driver::build(&modules, &PassConfig::default()).unwrap();
        for cfg in [ExploreConfig::default(), keep_going(Algorithm::Dpor)] {
            assert_eq!(explore(&p, &cfg).unwrap(), explore(&p, &cfg).unwrap(), "{set:?}");
        }
    }
}

#[test]
fn corpus_verdict_classes() {
    let cases: &[(&[&str], Option<ErrorKind>)] = &[
        (&["ffi_counter_rust.mcir", "ffi_counter_c.mcir"], Some(ErrorKind::Race)),
        (&["rand_atomicity.mcir"], Some(ErrorKind::Assert)),
        (&["unsafe_sync.mcir"], Some(ErrorKind::Race)),
        (&["oob_index.mcir"], Some(ErrorKind::OutOfBounds)),
        (&["raw_ptr.mcir"], Some(ErrorKind::Race)),
        (&["undef_result.mcir"], None),
        (&["fixtures/join_ok.mcir"], None),
        (&["fixtures/memcpy_dynamic.mcir"], Some(ErrorKind::Unsupported)),
    ];
    for (names, want) in cases {
        let p = common::load(names, &PassConfig::default());
        let v = explore(&p, &ExploreConfig::default()).unwrap();
        assert_eq!(v.result.kind(), *want, "{names:?}");
        let all = explore(&p, &keep_going(Algorithm::Dpor)).unwrap();
        assert_eq!(all.result.kind(), *want, "{names:?}");
    }
}

#[test]
fn atomic_program_reports_no_race() {
    let p = common::load(&["rand_atomicity.mcir"], &PassConfig::default());
    let v = explore(&p, &keep_going(Algorithm::Dpor)).unwrap();
    assert_eq!(v.error_kinds(), BTreeSet::from([ErrorKind::Assert]));
}

/// The bounds fault only happens when the add lands between the check and
/// the access; other interleavings finish cleanly.
#[test]
fn out_of_bounds_needs_the_add_between_check_and_access() {
    let p = common::load(&["oob_index.mcir"], &PassConfig::default());
    let ts = traces(&p, &keep_going(Algorithm::Dpor)).unwrap();
    let mut faulty = 0;
    let mut clean = 0;
    for t in &ts {
        match t.fault_event() {
            Some(f) => {
                faulty += 1;
                let ev = &t.events;
                let tid = ev[f].tid;
                let rmw = ev.iter().position(|e| e.kind == EventKind::Rmw).expect("fetch_add");
                let check = ev
                    .iter()
                    .position(|e| e.tid == tid && e.kind == EventKind::Read && e.src.line == 23)
                    .expect("bounds check read");
                assert!(check < rmw && rmw < f, "rmw {rmw} check {check} fault {f}");
            }
            None => {
                assert_eq!(t.outcome, Outcome::Completed);
                clean += 1;
            }
        }
    }
    assert!(faulty >= 1 && clean >= 1, "faulty {faulty} clean {clean}");
}

#[test]
fn budget_and_cap_are_enforced() {
    // Atomic writers: many classes and no error to stop at.
    let p = common::compile(&common::serial_writers(4).replace("store i64", "atomic_store i64").replace(", @x", ", @x seq_cst"));
    let cfg = ExploreConfig { max_executions: 5, ..keep_going(Algorithm::Dpor) };
    match explore(&p, &cfg) {
        Err(ExploreError::BudgetExceeded { limit: 5, stats }) => {
            assert_eq!(stats.executions, 5);
            assert!(stats.budget_exhausted);
        }
        other => panic!("{other:?}"),
    }
    let cfg = ExploreConfig { naive_cap: 4, ..keep_going(Algorithm::Naive) };
    assert!(matches!(explore(&p, &cfg), Err(ExploreError::CapExceeded { cap: 4, .. })));
}

#[test]
fn first_error_mode_stops_early() {
    let p = common::load(&["ffi_counter_rust.mcir", "ffi_counter_c.mcir"], &PassConfig::default());
    let first = explore(&p, &ExploreConfig::default()).unwrap();
    let all = explore(&p, &keep_going(Algorithm::Dpor)).unwrap();
    assert_eq!(first.stats.executions, 1);
    assert!(all.stats.executions > first.stats.executions);
    let VerdictResult::DataRace { first: a, second: b } = first.result else { panic!() };
    let w = first.witness.as_ref().unwrap();
    assert_ne!(w.events[a].tid, w.events[b].tid);
    assert!(w.events[a].is_write() != w.events[b].is_write());
}
