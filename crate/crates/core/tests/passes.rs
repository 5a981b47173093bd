mod common;

use minimc::driver::{link_checked, read_modules};
use minimc::exec::{run_schedule, EventKind, ExecConfig, Outcome};
use minimc::explore::{explore, ExploreConfig, VerdictResult};
use minimc::ir::{parse_module, validate, InstKind, Program, SemType};
use minimc::passes::{
    bound_loops, eliminate_dead_allocs, init_undef, intercept_threads, lower_intrinsics,
    run_pipeline, run_pipeline_observed, InterceptError, PassConfig, PassError, Stage,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn linked(names: &[&str]) -> Program {
    let paths: Vec<_> = names.iter().map(|n| common::corpus(n)).collect();
    link_checked(&read_modules(&paths).unwrap(), &PassConfig::default()).unwrap()
}

fn count(p: &Program, pred: impl Fn(&InstKind) -> bool) -> usize {
    p.insts().filter(|(_, i)| pred(&i.kind)).count()
}

#[test]
fn memcpy_of_24_bytes_becomes_three_i64_pairs() {
    let p = linked(&["fixtures/memcpy24.mcir"]);
    let is_load = |k: &InstKind| matches!(k, InstKind::Load { ty: SemType::I64, .. });
    let is_store = |k: &InstKind| matches!(k, InstKind::Store { ty: SemType::I64, .. });
    let (q, report) = lower_intrinsics(&p, 64);
    assert_eq!(report.intrinsics_lowered, 1);
    assert_eq!(count(&q, is_load) - count(&p, is_load), 3);
    assert_eq!(count(&q, is_store) - count(&p, is_store), 3);
    assert_eq!(count(&q, |k| k.is_intrinsic()), 0);
    assert!(validate(&q).is_empty());
}

#[test]
fn chunk_limit_decides_what_is_lowered() {
    let src = "define @main() {\n  %a = alloca 72\n  %b = alloca 72\n  memset %a, 1, 72\n  memcpy %b, %a, 72\n  ret\n}\n";
    let p = minimc::ir::link(&[parse_module("big.mcir", src).unwrap()]).unwrap();
    let (q, r) = lower_intrinsics(&p, 64);
    assert_eq!(r.intrinsics_lowered, 0);
    assert_eq!(r.diagnostics.len(), 2);
    assert_eq!(count(&q, |k| k.is_intrinsic()), 2);
    let (q, r) = lower_intrinsics(&p, 72);
    assert_eq!(r.intrinsics_lowered, 2);
    assert_eq!(count(&q, |k| k.is_intrinsic()), 0);
}

#[test]
fn unlowered_intrinsic_is_unsupported() {
    let p = common::load(&["fixtures/memcpy_dynamic.mcir"], &PassConfig::default());
    let v = explore(&p, &ExploreConfig::default()).unwrap();
    match &v.result {
        VerdictResult::Unsupported { diagnostic } => assert!(diagnostic.contains("memcpy"), "{diagnostic}"),
        other => panic!("{other:?}"),
    }
    assert!(v.witness.is_none());
}

#[test]
fn pipeline_config_is_checked() {
    let p = linked(&["rand_atomicity.mcir"]);
    for cfg in [
        PassConfig { loop_bound: 0, ..PassConfig::default() },
        PassConfig { memcpy_chunk_limit: 12, ..PassConfig::default() },
        PassConfig { memcpy_chunk_limit: 0, ..PassConfig::default() },
    ] {
        assert!(matches!(run_pipeline(&p, &cfg), Err(PassError::Config(_))));
    }
}

#[test]
fn interception_counts_spawns_and_checks_arity() {
    let p = linked(&["ffi_counter_rust.mcir", "ffi_counter_c.mcir"]);
    let (q, r) = run_pipeline(&p, &PassConfig::default()).unwrap();
    assert_eq!(r.calls_intercepted, 2);
    assert_eq!(r.intrinsics_lowered, 0);
    assert!(q.externs.is_empty());
    assert_eq!(count(&q, |k| matches!(k, InstKind::Spawn { .. })), 2);

    let bad = parse_module(
        "bad.mcir",
        "declare @thread_spawn(ptr)\ndefine @w(%a: i64) {\n  ret 0\n}\n\
         define @main() {\n  %h = call @thread_spawn(@w)\n  ret\n}\n",
    )
    .unwrap();
    let p = minimc::ir::link(&[bad]).unwrap();
    let table = PassConfig::default().intercept_table;
    assert!(matches!(intercept_threads(&p, &table), Err(InterceptError::Arity { .. })));
}

#[test]
fn loop_bound_limits_iterations() {
    let p = linked(&["fixtures/spin_loop.mcir"]);
    for k in 1..=6 {
        let (q, r) = bound_loops(&p, k);
        assert_eq!(r.loops_bounded, 1);
        let t = run_schedule(&q, &[], &ExecConfig::default()).unwrap();
        let reads = t.events.iter().filter(|e| e.kind == EventKind::Read).count();
        assert_eq!(reads, k as usize, "k={k}");
        assert_eq!(t.outcome, Outcome::BoundExceeded);
    }
}

#[test]
fn bound_exceeded_is_not_a_bug() {
    let p = common::load(&["fixtures/spin_loop.mcir"], &PassConfig { loop_bound: 3, ..PassConfig::default() });
    let v = explore(&p, &ExploreConfig::default()).unwrap();
    assert!(v.result.is_ok());
    assert!(v.stats.bound_exceeded);
}

#[test]
fn undef_initialization_turns_uninit_read_into_zero() {
    let off = PassConfig { init_undef: false, ..PassConfig::default() };
    let p = common::load(&["undef_result.mcir"], &off);
    let v = explore(&p, &ExploreConfig::default()).unwrap();
    assert!(matches!(v.result, VerdictResult::UninitializedRead { .. }), "{:?}", v.result);

    let p = common::load(&["undef_result.mcir"], &PassConfig::default());
    let v = explore(&p, &ExploreConfig::default()).unwrap();
    assert!(v.result.is_ok(), "{:?}", v.result);
    let t = run_schedule(&p, &[], &ExecConfig::default()).unwrap();
    let payload = t
        .events
        .iter()
        .find(|e| e.kind == EventKind::Read && e.src.line == 10)
        .expect("payload load");
    assert_eq!(payload.read.and_then(|v| v.as_int()), Some(0));
}

#[test]
fn dead_allocation_is_removed_without_changing_behaviour() {
    let p = linked(&["fixtures/dead_alloc.mcir"]);
    let (q, r) = init_undef(&p);
    assert_eq!(r.undef_stores, 3 + 1);
    let (d, r) = eliminate_dead_allocs(&q);
    assert_eq!(r.allocas_removed, 1);
    assert_eq!(count(&d, |k| matches!(k, InstKind::Alloca { .. })), 1);
    let a = run_schedule(&q, &[], &ExecConfig::default()).unwrap();
    let b = run_schedule(&d, &[], &ExecConfig::default()).unwrap();
    assert_eq!(a.returns, b.returns);
    assert_eq!(a.outcome, b.outcome);
}

#[test]
fn every_stage_is_observed_in_order() {
    let p = linked(&["oob_index.mcir"]);
    let mut seen = Vec::new();
    run_pipeline_observed(&p, &PassConfig::default(), |s, q| {
        seen.push(s);
        assert!(validate(q).is_empty(), "invalid after {s}");
    })
    .unwrap();
    assert_eq!(seen, Stage::ALL.to_vec());
    assert_eq!(Stage::from_name("final"), Some(Stage::DeadAlloc));
}

type Pass = fn(&Program) -> Program;

fn passes() -> Vec<(&'static str, Pass)> {
    vec![
        ("intercept", |p| intercept_threads(p, &PassConfig::default().intercept_table).unwrap().0),
        ("bound-loops", |p| bound_loops(p, 4).0),
        ("lower-intrinsics", |p| lower_intrinsics(p, 64).0),
        ("init-undef", |p| init_undef(p).0),
        ("dead-alloc", |p| eliminate_dead_allocs(p).0),
    ]
}

#[test]
fn every_pass_is_idempotent_on_the_corpus() {
    for set in common::corpus_sets() {
        let mut p = link_checked(&read_modules(&set).unwrap(), &PassConfig::default()).unwrap();
        for (name, pass) in passes() {
            let once = pass(&p);
            assert_eq!(pass(&once), once, "{name} on {set:?}");
            p = once;
        }
        let (full, _) = run_pipeline(&p, &PassConfig::default()).unwrap();
        assert_eq!(run_pipeline(&full, &PassConfig::default()).unwrap().0, full);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Lowered intrinsics leave memory exactly as a byte-by-byte copy would.
    #[test]
    fn lowering_matches_bytewise_reference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::gen_intrinsics(&mut rng);
        let p = common::compile(&g.text);
        prop_assert_eq!(count(&p, |k| k.is_intrinsic()), 0);
        let t = run_schedule(&p, &[], &ExecConfig::default()).unwrap();
        prop_assert_eq!(&t.outcome, &Outcome::Completed);
        let want = common::reference_memory(&g);
        let got = common::buffers(&t);
        for b in 0..2 {
            let bytes: Vec<Option<u8>> = want[b].iter().map(|&x| Some(x)).collect();
            prop_assert_eq!(&got[b], &bytes, "buffer {}\n{}", b, g.text);
        }
    }

    /// Passes change nothing observable on programs without loops or
    /// intrinsics, and running them twice equals running them once.
    #[test]
    fn pipeline_is_idempotent_and_preserves_behaviour(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::gen_conc(&mut rng, &common::ConcParams::default());
        let raw = minimc::ir::link(&[parse_module("gen.mcir", &g.text).unwrap()]).unwrap();
        let (p, _) = run_pipeline(&raw, &PassConfig::default()).unwrap();
        prop_assert_eq!(&run_pipeline(&p, &PassConfig::default()).unwrap().0, &p);
        let a = run_schedule(&raw, &[], &ExecConfig::default()).unwrap();
        let b = run_schedule(&p, &[], &ExecConfig::default()).unwrap();
        prop_assert_eq!(common::observe(&a, g.globals), common::observe(&b, g.globals));
    }
}
