//! Shared helpers for the integration tests: corpus access, random program
//! generators and reference models that do not use the library's own
//! interpreter or explorer.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use minimc::driver::{build, parse_sources, read_modules};
use minimc::exec::{AllocId, EventKind, Trace};
use minimc::ir::Program;
use minimc::passes::PassConfig;
use rand::Rng;

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

/// Every corpus program as its list of input files.
pub fn corpus_sets() -> Vec<Vec<PathBuf>> {
    let sets: &[&[&str]] = &[
        &["ffi_counter_rust.mcir", "ffi_counter_c.mcir"],
        &["rand_atomicity.mcir"],
        &["unsafe_sync.mcir"],
        &["oob_index.mcir"],
        &["raw_ptr.mcir"],
        &["undef_result.mcir"],
        &["fixtures/memcpy24.mcir"],
        &["fixtures/memcpy_dynamic.mcir"],
        &["fixtures/spin_loop.mcir"],
        &["fixtures/dead_alloc.mcir"],
        &["fixtures/join_ok.mcir"],
        &["fixtures/memmove_overlap.mcir"],
    ];
    sets.iter()
        .map(|s| s.iter().map(|n| corpus(n)).collect())
        .collect()
}

/// Linked and transformed program from corpus files.
pub fn load(names: &[&str], config: &PassConfig) -> Program {
    let paths: Vec<PathBuf> = names.iter().map(|n| corpus(n)).collect();
    let modules = read_modules(&paths).expect("corpus parses");
    build(&modules, config).expect("corpus builds").0
}

/// Linked and transformed program from one in-memory module.
pub fn compile(text: &str) -> Program {
    compile_with(text, &PassConfig::default())
}

pub fn compile_with(text: &str, config: &PassConfig) -> Program {
    let modules = parse_sources(&[("gen.mcir", text)]).unwrap_or_else(|e| panic!("{e}\n{text}"));
    build(&modules, config).unwrap_or_else(|e| panic!("{e}\n{text}")).0
}

// ---------------------------------------------------------------------------
// Concurrent straight-line programs over a few i64 globals.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Read { global: usize, atomic: bool },
    /// Stores `c`, or the last value read plus `c` when `from_last`.
    Write { global: usize, atomic: bool, c: i64, from_last: bool },
    /// Atomic fetch-add; reads the old value.
    FetchAdd { global: usize, c: i64 },
}

#[derive(Debug, Clone)]
pub struct ConcProgram {
    pub globals: usize,
    /// Index 0 is main's own work, done after spawning every child.
    pub threads: Vec<Vec<Op>>,
    /// Main joins every child after its own work.
    pub join: bool,
    /// After joining, main reads `@g0` and asserts it equals this value.
    pub final_assert: Option<i64>,
    pub text: String,
}

#[derive(Debug, Clone, Copy)]
pub struct ConcParams {
    pub max_children: usize,
    pub max_ops: usize,
    pub globals: usize,
}

impl Default for ConcParams {
    fn default() -> Self {
        ConcParams {
            max_children: 2,
            max_ops: 3,
            globals: 2,
        }
    }
}

fn gen_ops(rng: &mut impl Rng, p: &ConcParams, min: usize) -> Vec<Op> {
    let n = rng.gen_range(min..=p.max_ops);
    let mut ops = Vec::new();
    let mut has_read = false;
    for _ in 0..n {
        let global = rng.gen_range(0..p.globals);
        let op = match rng.gen_range(0..5) {
            0 | 1 => Op::Read {
                global,
                atomic: rng.gen_bool(0.4),
            },
            2 | 3 => Op::Write {
                global,
                atomic: rng.gen_bool(0.4),
                c: rng.gen_range(1..4),
                from_last: has_read && rng.gen_bool(0.5),
            },
            _ => Op::FetchAdd {
                global,
                c: rng.gen_range(1..4),
            },
        };
        has_read |= !matches!(op, Op::Write { .. });
        ops.push(op);
    }
    ops
}

fn emit_ops(out: &mut String, ops: &[Op], tag: &str) {
    let mut last: Option<String> = None;
    for (k, op) in ops.iter().enumerate() {
        match op {
            Op::Read { global, atomic } => {
                let r = format!("%{tag}r{k}");
                if *atomic {
                    let _ = writeln!(out, "  {r} = atomic_load i64 @g{global} seq_cst");
                } else {
                    let _ = writeln!(out, "  {r} = load i64 @g{global}");
                }
                last = Some(r);
            }
            Op::Write {
                global,
                atomic,
                c,
                from_last,
            } => {
                let v = format!("%{tag}w{k}");
                match (&last, from_last) {
                    (Some(l), true) => {
                        let _ = writeln!(out, "  {v} = add i64 {l}, {c}");
                    }
                    _ => {
                        let _ = writeln!(out, "  {v} = add i64 0, {c}");
                    }
                }
                if *atomic {
                    let _ = writeln!(out, "  atomic_store i64 {v}, @g{global} seq_cst");
                } else {
                    let _ = writeln!(out, "  store i64 {v}, @g{global}");
                }
            }
            Op::FetchAdd { global, c } => {
                let r = format!("%{tag}x{k}");
                let _ = writeln!(out, "  {r} = atomic_rmw add i64 @g{global}, {c} seq_cst");
                last = Some(r);
            }
        }
    }
}

pub fn gen_conc(rng: &mut impl Rng, p: &ConcParams) -> ConcProgram {
    let children = rng.gen_range(1..=p.max_children);
    let mut threads = vec![gen_ops(rng, p, 0)];
    for _ in 0..children {
        threads.push(gen_ops(rng, p, 1));
    }
    let join = rng.gen_bool(0.7);
    let final_assert = (join && rng.gen_bool(0.5)).then(|| rng.gen_range(0..5));
    let mut text = String::new();
    for g in 0..p.globals {
        let _ = writeln!(text, "global @g{g} : i64 = 0");
    }
    for (i, ops) in threads.iter().enumerate().skip(1) {
        let _ = writeln!(text, "\ndefine @child{i}(%arg: i64) {{\nentry:");
        emit_ops(&mut text, ops, "c");
        text.push_str("  ret 0\n}\n");
    }
    text.push_str("\ndefine @main() {\nentry:\n");
    for i in 1..threads.len() {
        let _ = writeln!(text, "  %t{i} = spawn @child{i}({i})");
    }
    emit_ops(&mut text, &threads[0], "m");
    if join {
        for i in 1..threads.len() {
            let _ = writeln!(text, "  %j{i} = join %t{i}");
        }
    }
    if let Some(v) = final_assert {
        let _ = writeln!(
            text,
            "  %fin = load i64 @g0\n  %ok = icmp eq %fin, {v}\n  assert %ok"
        );
    }
    text.push_str("  ret\n}\n");
    ConcProgram {
        globals: p.globals,
        threads,
        join,
        final_assert,
        text,
    }
}

/// What one execution shows: the values each thread read, in order, the
/// final globals, and whether the final assertion failed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Observation {
    pub reads: Vec<Vec<i64>>,
    pub globals: Vec<i64>,
    pub assert_failed: bool,
}

pub fn observe(trace: &Trace, globals: usize) -> Observation {
    let threads = trace.events.iter().map(|e| e.tid.0 + 1).max().unwrap_or(1);
    let mut reads = vec![Vec::new(); threads];
    for e in &trace.events {
        if matches!(e.kind, EventKind::Read | EventKind::Rmw) {
            reads[e.tid.0].push(e.read.and_then(|v| v.as_int()).expect("integer read"));
        }
    }
    let globals = (0..globals)
        .map(|g| {
            let id = trace.memory.global(&format!("g{g}")).expect("global");
            read_i64(trace, id, 0)
        })
        .collect();
    Observation {
        reads,
        globals,
        assert_failed: trace.events.iter().any(|e| e.kind == EventKind::AssertFail),
    }
}

pub fn read_i64(trace: &Trace, id: AllocId, offset: usize) -> i64 {
    let data = trace.memory.data(id).expect("allocation");
    let mut b = [0u8; 8];
    for k in 0..8 {
        b[k] = data[offset + k].expect("initialized byte");
    }
    i64::from_le_bytes(b)
}

/// Brute-force reference: every interleaving of the operations, one shared
/// access at a time, under sequential consistency.
pub fn reference_observations(p: &ConcProgram) -> BTreeSet<Observation> {
    #[derive(Clone)]
    struct St {
        pc: Vec<usize>,
        last: Vec<i64>,
        mem: Vec<i64>,
        reads: Vec<Vec<i64>>,
        /// Main's progress through its joins and final read.
        tail: usize,
    }
    let n = p.threads.len();
    let children: Vec<usize> = (1..n).collect();
    let main_tail = if p.join { children.len() } else { 0 } + usize::from(p.final_assert.is_some());
    let mut out = BTreeSet::new();
    let start = St {
        pc: vec![0; n],
        last: vec![0; n],
        mem: vec![0; p.globals],
        reads: vec![Vec::new(); n],
        tail: 0,
    };
    fn apply(op: &Op, s: &mut St, t: usize) {
        match *op {
            Op::Read { global, .. } => {
                let v = s.mem[global];
                s.reads[t].push(v);
                s.last[t] = v;
            }
            Op::Write {
                global, c, from_last, ..
            } => {
                s.mem[global] = if from_last { s.last[t] + c } else { c };
            }
            Op::FetchAdd { global, c } => {
                let v = s.mem[global];
                s.reads[t].push(v);
                s.last[t] = v;
                s.mem[global] = v.wrapping_add(c);
            }
        }
    }
    let mut stack = vec![start];
    while let Some(s) = stack.pop() {
        let mut moved = false;
        for t in 0..n {
            if s.pc[t] < p.threads[t].len() {
                let mut s2 = s.clone();
                apply(&p.threads[t][s.pc[t]], &mut s2, t);
                s2.pc[t] += 1;
                stack.push(s2);
                moved = true;
            }
        }
        // Main's tail: joins in child order, then the final read.
        if s.pc[0] == p.threads[0].len() && s.tail < main_tail {
            let joining = p.join && s.tail < children.len();
            let ok = if joining {
                let c = children[s.tail];
                s.pc[c] == p.threads[c].len()
            } else {
                true
            };
            if ok {
                let mut s2 = s.clone();
                if !joining {
                    let v = s2.mem[0];
                    s2.reads[0].push(v);
                }
                s2.tail += 1;
                stack.push(s2);
                moved = true;
            }
        }
        if !moved {
            let failed = p.final_assert.is_some_and(|want| s.reads[0].last() != Some(&want));
            out.insert(Observation {
                reads: s.reads.clone(),
                globals: s.mem.clone(),
                assert_failed: failed,
            });
        }
    }
    out
}

/// Conflict-serialization family: `k` threads each store once to `@x`.
pub fn serial_writers(k: usize) -> String {
    let mut text = String::from("global @x : i64 = 0\n");
    for i in 1..=k {
        let _ = writeln!(text, "\ndefine @w{i}(%arg: i64) {{\nentry:\n  store i64 {i}, @x\n  ret 0\n}}");
    }
    text.push_str("\ndefine @main() {\nentry:\n");
    for i in 1..=k {
        let _ = writeln!(text, "  %t{i} = spawn @w{i}(0)");
    }
    for i in 1..=k {
        let _ = writeln!(text, "  %j{i} = join %t{i}");
    }
    text.push_str("  ret\n}\n");
    text
}

pub fn factorial(k: usize) -> usize {
    (1..=k).product()
}

// ---------------------------------------------------------------------------
// Single-threaded memory-intrinsic programs over two 64-byte buffers.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intrinsic {
    Memcpy { dst: (usize, u64), src: (usize, u64), len: u64 },
    Memmove { dst: (usize, u64), src: (usize, u64), len: u64 },
    Memset { dst: (usize, u64), byte: u8, len: u64, via_register: bool },
}

pub const BUF: u64 = 64;

#[derive(Debug, Clone)]
pub struct IntrinsicProgram {
    pub init: [[u8; BUF as usize]; 2],
    pub ops: Vec<Intrinsic>,
    pub text: String,
}

fn gen_range_in(rng: &mut impl Rng) -> (u64, u64) {
    let len = rng.gen_range(0..=BUF);
    let off = rng.gen_range(0..=BUF - len);
    (off, len)
}

pub fn gen_intrinsics(rng: &mut impl Rng) -> IntrinsicProgram {
    let mut init = [[0u8; BUF as usize]; 2];
    for buf in &mut init {
        rng.fill(&mut buf[..]);
    }
    let mut ops = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let (d_off, len) = gen_range_in(rng);
        let s_off = rng.gen_range(0..=BUF - len);
        let d = rng.gen_range(0..2);
        ops.push(match rng.gen_range(0..3) {
            0 => Intrinsic::Memcpy {
                dst: (d, d_off),
                src: (1 - d, s_off),
                len,
            },
            1 => Intrinsic::Memmove {
                dst: (d, d_off),
                src: (rng.gen_range(0..2), s_off),
                len,
            },
            _ => Intrinsic::Memset {
                dst: (d, d_off),
                byte: rng.gen(),
                len,
                via_register: rng.gen_bool(0.5),
            },
        });
    }
    let mut text = String::from("define @main() {\nentry:\n  %b0 = alloca 64\n  %b1 = alloca 64\n");
    for (b, buf) in init.iter().enumerate() {
        for w in 0..(BUF as usize / 8) {
            let v = i64::from_le_bytes(buf[w * 8..w * 8 + 8].try_into().unwrap());
            let _ = writeln!(text, "  %i{b}_{w} = gep %b{b}, {}", w * 8);
            let _ = writeln!(text, "  store i64 {v}, %i{b}_{w}");
        }
    }
    for (k, op) in ops.iter().enumerate() {
        let ptr = |text: &mut String, name: &str, (b, off): (usize, u64)| {
            let _ = writeln!(text, "  %{name}{k} = gep %b{b}, {off}");
        };
        match *op {
            Intrinsic::Memcpy { dst, src, len } | Intrinsic::Memmove { dst, src, len } => {
                ptr(&mut text, "d", dst);
                ptr(&mut text, "s", src);
                let name = if matches!(op, Intrinsic::Memcpy { .. }) { "memcpy" } else { "memmove" };
                let _ = writeln!(text, "  {name} %d{k}, %s{k}, {len}");
            }
            Intrinsic::Memset {
                dst,
                byte,
                len,
                via_register,
            } => {
                ptr(&mut text, "d", dst);
                if via_register {
                    let _ = writeln!(text, "  %v{k} = add i64 0, {byte}");
                    let _ = writeln!(text, "  memset %d{k}, %v{k}, {len}");
                } else {
                    let _ = writeln!(text, "  memset %d{k}, {byte}, {len}");
                }
            }
        }
    }
    text.push_str("  ret\n}\n");
    IntrinsicProgram { init, ops, text }
}

/// Byte-wise reference semantics of the intrinsic sequence.
pub fn reference_memory(p: &IntrinsicProgram) -> [[u8; BUF as usize]; 2] {
    let mut m = p.init;
    for op in &p.ops {
        match *op {
            Intrinsic::Memcpy { dst, src, len } | Intrinsic::Memmove { dst, src, len } => {
                let tmp: Vec<u8> = (0..len).map(|i| m[src.0][(src.1 + i) as usize]).collect();
                for (i, b) in tmp.into_iter().enumerate() {
                    m[dst.0][dst.1 as usize + i] = b;
                }
            }
            Intrinsic::Memset { dst, byte, len, .. } => {
                for i in 0..len {
                    m[dst.0][(dst.1 + i) as usize] = byte;
                }
            }
        }
    }
    m
}

/// Final contents of the two buffers after running `trace`.
pub fn buffers(trace: &Trace) -> Vec<Vec<Option<u8>>> {
    (0..2)
        .map(|i| {
            let id = AllocId::Stack {
                tid: minimc::exec::Tid(0),
                index: i,
            };
            trace.memory.data(id).expect("buffer allocation")
        })
        .collect()
}

/// Reachability closure over event indices: `hb[i][j]` when a chain of
/// program order, spawn, join and atomic reads-from edges leads from `i` to
/// `j`. Computed with a plain Floyd-Warshall pass.
pub fn reference_hb(trace: &Trace) -> Vec<Vec<bool>> {
    let ev = &trace.events;
    let n = ev.len();
    let mut hb = vec![vec![false; n]; n];
    for j in 0..n {
        for i in 0..j {
            let (a, b) = (&ev[i], &ev[j]);
            let po = a.tid == b.tid;
            let tc = a.kind == EventKind::ThreadCreate
                && a.peer == Some(b.tid)
                && b.kind == EventKind::ThreadStart;
            let tj = a.kind == EventKind::ThreadEnd
                && b.kind == EventKind::ThreadJoin
                && b.peer == Some(a.tid);
            hb[i][j] = po || tc || tj;
        }
    }
    // Atomic reads-from: each atomic read synchronizes with the latest
    // earlier atomic write to the same location.
    for j in 0..n {
        let b = &ev[j];
        if !(b.atomic && matches!(b.kind, EventKind::Read | EventKind::Rmw)) {
            continue;
        }
        let loc = b.loc.expect("access location");
        let src = (0..j).rev().find(|&i| {
            let a = &ev[i];
            matches!(a.kind, EventKind::Write | EventKind::Rmw)
                && a.loc.is_some_and(|l| l.overlaps(&loc))
        });
        if let Some(i) = src {
            if ev[i].atomic {
                hb[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if hb[i][k] {
                for j in 0..n {
                    if hb[k][j] {
                        hb[i][j] = true;
                    }
                }
            }
        }
    }
    hb
}

/// Unordered conflicting pairs `(i, j)`, `i < j`, per the reference
/// happens-before.
pub fn reference_races(trace: &Trace) -> BTreeSet<(usize, usize)> {
    let hb = reference_hb(trace);
    let ev = &trace.events;
    let mut out = BTreeSet::new();
    for j in 0..ev.len() {
        for i in 0..j {
            let (a, b) = (&ev[i], &ev[j]);
            if a.tid == b.tid || a.init_store || b.init_store || a.fault.is_some() || b.fault.is_some() {
                continue;
            }
            let (Some(la), Some(lb)) = (a.loc, b.loc) else { continue };
            let wa = matches!(a.kind, EventKind::Write | EventKind::Rmw);
            let wb = matches!(b.kind, EventKind::Write | EventKind::Rmw);
            let accesses = a.is_access() && b.is_access();
            if accesses && la.overlaps(&lb) && (wa || wb) && !(a.atomic && b.atomic) && !hb[i][j] {
                out.insert((i, j));
            }
        }
    }
    out
}
