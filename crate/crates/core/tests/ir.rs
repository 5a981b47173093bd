mod common;

use minimc::ir::{
    link, link_with, parse_module, print_module, print_program, validate, BinOp, Block,
    ExternDecl, Function, Global, Inst, InstKind, InterceptTable, LinkError, Module, Operand,
    Ordering, Param, Pred, RmwOp, SemType, SrcLoc,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Random module ASTs. Names come from small pools so that references
// resolve and symbol kinds never collide.

const FILES: &[&str] = &["a.mcir", "dir/b.c", "with space.rs", "odd:name.c"];
const LABELS: &[&str] = &["entry", "loop", "exit.1", "b$2", "_tail"];
const REGS: &[&str] = &["x", "y", "0", "tmp.1", "r$"];
const GLOBALS: &[&str] = &["counter", "FLAG", "g.x"];
const FUNCS: &[&str] = &["main", "worker", "helper_2"];
const EXTERNS: &[&str] = &["ext", "thread_spawn"];

fn ty() -> impl Strategy<Value = SemType> {
    prop_oneof![
        Just(SemType::I8),
        Just(SemType::I16),
        Just(SemType::I32),
        Just(SemType::I64),
        Just(SemType::Ptr)
    ]
}

fn ordering() -> impl Strategy<Value = Ordering> {
    prop_oneof![
        Just(Ordering::Relaxed),
        Just(Ordering::Acquire),
        Just(Ordering::Release),
        Just(Ordering::AcqRel),
        Just(Ordering::SeqCst)
    ]
}

fn operand() -> impl Strategy<Value = Operand> {
    prop_oneof![
        prop::sample::select(REGS).prop_map(|r| Operand::Reg(r.to_string())),
        prop::sample::select(GLOBALS).prop_map(|g| Operand::Sym(g.to_string())),
        any::<i64>().prop_map(Operand::Const),
        Just(Operand::Undef),
    ]
}

fn label() -> impl Strategy<Value = String> {
    prop::sample::select(LABELS).prop_map(str::to_string)
}

fn loc() -> impl Strategy<Value = SrcLoc> {
    (prop::sample::select(FILES), 0u32..100_000).prop_map(|(f, l)| SrcLoc::new(f, l))
}

fn kind() -> impl Strategy<Value = InstKind> {
    let ops = || operand();
    prop_oneof![
        (0u64..1 << 20).prop_map(|size| InstKind::Alloca { size }),
        (ty(), ops(), prop::option::of(ordering()))
            .prop_map(|(ty, addr, ordering)| InstKind::Load { ty, addr, ordering }),
        (ty(), ops(), ops(), prop::option::of(ordering())).prop_map(|(ty, value, addr, ordering)| {
            InstKind::Store {
                ty,
                value,
                addr,
                ordering,
            }
        }),
        (
            prop_oneof![Just(RmwOp::Add), Just(RmwOp::Sub), Just(RmwOp::Xchg)],
            ty(),
            ops(),
            ops(),
            ordering()
        )
            .prop_map(|(op, ty, addr, operand, ordering)| InstKind::Rmw {
                op,
                ty,
                addr,
                operand,
                ordering
            }),
        (ops(), ops(), ops()).prop_map(|(dst, src, len)| InstKind::Memcpy { dst, src, len }),
        (ops(), ops(), ops()).prop_map(|(dst, src, len)| InstKind::Memmove { dst, src, len }),
        (ops(), ops(), ops()).prop_map(|(dst, byte, len)| InstKind::Memset { dst, byte, len }),
        (prop::sample::select(FUNCS), ops()).prop_map(|(f, arg)| InstKind::Spawn {
            func: f.to_string(),
            arg
        }),
        ops().prop_map(|handle| InstKind::Join { handle }),
        (prop::sample::select(FUNCS), prop::collection::vec(ops(), 0..3))
            .prop_map(|(f, args)| InstKind::Call { func: f.to_string(), args }),
        (prop::sample::select(EXTERNS), prop::collection::vec(ops(), 0..3))
            .prop_map(|(f, args)| InstKind::ExternCall { func: f.to_string(), args }),
        (prop::sample::select(BinOp::ALL.to_vec()), ty(), ops(), ops())
            .prop_map(|(op, ty, lhs, rhs)| InstKind::BinOp { op, ty, lhs, rhs }),
        (prop::sample::select(Pred::ALL.to_vec()), ops(), ops())
            .prop_map(|(pred, lhs, rhs)| InstKind::Icmp { pred, lhs, rhs }),
        (ops(), ops()).prop_map(|(base, offset)| InstKind::Gep { base, offset }),
        label().prop_map(|target| InstKind::Br { target }),
        (ops(), label(), label()).prop_map(|(cond, if_true, if_false)| InstKind::CondBr {
            cond,
            if_true,
            if_false
        }),
        ops().prop_map(|cond| InstKind::Assert { cond }),
        "[a-z \"\\\\\n\t{}!;:]{0,12}".prop_map(|message| InstKind::Panic { message }),
        prop::option::of(ops()).prop_map(|value| InstKind::Ret { value }),
        prop::sample::select(GLOBALS).prop_map(|g| InstKind::GlobalRef { symbol: g.to_string() }),
        Just(InstKind::BoundExceeded),
    ]
}

fn inst() -> impl Strategy<Value = Inst> {
    (kind(), prop::sample::select(REGS), any::<bool>(), loc()).prop_map(|(kind, r, want, loc)| {
        let result = if kind.requires_result() || (want && kind.allows_result()) {
            Some(r.to_string())
        } else {
            None
        };
        Inst { result, kind, loc }
    })
}

fn function(name: &'static str) -> impl Strategy<Value = Function> {
    (
        prop::collection::vec((prop::sample::select(REGS), ty()), 0..3),
        prop::collection::vec(prop::collection::vec(inst(), 0..5), 0..LABELS.len()),
    )
        .prop_map(move |(params, blocks)| {
            // Branch targets must name blocks of this function.
            let labels: Vec<String> = LABELS[..blocks.len()].iter().map(|s| s.to_string()).collect();
            let blocks = blocks
                .into_iter()
                .enumerate()
                .map(|(i, mut insts)| {
                    for inst in &mut insts {
                        for t in inst.kind.successors_mut() {
                            if !labels.contains(t) {
                                *t = labels[i].clone();
                            }
                        }
                    }
                    Block {
                        label: labels[i].clone(),
                        insts,
                    }
                })
                .collect();
            Function {
                name: name.to_string(),
                params: params
                    .into_iter()
                    .map(|(n, ty)| Param { name: n.to_string(), ty })
                    .collect(),
                blocks,
            }
        })
}

fn module() -> impl Strategy<Value = Module> {
    (
        prop::collection::vec((ty(), any::<i64>()), GLOBALS.len()),
        prop::collection::vec(prop::collection::vec(ty(), 0..3), EXTERNS.len()),
        function("main"),
        function("worker"),
        function("helper_2"),
    )
        .prop_map(|(globals, externs, f1, f2, f3)| {
            let mut m = Module {
                name: "m.mcir".into(),
                ..Module::default()
            };
            for (name, (ty, init)) in GLOBALS.iter().zip(globals) {
                m.globals.insert(name.to_string(), Global { name: name.to_string(), ty, init });
            }
            for (name, params) in EXTERNS.iter().zip(externs) {
                m.externs.insert(name.to_string(), ExternDecl { name: name.to_string(), params });
            }
            for f in [f1, f2, f3] {
                m.functions.insert(f.name.clone(), f);
            }
            m
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_then_parse_is_identity(m in module()) {
        let text = print_module(&m);
        let back = parse_module("m.mcir", &text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(print_module(&back), text);
    }

    #[test]
    fn generated_programs_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::gen_conc(&mut rng, &common::ConcParams::default());
        let m = parse_module("gen.mcir", &p.text).unwrap();
        let again = parse_module("gen.mcir", &print_module(&m)).unwrap();
        prop_assert_eq!(again, m);
    }

    #[test]
    fn link_ignores_module_order(seed in any::<u64>(), rot in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::gen_conc(&mut rng, &common::ConcParams::default());
        let whole = parse_module("gen.mcir", &p.text).unwrap();
        // Split into three modules: globals, children, main.
        let mut parts = vec![
            Module { name: "globals.mcir".into(), ..Module::default() },
            Module { name: "children.mcir".into(), ..Module::default() },
            Module { name: "main.mcir".into(), ..Module::default() },
        ];
        parts[0].globals = whole.globals.clone();
        for (name, f) in &whole.functions {
            let k = if name == "main" { 2 } else { 1 };
            parts[k].functions.insert(name.clone(), f.clone());
        }
        let a = link(&parts).unwrap();
        parts.rotate_left(rot);
        let b = link(&parts).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(print_program(&a), print_program(&b));
        prop_assert!(validate(&a).is_empty());
    }
}

#[test]
fn parse_error_reports_position_and_expected_tokens() {
    let err = parse_module("bad.mcir", "define @main() {\nentry:\n  %x = load i64\n}\n").unwrap_err();
    assert_eq!((err.file.as_str(), err.line), ("bad.mcir", 3));
    assert_eq!(err.col, 16);
    assert!(err.expected().iter().any(|e| e == "register"), "{err}");

    let err = parse_module("bad.mcir", "global @g : i64 = 0\nglobal @g : i64 = 1\n").unwrap_err();
    assert_eq!(err.line, 2);
    assert!(err.to_string().contains("duplicate symbol @g"), "{err}");

    let err = parse_module("bad.mcir", "define @main() {\n  %x = frob i64 1, 2\n}\n").unwrap_err();
    assert!(err.expected().iter().any(|e| e == "load"), "{err}");
}

#[test]
fn branch_on_undef_parses_as_conditional() {
    let m = parse_module("u.mcir", "define @main() {\na:\n  br undef, a, a\n}\n").unwrap();
    let f = &m.functions["main"];
    assert!(matches!(f.blocks[0].insts[0].kind, InstKind::CondBr { cond: Operand::Undef, .. }));
}

#[test]
fn default_locations_are_file_and_line() {
    let m = parse_module("loc.mcir", "define @main() {\nentry:\n\n  ret !\"other.c:41\"\n}\n").unwrap();
    assert_eq!(m.functions["main"].blocks[0].insts[0].loc, SrcLoc::new("other.c", 41));
    let m = parse_module("loc.mcir", "define @main() {\nentry:\n\n  ret\n}\n").unwrap();
    assert_eq!(m.functions["main"].blocks[0].insts[0].loc, SrcLoc::new("loc.mcir", 4));
}

#[test]
fn link_reports_duplicates_and_unresolved() {
    let a = parse_module("a.mcir", "define @f() {\n  ret\n}\n").unwrap();
    let b = parse_module("b.mcir", "define @f() {\n  ret\n}\ndefine @main() {\n  ret\n}\n").unwrap();
    assert!(matches!(link(&[a, b]), Err(LinkError::DuplicateDefinition { .. })));

    let c = parse_module("c.mcir", "declare @missing()\ndefine @main() {\n  call @missing()\n  ret\n}\n").unwrap();
    assert_eq!(link(std::slice::from_ref(&c)), Err(LinkError::UnresolvedSymbol("missing".into())));
    // An extern defined by another module resolves to a plain call.
    let d = parse_module("d.mcir", "define @missing() {\n  ret\n}\n").unwrap();
    let p = link(&[c, d]).unwrap();
    assert!(p.externs.is_empty());
    assert!(validate(&p).is_empty());
}

#[test]
fn threading_symbols_survive_linking_only_when_intercepted() {
    let m = parse_module(
        "t.mcir",
        "declare @thread_spawn(ptr, i64)\ndefine @w(%a: i64) {\n  ret 0\n}\n\
         define @main() {\n  %h = call @thread_spawn(@w, 0)\n  ret\n}\n",
    )
    .unwrap();
    assert!(link(std::slice::from_ref(&m)).unwrap().externs.contains_key("thread_spawn"));
    assert!(matches!(
        link_with(&[m], &InterceptTable::empty()),
        Err(LinkError::UnresolvedSymbol(_))
    ));
}

#[test]
fn validation_finds_structural_errors() {
    let cases = [
        ("define @main() {\nentry:\n  %x = add i64 1, 2\n}\n", "terminator"),
        ("define @main() {\nentry:\n  store i64 1, %p\n  ret\n}\n", "use before def"),
        ("define @f(%a: i64) {\n  ret\n}\ndefine @main() {\n  call @f()\n  ret\n}\n", "takes 1 arguments"),
        ("define @main() {\nentry:\n  %v = atomic_load i64 @g release\n  ret\n}\nglobal @g : i64 = 0\n", "not valid for a load"),
        ("define @main(%a: i64) {\nentry:\n  ret\n}\n", "@main"),
        ("define @w() {\n  ret\n}\ndefine @main() {\n  %t = spawn @w(0)\n  ret\n}\n", "spawn"),
    ];
    for (src, needle) in cases {
        let m = parse_module("v.mcir", src).unwrap_or_else(|e| panic!("{e}"));
        let p = link(&[m]).unwrap();
        let diags = validate(&p);
        assert!(
            diags.iter().any(|d| d.to_string().contains(needle)),
            "{needle:?} not in {diags:?}"
        );
    }
}

#[test]
fn corpus_validates_and_round_trips() {
    for set in common::corpus_sets() {
        let modules = minimc::driver::read_modules(&set).unwrap();
        for m in &modules {
            assert_eq!(&parse_module(&m.name, &print_module(m)).unwrap(), m);
        }
        let p = link(&modules).unwrap();
        assert!(validate(&p).is_empty(), "{set:?}: {:?}", validate(&p));
    }
}
