use thiserror::Error;

use super::{Fresh, PassReport};
use crate::ir::{InstKind, InterceptTable, Intrinsic, Operand, Program, SrcLoc};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterceptError {
    #[error("{loc}: @{symbol} takes {expected} arguments when intercepted, {found} given")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
        loc: SrcLoc,
    },
    #[error("{loc}: first argument of @{symbol} must name a defined function")]
    NotAFunction { symbol: String, loc: SrcLoc },
}

/// Rewrites calls to threading-library symbols into spawn and join
/// instructions and drops their declarations.
pub fn intercept_threads(
    program: &Program,
    table: &InterceptTable,
) -> Result<(Program, PassReport), InterceptError> {
    let mut p = program.clone();
    let mut report = PassReport::default();
    let defined: Vec<String> = p.functions.keys().cloned().collect();
    for f in p.functions.values_mut() {
        let mut fresh = Fresh::new(f);
        for b in &mut f.blocks {
            for inst in &mut b.insts {
                let InstKind::ExternCall { func, args } = &inst.kind else {
                    continue;
                };
                let Some(intrinsic) = table.get(func) else {
                    continue;
                };
                if args.len() != intrinsic.arity() {
                    return Err(InterceptError::Arity {
                        symbol: func.clone(),
                        expected: intrinsic.arity(),
                        found: args.len(),
                        loc: inst.loc.clone(),
                    });
                }
                inst.kind = match intrinsic {
                    Intrinsic::Spawn => {
                        let target = match &args[0] {
                            Operand::Sym(s) if defined.contains(s) => s.clone(),
                            _ => {
                                return Err(InterceptError::NotAFunction {
                                    symbol: func.clone(),
                                    loc: inst.loc.clone(),
                                })
                            }
                        };
                        if inst.result.is_none() {
                            let n = fresh.index("__th", &[]);
                            inst.result = Some(format!("__th{n}"));
                        }
                        InstKind::Spawn {
                            func: target,
                            arg: args[1].clone(),
                        }
                    }
                    Intrinsic::Join => InstKind::Join {
                        handle: args[0].clone(),
                    },
                };
                report.calls_intercepted += 1;
            }
        }
    }
    p.externs.retain(|name, _| !table.contains(name));
    Ok((p, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{link, parse_module};

    #[test]
    fn spawn_and_join_rewritten() {
        let src = "declare @thread_spawn(ptr, i64)\ndeclare @thread_join(i64)\n\
                   define @worker(%a: i64) {\n  ret 0\n}\n\
                   define @main() {\n  %t = call @thread_spawn(@worker, 5)\n  %r = call @thread_join(%t)\n  ret\n}\n";
        let p = link(&[parse_module("m.mcir", src).unwrap()]).unwrap();
        let (q, r) = intercept_threads(&p, &InterceptTable::default()).unwrap();
        assert_eq!(r.calls_intercepted, 2);
        assert!(q.externs.is_empty());
        let insts = &q.functions["main"].blocks[0].insts;
        assert_eq!(
            insts[0].kind,
            InstKind::Spawn {
                func: "worker".into(),
                arg: Operand::Const(5)
            }
        );
        assert!(matches!(insts[1].kind, InstKind::Join { .. }));
    }

    #[test]
    fn join_without_handle_is_an_error() {
        let src = "declare @pthread_join()\ndefine @main() {\n  call @pthread_join()\n  ret\n}\n";
        let p = link(&[parse_module("m.mcir", src).unwrap()]).unwrap();
        assert!(matches!(
            intercept_threads(&p, &InterceptTable::default()),
            Err(InterceptError::Arity { found: 0, .. })
        ));
    }
}
