use std::collections::{BTreeMap, BTreeSet};

use super::PassReport;
use crate::ir::{Function, InstKind, Operand, Program};

/// Removes allocations that are only ever initialized with undef.
pub fn eliminate_dead_allocs(program: &Program) -> (Program, PassReport) {
    let mut p = program.clone();
    let mut report = PassReport::default();
    for f in p.functions.values_mut() {
        report.allocas_removed += eliminate(f);
    }
    (p, report)
}

fn is_undef_store_to(kind: &InstKind, reg: &str) -> bool {
    matches!(
        kind,
        InstKind::Store { value: Operand::Undef, addr: Operand::Reg(a), ordering: None, .. } if a == reg
    )
}

fn eliminate(f: &mut Function) -> usize {
    let mut defs: BTreeMap<&str, usize> = BTreeMap::new();
    let mut users: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for (bi, b) in f.blocks.iter().enumerate() {
        for (ii, inst) in b.insts.iter().enumerate() {
            if let Some(r) = &inst.result {
                *defs.entry(r).or_default() += 1;
            }
            for op in inst.kind.operands() {
                if let Some(r) = op.as_reg() {
                    users.entry(r).or_default().push((bi, ii));
                }
            }
        }
    }
    let single = |r: &str| defs.get(r) == Some(&1);
    let kind_at = |(b, i): (usize, usize)| &f.blocks[b].insts[i];

    let mut remove: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut removed = 0;
    for (bi, b) in f.blocks.iter().enumerate() {
        for (ii, inst) in b.insts.iter().enumerate() {
            let (InstKind::Alloca { .. }, Some(r)) = (&inst.kind, &inst.result) else {
                continue;
            };
            if !single(r) {
                continue;
            }
            let mut dead = vec![(bi, ii)];
            let ok = users.get(r.as_str()).into_iter().flatten().all(|&u| {
                let user = kind_at(u);
                if is_undef_store_to(&user.kind, r) {
                    dead.push(u);
                    return true;
                }
                let (InstKind::Gep { base, offset }, Some(g)) = (&user.kind, &user.result) else {
                    return false;
                };
                if base.as_reg() != Some(r) || offset.as_reg() == Some(r) || !single(g) {
                    return false;
                }
                dead.push(u);
                users.get(g.as_str()).into_iter().flatten().all(|&gu| {
                    let ok = is_undef_store_to(&kind_at(gu).kind, g);
                    if ok {
                        dead.push(gu);
                    }
                    ok
                })
            });
            if ok {
                removed += 1;
                remove.extend(dead);
            }
        }
    }
    if removed > 0 {
        for (bi, b) in f.blocks.iter_mut().enumerate() {
            let mut ii = 0;
            b.insts.retain(|_| {
                let keep = !remove.contains(&(bi, ii));
                ii += 1;
                keep
            });
        }
    }
    removed
}
