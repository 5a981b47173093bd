use std::collections::BTreeMap;

use super::{Fresh, PassReport};
use crate::ir::{BinOp, Block, Function, Inst, InstKind, Operand, Pred, Program, SemType, SrcLoc};

/// Back-edges `(from, to)` found by a depth-first walk from the entry block.
pub(crate) fn back_edges(f: &Function) -> Vec<(usize, usize)> {
    let n = f.blocks.len();
    if n == 0 {
        return Vec::new();
    }
    let succs: Vec<Vec<usize>> = f
        .blocks
        .iter()
        .map(|b| {
            b.insts
                .iter()
                .flat_map(|i| i.kind.successors())
                .filter_map(|l| f.block_index(l))
                .collect()
        })
        .collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    let mut edges = Vec::new();
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    color[0] = 1;
    while let Some((b, i)) = stack.last_mut() {
        let b = *b;
        if *i < succs[b].len() {
            let s = succs[b][*i];
            *i += 1;
            match color[s] {
                0 => {
                    color[s] = 1;
                    stack.push((s, 0));
                }
                1 => edges.push((b, s)),
                _ => {}
            }
        } else {
            color[b] = 2;
            stack.pop();
        }
    }
    edges
}

fn is_latch(label: &str) -> bool {
    label.starts_with("__lb") && label.ends_with("_latch")
}

/// Guards every loop with an iteration counter: the header may run at most
/// `k` times per entry into the loop, after which the thread stops with a
/// bound-exceeded terminator.
pub fn bound_loops(program: &Program, k: u32) -> (Program, PassReport) {
    let mut p = program.clone();
    let mut report = PassReport::default();
    for f in p.functions.values_mut() {
        report.loops_bounded += bound_function(f, k);
    }
    (p, report)
}

fn bound_function(f: &mut Function, k: u32) -> usize {
    let mut by_header: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (from, to) in back_edges(f) {
        if !is_latch(&f.blocks[from].label) {
            by_header.entry(to).or_default().push(from);
        }
    }
    if by_header.is_empty() {
        return 0;
    }
    let mut fresh = Fresh::new(f);
    let headers: Vec<(String, Vec<String>)> = by_header
        .iter()
        .map(|(h, srcs)| {
            (
                f.blocks[*h].label.clone(),
                srcs.iter().map(|s| f.blocks[*s].label.clone()).collect(),
            )
        })
        .collect();
    let count = headers.len();

    for (header, sources) in headers {
        let n = fresh.index("__lb", &["enter", "latch", "exceeded", "c"]);
        let ctr = format!("__lb{n}");
        let enter = format!("__lb{n}_enter");
        let latch = format!("__lb{n}_latch");
        let exceeded = format!("__lb{n}_exceeded");
        let hidx = f.block_index(&header).expect("header exists");
        let hloc = f.blocks[hidx]
            .insts
            .first()
            .map(|i| i.loc.clone())
            .unwrap_or_else(|| SrcLoc::new("<loop>", 0));
        let src_block = f.block_index(&sources[0]).expect("source exists");
        let lloc = f.blocks[src_block]
            .insts
            .last()
            .map(|i| i.loc.clone())
            .unwrap_or_else(|| hloc.clone());

        for b in &mut f.blocks {
            let is_back = sources.contains(&b.label);
            for inst in &mut b.insts {
                for t in inst.kind.successors_mut() {
                    if *t == header {
                        *t = if is_back { latch.clone() } else { enter.clone() };
                    }
                }
            }
        }

        let enter_block = Block {
            label: enter.clone(),
            insts: vec![
                Inst::new(
                    Some(&ctr),
                    InstKind::BinOp {
                        op: BinOp::Add,
                        ty: SemType::I64,
                        lhs: Operand::Const(0),
                        rhs: Operand::Const(0),
                    },
                    hloc.clone(),
                ),
                Inst::new(None, InstKind::Br { target: header.clone() }, hloc.clone()),
            ],
        };
        let latch_block = Block {
            label: latch,
            insts: vec![
                Inst::new(
                    Some(&ctr),
                    InstKind::BinOp {
                        op: BinOp::Add,
                        ty: SemType::I64,
                        lhs: Operand::Reg(ctr.clone()),
                        rhs: Operand::Const(1),
                    },
                    lloc.clone(),
                ),
                Inst::new(
                    Some(&format!("{ctr}_c")),
                    InstKind::Icmp {
                        pred: Pred::Sge,
                        lhs: Operand::Reg(ctr.clone()),
                        rhs: Operand::Const(k as i64),
                    },
                    lloc.clone(),
                ),
                Inst::new(
                    None,
                    InstKind::CondBr {
                        cond: Operand::Reg(format!("{ctr}_c")),
                        if_true: exceeded.clone(),
                        if_false: header.clone(),
                    },
                    lloc.clone(),
                ),
            ],
        };
        let exceeded_block = Block {
            label: exceeded,
            insts: vec![Inst::new(None, InstKind::BoundExceeded, lloc)],
        };
        if hidx == 0 {
            f.blocks.insert(0, enter_block);
        } else {
            f.blocks.push(enter_block);
        }
        f.blocks.push(latch_block);
        f.blocks.push(exceeded_block);
    }
    count
}
