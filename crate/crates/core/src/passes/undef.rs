use super::PassReport;
use crate::ir::{Inst, InstKind, Operand, Program, SemType};

/// The undef stores that initialize a fresh `size`-byte allocation held in
/// register `reg`: 64-bit stores over the 8-aligned prefix, byte stores for
/// the rest.
pub(crate) fn undef_sequence(reg: &str, size: u64, alloca: &Inst) -> Vec<Inst> {
    let mut out = Vec::new();
    let words = size / 8;
    let chunks = (0..words)
        .map(|k| (k * 8, SemType::I64))
        .chain((words * 8..size).map(|o| (o, SemType::I8)));
    for (offset, ty) in chunks {
        let addr = if offset == 0 {
            Operand::reg(reg)
        } else {
            let r = format!("__ui_{reg}_{offset}");
            out.push(Inst {
                result: Some(r.clone()),
                kind: InstKind::Gep {
                    base: Operand::reg(reg),
                    offset: Operand::Const(offset as i64),
                },
                loc: alloca.loc.clone(),
            });
            Operand::Reg(r)
        };
        out.push(Inst {
            result: None,
            kind: InstKind::Store {
                ty,
                value: Operand::Undef,
                addr,
                ordering: None,
            },
            loc: alloca.loc.clone(),
        });
    }
    out
}

fn store_count(seq: &[Inst]) -> usize {
    seq.iter()
        .filter(|i| matches!(i.kind, InstKind::Store { .. }))
        .count()
}

/// Writes undef over every byte of each stack allocation right after it is
/// made. Storing undef stores zero, so later reads of bytes the program never
/// wrote see 0 instead of faulting.
pub fn init_undef(program: &Program) -> (Program, PassReport) {
    let mut p = program.clone();
    let mut report = PassReport::default();
    for f in p.functions.values_mut() {
        for b in &mut f.blocks {
            let insts = std::mem::take(&mut b.insts);
            let mut out = Vec::with_capacity(insts.len());
            let mut i = 0;
            while i < insts.len() {
                let inst = &insts[i];
                out.push(inst.clone());
                i += 1;
                let (InstKind::Alloca { size }, Some(reg)) = (&inst.kind, &inst.result) else {
                    continue;
                };
                let seq = undef_sequence(reg, *size, inst);
                let present = insts.len() - i >= seq.len() && insts[i..i + seq.len()] == seq[..];
                if !present {
                    report.undef_stores += store_count(&seq);
                    out.extend(seq);
                }
            }
            b.insts = out;
        }
    }
    (p, report)
}
