use super::{Fresh, PassReport};
use crate::ir::{BinOp, Diagnostic, Inst, InstKind, Operand, Program, SemType, SrcLoc};

/// Replaces constant-length memcpy, memmove and memset with typed accesses.
///
/// A length that is a multiple of 8 becomes 64-bit accesses, any other length
/// becomes byte accesses. Lengths above `limit`, or not known statically, are
/// left in place with a diagnostic; verification rejects them later.
pub fn lower_intrinsics(program: &Program, limit: u64) -> (Program, PassReport) {
    let mut p = program.clone();
    let mut report = PassReport::default();
    for f in p.functions.values_mut() {
        let mut fresh = Fresh::new(f);
        for b in &mut f.blocks {
            let mut out = Vec::with_capacity(b.insts.len());
            for inst in std::mem::take(&mut b.insts) {
                if !inst.kind.is_intrinsic() {
                    out.push(inst);
                    continue;
                }
                match lower_one(&inst, limit, &mut fresh) {
                    Ok(seq) => {
                        report.intrinsics_lowered += 1;
                        out.extend(seq);
                    }
                    Err(msg) => {
                        report.diagnostics.push(Diagnostic::new(
                            Some(inst.loc.clone()),
                            Some(&f.name),
                            format!("unsupported intrinsic: {msg}"),
                        ));
                        out.push(inst);
                    }
                }
            }
            b.insts = out;
        }
    }
    (p, report)
}

fn chunking(len: u64) -> (SemType, u64) {
    if len.is_multiple_of(8) {
        (SemType::I64, len / 8)
    } else {
        (SemType::I8, len)
    }
}

struct Emitter<'a> {
    loc: &'a SrcLoc,
    prefix: String,
    out: Vec<Inst>,
}

impl Emitter<'_> {
    fn push(&mut self, result: Option<String>, kind: InstKind) {
        self.out.push(Inst {
            result,
            kind,
            loc: self.loc.clone(),
        });
    }

    fn gep(&mut self, base: &Operand, offset: u64, tag: &str) -> Operand {
        let r = format!("{}_{tag}{offset}", self.prefix);
        self.push(
            Some(r.clone()),
            InstKind::Gep {
                base: base.clone(),
                offset: Operand::Const(offset as i64),
            },
        );
        Operand::Reg(r)
    }

    fn load(&mut self, ty: SemType, addr: Operand, offset: u64) -> Operand {
        let r = format!("{}_v{offset}", self.prefix);
        self.push(
            Some(r.clone()),
            InstKind::Load {
                ty,
                addr,
                ordering: None,
            },
        );
        Operand::Reg(r)
    }

    fn store(&mut self, ty: SemType, value: Operand, addr: Operand) {
        self.push(
            None,
            InstKind::Store {
                ty,
                value,
                addr,
                ordering: None,
            },
        );
    }
}

fn lower_one(inst: &Inst, limit: u64, fresh: &mut Fresh) -> Result<Vec<Inst>, String> {
    let (len, what) = match &inst.kind {
        InstKind::Memcpy { len, .. } => (len, "memcpy"),
        InstKind::Memmove { len, .. } => (len, "memmove"),
        InstKind::Memset { len, .. } => (len, "memset"),
        _ => unreachable!("caller checks is_intrinsic"),
    };
    let n = match len.as_const() {
        Some(n) if n >= 0 => n as u64,
        Some(n) => return Err(format!("{what} with negative length {n}")),
        None => return Err(format!("{what} with non-constant length {len}")),
    };
    if n > limit {
        return Err(format!("{what} of {n} bytes exceeds the {limit}-byte limit"));
    }
    let idx = fresh.index("__li", &[]);
    let mut e = Emitter {
        loc: &inst.loc,
        prefix: format!("__li{idx}"),
        out: Vec::new(),
    };
    let (ty, count) = chunking(n);
    let w = ty.width() as u64;
    match &inst.kind {
        InstKind::Memcpy { dst, src, .. } => {
            for k in 0..count {
                let s = e.gep(src, k * w, "s");
                let d = e.gep(dst, k * w, "d");
                let v = e.load(ty, s, k * w);
                e.store(ty, v, d);
            }
        }
        InstKind::Memmove { dst, src, .. } => {
            let mut vals = Vec::new();
            for k in 0..count {
                let s = e.gep(src, k * w, "s");
                vals.push(e.load(ty, s, k * w));
            }
            for (k, v) in vals.into_iter().enumerate() {
                let d = e.gep(dst, k as u64 * w, "d");
                e.store(ty, v, d);
            }
        }
        InstKind::Memset { dst, byte, .. } => {
            let fill = match (byte, ty) {
                (Operand::Const(b), SemType::I64) => {
                    Operand::Const(((*b as u8) as u64).wrapping_mul(0x0101_0101_0101_0101) as i64)
                }
                (Operand::Const(b), _) => Operand::Const((*b as u8) as i64),
                (other, SemType::I64) if count > 0 => {
                    let m = format!("{}_m", e.prefix);
                    let r = format!("{}_r", e.prefix);
                    e.push(
                        Some(m.clone()),
                        InstKind::BinOp {
                            op: BinOp::And,
                            ty: SemType::I64,
                            lhs: other.clone(),
                            rhs: Operand::Const(0xff),
                        },
                    );
                    e.push(
                        Some(r.clone()),
                        InstKind::BinOp {
                            op: BinOp::Mul,
                            ty: SemType::I64,
                            lhs: Operand::Reg(m),
                            rhs: Operand::Const(0x0101_0101_0101_0101),
                        },
                    );
                    Operand::Reg(r)
                }
                (other, _) => other.clone(),
            };
            for k in 0..count {
                let d = e.gep(dst, k * w, "d");
                e.store(ty, fill.clone(), d);
            }
        }
        _ => unreachable!(),
    }
    Ok(e.out)
}
