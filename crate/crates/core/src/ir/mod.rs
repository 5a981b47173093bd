//! The MCIR language: a small textual IR for concurrent programs.
//!
//! Memory is byte-addressed and untyped: `alloca` hands out a byte array and
//! every load or store names the type it accesses the bytes with. Pointers are
//! symbolic `(allocation, offset)` pairs, never integers.
//!
//! A source file is parsed into a [`Module`]; one or more modules are linked
//! into a [`Program`], which is what the transformation passes and the
//! verifier operate on.

mod link;
mod parse;
mod print;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use link::{link, link_with, InterceptTable, Intrinsic, LinkError};
pub use parse::{parse_module, ParseError};
pub use print::{print_module, print_program};
pub use validate::{validate, Diagnostic};

/// Type of a typed memory access or arithmetic operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemType {
    I8,
    I16,
    I32,
    I64,
    Ptr,
}

impl SemType {
    /// Width in bytes.
    pub fn width(self) -> u8 {
        match self {
            SemType::I8 => 1,
            SemType::I16 => 2,
            SemType::I32 => 4,
            SemType::I64 | SemType::Ptr => 8,
        }
    }

    pub fn int_of_width(width: u8) -> Option<SemType> {
        match width {
            1 => Some(SemType::I8),
            2 => Some(SemType::I16),
            4 => Some(SemType::I32),
            8 => Some(SemType::I64),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SemType::I8 => "i8",
            SemType::I16 => "i16",
            SemType::I32 => "i32",
            SemType::I64 => "i64",
            SemType::Ptr => "ptr",
        }
    }

    pub fn from_name(s: &str) -> Option<SemType> {
        Some(match s {
            "i8" => SemType::I8,
            "i16" => SemType::I16,
            "i32" => SemType::I32,
            "i64" => SemType::I64,
            "ptr" => SemType::Ptr,
            _ => return None,
        })
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Memory ordering annotation of an atomic access.
///
/// Exploration is sequentially consistent, so orderings are recorded on
/// events but never change what an execution can observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ordering {
    Relaxed,
    Acquire,
    Release,
    AcqRel,
    SeqCst,
}

impl Ordering {
    pub fn name(self) -> &'static str {
        match self {
            Ordering::Relaxed => "relaxed",
            Ordering::Acquire => "acquire",
            Ordering::Release => "release",
            Ordering::AcqRel => "acq_rel",
            Ordering::SeqCst => "seq_cst",
        }
    }

    pub fn from_name(s: &str) -> Option<Ordering> {
        Some(match s {
            "relaxed" => Ordering::Relaxed,
            "acquire" => Ordering::Acquire,
            "release" => Ordering::Release,
            "acq_rel" => Ordering::AcqRel,
            "seq_cst" => Ordering::SeqCst,
            _ => return None,
        })
    }

    pub fn valid_for_load(self) -> bool {
        matches!(self, Ordering::Relaxed | Ordering::Acquire | Ordering::SeqCst)
    }

    pub fn valid_for_store(self) -> bool {
        matches!(self, Ordering::Relaxed | Ordering::Release | Ordering::SeqCst)
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RmwOp {
    Add,
    Sub,
    Xchg,
}

impl RmwOp {
    pub fn name(self) -> &'static str {
        match self {
            RmwOp::Add => "add",
            RmwOp::Sub => "sub",
            RmwOp::Xchg => "xchg",
        }
    }

    pub fn from_name(s: &str) -> Option<RmwOp> {
        Some(match s {
            "add" => RmwOp::Add,
            "sub" => RmwOp::Sub,
            "xchg" => RmwOp::Xchg,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    UDiv,
    SDiv,
    URem,
    SRem,
    And,
    Or,
    Xor,
    Shl,
    LShr,
    AShr,
}

impl BinOp {
    pub const ALL: [BinOp; 13] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::UDiv,
        BinOp::SDiv,
        BinOp::URem,
        BinOp::SRem,
        BinOp::And,
        BinOp::Or,
        BinOp::Xor,
        BinOp::Shl,
        BinOp::LShr,
        BinOp::AShr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::UDiv => "udiv",
            BinOp::SDiv => "sdiv",
            BinOp::URem => "urem",
            BinOp::SRem => "srem",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Xor => "xor",
            BinOp::Shl => "shl",
            BinOp::LShr => "lshr",
            BinOp::AShr => "ashr",
        }
    }

    pub fn from_name(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pred {
    Eq,
    Ne,
    Slt,
    Sle,
    Sgt,
    Sge,
    Ult,
    Ule,
    Ugt,
    Uge,
}

impl Pred {
    pub const ALL: [Pred; 10] = [
        Pred::Eq,
        Pred::Ne,
        Pred::Slt,
        Pred::Sle,
        Pred::Sgt,
        Pred::Sge,
        Pred::Ult,
        Pred::Ule,
        Pred::Ugt,
        Pred::Uge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pred::Eq => "eq",
            Pred::Ne => "ne",
            Pred::Slt => "slt",
            Pred::Sle => "sle",
            Pred::Sgt => "sgt",
            Pred::Sge => "sge",
            Pred::Ult => "ult",
            Pred::Ule => "ule",
            Pred::Ugt => "ugt",
            Pred::Uge => "uge",
        }
    }

    pub fn from_name(s: &str) -> Option<Pred> {
        Pred::ALL.into_iter().find(|p| p.name() == s)
    }
}

/// Source position an instruction is attributed to in reports.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SrcLoc {
    pub file: Arc<str>,
    pub line: u32,
}

impl SrcLoc {
    pub fn new(file: &str, line: u32) -> Self {
        SrcLoc { file: Arc::from(file), line }
    }
}

impl fmt::Display for SrcLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// An instruction operand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    /// `%name`
    Reg(String),
    /// `@name`: the address of a global, or a function symbol where a
    /// function is expected (extern threading calls).
    Sym(String),
    Const(i64),
    Undef,
}

impl Operand {
    pub fn reg(name: &str) -> Operand {
        Operand::Reg(name.to_string())
    }

    pub fn as_reg(&self) -> Option<&str> {
        match self {
            Operand::Reg(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            Operand::Const(c) => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Reg(r) => write!(f, "%{r}"),
            Operand::Sym(s) => write!(f, "@{s}"),
            Operand::Const(c) => write!(f, "{c}"),
            Operand::Undef => f.write_str("undef"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InstKind {
    Alloca {
        size: u64,
    },
    Load {
        ty: SemType,
        addr: Operand,
        ordering: Option<Ordering>,
    },
    Store {
        ty: SemType,
        value: Operand,
        addr: Operand,
        ordering: Option<Ordering>,
    },
    Rmw {
        op: RmwOp,
        ty: SemType,
        addr: Operand,
        operand: Operand,
        ordering: Ordering,
    },
    Memcpy {
        dst: Operand,
        src: Operand,
        len: Operand,
    },
    Memmove {
        dst: Operand,
        src: Operand,
        len: Operand,
    },
    Memset {
        dst: Operand,
        byte: Operand,
        len: Operand,
    },
    Spawn {
        func: String,
        arg: Operand,
    },
    Join {
        handle: Operand,
    },
    Call {
        func: String,
        args: Vec<Operand>,
    },
    ExternCall {
        func: String,
        args: Vec<Operand>,
    },
    BinOp {
        op: BinOp,
        ty: SemType,
        lhs: Operand,
        rhs: Operand,
    },
    Icmp {
        pred: Pred,
        lhs: Operand,
        rhs: Operand,
    },
    Gep {
        base: Operand,
        offset: Operand,
    },
    Br {
        target: String,
    },
    CondBr {
        cond: Operand,
        if_true: String,
        if_false: String,
    },
    Assert {
        cond: Operand,
    },
    Panic {
        message: String,
    },
    Ret {
        value: Option<Operand>,
    },
    GlobalRef {
        symbol: String,
    },
    /// Inserted by loop bounding: the thread stops here, and the execution is
    /// reported as having hit the loop bound.
    BoundExceeded,
}

impl InstKind {
    pub fn is_terminator(&self) -> bool {
        matches!(
            self,
            InstKind::Br { .. }
                | InstKind::CondBr { .. }
                | InstKind::Ret { .. }
                | InstKind::Panic { .. }
                | InstKind::BoundExceeded
        )
    }

    pub fn is_intrinsic(&self) -> bool {
        matches!(
            self,
            InstKind::Memcpy { .. } | InstKind::Memmove { .. } | InstKind::Memset { .. }
        )
    }

    /// Whether the instruction must write a result register.
    pub fn requires_result(&self) -> bool {
        matches!(
            self,
            InstKind::Alloca { .. }
                | InstKind::Load { .. }
                | InstKind::Rmw { .. }
                | InstKind::Spawn { .. }
                | InstKind::BinOp { .. }
                | InstKind::Icmp { .. }
                | InstKind::Gep { .. }
                | InstKind::GlobalRef { .. }
        )
    }

    /// Whether the instruction may write a result register at all.
    pub fn allows_result(&self) -> bool {
        self.requires_result()
            || matches!(
                self,
                InstKind::Join { .. } | InstKind::Call { .. } | InstKind::ExternCall { .. }
            )
    }

    pub fn successors(&self) -> Vec<&str> {
        match self {
            InstKind::Br { target } => vec![target.as_str()],
            InstKind::CondBr {
                if_true, if_false, ..
            } => vec![if_true.as_str(), if_false.as_str()],
            _ => Vec::new(),
        }
    }

    pub fn successors_mut(&mut self) -> Vec<&mut String> {
        match self {
            InstKind::Br { target } => vec![target],
            InstKind::CondBr {
                if_true, if_false, ..
            } => vec![if_true, if_false],
            _ => Vec::new(),
        }
    }

    /// Operands read by the instruction, in textual order.
    pub fn operands(&self) -> Vec<&Operand> {
        match self {
            InstKind::Alloca { .. }
            | InstKind::Br { .. }
            | InstKind::Panic { .. }
            | InstKind::GlobalRef { .. }
            | InstKind::BoundExceeded => Vec::new(),
            InstKind::Load { addr, .. } => vec![addr],
            InstKind::Store { value, addr, .. } => vec![value, addr],
            InstKind::Rmw { addr, operand, .. } => vec![addr, operand],
            InstKind::Memcpy { dst, src, len } | InstKind::Memmove { dst, src, len } => {
                vec![dst, src, len]
            }
            InstKind::Memset { dst, byte, len } => vec![dst, byte, len],
            InstKind::Spawn { arg, .. } => vec![arg],
            InstKind::Join { handle } => vec![handle],
            InstKind::Call { args, .. } | InstKind::ExternCall { args, .. } => args.iter().collect(),
            InstKind::BinOp { lhs, rhs, .. } | InstKind::Icmp { lhs, rhs, .. } => vec![lhs, rhs],
            InstKind::Gep { base, offset } => vec![base, offset],
            InstKind::CondBr { cond, .. } | InstKind::Assert { cond } => vec![cond],
            InstKind::Ret { value } => value.iter().collect(),
        }
    }
}

/// One instruction with its optional result register and source location.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Inst {
    pub result: Option<String>,
    pub kind: InstKind,
    pub loc: SrcLoc,
}

impl Inst {
    pub fn new(result: Option<&str>, kind: InstKind, loc: SrcLoc) -> Self {
        Inst {
            result: result.map(str::to_string),
            kind,
            loc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub label: String,
    pub insts: Vec<Inst>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: SemType,
}

/// A function definition. The first block is the entry block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub blocks: Vec<Block>,
}

impl Function {
    pub fn entry(&self) -> &str {
        self.blocks.first().map(|b| b.label.as_str()).unwrap_or("")
    }

    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    pub fn insts(&self) -> impl Iterator<Item = &Inst> {
        self.blocks.iter().flat_map(|b| b.insts.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Global {
    pub name: String,
    pub ty: SemType,
    pub init: i64,
}

/// An external function declaration: `declare @name(types...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternDecl {
    pub name: String,
    pub params: Vec<SemType>,
}

impl ExternDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// One parsed MCIR file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Module {
    pub name: String,
    pub globals: BTreeMap<String, Global>,
    pub functions: BTreeMap<String, Function>,
    pub externs: BTreeMap<String, ExternDecl>,
}

impl Module {
    pub fn is_empty(&self) -> bool {
        self.globals.is_empty() && self.functions.is_empty() && self.externs.is_empty()
    }
}

/// A linked whole program, entered at `main`.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub globals: BTreeMap<String, Global>,
    pub functions: BTreeMap<String, Function>,
    /// Declarations left unresolved by linking; only threading symbols may
    /// remain here.
    pub externs: BTreeMap<String, ExternDecl>,
    /// Which module supplied each defined symbol.
    pub link_map: BTreeMap<String, String>,
}

impl Program {
    pub const ENTRY: &'static str = "main";

    pub fn main(&self) -> Option<&Function> {
        self.functions.get(Self::ENTRY)
    }

    pub fn insts(&self) -> impl Iterator<Item = (&Function, &Inst)> {
        self.functions
            .values()
            .flat_map(|f| f.insts().map(move |i| (f, i)))
    }
}

/// Equality ignores the link map, which only records provenance.
impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.globals == other.globals
            && self.functions == other.functions
            && self.externs == other.externs
    }
}

impl Eq for Program {}
