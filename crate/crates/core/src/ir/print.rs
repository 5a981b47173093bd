//! Canonical textual form of modules and programs.
//!
//! Every instruction carries an explicit `!"file:line"` annotation so that
//! printing and reparsing preserves source locations exactly.

use std::fmt::Write;

use super::{Function, Inst, InstKind, Module, Program};

pub fn print_module(module: &Module) -> String {
    let mut out = String::new();
    print_items(
        &mut out,
        module.globals.values(),
        module.externs.values(),
        module.functions.values(),
    );
    out
}

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    print_items(
        &mut out,
        program.globals.values(),
        program.externs.values(),
        program.functions.values(),
    );
    out
}

fn print_items<'a>(
    out: &mut String,
    globals: impl Iterator<Item = &'a super::Global>,
    externs: impl Iterator<Item = &'a super::ExternDecl>,
    functions: impl Iterator<Item = &'a Function>,
) {
    let mut sections: Vec<String> = Vec::new();
    let globals: Vec<String> = globals
        .map(|g| format!("global @{} : {} = {}\n", g.name, g.ty, g.init))
        .collect();
    if !globals.is_empty() {
        sections.push(globals.concat());
    }
    let externs: Vec<String> = externs
        .map(|d| {
            let params: Vec<&str> = d.params.iter().map(|t| t.name()).collect();
            format!("declare @{}({})\n", d.name, params.join(", "))
        })
        .collect();
    if !externs.is_empty() {
        sections.push(externs.concat());
    }
    for f in functions {
        sections.push(print_function(f));
    }
    out.push_str(&sections.join("\n"));
}

fn print_function(f: &Function) -> String {
    let mut s = String::new();
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| format!("%{}: {}", p.name, p.ty))
        .collect();
    let _ = writeln!(s, "define @{}({}) {{", f.name, params.join(", "));
    for b in &f.blocks {
        let _ = writeln!(s, "{}:", b.label);
        for inst in &b.insts {
            let _ = writeln!(s, "  {}", print_inst(inst));
        }
    }
    s.push_str("}\n");
    s
}

fn join_ops(ops: &[super::Operand]) -> String {
    ops.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(", ")
}

/// One instruction, without indentation or trailing newline.
pub fn print_inst(inst: &Inst) -> String {
    let mut s = String::new();
    if let Some(r) = &inst.result {
        let _ = write!(s, "%{r} = ");
    }
    let _ = match &inst.kind {
        InstKind::Alloca { size } => write!(s, "alloca {size}"),
        InstKind::Load {
            ty,
            addr,
            ordering: None,
        } => write!(s, "load {ty} {addr}"),
        InstKind::Load {
            ty,
            addr,
            ordering: Some(o),
        } => write!(s, "atomic_load {ty} {addr} {o}"),
        InstKind::Store {
            ty,
            value,
            addr,
            ordering: None,
        } => write!(s, "store {ty} {value}, {addr}"),
        InstKind::Store {
            ty,
            value,
            addr,
            ordering: Some(o),
        } => write!(s, "atomic_store {ty} {value}, {addr} {o}"),
        InstKind::Rmw {
            op,
            ty,
            addr,
            operand,
            ordering,
        } => write!(s, "atomic_rmw {} {ty} {addr}, {operand} {ordering}", op.name()),
        InstKind::Memcpy { dst, src, len } => write!(s, "memcpy {dst}, {src}, {len}"),
        InstKind::Memmove { dst, src, len } => write!(s, "memmove {dst}, {src}, {len}"),
        InstKind::Memset { dst, byte, len } => write!(s, "memset {dst}, {byte}, {len}"),
        InstKind::Spawn { func, arg } => write!(s, "spawn @{func}({arg})"),
        InstKind::Join { handle } => write!(s, "join {handle}"),
        InstKind::Call { func, args } | InstKind::ExternCall { func, args } => {
            write!(s, "call @{func}({})", join_ops(args))
        }
        InstKind::BinOp { op, ty, lhs, rhs } => write!(s, "{} {ty} {lhs}, {rhs}", op.name()),
        InstKind::Icmp { pred, lhs, rhs } => write!(s, "icmp {} {lhs}, {rhs}", pred.name()),
        InstKind::Gep { base, offset } => write!(s, "gep {base}, {offset}"),
        InstKind::Br { target } => write!(s, "br {target}"),
        InstKind::CondBr {
            cond,
            if_true,
            if_false,
        } => write!(s, "br {cond}, {if_true}, {if_false}"),
        InstKind::Assert { cond } => write!(s, "assert {cond}"),
        InstKind::Panic { message } => write!(s, "panic {}", quote(message)),
        InstKind::Ret { value: None } => write!(s, "ret"),
        InstKind::Ret { value: Some(v) } => write!(s, "ret {v}"),
        InstKind::GlobalRef { symbol } => write!(s, "globalref @{symbol}"),
        InstKind::BoundExceeded => write!(s, "bound_exceeded"),
    };
    let _ = write!(s, " !{}", quote(&inst.loc.to_string()));
    s
}

fn quote(text: &str) -> String {
    let mut s = String::with_capacity(text.len() + 2);
    s.push('"');
    for c in text.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}
