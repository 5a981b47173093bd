use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Function, InstKind, Operand, Program, SrcLoc};

/// A validation finding attached to a source location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub loc: Option<SrcLoc>,
    pub function: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(loc: Option<SrcLoc>, function: Option<&str>, message: impl Into<String>) -> Self {
        Diagnostic {
            loc,
            function: function.map(str::to_string),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(loc) = &self.loc {
            write!(f, "{loc}: ")?;
        }
        if let Some(func) = &self.function {
            write!(f, "in @{func}: ")?;
        }
        f.write_str(&self.message)
    }
}

/// Checks the structural and typing rules the interpreter relies on.
/// Returns an empty list for a well-formed program.
pub fn validate(program: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    match program.main() {
        None => diags.push(Diagnostic::new(None, None, "program has no @main")),
        Some(main) if !main.params.is_empty() => diags.push(Diagnostic::new(
            None,
            Some("main"),
            "@main must take no parameters",
        )),
        _ => {}
    }
    for f in program.functions.values() {
        check_function(program, f, &mut diags);
    }
    diags
}

fn check_function(program: &Program, f: &Function, diags: &mut Vec<Diagnostic>) {
    let fname = Some(f.name.as_str());
    if f.blocks.is_empty() {
        diags.push(Diagnostic::new(None, fname, "function has no blocks"));
        return;
    }
    let mut labels = BTreeSet::new();
    for b in &f.blocks {
        if !labels.insert(b.label.as_str()) {
            diags.push(Diagnostic::new(None, fname, format!("duplicate label {}", b.label)));
        }
    }

    for b in &f.blocks {
        let terminators = b.insts.iter().filter(|i| i.kind.is_terminator()).count();
        match b.insts.last() {
            None => diags.push(Diagnostic::new(
                None,
                fname,
                format!("block {} is empty", b.label),
            )),
            Some(last) if !last.kind.is_terminator() => diags.push(Diagnostic::new(
                Some(last.loc.clone()),
                fname,
                format!("block {} does not end in a terminator", b.label),
            )),
            Some(last) if terminators > 1 => diags.push(Diagnostic::new(
                Some(last.loc.clone()),
                fname,
                format!("block {} has {terminators} terminators", b.label),
            )),
            _ => {}
        }
        for inst in &b.insts {
            for target in inst.kind.successors() {
                if !labels.contains(target) {
                    diags.push(Diagnostic::new(
                        Some(inst.loc.clone()),
                        fname,
                        format!("branch to unknown label {target}"),
                    ));
                }
            }
            check_inst(program, f, inst, diags);
        }
    }

    check_def_before_use(f, diags);
}

fn check_inst(program: &Program, f: &Function, inst: &super::Inst, diags: &mut Vec<Diagnostic>) {
    let fname = Some(f.name.as_str());
    let mut report = |msg: String| diags.push(Diagnostic::new(Some(inst.loc.clone()), fname, msg));

    if inst.kind.requires_result() && inst.result.is_none() {
        report("instruction needs a result register".into());
    }
    if inst.result.is_some() && !inst.kind.allows_result() {
        report("instruction does not produce a value".into());
    }

    let allow_fn_syms = matches!(inst.kind, InstKind::ExternCall { .. });
    for (i, op) in inst.kind.operands().into_iter().enumerate() {
        match op {
            Operand::Sym(s) => {
                let is_global = program.globals.contains_key(s);
                let is_fn = program.functions.contains_key(s);
                if !(is_global || (allow_fn_syms && is_fn)) {
                    if is_fn {
                        report(format!("function @{s} used as a value"));
                    } else {
                        report(format!("unknown symbol @{s}"));
                    }
                }
            }
            Operand::Undef => {
                let is_store_value =
                    matches!(inst.kind, InstKind::Store { ordering: None, .. }) && i == 0;
                if !is_store_value {
                    report("undef may only be stored by a plain store".into());
                }
            }
            _ => {}
        }
    }

    match &inst.kind {
        InstKind::Load {
            ordering: Some(o), ..
        } if !o.valid_for_load() => report(format!("ordering {o} is not valid for a load")),
        InstKind::Store {
            ordering: Some(o), ..
        } if !o.valid_for_store() => report(format!("ordering {o} is not valid for a store")),
        InstKind::Call { func, args } => match program.functions.get(func) {
            None => report(format!("call to unknown function @{func}")),
            Some(callee) if callee.params.len() != args.len() => report(format!(
                "@{func} takes {} arguments, {} given",
                callee.params.len(),
                args.len()
            )),
            _ => {}
        },
        InstKind::Spawn { func, .. } => match program.functions.get(func) {
            None => report(format!("spawn of unknown function @{func}")),
            Some(callee) if callee.params.len() != 1 => report(format!(
                "spawned function @{func} must take exactly one parameter"
            )),
            _ => {}
        },
        InstKind::ExternCall { func, args } => match program.externs.get(func) {
            None => report(format!("call to undeclared extern @{func}")),
            Some(d) if d.arity() != args.len() => report(format!(
                "extern @{func} declared with {} parameters, {} given",
                d.arity(),
                args.len()
            )),
            _ => {}
        },
        InstKind::GlobalRef { symbol } if !program.globals.contains_key(symbol) => {
            report(format!("unknown global @{symbol}"))
        }
        InstKind::Memcpy { len, .. } | InstKind::Memmove { len, .. } | InstKind::Memset { len, .. }
            if len.as_const().is_some_and(|n| n < 0) =>
        {
            report("negative intrinsic length".into())
        }
        _ => {}
    }
}

/// Every register use must be dominated by a definition on all paths.
fn check_def_before_use(f: &Function, diags: &mut Vec<Diagnostic>) {
    let index: BTreeMap<&str, usize> = f
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.label.as_str(), i))
        .collect();
    let n = f.blocks.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, b) in f.blocks.iter().enumerate() {
        for inst in &b.insts {
            for t in inst.kind.successors() {
                if let Some(&j) = index.get(t) {
                    preds[j].push(i);
                }
            }
        }
    }
    let defs: Vec<BTreeSet<&str>> = f
        .blocks
        .iter()
        .map(|b| b.insts.iter().filter_map(|i| i.result.as_deref()).collect())
        .collect();
    let params: BTreeSet<&str> = f.params.iter().map(|p| p.name.as_str()).collect();

    // `None` stands for "every register" (not yet reached).
    let mut block_in: Vec<Option<BTreeSet<&str>>> = vec![None; n];
    block_in[0] = Some(params.clone());
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            let mut acc: Option<BTreeSet<&str>> = if i == 0 { Some(params.clone()) } else { None };
            let mut all_unknown = i != 0;
            for &p in &preds[i] {
                if let Some(pin) = &block_in[p] {
                    all_unknown = false;
                    let out: BTreeSet<&str> = pin.union(&defs[p]).copied().collect();
                    acc = Some(match acc {
                        None => out,
                        Some(a) => a.intersection(&out).copied().collect(),
                    });
                }
            }
            if all_unknown {
                continue;
            }
            if acc != block_in[i] {
                block_in[i] = acc;
                changed = true;
            }
        }
    }

    for (i, b) in f.blocks.iter().enumerate() {
        let Some(start) = &block_in[i] else {
            continue;
        };
        let mut live: BTreeSet<&str> = start.clone();
        for inst in &b.insts {
            for op in inst.kind.operands() {
                if let Operand::Reg(r) = op {
                    if !live.contains(r.as_str()) {
                        diags.push(Diagnostic::new(
                            Some(inst.loc.clone()),
                            Some(&f.name),
                            format!("use before def of %{r}"),
                        ));
                    }
                }
            }
            if let Some(r) = &inst.result {
                live.insert(r);
            }
        }
    }
}
