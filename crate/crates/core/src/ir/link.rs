use std::collections::BTreeMap;

use thiserror::Error;

use super::{InstKind, Module, Operand, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("no modules to link")]
    Empty,
    #[error("unresolved symbol @{0}")]
    UnresolvedSymbol(String),
    #[error("duplicate definition of @{name} (in {first} and {second})")]
    DuplicateDefinition {
        name: String,
        first: String,
        second: String,
    },
    #[error("no @main function")]
    NoMain,
}

/// Verifier intrinsic a threading symbol is redirected to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Intrinsic {
    /// `(function, argument) -> handle`
    Spawn,
    /// `(handle) -> value`
    Join,
}

impl Intrinsic {
    pub fn arity(self) -> usize {
        match self {
            Intrinsic::Spawn => 2,
            Intrinsic::Join => 1,
        }
    }
}

/// Threading-library symbols that are redefined as verifier intrinsics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterceptTable {
    entries: BTreeMap<String, Intrinsic>,
}

impl Default for InterceptTable {
    fn default() -> Self {
        let mut t = InterceptTable {
            entries: BTreeMap::new(),
        };
        t.insert("pthread_create", Intrinsic::Spawn);
        t.insert("pthread_join", Intrinsic::Join);
        t.insert("thread_spawn", Intrinsic::Spawn);
        t.insert("thread_join", Intrinsic::Join);
        t
    }
}

impl InterceptTable {
    pub fn empty() -> Self {
        InterceptTable {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, symbol: &str, intrinsic: Intrinsic) {
        self.entries.insert(symbol.to_string(), intrinsic);
    }

    pub fn get(&self, symbol: &str) -> Option<Intrinsic> {
        self.entries.get(symbol).copied()
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.entries.contains_key(symbol)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Intrinsic)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Links modules using the default interception table.
pub fn link(modules: &[Module]) -> Result<Program, LinkError> {
    link_with(modules, &InterceptTable::default())
}

/// Merges modules into one program. Extern declarations are matched to
/// definitions by name; a declaration without a definition is only accepted
/// when it names a threading symbol in `table`.
pub fn link_with(modules: &[Module], table: &InterceptTable) -> Result<Program, LinkError> {
    if modules.is_empty() {
        return Err(LinkError::Empty);
    }
    let mut program = Program::default();

    let define = |name: &str, module: &str, link_map: &mut BTreeMap<String, String>| {
        if let Some(first) = link_map.get(name) {
            // Report in a canonical order so the error does not depend on
            // the order modules were given in.
            let (first, second) = if first.as_str() <= module {
                (first.clone(), module.to_string())
            } else {
                (module.to_string(), first.clone())
            };
            return Err(LinkError::DuplicateDefinition {
                name: name.to_string(),
                first,
                second,
            });
        }
        link_map.insert(name.to_string(), module.to_string());
        Ok(())
    };

    for m in modules {
        for (name, g) in &m.globals {
            define(name, &m.name, &mut program.link_map)?;
            program.globals.insert(name.clone(), g.clone());
        }
        for (name, f) in &m.functions {
            define(name, &m.name, &mut program.link_map)?;
            program.functions.insert(name.clone(), f.clone());
        }
    }

    let mut declared = BTreeMap::new();
    for m in modules {
        for (name, d) in &m.externs {
            if program.functions.contains_key(name) || program.globals.contains_key(name) {
                continue;
            }
            if !table.contains(name) {
                return Err(LinkError::UnresolvedSymbol(name.clone()));
            }
            declared.insert(name.clone(), d.clone());
        }
    }
    program.externs = declared;

    let functions = &program.functions;
    let globals = &program.globals;
    let externs = &program.externs;
    let mut rewritten = program.functions.clone();
    for f in rewritten.values_mut() {
        for b in &mut f.blocks {
            for inst in &mut b.insts {
                match &inst.kind {
                    InstKind::ExternCall { func, args } if functions.contains_key(func) => {
                        inst.kind = InstKind::Call {
                            func: func.clone(),
                            args: args.clone(),
                        };
                    }
                    InstKind::ExternCall { func, .. } if !externs.contains_key(func) => {
                        return Err(LinkError::UnresolvedSymbol(func.clone()));
                    }
                    InstKind::Call { func, .. } | InstKind::Spawn { func, .. }
                        if !functions.contains_key(func) =>
                    {
                        return Err(LinkError::UnresolvedSymbol(func.clone()));
                    }
                    InstKind::GlobalRef { symbol } if !globals.contains_key(symbol) => {
                        return Err(LinkError::UnresolvedSymbol(symbol.clone()));
                    }
                    _ => {}
                }
                for op in inst.kind.operands() {
                    if let Operand::Sym(s) = op {
                        if !globals.contains_key(s) && !functions.contains_key(s) {
                            return Err(LinkError::UnresolvedSymbol(s.clone()));
                        }
                    }
                }
            }
        }
    }
    program.functions = rewritten;

    if !program.functions.contains_key(Program::ENTRY) {
        return Err(LinkError::NoMain);
    }
    Ok(program)
}
