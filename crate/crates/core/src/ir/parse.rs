//! Hand-written line-oriented recursive-descent parser for MCIR.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::{
    BinOp, Block, ExternDecl, Function, Global, Inst, InstKind, Module, Operand, Ordering, Param,
    Pred, RmwOp, SemType, SrcLoc,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected {}, found {found}", fmt_expected(.expected))]
    Unexpected { expected: Vec<String>, found: String },
    #[error("duplicate symbol @{0}")]
    DuplicateSymbol(String),
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("branch to unknown label {0}")]
    UnknownLabel(String),
    #[error("{0}")]
    Invalid(String),
}

fn fmt_expected(expected: &[String]) -> String {
    match expected {
        [] => "nothing".to_string(),
        [one] => one.clone(),
        many => format!("one of {}", many.join(", ")),
    }
}

/// A syntax or module-level error with its 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{file}:{line}:{col}: {kind}")]
pub struct ParseError {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn expected(&self) -> &[String] {
        match &self.kind {
            ParseErrorKind::Unexpected { expected, .. } => expected,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Reg(String),
    Sym(String),
    Int(i64),
    Str(String),
    Punct(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Reg(s) => write!(f, "`%{s}`"),
            Tok::Sym(s) => write!(f, "`@{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Punct(c) => write!(f, "`{c}`"),
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$'
}

struct Line {
    number: u32,
    toks: Vec<(Tok, u32)>,
    /// Column just past the last character, for end-of-line errors.
    end_col: u32,
}

fn lex_line(file: &str, number: u32, raw: &str) -> Result<Option<Line>, ParseError> {
    let chars: Vec<char> = raw.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: &str| ParseError {
        file: file.to_string(),
        line: number,
        col: col as u32 + 1,
        kind: ParseErrorKind::Invalid(msg.to_string()),
    };
    while i < chars.len() {
        let c = chars[i];
        let col = i as u32 + 1;
        if c == ';' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '%' || c == '@' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && is_name_char(chars[j]) {
                j += 1;
            }
            if j == start {
                return Err(err(i, "empty name after sigil"));
            }
            let name: String = chars[start..j].iter().collect();
            toks.push((if c == '%' { Tok::Reg(name) } else { Tok::Sym(name) }, col));
            i = j;
        } else if c == '"' {
            let mut j = i + 1;
            let mut s = String::new();
            loop {
                match chars.get(j) {
                    None => return Err(err(i, "unterminated string literal")),
                    Some('"') => break,
                    Some('\\') => {
                        match chars.get(j + 1) {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(&e @ ('"' | '\\')) => s.push(e),
                            _ => return Err(err(j, "invalid escape in string literal")),
                        }
                        j += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            toks.push((Tok::Str(s), col));
            i = j + 1;
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let text: String = chars[i..j].iter().filter(|&&ch| ch != '_').collect();
            let (neg, body) = match text.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, text.as_str()),
            };
            let magnitude = if let Some(hex) = body.strip_prefix("0x") {
                u64::from_str_radix(hex, 16).map_err(|_| err(i, "invalid hex literal"))?
            } else {
                body.parse::<u64>().map_err(|_| err(i, "invalid integer literal"))?
            };
            let value = if neg {
                if magnitude > i64::MIN.unsigned_abs() {
                    return Err(err(i, "integer literal out of range"));
                }
                (magnitude as i64).wrapping_neg()
            } else {
                magnitude as i64
            };
            toks.push((Tok::Int(value), col));
            i = j;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && is_name_char(chars[j]) {
                j += 1;
            }
            toks.push((Tok::Ident(chars[i..j].iter().collect()), col));
            i = j;
        } else if "=,:(){}!".contains(c) {
            toks.push((Tok::Punct(c), col));
            i += 1;
        } else {
            return Err(err(i, &format!("unexpected character {c:?}")));
        }
    }
    if toks.is_empty() {
        return Ok(None);
    }
    Ok(Some(Line {
        number,
        toks,
        end_col: chars.len() as u32 + 1,
    }))
}

/// Cursor over the tokens of one line.
struct Cursor<'a> {
    file: &'a str,
    line: &'a Line,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(file: &'a str, line: &'a Line) -> Self {
        Cursor { file, line, pos: 0 }
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.line.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Tok> {
        self.line.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn col(&self) -> u32 {
        self.line
            .toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.line.end_col)
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let found = match self.peek() {
            Some(t) => t.to_string(),
            None => "end of line".to_string(),
        };
        ParseError {
            file: self.file.to_string(),
            line: self.line.number,
            col: self.col(),
            kind: ParseErrorKind::Unexpected {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found,
            },
        }
    }

    fn invalid(&self, msg: String) -> ParseError {
        ParseError {
            file: self.file.to_string(),
            line: self.line.number,
            col: self.col(),
            kind: ParseErrorKind::Invalid(msg),
        }
    }

    fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{c}`")]))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn expect_sym(&mut self) -> Result<&'a str, ParseError> {
        match self.peek() {
            Some(Tok::Sym(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&["symbol `@name`"])),
        }
    }

    fn expect_reg(&mut self) -> Result<&'a str, ParseError> {
        match self.peek() {
            Some(Tok::Reg(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&["register `%name`"])),
        }
    }

    fn expect_int(&mut self) -> Result<i64, ParseError> {
        match self.peek() {
            Some(Tok::Int(i)) => {
                self.pos += 1;
                Ok(*i)
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    fn expect_type(&mut self) -> Result<SemType, ParseError> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if let Some(t) = SemType::from_name(s) {
                self.pos += 1;
                return Ok(t);
            }
        }
        Err(self.error(&["i8", "i16", "i32", "i64", "ptr"]))
    }

    fn expect_ordering(&mut self, allowed: &[Ordering]) -> Result<Ordering, ParseError> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if let Some(o) = Ordering::from_name(s) {
                self.pos += 1;
                return Ok(o);
            }
        }
        let names: Vec<&str> = allowed.iter().map(|o| o.name()).collect();
        Err(self.error(&names))
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        let op = match self.peek() {
            Some(Tok::Reg(r)) => Operand::Reg(r.clone()),
            Some(Tok::Sym(s)) => Operand::Sym(s.clone()),
            Some(Tok::Int(i)) => Operand::Const(*i),
            Some(Tok::Ident(s)) if s == "undef" => Operand::Undef,
            _ => return Err(self.error(&["register", "symbol", "integer", "undef"])),
        };
        self.pos += 1;
        Ok(op)
    }

    fn comma(&mut self) -> Result<(), ParseError> {
        self.expect_punct(',')
    }

    fn at_end(&self) -> bool {
        self.pos >= self.line.toks.len()
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error(&["end of line"]))
        }
    }
}

const ALL_ORDERINGS: [Ordering; 5] = [
    Ordering::Relaxed,
    Ordering::Acquire,
    Ordering::Release,
    Ordering::AcqRel,
    Ordering::SeqCst,
];

const OPCODES: &[&str] = &[
    "alloca",
    "load",
    "store",
    "atomic_load",
    "atomic_store",
    "atomic_rmw",
    "memcpy",
    "memmove",
    "memset",
    "spawn",
    "join",
    "call",
    "icmp",
    "gep",
    "br",
    "assert",
    "panic",
    "ret",
    "globalref",
    "bound_exceeded",
    "<binop>",
];

/// Parses one MCIR source file. `name` becomes the module name and the file
/// part of every default source location.
pub fn parse_module(name: &str, text: &str) -> Result<Module, ParseError> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if let Some(line) = lex_line(name, idx as u32 + 1, raw)? {
            lines.push(line);
        }
    }
    let mut parser = ModuleParser {
        file: name,
        lines: &lines,
        pos: 0,
        module: Module {
            name: name.to_string(),
            ..Module::default()
        },
        symbols: BTreeSet::new(),
    };
    parser.run()?;
    parser.classify_extern_calls();
    Ok(parser.module)
}

struct ModuleParser<'a> {
    file: &'a str,
    lines: &'a [Line],
    pos: usize,
    module: Module,
    symbols: BTreeSet<String>,
}

impl<'a> ModuleParser<'a> {
    fn run(&mut self) -> Result<(), ParseError> {
        while self.pos < self.lines.len() {
            let line = &self.lines[self.pos];
            let mut cur = Cursor::new(self.file, line);
            match cur.peek() {
                Some(Tok::Ident(kw)) if kw == "global" => {
                    cur.bump();
                    self.global(&mut cur)?;
                    self.pos += 1;
                }
                Some(Tok::Ident(kw)) if kw == "declare" => {
                    cur.bump();
                    self.declare(&mut cur)?;
                    self.pos += 1;
                }
                Some(Tok::Ident(kw)) if kw == "define" => {
                    cur.bump();
                    self.define(cur)?;
                }
                _ => return Err(cur.error(&["global", "declare", "define"])),
            }
        }
        Ok(())
    }

    fn claim_symbol(&mut self, cur: &Cursor<'_>, name: &str) -> Result<(), ParseError> {
        if !self.symbols.insert(name.to_string()) {
            return Err(ParseError {
                file: self.file.to_string(),
                line: cur.line.number,
                col: cur.line.toks.get(1).map(|(_, c)| *c).unwrap_or(1),
                kind: ParseErrorKind::DuplicateSymbol(name.to_string()),
            });
        }
        Ok(())
    }

    fn global(&mut self, cur: &mut Cursor<'_>) -> Result<(), ParseError> {
        let name = cur.expect_sym()?;
        cur.expect_punct(':')?;
        let ty = cur.expect_type()?;
        cur.expect_punct('=')?;
        let init = cur.expect_int()?;
        cur.expect_end()?;
        self.claim_symbol(cur, name)?;
        self.module.globals.insert(
            name.to_string(),
            Global {
                name: name.to_string(),
                ty,
                init,
            },
        );
        Ok(())
    }

    fn declare(&mut self, cur: &mut Cursor<'_>) -> Result<(), ParseError> {
        let name = cur.expect_sym()?;
        cur.expect_punct('(')?;
        let mut params = Vec::new();
        if !cur.eat_punct(')') {
            loop {
                params.push(cur.expect_type()?);
                if cur.eat_punct(')') {
                    break;
                }
                cur.comma()?;
            }
        }
        cur.expect_end()?;
        self.claim_symbol(cur, name)?;
        self.module.externs.insert(
            name.to_string(),
            ExternDecl {
                name: name.to_string(),
                params,
            },
        );
        Ok(())
    }

    fn define(&mut self, mut cur: Cursor<'a>) -> Result<(), ParseError> {
        let header = cur.line;
        let name = cur.expect_sym()?;
        cur.expect_punct('(')?;
        let mut params = Vec::new();
        if !cur.eat_punct(')') {
            loop {
                let p = cur.expect_reg()?;
                cur.expect_punct(':')?;
                let ty = cur.expect_type()?;
                params.push(Param {
                    name: p.to_string(),
                    ty,
                });
                if cur.eat_punct(')') {
                    break;
                }
                cur.comma()?;
            }
        }
        cur.expect_punct('{')?;
        cur.expect_end()?;
        self.claim_symbol(&cur, name)?;
        self.pos += 1;

        let mut blocks: Vec<Block> = Vec::new();
        let mut label_lines: BTreeMap<String, u32> = BTreeMap::new();
        let mut branch_refs: Vec<(String, u32, u32)> = Vec::new();
        loop {
            let Some(line) = self.lines.get(self.pos) else {
                return Err(ParseError {
                    file: self.file.to_string(),
                    line: header.number,
                    col: 1,
                    kind: ParseErrorKind::Invalid(format!("function @{name} is missing its closing `}}`")),
                });
            };
            self.pos += 1;
            let mut c = Cursor::new(self.file, line);
            if c.eat_punct('}') {
                c.expect_end()?;
                break;
            }
            // `label:`
            if let (Some(Tok::Ident(label)), Some(Tok::Punct(':')), None) =
                (c.peek(), c.peek_at(1), c.peek_at(2))
            {
                if label_lines.insert(label.clone(), line.number).is_some() {
                    return Err(ParseError {
                        file: self.file.to_string(),
                        line: line.number,
                        col: c.col(),
                        kind: ParseErrorKind::DuplicateLabel(label.clone()),
                    });
                }
                blocks.push(Block {
                    label: label.clone(),
                    insts: Vec::new(),
                });
                continue;
            }
            if blocks.is_empty() {
                blocks.push(Block {
                    label: "entry".to_string(),
                    insts: Vec::new(),
                });
                label_lines.insert("entry".to_string(), line.number);
            }
            let inst = parse_inst(&mut c, self.file)?;
            for target in inst.kind.successors() {
                branch_refs.push((target.to_string(), line.number, line.toks[0].1));
            }
            blocks.last_mut().expect("block exists").insts.push(inst);
        }
        for (target, line, col) in branch_refs {
            if !label_lines.contains_key(&target) {
                return Err(ParseError {
                    file: self.file.to_string(),
                    line,
                    col,
                    kind: ParseErrorKind::UnknownLabel(target),
                });
            }
        }
        self.module.functions.insert(
            name.to_string(),
            Function {
                name: name.to_string(),
                params,
                blocks,
            },
        );
        Ok(())
    }

    /// `call @f(...)` to a symbol declared in this module is an extern call.
    fn classify_extern_calls(&mut self) {
        let externs = &self.module.externs;
        for f in self.module.functions.values_mut() {
            for b in &mut f.blocks {
                for inst in &mut b.insts {
                    if let InstKind::Call { func, args } = &inst.kind {
                        if externs.contains_key(func) {
                            inst.kind = InstKind::ExternCall {
                                func: func.clone(),
                                args: args.clone(),
                            };
                        }
                    }
                }
            }
        }
    }
}

fn parse_call_args(cur: &mut Cursor<'_>) -> Result<Vec<Operand>, ParseError> {
    cur.expect_punct('(')?;
    let mut args = Vec::new();
    if cur.eat_punct(')') {
        return Ok(args);
    }
    loop {
        args.push(cur.operand()?);
        if cur.eat_punct(')') {
            return Ok(args);
        }
        cur.comma()?;
    }
}

fn parse_inst(cur: &mut Cursor<'_>, file: &str) -> Result<Inst, ParseError> {
    let mut result = None;
    if let (Some(Tok::Reg(r)), Some(Tok::Punct('='))) = (cur.peek(), cur.peek_at(1)) {
        result = Some(r.clone());
        cur.pos += 2;
    }
    let opcode_col = cur.col();
    let opcode = match cur.bump() {
        Some(Tok::Ident(op)) => op.as_str(),
        _ => {
            cur.pos -= 1;
            return Err(cur.error(OPCODES));
        }
    };
    let kind = match opcode {
        "alloca" => {
            let size = cur.expect_int()?;
            if size < 0 {
                return Err(cur.invalid("alloca size must be non-negative".into()));
            }
            InstKind::Alloca { size: size as u64 }
        }
        "load" | "atomic_load" => {
            let ty = cur.expect_type()?;
            let addr = cur.operand()?;
            let ordering = if opcode == "atomic_load" {
                Some(cur.expect_ordering(&ALL_ORDERINGS)?)
            } else {
                None
            };
            InstKind::Load { ty, addr, ordering }
        }
        "store" | "atomic_store" => {
            let ty = cur.expect_type()?;
            let value = cur.operand()?;
            cur.comma()?;
            let addr = cur.operand()?;
            let ordering = if opcode == "atomic_store" {
                Some(cur.expect_ordering(&ALL_ORDERINGS)?)
            } else {
                None
            };
            InstKind::Store {
                ty,
                value,
                addr,
                ordering,
            }
        }
        "atomic_rmw" => {
            let op = match cur.peek() {
                Some(Tok::Ident(s)) if RmwOp::from_name(s).is_some() => {
                    cur.pos += 1;
                    RmwOp::from_name(s).unwrap()
                }
                _ => return Err(cur.error(&["add", "sub", "xchg"])),
            };
            let ty = cur.expect_type()?;
            let addr = cur.operand()?;
            cur.comma()?;
            let operand = cur.operand()?;
            let ordering = cur.expect_ordering(&ALL_ORDERINGS)?;
            InstKind::Rmw {
                op,
                ty,
                addr,
                operand,
                ordering,
            }
        }
        "memcpy" | "memmove" | "memset" => {
            let a = cur.operand()?;
            cur.comma()?;
            let b = cur.operand()?;
            cur.comma()?;
            let len = cur.operand()?;
            match opcode {
                "memcpy" => InstKind::Memcpy { dst: a, src: b, len },
                "memmove" => InstKind::Memmove { dst: a, src: b, len },
                _ => InstKind::Memset {
                    dst: a,
                    byte: b,
                    len,
                },
            }
        }
        "spawn" => {
            let func = cur.expect_sym()?.to_string();
            cur.expect_punct('(')?;
            let arg = cur.operand()?;
            cur.expect_punct(')')?;
            InstKind::Spawn { func, arg }
        }
        "join" => InstKind::Join {
            handle: cur.operand()?,
        },
        "call" => {
            let func = cur.expect_sym()?.to_string();
            let args = parse_call_args(cur)?;
            InstKind::Call { func, args }
        }
        "icmp" => {
            let pred = match cur.peek() {
                Some(Tok::Ident(s)) if Pred::from_name(s).is_some() => {
                    cur.pos += 1;
                    Pred::from_name(s).unwrap()
                }
                _ => {
                    let names: Vec<&str> = Pred::ALL.iter().map(|p| p.name()).collect();
                    return Err(cur.error(&names));
                }
            };
            let lhs = cur.operand()?;
            cur.comma()?;
            let rhs = cur.operand()?;
            InstKind::Icmp { pred, lhs, rhs }
        }
        "gep" => {
            let base = cur.operand()?;
            cur.comma()?;
            let offset = cur.operand()?;
            InstKind::Gep { base, offset }
        }
        "br" => {
            if matches!(cur.peek(), Some(Tok::Ident(s)) if s != "undef") {
                InstKind::Br {
                    target: cur.expect_ident("label")?.to_string(),
                }
            } else {
                let cond = cur.operand()?;
                cur.comma()?;
                let if_true = cur.expect_ident("label")?.to_string();
                cur.comma()?;
                let if_false = cur.expect_ident("label")?.to_string();
                InstKind::CondBr {
                    cond,
                    if_true,
                    if_false,
                }
            }
        }
        "assert" => InstKind::Assert {
            cond: cur.operand()?,
        },
        "panic" => match cur.bump() {
            Some(Tok::Str(s)) => InstKind::Panic { message: s.clone() },
            _ => {
                cur.pos -= 1;
                return Err(cur.error(&["string literal"]));
            }
        },
        "ret" => {
            let value = if cur.at_end() || cur.peek() == Some(&Tok::Punct('!')) {
                None
            } else {
                Some(cur.operand()?)
            };
            InstKind::Ret { value }
        }
        "globalref" => InstKind::GlobalRef {
            symbol: cur.expect_sym()?.to_string(),
        },
        "bound_exceeded" => InstKind::BoundExceeded,
        other => match BinOp::from_name(other) {
            Some(op) => {
                let ty = cur.expect_type()?;
                let lhs = cur.operand()?;
                cur.comma()?;
                let rhs = cur.operand()?;
                InstKind::BinOp { op, ty, lhs, rhs }
            }
            None => {
                return Err(ParseError {
                    file: file.to_string(),
                    line: cur.line.number,
                    col: opcode_col,
                    kind: ParseErrorKind::Unexpected {
                        expected: OPCODES.iter().map(|s| s.to_string()).collect(),
                        found: format!("`{other}`"),
                    },
                })
            }
        },
    };

    let mut loc = SrcLoc::new(file, cur.line.number);
    if cur.eat_punct('!') {
        match cur.bump() {
            Some(Tok::Str(s)) => {
                loc = parse_loc_annotation(s)
                    .ok_or_else(|| cur.invalid(format!("malformed location annotation {s:?}")))?;
            }
            _ => {
                cur.pos -= 1;
                return Err(cur.error(&["location string \"file:line\""]));
            }
        }
    }
    cur.expect_end()?;

    if result.is_some() && !kind.allows_result() {
        return Err(ParseError {
            file: file.to_string(),
            line: cur.line.number,
            col: 1,
            kind: ParseErrorKind::Invalid(format!("`{opcode}` does not produce a value")),
        });
    }
    if result.is_none() && kind.requires_result() {
        return Err(ParseError {
            file: file.to_string(),
            line: cur.line.number,
            col: opcode_col,
            kind: ParseErrorKind::Invalid(format!("`{opcode}` needs a result register")),
        });
    }
    Ok(Inst { result, kind, loc })
}

fn parse_loc_annotation(s: &str) -> Option<SrcLoc> {
    let (file, line) = s.rsplit_once(':')?;
    if file.is_empty() {
        return None;
    }
    Some(SrcLoc::new(file, line.parse().ok()?))
}
