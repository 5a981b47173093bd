use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use thiserror::Error;

use super::memory::{Byte, MemError, MemoryState};
use super::{sign_extend, AllocId, Event, EventKind, Fault, MemLoc, Outcome, Tid, Trace, Value};
use crate::ir::{BinOp, Inst, InstKind, Operand, Pred, Program, RmwOp, SemType, SrcLoc};

/// Interpreter limits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecConfig {
    pub max_threads: usize,
    pub max_call_depth: usize,
    /// Thread-local instructions one step may run before the thread is
    /// stopped as if it had hit a loop bound.
    pub local_fuel: usize,
    /// Scheduling steps per execution before it is cut off.
    pub max_steps: usize,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            max_threads: 16,
            max_call_depth: 64,
            local_fuel: 100_000,
            max_steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("program has no @main")]
    NoMain,
    #[error("@main must take no parameters")]
    MainHasParams,
    #[error("thread {0} is not enabled")]
    NotEnabled(Tid),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThreadStatus {
    Runnable,
    Finished(Option<Value>),
    Faulted,
    BoundExceeded,
}

#[derive(Debug, Clone)]
struct Frame {
    func: String,
    block: usize,
    inst: usize,
    regs: BTreeMap<String, Value>,
    /// Caller register receiving the return value.
    ret_to: Option<String>,
}

#[derive(Debug, Clone)]
struct ThreadState {
    frames: Vec<Frame>,
    status: ThreadStatus,
    seq: u32,
    allocs: u32,
}

/// Interpreter state for one execution in progress.
#[derive(Debug, Clone)]
pub struct Machine {
    program: Arc<Program>,
    config: ExecConfig,
    memory: MemoryState,
    threads: Vec<ThreadState>,
    events: Vec<Event>,
    schedule: Vec<Tid>,
    notes: Vec<String>,
    truncated: bool,
}

fn is_shared(kind: &InstKind, outermost: bool) -> bool {
    match kind {
        InstKind::Load { .. } | InstKind::Rmw { .. } | InstKind::Join { .. } => true,
        InstKind::Store { value, .. } => *value != Operand::Undef,
        InstKind::Ret { .. } => outermost,
        _ => false,
    }
}

fn mem_fault(e: MemError, loc: MemLoc) -> Fault {
    match e {
        MemError::OutOfBounds { size } => Fault::OutOfBounds { loc, size },
        MemError::Uninitialized => Fault::UninitializedRead { loc },
        MemError::MixedPointerBytes => {
            Fault::InvalidOperation(format!("access to {loc} splits a pointer"))
        }
        MemError::PointerTooNarrow => {
            Fault::InvalidOperation(format!("pointer stored to {loc} with width below 8"))
        }
    }
}

fn width_of(ty: SemType) -> u8 {
    ty.width()
}

fn address(v: Value, width: u8) -> Result<MemLoc, Fault> {
    match v {
        Value::Ptr { alloc, offset } => Ok(MemLoc {
            alloc,
            offset,
            width: width as u32,
        }),
        other => Err(Fault::InvalidOperation(format!(
            "dereference of non-pointer value {other}"
        ))),
    }
}

/// Integer arithmetic at `width` bytes, wrapping on overflow.
pub(crate) fn int_binop(op: BinOp, width: u8, a: i64, b: i64) -> Result<i64, Fault> {
    let bits = width as u32 * 8;
    let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let (ua, ub) = (a as u64 & mask, b as u64 & mask);
    let (sa, sb) = (sign_extend(width, a), sign_extend(width, b));
    let shift = (ub & (bits as u64 - 1)) as u32;
    let div0 = || Fault::Panic("division by zero".into());
    let r = match op {
        BinOp::Add => sa.wrapping_add(sb),
        BinOp::Sub => sa.wrapping_sub(sb),
        BinOp::Mul => sa.wrapping_mul(sb),
        BinOp::UDiv => (ua.checked_div(ub).ok_or_else(div0)?) as i64,
        BinOp::URem => (ua.checked_rem(ub).ok_or_else(div0)?) as i64,
        BinOp::SDiv if sb == 0 => return Err(div0()),
        BinOp::SRem if sb == 0 => return Err(div0()),
        BinOp::SDiv => sa.wrapping_div(sb),
        BinOp::SRem => sa.wrapping_rem(sb),
        BinOp::And => sa & sb,
        BinOp::Or => sa | sb,
        BinOp::Xor => sa ^ sb,
        BinOp::Shl => sa.wrapping_shl(shift),
        BinOp::LShr => (ua >> shift) as i64,
        BinOp::AShr => sa >> shift,
    };
    Ok(sign_extend(width, r))
}

fn compare(pred: Pred, width: u8, a: i64, b: i64) -> bool {
    let bits = width as u32 * 8;
    let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let (sa, sb) = (sign_extend(width, a), sign_extend(width, b));
    let (ua, ub) = (a as u64 & mask, b as u64 & mask);
    match pred {
        Pred::Eq => sa == sb,
        Pred::Ne => sa != sb,
        Pred::Slt => sa < sb,
        Pred::Sle => sa <= sb,
        Pred::Sgt => sa > sb,
        Pred::Sge => sa >= sb,
        Pred::Ult => ua < ub,
        Pred::Ule => ua <= ub,
        Pred::Ugt => ua > ub,
        Pred::Uge => ua >= ub,
    }
}

fn int_width(v: &Value) -> u8 {
    match v {
        Value::Int { width, .. } => *width,
        _ => 8,
    }
}

impl Machine {
    /// Sets up globals and runs main up to its first shared instruction.
    pub fn new(program: Arc<Program>, config: ExecConfig) -> Result<Machine, ExecError> {
        let main = program.main().ok_or(ExecError::NoMain)?;
        if !main.params.is_empty() {
            return Err(ExecError::MainHasParams);
        }
        let mut memory = MemoryState::default();
        for (i, (name, g)) in program.globals.iter().enumerate() {
            let w = g.ty.width() as usize;
            let bytes = (0..w)
                .map(|k| Byte::Data(((g.init as u64) >> (8 * k)) as u8))
                .collect();
            memory.add_global(AllocId::Global(i as u32), name, bytes);
        }
        let src = main
            .insts()
            .next()
            .map(|i| i.loc.clone())
            .unwrap_or_else(|| SrcLoc::new("<main>", 0));
        let mut m = Machine {
            program: program.clone(),
            config,
            memory,
            threads: vec![ThreadState {
                frames: vec![Frame {
                    func: Program::ENTRY.to_string(),
                    block: 0,
                    inst: 0,
                    regs: BTreeMap::new(),
                    ret_to: None,
                }],
                status: ThreadStatus::Runnable,
                seq: 0,
                allocs: 0,
            }],
            events: Vec::new(),
            schedule: Vec::new(),
            notes: Vec::new(),
            truncated: false,
        };
        m.emit(Tid(0), EventKind::ThreadStart, &src);
        m.run_local(&program, Tid(0));
        Ok(m)
    }

    pub fn program(&self) -> &Arc<Program> {
        &self.program
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn memory(&self) -> &MemoryState {
        &self.memory
    }

    pub fn thread_count(&self) -> usize {
        self.threads.len()
    }

    pub fn steps(&self) -> usize {
        self.schedule.len()
    }

    pub fn status(&self, tid: Tid) -> Option<&ThreadStatus> {
        self.threads.get(tid.0).map(|t| &t.status)
    }

    /// Thread a runnable thread is waiting to join, if its next instruction
    /// is a join whose target has not finished.
    pub fn blocked_on(&self, tid: Tid) -> Option<Tid> {
        let t = self.threads.get(tid.0)?;
        if t.status != ThreadStatus::Runnable {
            return None;
        }
        let inst = self.fetch(&self.program, tid).ok()?;
        let InstKind::Join { handle } = &inst.kind else {
            return None;
        };
        let target = self.eval(tid, handle).ok().and_then(|v| self.handle_tid(v))?;
        match self.threads[target.0].status {
            ThreadStatus::Finished(_) => None,
            _ => Some(target),
        }
    }

    pub fn is_enabled(&self, tid: Tid) -> bool {
        !self.truncated
            && self
                .threads
                .get(tid.0)
                .is_some_and(|t| t.status == ThreadStatus::Runnable)
            && self.blocked_on(tid).is_none()
    }

    /// Threads that can take a step, in increasing order.
    pub fn enabled(&self) -> Vec<Tid> {
        (0..self.threads.len())
            .map(Tid)
            .filter(|t| self.is_enabled(*t))
            .collect()
    }

    pub fn is_done(&self) -> bool {
        self.enabled().is_empty()
    }

    /// Runs the parked instruction of `tid` and then its thread-local
    /// continuation. Returns the range of events emitted.
    pub fn step(&mut self, tid: Tid) -> Result<Range<usize>, ExecError> {
        if !self.is_enabled(tid) {
            return Err(ExecError::NotEnabled(tid));
        }
        let start = self.events.len();
        self.schedule.push(tid);
        let program = self.program.clone();
        self.exec_one(&program, tid);
        self.run_local(&program, tid);
        if self.schedule.len() >= self.config.max_steps && !self.enabled().is_empty() {
            self.truncated = true;
            self.notes
                .push(format!("step bound {} reached", self.config.max_steps));
        }
        Ok(start..self.events.len())
    }

    /// Completes the execution record. Threads that are still enabled are
    /// left where they are.
    pub fn finish(self) -> Trace {
        let outcome = self.outcome();
        let returns = self
            .threads
            .iter()
            .map(|t| match &t.status {
                ThreadStatus::Finished(v) => *v,
                _ => None,
            })
            .collect();
        Trace {
            events: self.events,
            memory: self.memory,
            outcome,
            schedule: self.schedule,
            returns,
            notes: self.notes,
        }
    }

    pub fn outcome(&self) -> Outcome {
        if let Some((i, e)) = self
            .events
            .iter()
            .enumerate()
            .find(|(_, e)| e.fault.is_some())
        {
            return Outcome::Faulted {
                event: i,
                fault: e.fault.clone().expect("checked"),
            };
        }
        if self.truncated
            || self
                .threads
                .iter()
                .any(|t| t.status == ThreadStatus::BoundExceeded)
        {
            return Outcome::BoundExceeded;
        }
        if self
            .threads
            .iter()
            .any(|t| !matches!(t.status, ThreadStatus::Finished(_)))
        {
            return Outcome::Blocked;
        }
        Outcome::Completed
    }

    fn emit(&mut self, tid: Tid, kind: EventKind, src: &SrcLoc) -> &mut Event {
        let t = &mut self.threads[tid.0];
        let seq = t.seq;
        t.seq += 1;
        self.events.push(Event {
            tid,
            seq,
            kind,
            loc: None,
            read: None,
            written: None,
            atomic: false,
            ordering: None,
            init_store: false,
            peer: None,
            fault: None,
            src: src.clone(),
        });
        self.events.last_mut().expect("just pushed")
    }

    fn raise(&mut self, tid: Tid, fault: Fault, src: &SrcLoc) {
        let kind = if fault == Fault::AssertViolation {
            EventKind::AssertFail
        } else {
            EventKind::PanicEvt
        };
        let loc = match &fault {
            Fault::OutOfBounds { loc, .. } | Fault::UninitializedRead { loc } => Some(*loc),
            _ => None,
        };
        let e = self.emit(tid, kind, src);
        e.loc = loc;
        e.fault = Some(fault);
        self.threads[tid.0].status = ThreadStatus::Faulted;
    }

    fn frame(&self, tid: Tid) -> &Frame {
        self.threads[tid.0].frames.last().expect("running thread has a frame")
    }

    fn frame_mut(&mut self, tid: Tid) -> &mut Frame {
        self.threads[tid.0]
            .frames
            .last_mut()
            .expect("running thread has a frame")
    }

    fn fetch<'p>(&self, program: &'p Program, tid: Tid) -> Result<&'p Inst, Fault> {
        let fr = self.frame(tid);
        program
            .functions
            .get(&fr.func)
            .and_then(|f| f.blocks.get(fr.block))
            .and_then(|b| b.insts.get(fr.inst))
            .ok_or_else(|| {
                Fault::Malformed(format!("@{} falls off the end of a block", fr.func))
            })
    }

    fn run_local(&mut self, program: &Program, tid: Tid) {
        let mut fuel = self.config.local_fuel;
        while self.threads[tid.0].status == ThreadStatus::Runnable {
            let outermost = self.threads[tid.0].frames.len() == 1;
            match self.fetch(program, tid) {
                Ok(inst) if is_shared(&inst.kind, outermost) => return,
                Ok(_) => {}
                Err(f) => {
                    let src = SrcLoc::new(&format!("@{}", self.frame(tid).func), 0);
                    self.raise(tid, f, &src);
                    return;
                }
            }
            if fuel == 0 {
                self.threads[tid.0].status = ThreadStatus::BoundExceeded;
                self.notes.push(format!(
                    "{tid} ran {} local instructions without a shared access",
                    self.config.local_fuel
                ));
                return;
            }
            fuel -= 1;
            self.exec_one(program, tid);
        }
    }

    fn exec_one(&mut self, program: &Program, tid: Tid) {
        let inst = match self.fetch(program, tid) {
            Ok(i) => i,
            Err(f) => {
                let src = SrcLoc::new(&format!("@{}", self.frame(tid).func), 0);
                self.raise(tid, f, &src);
                return;
            }
        };
        self.frame_mut(tid).inst += 1;
        if let Err(f) = self.exec(program, tid, inst) {
            self.raise(tid, f, &inst.loc);
        }
    }

    fn set(&mut self, tid: Tid, inst: &Inst, v: Value) {
        if let Some(r) = &inst.result {
            self.frame_mut(tid).regs.insert(r.clone(), v);
        }
    }

    fn eval(&self, tid: Tid, op: &Operand) -> Result<Value, Fault> {
        match op {
            Operand::Reg(r) => self
                .frame(tid)
                .regs
                .get(r)
                .copied()
                .ok_or_else(|| Fault::Malformed(format!("register %{r} used before assignment"))),
            Operand::Sym(s) => self
                .memory
                .global(s)
                .map(|alloc| Value::Ptr { alloc, offset: 0 })
                .ok_or_else(|| Fault::Malformed(format!("@{s} is not a global"))),
            Operand::Const(c) => Ok(Value::int(8, *c)),
            Operand::Undef => Ok(Value::Undef),
        }
    }

    fn handle_tid(&self, v: Value) -> Option<Tid> {
        let t = match v {
            Value::Thread(t) => t,
            Value::Int { value, .. } if value >= 0 => Tid(value as usize),
            _ => return None,
        };
        (t.0 < self.threads.len()).then_some(t)
    }

    fn goto(&mut self, program: &Program, tid: Tid, label: &str) -> Result<(), Fault> {
        let fr = self.frame(tid);
        let idx = program
            .functions
            .get(&fr.func)
            .and_then(|f| f.block_index(label))
            .ok_or_else(|| Fault::Malformed(format!("unknown label {label}")))?;
        let fr = self.frame_mut(tid);
        fr.block = idx;
        fr.inst = 0;
        Ok(())
    }

    fn truth(v: Value) -> Result<bool, Fault> {
        match v {
            Value::Ptr { .. } => Err(Fault::InvalidOperation(
                "pointer used as a condition".into(),
            )),
            other => Ok(other.as_int().unwrap_or(0) != 0),
        }
    }

    fn exec(&mut self, program: &Program, tid: Tid, inst: &Inst) -> Result<(), Fault> {
        let src = &inst.loc;
        match &inst.kind {
            InstKind::Alloca { size } => {
                let t = &mut self.threads[tid.0];
                let id = AllocId::Stack {
                    tid,
                    index: t.allocs,
                };
                t.allocs += 1;
                let func = &t.frames.last().expect("frame").func;
                let name = format!("@{func}:%{}", inst.result.as_deref().unwrap_or("_"));
                self.memory.add_stack(id, name, *size);
                let e = self.emit(tid, EventKind::Alloc, src);
                e.loc = Some(MemLoc {
                    alloc: id,
                    offset: 0,
                    width: (*size).min(u32::MAX as u64) as u32,
                });
                self.set(tid, inst, Value::Ptr { alloc: id, offset: 0 });
            }
            InstKind::Load { ty, addr, ordering } => {
                let loc = address(self.eval(tid, addr)?, width_of(*ty))?;
                let v = self.memory.read(&loc).map_err(|e| mem_fault(e, loc))?;
                let e = self.emit(tid, EventKind::Read, src);
                e.loc = Some(loc);
                e.read = Some(v);
                e.atomic = ordering.is_some();
                e.ordering = *ordering;
                self.set(tid, inst, v);
            }
            InstKind::Store {
                ty,
                value,
                addr,
                ordering,
            } => {
                let w = width_of(*ty);
                let loc = address(self.eval(tid, addr)?, w)?;
                let v = self.eval(tid, value)?;
                let init = v == Value::Undef;
                let written = match v {
                    Value::Ptr { .. } => v,
                    other => Value::int(w, other.as_int().unwrap_or(0)),
                };
                self.memory
                    .write(&loc, &written)
                    .map_err(|e| mem_fault(e, loc))?;
                let e = self.emit(tid, EventKind::Write, src);
                e.loc = Some(loc);
                e.written = Some(written);
                e.atomic = ordering.is_some();
                e.ordering = *ordering;
                e.init_store = init;
            }
            InstKind::Rmw {
                op,
                ty,
                addr,
                operand,
                ordering,
            } => {
                let w = width_of(*ty);
                let loc = address(self.eval(tid, addr)?, w)?;
                let old = self.memory.read(&loc).map_err(|e| mem_fault(e, loc))?;
                let arg = self.eval(tid, operand)?;
                let new = match (op, old, arg) {
                    (RmwOp::Xchg, _, Value::Ptr { .. }) => arg,
                    (RmwOp::Xchg, _, a) => Value::int(w, a.as_int().unwrap_or(0)),
                    (RmwOp::Add | RmwOp::Sub, Value::Ptr { alloc, offset }, a) => {
                        let d = a.as_int().ok_or_else(|| {
                            Fault::InvalidOperation("pointer added to pointer".into())
                        })?;
                        let d = if *op == RmwOp::Add { d } else { d.wrapping_neg() };
                        Value::Ptr {
                            alloc,
                            offset: offset.wrapping_add(d),
                        }
                    }
                    (RmwOp::Add | RmwOp::Sub, o, a) => {
                        let (Some(x), Some(y)) = (o.as_int(), a.as_int()) else {
                            return Err(Fault::InvalidOperation(
                                "pointer operand to integer read-modify-write".into(),
                            ));
                        };
                        let bop = if *op == RmwOp::Add { BinOp::Add } else { BinOp::Sub };
                        Value::int(w, int_binop(bop, w, x, y)?)
                    }
                };
                self.memory.write(&loc, &new).map_err(|e| mem_fault(e, loc))?;
                let e = self.emit(tid, EventKind::Rmw, src);
                e.loc = Some(loc);
                e.read = Some(old);
                e.written = Some(new);
                e.atomic = true;
                e.ordering = Some(*ordering);
                self.set(tid, inst, old);
            }
            InstKind::Memcpy { .. } | InstKind::Memmove { .. } | InstKind::Memset { .. } => {
                return Err(Fault::Unsupported("memory intrinsic was not lowered".into()));
            }
            InstKind::ExternCall { func, .. } => {
                return Err(Fault::Unsupported(format!("call to external @{func}")));
            }
            InstKind::Spawn { func, arg } => {
                if self.threads.len() >= self.config.max_threads {
                    return Err(Fault::InvalidOperation(format!(
                        "thread limit {} reached",
                        self.config.max_threads
                    )));
                }
                let callee = program
                    .functions
                    .get(func)
                    .ok_or_else(|| Fault::Malformed(format!("spawn of unknown @{func}")))?;
                let [param] = callee.params.as_slice() else {
                    return Err(Fault::Malformed(format!(
                        "spawned @{func} must take one parameter"
                    )));
                };
                let a = self.eval(tid, arg)?;
                let child = Tid(self.threads.len());
                let mut regs = BTreeMap::new();
                regs.insert(param.name.clone(), a);
                self.threads.push(ThreadState {
                    frames: vec![Frame {
                        func: func.clone(),
                        block: 0,
                        inst: 0,
                        regs,
                        ret_to: None,
                    }],
                    status: ThreadStatus::Runnable,
                    seq: 0,
                    allocs: 0,
                });
                self.emit(tid, EventKind::ThreadCreate, src).peer = Some(child);
                self.set(tid, inst, Value::Thread(child));
                self.emit(child, EventKind::ThreadStart, src).peer = Some(tid);
                self.run_local(program, child);
            }
            InstKind::Join { handle } => {
                let h = self.eval(tid, handle)?;
                let target = self
                    .handle_tid(h)
                    .ok_or_else(|| Fault::InvalidOperation(format!("join of invalid handle {h}")))?;
                let ThreadStatus::Finished(v) = self.threads[target.0].status else {
                    return Err(Fault::Malformed("join scheduled before target ended".into()));
                };
                let e = self.emit(tid, EventKind::ThreadJoin, src);
                e.peer = Some(target);
                e.read = v;
                self.set(tid, inst, v.unwrap_or(Value::int(8, 0)));
            }
            InstKind::Call { func, args } => {
                let depth = self.threads[tid.0].frames.len();
                if depth >= self.config.max_call_depth {
                    return Err(Fault::CallDepthExceeded(self.config.max_call_depth));
                }
                let callee = program
                    .functions
                    .get(func)
                    .ok_or_else(|| Fault::Malformed(format!("call to unknown @{func}")))?;
                if callee.params.len() != args.len() {
                    return Err(Fault::Malformed(format!("arity mismatch calling @{func}")));
                }
                let mut regs = BTreeMap::new();
                for (p, a) in callee.params.iter().zip(args) {
                    regs.insert(p.name.clone(), self.eval(tid, a)?);
                }
                self.threads[tid.0].frames.push(Frame {
                    func: func.clone(),
                    block: 0,
                    inst: 0,
                    regs,
                    ret_to: inst.result.clone(),
                });
            }
            InstKind::BinOp { op, ty, lhs, rhs } => {
                let w = width_of(*ty);
                let (a, b) = (self.eval(tid, lhs)?, self.eval(tid, rhs)?);
                let v = match (a, b, op) {
                    (Value::Ptr { alloc, offset }, x, BinOp::Add)
                    | (x, Value::Ptr { alloc, offset }, BinOp::Add)
                        if x.as_int().is_some() =>
                    {
                        Value::Ptr {
                            alloc,
                            offset: offset.wrapping_add(x.as_int().unwrap_or(0)),
                        }
                    }
                    (Value::Ptr { alloc, offset }, x, BinOp::Sub) if x.as_int().is_some() => {
                        Value::Ptr {
                            alloc,
                            offset: offset.wrapping_sub(x.as_int().unwrap_or(0)),
                        }
                    }
                    (
                        Value::Ptr { alloc: a1, offset: o1 },
                        Value::Ptr { alloc: a2, offset: o2 },
                        BinOp::Sub,
                    ) if a1 == a2 => Value::int(w, o1.wrapping_sub(o2)),
                    (Value::Ptr { .. }, _, _) | (_, Value::Ptr { .. }, _) => {
                        return Err(Fault::InvalidOperation(format!(
                            "{} on a pointer",
                            op.name()
                        )))
                    }
                    (x, y, _) => Value::int(
                        w,
                        int_binop(*op, w, x.as_int().unwrap_or(0), y.as_int().unwrap_or(0))?,
                    ),
                };
                self.set(tid, inst, v);
            }
            InstKind::Icmp { pred, lhs, rhs } => {
                let (a, b) = (self.eval(tid, lhs)?, self.eval(tid, rhs)?);
                let r = match (a, b) {
                    (
                        Value::Ptr { alloc: a1, offset: o1 },
                        Value::Ptr { alloc: a2, offset: o2 },
                    ) => match pred {
                        Pred::Eq => a1 == a2 && o1 == o2,
                        Pred::Ne => !(a1 == a2 && o1 == o2),
                        _ if a1 == a2 => compare(*pred, 8, o1, o2),
                        _ => {
                            return Err(Fault::InvalidOperation(
                                "ordered comparison of pointers into different allocations"
                                    .into(),
                            ))
                        }
                    },
                    (Value::Ptr { .. }, _) | (_, Value::Ptr { .. }) => match pred {
                        Pred::Eq => false,
                        Pred::Ne => true,
                        _ => {
                            return Err(Fault::InvalidOperation(
                                "ordered comparison of pointer and integer".into(),
                            ))
                        }
                    },
                    (x, y) => {
                        let w = match (lhs, rhs) {
                            (Operand::Const(_), Operand::Const(_)) => 8,
                            (Operand::Const(_), _) => int_width(&y),
                            (_, Operand::Const(_)) => int_width(&x),
                            _ => int_width(&x).max(int_width(&y)),
                        };
                        compare(*pred, w, x.as_int().unwrap_or(0), y.as_int().unwrap_or(0))
                    }
                };
                self.set(tid, inst, Value::int(1, r as i64));
            }
            InstKind::Gep { base, offset } => {
                let b = self.eval(tid, base)?;
                let off = self.eval(tid, offset)?;
                let (Value::Ptr { alloc, offset }, Some(d)) = (b, off.as_int()) else {
                    return Err(Fault::InvalidOperation(format!(
                        "gep needs a pointer and an integer, got {b} and {off}"
                    )));
                };
                if matches!(off, Value::Ptr { .. }) {
                    return Err(Fault::InvalidOperation("gep offset is a pointer".into()));
                }
                self.set(
                    tid,
                    inst,
                    Value::Ptr {
                        alloc,
                        offset: offset.wrapping_add(d),
                    },
                );
            }
            InstKind::Br { target } => self.goto(program, tid, target)?,
            InstKind::CondBr {
                cond,
                if_true,
                if_false,
            } => {
                let c = Self::truth(self.eval(tid, cond)?)?;
                self.goto(program, tid, if c { if_true } else { if_false })?;
            }
            InstKind::Assert { cond } => {
                if !Self::truth(self.eval(tid, cond)?)? {
                    return Err(Fault::AssertViolation);
                }
            }
            InstKind::Panic { message } => return Err(Fault::Panic(message.clone())),
            InstKind::Ret { value } => {
                let v = value.as_ref().map(|o| self.eval(tid, o)).transpose()?;
                let t = &mut self.threads[tid.0];
                let frame = t.frames.pop().expect("frame");
                if t.frames.is_empty() {
                    t.status = ThreadStatus::Finished(v);
                    self.emit(tid, EventKind::ThreadEnd, src).written = v;
                } else if let Some(r) = frame.ret_to {
                    let v = v.ok_or_else(|| {
                        Fault::InvalidOperation(format!("@{} returned no value", frame.func))
                    })?;
                    self.frame_mut(tid).regs.insert(r, v);
                }
            }
            InstKind::GlobalRef { symbol } => {
                let alloc = self
                    .memory
                    .global(symbol)
                    .ok_or_else(|| Fault::Malformed(format!("unknown global @{symbol}")))?;
                self.set(tid, inst, Value::Ptr { alloc, offset: 0 });
            }
            InstKind::BoundExceeded => {
                self.threads[tid.0].status = ThreadStatus::BoundExceeded;
                self.notes.push(format!("{tid}: loop bound reached at {src}"));
            }
        }
        Ok(())
    }
}

/// Replays `schedule`: each entry is one step of the named thread. Entries
/// naming a thread that cannot step are skipped with a note; after the
/// schedule runs out, the lowest enabled thread is stepped until none is.
pub fn run_schedule(
    program: &Program,
    schedule: &[Tid],
    config: &ExecConfig,
) -> Result<Trace, ExecError> {
    let mut m = Machine::new(Arc::new(program.clone()), config.clone())?;
    for (i, &tid) in schedule.iter().enumerate() {
        if m.is_enabled(tid) {
            m.step(tid)?;
        } else {
            m.notes
                .push(format!("schedule entry {i}: {tid} not enabled, skipped"));
        }
    }
    while let Some(&tid) = m.enabled().first() {
        m.step(tid)?;
    }
    Ok(m.finish())
}
