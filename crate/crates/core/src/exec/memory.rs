use std::collections::BTreeMap;
use std::fmt;

use super::{AllocId, MemLoc, Value};

/// Content of one memory byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Byte {
    Uninit,
    Data(u8),
    /// Byte `index` of a stored pointer; pointers keep their provenance
    /// through memory.
    PtrPart { alloc: AllocId, offset: i64, index: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub name: String,
    pub bytes: Vec<Byte>,
    pub live: bool,
}

impl Allocation {
    pub fn size(&self) -> u64 {
        self.bytes.len() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemError {
    OutOfBounds { size: u64 },
    Uninitialized,
    MixedPointerBytes,
    PointerTooNarrow,
}

/// Byte-addressed memory: globals plus every stack allocation made so far.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryState {
    allocs: BTreeMap<AllocId, Allocation>,
    globals: BTreeMap<String, AllocId>,
}

impl MemoryState {
    pub(crate) fn add_global(&mut self, id: AllocId, name: &str, bytes: Vec<Byte>) {
        self.allocs.insert(
            id,
            Allocation {
                name: format!("@{name}"),
                bytes,
                live: true,
            },
        );
        self.globals.insert(name.to_string(), id);
    }

    pub(crate) fn add_stack(&mut self, id: AllocId, name: String, size: u64) {
        self.allocs.insert(
            id,
            Allocation {
                name,
                bytes: vec![Byte::Uninit; size as usize],
                live: true,
            },
        );
    }

    pub fn global(&self, name: &str) -> Option<AllocId> {
        self.globals.get(name).copied()
    }

    pub fn allocation(&self, id: AllocId) -> Option<&Allocation> {
        self.allocs.get(&id)
    }

    pub fn allocations(&self) -> impl Iterator<Item = (AllocId, &Allocation)> {
        self.allocs.iter().map(|(k, v)| (*k, v))
    }

    pub fn name(&self, id: AllocId) -> String {
        self.allocs
            .get(&id)
            .map(|a| a.name.clone())
            .unwrap_or_else(|| id.to_string())
    }

    /// Initialized data bytes of an allocation; `None` marks uninitialized
    /// or pointer bytes.
    pub fn data(&self, id: AllocId) -> Option<Vec<Option<u8>>> {
        self.allocs.get(&id).map(|a| {
            a.bytes
                .iter()
                .map(|b| match b {
                    Byte::Data(d) => Some(*d),
                    _ => None,
                })
                .collect()
        })
    }

    fn range(&self, loc: &MemLoc) -> Result<(&Allocation, usize, usize), MemError> {
        let Some(a) = self.allocs.get(&loc.alloc) else {
            return Err(MemError::OutOfBounds { size: 0 });
        };
        let end = loc.offset.checked_add(loc.width as i64);
        match end {
            Some(end) if a.live && loc.offset >= 0 && end as u64 <= a.size() => {
                Ok((a, loc.offset as usize, end as usize))
            }
            _ => Err(MemError::OutOfBounds { size: a.size() }),
        }
    }

    pub fn check_bounds(&self, loc: &MemLoc) -> Result<(), MemError> {
        self.range(loc).map(|_| ())
    }

    /// Reads `loc.width` bytes as one value. Integers are little-endian and
    /// sign-extended.
    pub fn read(&self, loc: &MemLoc) -> Result<Value, MemError> {
        let (a, start, end) = self.range(loc)?;
        let bytes = &a.bytes[start..end];
        if bytes.contains(&Byte::Uninit) {
            return Err(MemError::Uninitialized);
        }
        if let Byte::PtrPart { alloc, offset, .. } = bytes[0] {
            let whole = bytes.len() == 8
                && bytes.iter().enumerate().all(|(i, b)| {
                    *b == Byte::PtrPart {
                        alloc,
                        offset,
                        index: i as u8,
                    }
                });
            return if whole {
                Ok(Value::Ptr { alloc, offset })
            } else {
                Err(MemError::MixedPointerBytes)
            };
        }
        let mut raw: u64 = 0;
        for (i, b) in bytes.iter().enumerate() {
            match b {
                Byte::Data(d) => raw |= (*d as u64) << (8 * i),
                _ => return Err(MemError::MixedPointerBytes),
            }
        }
        Ok(Value::int(loc.width as u8, raw as i64))
    }

    /// Writes a value over `loc.width` bytes; `Undef` writes zeros.
    pub fn write(&mut self, loc: &MemLoc, value: &Value) -> Result<(), MemError> {
        self.range(loc)?;
        let width = loc.width as usize;
        let bytes: Vec<Byte> = match value {
            Value::Ptr { alloc, offset } => {
                if width != 8 {
                    return Err(MemError::PointerTooNarrow);
                }
                (0..8)
                    .map(|i| Byte::PtrPart {
                        alloc: *alloc,
                        offset: *offset,
                        index: i,
                    })
                    .collect()
            }
            other => {
                let raw = other.as_int().unwrap_or(0) as u64;
                (0..width).map(|i| Byte::Data((raw >> (8 * i)) as u8)).collect()
            }
        };
        let a = self.allocs.get_mut(&loc.alloc).expect("range checked");
        let start = loc.offset as usize;
        a.bytes[start..start + width].copy_from_slice(&bytes);
        Ok(())
    }
}

impl fmt::Display for MemoryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, a) in &self.allocs {
            write!(f, "{id} {}:", a.name)?;
            for b in &a.bytes {
                match b {
                    Byte::Uninit => write!(f, " ??")?,
                    Byte::Data(d) => write!(f, " {d:02x}")?,
                    Byte::PtrPart { .. } => write!(f, " pp")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
