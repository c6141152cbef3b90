//! Register naming, widths, and the packing of a joint basis assignment
//! into one integer key.

use super::{EngineError, MAX_SPARSE_BITS};

/// Declaration of one register: its name, width in qubits, the party that
/// holds it when the state is created, and its initial computational value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterSpec {
    pub name: String,
    pub width: u32,
    pub owner: usize,
    pub init: u64,
}

impl RegisterSpec {
    pub fn new(name: &str, width: u32, owner: usize, init: u64) -> Self {
        Self {
            name: name.to_string(),
            width,
            owner,
            init,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct RegisterInfo {
    name: String,
    width: u32,
    owner: usize,
    init: u64,
    offset: u32,
}

/// Ordered set of registers making up a state.
///
/// A joint basis assignment packs into a single `u64` key: register `i`
/// occupies bits `[offset_i, offset_i + width_i)`, least significant bit
/// first, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    regs: Vec<RegisterInfo>,
    total_width: u32,
}

impl RegisterLayout {
    /// Validates and freezes a register list.
    ///
    /// # Errors
    ///
    /// Rejects empty layouts, duplicate names, zero widths, initial values
    /// wider than their register, and layouts over [`MAX_SPARSE_BITS`]
    /// packed bits.
    pub fn new(specs: Vec<RegisterSpec>) -> Result<Self, EngineError> {
        if specs.is_empty() {
            return Err(EngineError::EmptyLayout);
        }
        let mut regs = Vec::with_capacity(specs.len());
        let mut offset = 0u32;
        for spec in specs {
            if spec.width == 0 {
                return Err(EngineError::ZeroWidth(spec.name));
            }
            if regs.iter().any(|r: &RegisterInfo| r.name == spec.name) {
                return Err(EngineError::DuplicateRegister(spec.name));
            }
            if spec.width < 64 && spec.init >> spec.width != 0 {
                return Err(EngineError::InitTooWide {
                    register: spec.name,
                    value: spec.init,
                    width: spec.width,
                });
            }
            regs.push(RegisterInfo {
                name: spec.name,
                width: spec.width,
                owner: spec.owner,
                init: spec.init,
                offset,
            });
            offset += spec.width;
            if offset > MAX_SPARSE_BITS {
                return Err(EngineError::LayoutTooWide {
                    bits: offset,
                    limit: MAX_SPARSE_BITS,
                });
            }
        }
        Ok(Self {
            regs,
            total_width: offset,
        })
    }

    /// Sum of all register widths.
    pub fn total_width(&self) -> u32 {
        self.total_width
    }

    /// Number of registers.
    pub fn len(&self) -> usize {
        self.regs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regs.is_empty()
    }

    /// Index of a register by name.
    pub fn index_of(&self, name: &str) -> Result<usize, EngineError> {
        self.regs
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| EngineError::UnknownRegister(name.to_string()))
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.regs[idx].name
    }

    pub fn width(&self, idx: usize) -> u32 {
        self.regs[idx].width
    }

    pub fn owner(&self, idx: usize) -> usize {
        self.regs[idx].owner
    }

    pub fn init(&self, idx: usize) -> u64 {
        self.regs[idx].init
    }

    pub fn offset(&self, idx: usize) -> u32 {
        self.regs[idx].offset
    }

    /// Bit mask covering register `idx` within a packed key.
    pub fn mask(&self, idx: usize) -> u64 {
        let r = &self.regs[idx];
        if r.width == 64 {
            u64::MAX
        } else {
            ((1u64 << r.width) - 1) << r.offset
        }
    }

    /// Value of register `idx` inside the packed key.
    pub fn extract(&self, key: u64, idx: usize) -> u64 {
        (key & self.mask(idx)) >> self.regs[idx].offset
    }

    /// Packed key with register `idx` replaced by `value`.
    pub fn with_value(&self, key: u64, idx: usize, value: u64) -> u64 {
        (key & !self.mask(idx)) | (value << self.regs[idx].offset)
    }

    /// Packed key of the declared initial assignment.
    pub fn initial_key(&self) -> u64 {
        self.regs
            .iter()
            .fold(0, |key, r| key | (r.init << r.offset))
    }

    /// Widest register in the layout.
    pub fn max_width(&self) -> u32 {
        self.regs.iter().map(|r| r.width).max().unwrap_or(0)
    }

    /// Per-register values of a packed key, in declaration order.
    pub fn unpack(&self, key: u64) -> Vec<u64> {
        (0..self.regs.len()).map(|i| self.extract(key, i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> RegisterLayout {
        RegisterLayout::new(vec![
            RegisterSpec::new("h", 3, 0, 5),
            RegisterSpec::new("t", 3, 0, 0),
            RegisterSpec::new("e0", 2, 1, 2),
        ])
        .unwrap()
    }

    #[test]
    fn packing_round_trips() {
        let l = layout();
        assert_eq!(l.total_width(), 8);
        let key = l.initial_key();
        assert_eq!(l.extract(key, 0), 5);
        assert_eq!(l.extract(key, 1), 0);
        assert_eq!(l.extract(key, 2), 2);
        let key2 = l.with_value(key, 1, 7);
        assert_eq!(l.extract(key2, 1), 7);
        assert_eq!(l.extract(key2, 0), 5);
        assert_eq!(l.unpack(key2), vec![5, 7, 2]);
    }

    #[test]
    fn validation_rejects_bad_layouts() {
        assert!(matches!(
            RegisterLayout::new(vec![]),
            Err(EngineError::EmptyLayout)
        ));
        assert!(matches!(
            RegisterLayout::new(vec![
                RegisterSpec::new("h", 2, 0, 0),
                RegisterSpec::new("h", 2, 0, 0),
            ]),
            Err(EngineError::DuplicateRegister(_))
        ));
        assert!(matches!(
            RegisterLayout::new(vec![RegisterSpec::new("h", 0, 0, 0)]),
            Err(EngineError::ZeroWidth(_))
        ));
        assert!(matches!(
            RegisterLayout::new(vec![RegisterSpec::new("h", 2, 0, 4)]),
            Err(EngineError::InitTooWide { .. })
        ));
        assert!(matches!(
            RegisterLayout::new(vec![
                RegisterSpec::new("a", 32, 0, 0),
                RegisterSpec::new("b", 32, 0, 0),
            ]),
            Err(EngineError::LayoutTooWide { .. })
        ));
    }

    #[test]
    fn lookup_by_name() {
        let l = layout();
        assert_eq!(l.index_of("t").unwrap(), 1);
        assert!(matches!(
            l.index_of("zz"),
            Err(EngineError::UnknownRegister(_))
        ));
        assert_eq!(l.owner(2), 1);
        assert_eq!(l.max_width(), 3);
    }
}
