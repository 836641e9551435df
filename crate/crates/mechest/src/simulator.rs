//! Instruction-accurate simulator.
//!
//! The dispatch loop itself increments the per-category counters, so counts
//! are exact by construction: every executed instruction bumps exactly one
//! category and the running total. Decoded text words are cached and the
//! cache entry is invalidated if a store overwrites the word.

use crate::asm::BinaryImage;
use crate::isa::{Category, Instruction, Mnemonic};
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashMap;
use thiserror::Error;

/// Default instruction budget for `run`.
pub const DEFAULT_BUDGET: u64 = 1 << 32;

pub const DEFAULT_MEMORY_SIZE: u32 = 16 * 1024 * 1024;

/// Simulated hardware configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardwareConfig {
    pub name: String,
    pub fpu_present: bool,
    /// FPGA area occupied by the configuration, for the comparison report.
    pub logical_elements: u64,
    #[serde(default = "default_memory_size")]
    pub memory_size: u32,
}

fn default_memory_size() -> u32 {
    DEFAULT_MEMORY_SIZE
}

impl HardwareConfig {
    pub fn with_fpu() -> HardwareConfig {
        HardwareConfig {
            name: "leon3-fpu".into(),
            fpu_present: true,
            logical_elements: 20900,
            memory_size: DEFAULT_MEMORY_SIZE,
        }
    }

    pub fn without_fpu() -> HardwareConfig {
        HardwareConfig {
            name: "leon3-nofpu".into(),
            fpu_present: false,
            logical_elements: 10000,
            memory_size: DEFAULT_MEMORY_SIZE,
        }
    }

    pub fn from_json(json: &str) -> Result<HardwareConfig, SimError> {
        let cfg: HardwareConfig =
            serde_json::from_str(json).map_err(|e| SimError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.logical_elements == 0 {
            return Err(SimError::BadConfig(
                "logical_elements must be positive".into(),
            ));
        }
        if self.memory_size % 4 != 0 || self.memory_size == 0 {
            return Err(SimError::BadConfig(format!(
                "memory_size {} must be a positive multiple of 4",
                self.memory_size
            )));
        }
        Ok(())
    }
}

/// Per-category instruction counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CategoryCounts([u64; Category::COUNT]);

impl CategoryCounts {
    pub fn new() -> CategoryCounts {
        CategoryCounts::default()
    }

    pub fn get(&self, cat: Category) -> u64 {
        self.0[cat.index()]
    }

    pub fn set(&mut self, cat: Category, n: u64) {
        self.0[cat.index()] = n;
    }

    pub fn increment(&mut self, cat: Category) {
        self.0[cat.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Iterates in canonical category order.
    pub fn iter(&self) -> impl Iterator<Item = (Category, u64)> + '_ {
        Category::ALL.iter().map(move |&c| (c, self.get(c)))
    }

    /// Per-category difference `self - other`; `None` if any entry would go
    /// negative.
    pub fn checked_sub(&self, other: &CategoryCounts) -> Option<CategoryCounts> {
        let mut out = CategoryCounts::new();
        for (cat, n) in self.iter() {
            out.set(cat, n.checked_sub(other.get(cat))?);
        }
        Some(out)
    }
}

impl Serialize for CategoryCounts {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(Category::COUNT + 1))?;
        for (cat, n) in self.iter() {
            map.serialize_entry(cat.name(), &n)?;
        }
        map.serialize_entry("total", &self.total())?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for CategoryCounts {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CountsVisitor;
        impl<'de> Visitor<'de> for CountsVisitor {
            type Value = CategoryCounts;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a map of category names to counts")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut counts = CategoryCounts::new();
                let mut seen = [false; Category::COUNT];
                let mut total: Option<u64> = None;
                while let Some((key, value)) = access.next_entry::<String, u64>()? {
                    if key == "total" {
                        total = Some(value);
                        continue;
                    }
                    let cat = Category::ALL
                        .iter()
                        .copied()
                        .find(|c| c.name() == key)
                        .ok_or_else(|| serde::de::Error::custom(format!("unknown category `{key}`")))?;
                    counts.set(cat, value);
                    seen[cat.index()] = true;
                }
                for (i, seen) in seen.iter().enumerate() {
                    if !seen {
                        return Err(serde::de::Error::custom(format!(
                            "missing category `{}`",
                            Category::ALL[i].name()
                        )));
                    }
                }
                if let Some(t) = total {
                    if t != counts.total() {
                        return Err(serde::de::Error::custom(format!(
                            "total {t} does not match the sum {}",
                            counts.total()
                        )));
                    }
                }
                Ok(counts)
            }
        }
        deserializer.deserialize_map(CountsVisitor)
    }
}

/// Remaps mnemonics to categories for accounting experiments. Execution
/// semantics, including the FPU-presence check, always follow the built-in
/// table; only counting is affected.
#[derive(Debug, Clone)]
pub struct CategoryTable([Category; Mnemonic::COUNT]);

impl Default for CategoryTable {
    fn default() -> CategoryTable {
        let mut table = [Category::Other; Mnemonic::COUNT];
        for &m in Mnemonic::ALL {
            table[m.index()] = m.category();
        }
        CategoryTable(table)
    }
}

impl CategoryTable {
    pub fn lookup(&self, m: Mnemonic) -> Category {
        self.0[m.index()]
    }

    pub fn with_overrides(overrides: &HashMap<Mnemonic, Category>) -> CategoryTable {
        let mut table = CategoryTable::default();
        for (&m, &cat) in overrides {
            table.0[m.index()] = cat;
        }
        table
    }

    /// Loads an alias file: a JSON object mapping mnemonic names to category
    /// names, e.g. `{"MULHU": "Other"}`.
    pub fn from_alias_json(json: &str) -> Result<CategoryTable, SimError> {
        let raw: HashMap<String, Category> =
            serde_json::from_str(json).map_err(|e| SimError::BadConfig(e.to_string()))?;
        let mut overrides = HashMap::new();
        for (name, cat) in raw {
            let m = Mnemonic::from_name(&name)
                .ok_or_else(|| SimError::BadConfig(format!("unknown mnemonic `{name}`")))?;
            overrides.insert(m, cat);
        }
        Ok(CategoryTable::with_overrides(&overrides))
    }
}

#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error("illegal instruction at pc {pc:#010x}: word {word:#010x}")]
    IllegalInstruction { pc: u32, word: u32 },
    #[error("misaligned access at pc {pc:#010x}: address {addr:#010x}")]
    MisalignedAccess { pc: u32, addr: u32 },
    #[error("out-of-bounds access at pc {pc:#010x}: address {addr:#010x}")]
    OutOfBounds { pc: u32, addr: u32 },
    #[error("FP instruction {mnemonic} at pc {pc:#010x} but the configuration has no FPU")]
    FpuAbsent { pc: u32, mnemonic: &'static str },
    #[error("instruction budget exhausted after {executed} instructions")]
    BudgetExhausted {
        executed: u64,
        counts: CategoryCounts,
    },
    #[error("image does not fit: segment end {required:#x} exceeds memory size {memory:#x}")]
    ImageTooLarge { required: u64, memory: u32 },
    #[error("entry point {entry:#010x} is not inside the text segment")]
    BadEntry { entry: u32 },
    #[error("bad hardware configuration: {0}")]
    BadConfig(String),
}

/// Full architectural state plus counters.
#[derive(Debug, Clone)]
pub struct MachineState {
    pub pc: u32,
    int_regs: [u32; 32],
    pub fp_regs: [u64; 32],
    pub memory: Vec<u8>,
    pub halted: bool,
    pub counts: CategoryCounts,
    pub executed: u64,
    mnemonic_counts: [u64; Mnemonic::COUNT],
    config: HardwareConfig,
    category_table: CategoryTable,
    text_base: u32,
    text_len: u32,
    data_base: u32,
    data_len: u32,
    decode_cache: Vec<Option<Instruction>>,
}

impl MachineState {
    /// Loads an image: copies both segments, sets pc to the entry point and
    /// the stack pointer (r30) to the top of memory.
    pub fn load(img: &BinaryImage, config: &HardwareConfig) -> Result<MachineState, SimError> {
        config.validate()?;
        let mem_size = config.memory_size as u64;
        let text_end = u64::from(img.text_base) + 4 * img.text.len() as u64;
        let data_end = u64::from(img.data_base) + img.data.len() as u64;
        if text_end > mem_size || data_end > mem_size {
            return Err(SimError::ImageTooLarge {
                required: text_end.max(data_end),
                memory: config.memory_size,
            });
        }
        if img.entry % 4 != 0
            || img.entry < img.text_base
            || u64::from(img.entry) >= text_end
            || img.text.is_empty()
        {
            return Err(SimError::BadEntry { entry: img.entry });
        }

        let mut memory = vec![0u8; config.memory_size as usize];
        for (i, word) in img.text.iter().enumerate() {
            let at = img.text_base as usize + 4 * i;
            memory[at..at + 4].copy_from_slice(&word.to_be_bytes());
        }
        let data_at = img.data_base as usize;
        memory[data_at..data_at + img.data.len()].copy_from_slice(&img.data);

        let mut int_regs = [0u32; 32];
        int_regs[30] = config.memory_size;

        Ok(MachineState {
            pc: img.entry,
            int_regs,
            fp_regs: [0; 32],
            memory,
            halted: false,
            counts: CategoryCounts::new(),
            executed: 0,
            mnemonic_counts: [0; Mnemonic::COUNT],
            config: config.clone(),
            category_table: CategoryTable::default(),
            text_base: img.text_base,
            text_len: (img.text.len() * 4) as u32,
            data_base: img.data_base,
            data_len: img.data.len() as u32,
            decode_cache: vec![None; img.text.len()],
        })
    }

    pub fn set_category_table(&mut self, table: CategoryTable) {
        self.category_table = table;
    }

    pub fn config(&self) -> &HardwareConfig {
        &self.config
    }

    pub fn reg(&self, idx: u8) -> u32 {
        self.int_regs[idx as usize]
    }

    /// r0 ignores writes.
    pub fn set_reg(&mut self, idx: u8, value: u32) {
        if idx != 0 {
            self.int_regs[idx as usize] = value;
        }
    }

    /// The data segment as loaded plus any stores the program made to it.
    pub fn data_segment(&self) -> &[u8] {
        let start = self.data_base as usize;
        &self.memory[start..start + self.data_len as usize]
    }

    pub fn mnemonic_counts(&self) -> impl Iterator<Item = (Mnemonic, u64)> + '_ {
        Mnemonic::ALL
            .iter()
            .map(move |&m| (m, self.mnemonic_counts[m.index()]))
    }

    fn check_bounds(&self, addr: u32, len: u32) -> Result<usize, SimError> {
        let end = u64::from(addr) + u64::from(len);
        if end > self.memory.len() as u64 {
            return Err(SimError::OutOfBounds { pc: self.pc, addr });
        }
        Ok(addr as usize)
    }

    fn check_aligned(&self, addr: u32) -> Result<(), SimError> {
        if addr % 4 != 0 {
            return Err(SimError::MisalignedAccess { pc: self.pc, addr });
        }
        Ok(())
    }

    fn read_u8(&self, addr: u32) -> Result<u32, SimError> {
        let at = self.check_bounds(addr, 1)?;
        Ok(self.memory[at] as u32)
    }

    fn read_u32(&self, addr: u32) -> Result<u32, SimError> {
        self.check_aligned(addr)?;
        let at = self.check_bounds(addr, 4)?;
        Ok(u32::from_be_bytes(
            self.memory[at..at + 4].try_into().unwrap(),
        ))
    }

    fn read_u64(&self, addr: u32) -> Result<u64, SimError> {
        let hi = self.read_u32(addr)?;
        let lo = self.read_u32(addr.wrapping_add(4))?;
        Ok((u64::from(hi) << 32) | u64::from(lo))
    }

    fn invalidate_decode(&mut self, addr: u32, len: u32) {
        let text_end = self.text_base + self.text_len;
        if addr >= text_end || addr.wrapping_add(len) <= self.text_base {
            return;
        }
        let first = addr.saturating_sub(self.text_base) / 4;
        let last = (addr + len - 1).saturating_sub(self.text_base) / 4;
        for i in first..=last.min(self.decode_cache.len() as u32 - 1) {
            self.decode_cache[i as usize] = None;
        }
    }

    fn write_u8(&mut self, addr: u32, value: u8) -> Result<(), SimError> {
        let at = self.check_bounds(addr, 1)?;
        self.memory[at] = value;
        self.invalidate_decode(addr, 1);
        Ok(())
    }

    fn write_u32(&mut self, addr: u32, value: u32) -> Result<(), SimError> {
        self.check_aligned(addr)?;
        let at = self.check_bounds(addr, 4)?;
        self.memory[at..at + 4].copy_from_slice(&value.to_be_bytes());
        self.invalidate_decode(addr, 4);
        Ok(())
    }

    fn write_u64(&mut self, addr: u32, value: u64) -> Result<(), SimError> {
        self.write_u32(addr, (value >> 32) as u32)?;
        self.write_u32(addr.wrapping_add(4), value as u32)
    }

    fn fetch(&mut self) -> Result<Instruction, SimError> {
        let pc = self.pc;
        if pc % 4 != 0 {
            return Err(SimError::MisalignedAccess { pc, addr: pc });
        }
        let in_text = pc >= self.text_base && pc < self.text_base + self.text_len;
        if in_text {
            let idx = ((pc - self.text_base) / 4) as usize;
            if let Some(instr) = self.decode_cache[idx] {
                return Ok(instr);
            }
        }
        let word = self.read_u32(pc)?;
        let instr =
            crate::isa::decode(word).map_err(|_| SimError::IllegalInstruction { pc, word })?;
        if in_text {
            let idx = ((pc - self.text_base) / 4) as usize;
            self.decode_cache[idx] = Some(instr);
        }
        Ok(instr)
    }

    /// Executes one instruction. Counters are updated only when the
    /// instruction completes.
    pub fn step(&mut self) -> Result<(), SimError> {
        debug_assert!(!self.halted, "step() on a halted machine");
        if self.halted {
            return Ok(());
        }
        let instr = self.fetch()?;
        let m = instr.mnemonic;
        if m.category().is_fpu() && !self.config.fpu_present {
            return Err(SimError::FpuAbsent {
                pc: self.pc,
                mnemonic: m.name(),
            });
        }
        self.execute(&instr)?;
        self.counts.increment(self.category_table.lookup(m));
        self.mnemonic_counts[m.index()] += 1;
        self.executed += 1;
        Ok(())
    }

    /// Runs until HALT or until `budget` instructions have executed.
    pub fn run(&mut self, budget: u64) -> Result<(), SimError> {
        while !self.halted {
            if self.executed >= budget {
                return Err(SimError::BudgetExhausted {
                    executed: self.executed,
                    counts: self.counts,
                });
            }
            self.step()?;
        }
        Ok(())
    }

    fn execute(&mut self, instr: &Instruction) -> Result<(), SimError> {
        use Mnemonic::*;
        let rd = instr.rd;
        let a = self.reg(instr.rs1);
        let b = self.reg(instr.rs2);
        let imm = instr.imm;
        let mut next_pc = self.pc.wrapping_add(4);
        let branch_target = |pc: u32| pc.wrapping_add((imm as u32).wrapping_mul(4));

        match instr.mnemonic {
            Nop => {}
            Halt => self.halted = true,
            Add => self.set_reg(rd, a.wrapping_add(b)),
            Sub => self.set_reg(rd, a.wrapping_sub(b)),
            And => self.set_reg(rd, a & b),
            Or => self.set_reg(rd, a | b),
            Xor => self.set_reg(rd, a ^ b),
            Sll => self.set_reg(rd, a.wrapping_shl(b & 31)),
            Srl => self.set_reg(rd, a.wrapping_shr(b & 31)),
            Sra => self.set_reg(rd, ((a as i32).wrapping_shr(b & 31)) as u32),
            Slt => self.set_reg(rd, ((a as i32) < (b as i32)) as u32),
            Sltu => self.set_reg(rd, (a < b) as u32),
            Mul => self.set_reg(rd, a.wrapping_mul(b)),
            Mulhu => self.set_reg(rd, ((u64::from(a) * u64::from(b)) >> 32) as u32),
            Div => {
                let v = if b == 0 {
                    u32::MAX
                } else {
                    (a as i32).wrapping_div(b as i32) as u32
                };
                self.set_reg(rd, v);
            }
            Divu => self.set_reg(rd, if b == 0 { u32::MAX } else { a / b }),
            Mov => self.set_reg(rd, a),
            Jr => {
                if a % 4 != 0 {
                    return Err(SimError::MisalignedAccess {
                        pc: self.pc,
                        addr: a,
                    });
                }
                next_pc = a;
            }
            Addi => self.set_reg(rd, a.wrapping_add(imm as u32)),
            Andi => self.set_reg(rd, a & imm as u32),
            Ori => self.set_reg(rd, a | imm as u32),
            Xori => self.set_reg(rd, a ^ imm as u32),
            Slli => self.set_reg(rd, a.wrapping_shl(imm as u32)),
            Srli => self.set_reg(rd, a.wrapping_shr(imm as u32)),
            Srai => self.set_reg(rd, ((a as i32).wrapping_shr(imm as u32)) as u32),
            Lui => self.set_reg(rd, (imm as u32) << 16),
            Beq => {
                if a == b {
                    next_pc = branch_target(self.pc);
                }
            }
            Bne => {
                if a != b {
                    next_pc = branch_target(self.pc);
                }
            }
            Blt => {
                if (a as i32) < (b as i32) {
                    next_pc = branch_target(self.pc);
                }
            }
            Bge => {
                if (a as i32) >= (b as i32) {
                    next_pc = branch_target(self.pc);
                }
            }
            Bltu => {
                if a < b {
                    next_pc = branch_target(self.pc);
                }
            }
            Bgeu => {
                if a >= b {
                    next_pc = branch_target(self.pc);
                }
            }
            J => next_pc = branch_target(self.pc),
            Call => {
                self.set_reg(31, self.pc.wrapping_add(4));
                next_pc = branch_target(self.pc);
            }
            Ld => {
                let v = self.read_u32(a.wrapping_add(imm as u32))?;
                self.set_reg(rd, v);
            }
            Ldb => {
                let v = self.read_u8(a.wrapping_add(imm as u32))?;
                self.set_reg(rd, v);
            }
            St => self.write_u32(a.wrapping_add(imm as u32), self.reg(rd))?,
            Stb => self.write_u8(a.wrapping_add(imm as u32), self.reg(rd) as u8)?,
            Fld => self.fp_regs[rd as usize] = self.read_u64(a.wrapping_add(imm as u32))?,
            Flw => self.fp_regs[rd as usize] = u64::from(self.read_u32(a.wrapping_add(imm as u32))?),
            Fst => self.write_u64(a.wrapping_add(imm as u32), self.fp_regs[rd as usize])?,
            Fsw => self.write_u32(a.wrapping_add(imm as u32), self.fp_regs[rd as usize] as u32)?,
            FaddD | FsubD | FmulD | FdivD => {
                let x = f64::from_bits(self.fp_regs[instr.rs1 as usize]);
                let y = f64::from_bits(self.fp_regs[instr.rs2 as usize]);
                let v = match instr.mnemonic {
                    FaddD => x + y,
                    FsubD => x - y,
                    FmulD => x * y,
                    _ => x / y,
                };
                self.fp_regs[rd as usize] = canonical_f64(v);
            }
            FsqrtD => {
                let x = f64::from_bits(self.fp_regs[instr.rs1 as usize]);
                self.fp_regs[rd as usize] = canonical_f64(x.sqrt());
            }
            FaddS | FsubS | FmulS | FdivS => {
                let x = f32::from_bits(self.fp_regs[instr.rs1 as usize] as u32);
                let y = f32::from_bits(self.fp_regs[instr.rs2 as usize] as u32);
                let v = match instr.mnemonic {
                    FaddS => x + y,
                    FsubS => x - y,
                    FmulS => x * y,
                    _ => x / y,
                };
                self.fp_regs[rd as usize] = u64::from(canonical_f32(v));
            }
            FsqrtS => {
                let x = f32::from_bits(self.fp_regs[instr.rs1 as usize] as u32);
                self.fp_regs[rd as usize] = u64::from(canonical_f32(x.sqrt()));
            }
        }
        self.pc = next_pc;
        Ok(())
    }
}

/// All NaN results are the canonical quiet NaN, so simulated FP behavior is
/// host-independent.
pub fn canonical_f64(v: f64) -> u64 {
    if v.is_nan() {
        0x7FF8_0000_0000_0000
    } else {
        v.to_bits()
    }
}

pub fn canonical_f32(v: f32) -> u32 {
    if v.is_nan() {
        0x7FC0_0000
    } else {
        v.to_bits()
    }
}

/// Loads and runs an image in one call.
pub fn run(
    img: &BinaryImage,
    config: &HardwareConfig,
    budget: u64,
) -> Result<MachineState, SimError> {
    let mut state = MachineState::load(img, config)?;
    state.run(budget)?;
    Ok(state)
}
