//! SV8-mini instruction set: a SPARC-V8-inspired 32-bit RISC with fixed-width
//! encoding, no register windows, no delay slots and no condition codes.
//!
//! Every mnemonic belongs to exactly one accounting category; the simulator
//! charges energy and time per category, so the table in this module is the
//! single source of truth for both encoding and accounting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version of the instruction table, reported by `--version` and the
/// generated reference document.
pub const ISA_VERSION: &str = "SV8-mini 1.0";

/// Instruction accounting category.
///
/// The declaration order is the canonical order used for summation,
/// serialization and report layout everywhere in the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "Integer Arithmetic")]
    IntegerArithmetic,
    #[serde(rename = "Jump")]
    Jump,
    #[serde(rename = "Memory Load")]
    MemoryLoad,
    #[serde(rename = "Memory Store")]
    MemoryStore,
    #[serde(rename = "NOP")]
    Nop,
    #[serde(rename = "Other")]
    Other,
    #[serde(rename = "FPU Arithmetic")]
    FpuArithmetic,
    #[serde(rename = "FPU Divide")]
    FpuDivide,
    #[serde(rename = "FPU Square root")]
    FpuSqrt,
}

impl Category {
    pub const COUNT: usize = 9;

    /// All categories in canonical order.
    pub const ALL: [Category; Category::COUNT] = [
        Category::IntegerArithmetic,
        Category::Jump,
        Category::MemoryLoad,
        Category::MemoryStore,
        Category::Nop,
        Category::Other,
        Category::FpuArithmetic,
        Category::FpuDivide,
        Category::FpuSqrt,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::IntegerArithmetic => "Integer Arithmetic",
            Category::Jump => "Jump",
            Category::MemoryLoad => "Memory Load",
            Category::MemoryStore => "Memory Store",
            Category::Nop => "NOP",
            Category::Other => "Other",
            Category::FpuArithmetic => "FPU Arithmetic",
            Category::FpuDivide => "FPU Divide",
            Category::FpuSqrt => "FPU Square root",
        }
    }

    /// True for the categories executed by the floating-point unit.
    pub fn is_fpu(self) -> bool {
        matches!(
            self,
            Category::FpuArithmetic | Category::FpuDivide | Category::FpuSqrt
        )
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Encoding form. The form fixes which fields of [`Instruction`] are live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingForm {
    /// `op | rd | rs1 | rs2 | 0…` — three-register ALU ops, MOV, JR.
    RegReg,
    /// `op | rd | rs1 | imm16` — immediate ALU ops and LUI.
    RegImm,
    /// Conditional: `op | rs1 | rs2 | disp16`; unconditional J/CALL:
    /// `op | disp26`. Displacements are signed word counts relative to the
    /// branch's own address.
    Branch,
    /// `op | rdata | rbase | offset16` — loads and stores, byte offset.
    Mem,
    /// `op | fd | fs1 | fs2 | 0…` — FPU register-to-register ops.
    FpOp,
    /// `op | 0…` — NOP and HALT.
    Sys,
}

/// How the 16-bit immediate field of a mnemonic is interpreted and validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ImmKind {
    /// No immediate; field must be zero.
    None,
    /// Signed 16-bit value (sign-extended at decode).
    Signed16,
    /// Shift amount, 0..=31.
    Shift5,
    /// Signed 26-bit word displacement (J/CALL).
    Disp26,
}

macro_rules! mnemonics {
    ($( $variant:ident = ($name:literal, $op:literal, $form:ident, $cat:ident, $imm:ident, $brief:literal) ),+ $(,)?) => {
        /// Instruction mnemonic. One 6-bit primary opcode per mnemonic.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        #[repr(u8)]
        pub enum Mnemonic {
            $($variant),+
        }

        impl Mnemonic {
            pub const ALL: &'static [Mnemonic] = &[$(Mnemonic::$variant),+];

            pub const fn name(self) -> &'static str {
                match self { $(Mnemonic::$variant => $name),+ }
            }

            pub const fn opcode(self) -> u8 {
                match self { $(Mnemonic::$variant => $op),+ }
            }

            pub const fn form(self) -> EncodingForm {
                match self { $(Mnemonic::$variant => EncodingForm::$form),+ }
            }

            pub const fn category(self) -> Category {
                match self { $(Mnemonic::$variant => Category::$cat),+ }
            }

            const fn imm_kind(self) -> ImmKind {
                match self { $(Mnemonic::$variant => ImmKind::$imm),+ }
            }

            /// One-line semantics, used by the generated reference document.
            pub const fn brief(self) -> &'static str {
                match self { $(Mnemonic::$variant => $brief),+ }
            }
        }
    };
}

mnemonics! {
    Nop    = ("NOP",     0x00, Sys,    Nop,               None,     "no operation"),
    Halt   = ("HALT",    0x01, Sys,    Other,             None,     "stop execution"),
    Add    = ("ADD",     0x02, RegReg, IntegerArithmetic, None,     "rd = rs1 + rs2 (wrapping)"),
    Sub    = ("SUB",     0x03, RegReg, IntegerArithmetic, None,     "rd = rs1 - rs2 (wrapping)"),
    And    = ("AND",     0x04, RegReg, IntegerArithmetic, None,     "rd = rs1 & rs2"),
    Or     = ("OR",      0x05, RegReg, IntegerArithmetic, None,     "rd = rs1 | rs2"),
    Xor    = ("XOR",     0x06, RegReg, IntegerArithmetic, None,     "rd = rs1 ^ rs2"),
    Sll    = ("SLL",     0x07, RegReg, IntegerArithmetic, None,     "rd = rs1 << (rs2 & 31)"),
    Srl    = ("SRL",     0x08, RegReg, IntegerArithmetic, None,     "rd = rs1 >> (rs2 & 31), logical"),
    Sra    = ("SRA",     0x09, RegReg, IntegerArithmetic, None,     "rd = rs1 >> (rs2 & 31), arithmetic"),
    Slt    = ("SLT",     0x0A, RegReg, IntegerArithmetic, None,     "rd = (rs1 < rs2) ? 1 : 0, signed"),
    Sltu   = ("SLTU",    0x0B, RegReg, IntegerArithmetic, None,     "rd = (rs1 < rs2) ? 1 : 0, unsigned"),
    Mul    = ("MUL",     0x0C, RegReg, IntegerArithmetic, None,     "rd = low 32 bits of rs1 * rs2"),
    Mulhu  = ("MULHU",   0x0D, RegReg, IntegerArithmetic, None,     "rd = high 32 bits of unsigned rs1 * rs2"),
    Div    = ("DIV",     0x0E, RegReg, IntegerArithmetic, None,     "rd = rs1 / rs2, signed; x/0 = -1"),
    Divu   = ("DIVU",    0x0F, RegReg, IntegerArithmetic, None,     "rd = rs1 / rs2, unsigned; x/0 = 2^32-1"),
    Mov    = ("MOV",     0x10, RegReg, Other,             None,     "rd = rs1"),
    Jr     = ("JR",      0x11, RegReg, Jump,              None,     "pc = rs1 (word-aligned)"),
    Addi   = ("ADDI",    0x12, RegImm, IntegerArithmetic, Signed16, "rd = rs1 + imm (wrapping)"),
    Andi   = ("ANDI",    0x13, RegImm, IntegerArithmetic, Signed16, "rd = rs1 & sext(imm)"),
    Ori    = ("ORI",     0x14, RegImm, IntegerArithmetic, Signed16, "rd = rs1 | sext(imm)"),
    Xori   = ("XORI",    0x15, RegImm, IntegerArithmetic, Signed16, "rd = rs1 ^ sext(imm)"),
    Slli   = ("SLLI",    0x16, RegImm, IntegerArithmetic, Shift5,   "rd = rs1 << imm"),
    Srli   = ("SRLI",    0x17, RegImm, IntegerArithmetic, Shift5,   "rd = rs1 >> imm, logical"),
    Srai   = ("SRAI",    0x18, RegImm, IntegerArithmetic, Shift5,   "rd = rs1 >> imm, arithmetic"),
    Lui    = ("LUI",     0x19, RegImm, Other,             Signed16, "rd = imm << 16 (rs1 field unused)"),
    Beq    = ("BEQ",     0x1A, Branch, Jump,              Signed16, "if rs1 == rs2: pc += 4*disp"),
    Bne    = ("BNE",     0x1B, Branch, Jump,              Signed16, "if rs1 != rs2: pc += 4*disp"),
    Blt    = ("BLT",     0x1C, Branch, Jump,              Signed16, "if rs1 < rs2 (signed): pc += 4*disp"),
    Bge    = ("BGE",     0x1D, Branch, Jump,              Signed16, "if rs1 >= rs2 (signed): pc += 4*disp"),
    Bltu   = ("BLTU",    0x1E, Branch, Jump,              Signed16, "if rs1 < rs2 (unsigned): pc += 4*disp"),
    Bgeu   = ("BGEU",    0x1F, Branch, Jump,              Signed16, "if rs1 >= rs2 (unsigned): pc += 4*disp"),
    J      = ("J",       0x20, Branch, Jump,              Disp26,   "pc += 4*disp"),
    Call   = ("CALL",    0x21, Branch, Jump,              Disp26,   "r31 = pc + 4; pc += 4*disp"),
    Ld     = ("LD",      0x22, Mem,    MemoryLoad,        Signed16, "rd = mem32[rs1 + off]"),
    Ldb    = ("LDB",     0x23, Mem,    MemoryLoad,        Signed16, "rd = zext(mem8[rs1 + off])"),
    St     = ("ST",      0x24, Mem,    MemoryStore,       Signed16, "mem32[rs1 + off] = rd"),
    Stb    = ("STB",     0x25, Mem,    MemoryStore,       Signed16, "mem8[rs1 + off] = rd & 0xFF"),
    Fld    = ("FLD",     0x26, Mem,    MemoryLoad,        Signed16, "fd = mem64[rs1 + off]"),
    Flw    = ("FLW",     0x27, Mem,    MemoryLoad,        Signed16, "fd = zext(mem32[rs1 + off]), single in low half"),
    Fst    = ("FST",     0x28, Mem,    MemoryStore,       Signed16, "mem64[rs1 + off] = fd"),
    Fsw    = ("FSW",     0x29, Mem,    MemoryStore,       Signed16, "mem32[rs1 + off] = low half of fd"),
    FaddD  = ("FADD.D",  0x2A, FpOp,   FpuArithmetic,     None,     "fd = fs1 + fs2 (binary64)"),
    FsubD  = ("FSUB.D",  0x2B, FpOp,   FpuArithmetic,     None,     "fd = fs1 - fs2 (binary64)"),
    FmulD  = ("FMUL.D",  0x2C, FpOp,   FpuArithmetic,     None,     "fd = fs1 * fs2 (binary64)"),
    FdivD  = ("FDIV.D",  0x2D, FpOp,   FpuDivide,         None,     "fd = fs1 / fs2 (binary64)"),
    FsqrtD = ("FSQRT.D", 0x2E, FpOp,   FpuSqrt,           None,     "fd = sqrt(fs1) (binary64, fs2 unused)"),
    FaddS  = ("FADD.S",  0x2F, FpOp,   FpuArithmetic,     None,     "fd = fs1 + fs2 (binary32, low half)"),
    FsubS  = ("FSUB.S",  0x30, FpOp,   FpuArithmetic,     None,     "fd = fs1 - fs2 (binary32, low half)"),
    FmulS  = ("FMUL.S",  0x31, FpOp,   FpuArithmetic,     None,     "fd = fs1 * fs2 (binary32, low half)"),
    FdivS  = ("FDIV.S",  0x32, FpOp,   FpuDivide,         None,     "fd = fs1 / fs2 (binary32, low half)"),
    FsqrtS = ("FSQRT.S", 0x33, FpOp,   FpuSqrt,           None,     "fd = sqrt(fs1) (binary32, fs2 unused)"),
}

impl Mnemonic {
    /// Number of mnemonics, for per-mnemonic diagnostic counters.
    pub const COUNT: usize = Mnemonic::ALL.len();

    pub fn index(self) -> usize {
        self as usize
    }

    /// Looks a mnemonic up by assembly name, case-insensitively.
    pub fn from_name(name: &str) -> Option<Mnemonic> {
        Mnemonic::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(name))
    }

    /// True if the mnemonic reads or writes the FP register file.
    pub fn touches_fp_regs(self) -> bool {
        self.category().is_fpu()
            || matches!(
                self,
                Mnemonic::Fld | Mnemonic::Flw | Mnemonic::Fst | Mnemonic::Fsw
            )
    }
}

impl std::fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps a mnemonic to its accounting category via the built-in table.
pub fn category_of(mnemonic: Mnemonic) -> Category {
    mnemonic.category()
}

const OPCODE_SPACE: usize = 64;

const fn build_opcode_table() -> [Option<Mnemonic>; OPCODE_SPACE] {
    let mut table: [Option<Mnemonic>; OPCODE_SPACE] = [None; OPCODE_SPACE];
    let mut i = 0;
    while i < Mnemonic::ALL.len() {
        let m = Mnemonic::ALL[i];
        table[m.opcode() as usize] = Some(m);
        i += 1;
    }
    table
}

static OPCODE_TABLE: [Option<Mnemonic>; OPCODE_SPACE] = build_opcode_table();

/// A decoded instruction. Fields not used by the mnemonic's form are zero;
/// `encode` rejects anything else so that decode/encode round-trips exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instruction {
    pub mnemonic: Mnemonic,
    /// Destination register (data register for Mem, rs1 for conditional
    /// branches). Indexes the FP file for FpOp and FLD/FLW/FST/FSW.
    pub rd: u8,
    /// First source / base address register (rs2 for conditional branches).
    pub rs1: u8,
    /// Second source register.
    pub rs2: u8,
    /// Immediate: signed 16-bit value, byte offset, or word displacement.
    pub imm: i32,
}

impl Instruction {
    pub fn new(mnemonic: Mnemonic, rd: u8, rs1: u8, rs2: u8, imm: i32) -> Instruction {
        Instruction {
            mnemonic,
            rd,
            rs1,
            rs2,
            imm,
        }
    }

    pub fn category(&self) -> Category {
        self.mnemonic.category()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsaError {
    #[error("{mnemonic}: field {field} out of range (value {value})")]
    EncodingOverflow {
        mnemonic: &'static str,
        field: &'static str,
        value: i64,
    },
    #[error("illegal instruction word {word:#010x}")]
    IllegalInstruction { word: u32 },
}

fn check_reg(m: Mnemonic, field: &'static str, v: u8) -> Result<u32, IsaError> {
    if v > 31 {
        return Err(IsaError::EncodingOverflow {
            mnemonic: m.name(),
            field,
            value: v as i64,
        });
    }
    Ok(v as u32)
}

fn check_zero(m: Mnemonic, field: &'static str, v: i64) -> Result<(), IsaError> {
    if v != 0 {
        return Err(IsaError::EncodingOverflow {
            mnemonic: m.name(),
            field,
            value: v,
        });
    }
    Ok(())
}

fn check_imm(m: Mnemonic, imm: i32) -> Result<u32, IsaError> {
    let overflow = |value: i64| IsaError::EncodingOverflow {
        mnemonic: m.name(),
        field: "imm",
        value,
    };
    match m.imm_kind() {
        ImmKind::None => {
            check_zero(m, "imm", imm as i64)?;
            Ok(0)
        }
        ImmKind::Signed16 => {
            if imm < i16::MIN as i32 || imm > i16::MAX as i32 {
                return Err(overflow(imm as i64));
            }
            Ok((imm as u32) & 0xFFFF)
        }
        ImmKind::Shift5 => {
            if !(0..=31).contains(&imm) {
                return Err(overflow(imm as i64));
            }
            Ok(imm as u32)
        }
        ImmKind::Disp26 => {
            if imm < -(1 << 25) || imm >= (1 << 25) {
                return Err(overflow(imm as i64));
            }
            Ok((imm as u32) & 0x03FF_FFFF)
        }
    }
}

/// Encodes an instruction into a 32-bit word.
pub fn encode(instr: &Instruction) -> Result<u32, IsaError> {
    let m = instr.mnemonic;
    let op = (m.opcode() as u32) << 26;
    let word = match m.form() {
        EncodingForm::RegReg | EncodingForm::FpOp => {
            check_imm(m, instr.imm)?;
            op | check_reg(m, "rd", instr.rd)? << 21
                | check_reg(m, "rs1", instr.rs1)? << 16
                | check_reg(m, "rs2", instr.rs2)? << 11
        }
        EncodingForm::RegImm => {
            check_zero(m, "rs2", instr.rs2 as i64)?;
            op | check_reg(m, "rd", instr.rd)? << 21
                | check_reg(m, "rs1", instr.rs1)? << 16
                | check_imm(m, instr.imm)?
        }
        EncodingForm::Mem => {
            check_zero(m, "rs2", instr.rs2 as i64)?;
            op | check_reg(m, "rd", instr.rd)? << 21
                | check_reg(m, "rs1", instr.rs1)? << 16
                | check_imm(m, instr.imm)?
        }
        EncodingForm::Branch => match m.imm_kind() {
            ImmKind::Disp26 => {
                check_zero(m, "rd", instr.rd as i64)?;
                check_zero(m, "rs1", instr.rs1 as i64)?;
                check_zero(m, "rs2", instr.rs2 as i64)?;
                op | check_imm(m, instr.imm)?
            }
            _ => {
                check_zero(m, "rd", instr.rd as i64)?;
                op | check_reg(m, "rs1", instr.rs1)? << 21
                    | check_reg(m, "rs2", instr.rs2)? << 16
                    | check_imm(m, instr.imm)?
            }
        },
        EncodingForm::Sys => {
            check_zero(m, "rd", instr.rd as i64)?;
            check_zero(m, "rs1", instr.rs1 as i64)?;
            check_zero(m, "rs2", instr.rs2 as i64)?;
            check_imm(m, instr.imm)?;
            op
        }
    };
    // Per-mnemonic structural constraints keep the encoding space canonical.
    match m {
        Mnemonic::Mov => check_zero(m, "rs2", instr.rs2 as i64)?,
        Mnemonic::Jr => {
            check_zero(m, "rd", instr.rd as i64)?;
            check_zero(m, "rs2", instr.rs2 as i64)?;
        }
        Mnemonic::Lui => check_zero(m, "rs1", instr.rs1 as i64)?,
        Mnemonic::FsqrtD | Mnemonic::FsqrtS => check_zero(m, "fs2", instr.rs2 as i64)?,
        _ => {}
    }
    Ok(word)
}

fn sext16(raw: u32) -> i32 {
    raw as u16 as i16 as i32
}

fn sext26(raw: u32) -> i32 {
    ((raw << 6) as i32) >> 6
}

/// Decodes a 32-bit word. Words with an unassigned opcode or nonzero bits in
/// unused fields are rejected, so the defined encoding space round-trips.
pub fn decode(word: u32) -> Result<Instruction, IsaError> {
    let illegal = || IsaError::IllegalInstruction { word };
    let m = OPCODE_TABLE[(word >> 26) as usize].ok_or_else(illegal)?;
    let f1 = ((word >> 21) & 31) as u8;
    let f2 = ((word >> 16) & 31) as u8;
    let f3 = ((word >> 11) & 31) as u8;
    let low16 = word & 0xFFFF;

    let instr = match m.form() {
        EncodingForm::RegReg | EncodingForm::FpOp => {
            if word & 0x7FF != 0 {
                return Err(illegal());
            }
            Instruction::new(m, f1, f2, f3, 0)
        }
        EncodingForm::RegImm | EncodingForm::Mem => {
            let imm = match m.imm_kind() {
                ImmKind::Shift5 => {
                    if low16 > 31 {
                        return Err(illegal());
                    }
                    low16 as i32
                }
                _ => sext16(low16),
            };
            Instruction::new(m, f1, f2, 0, imm)
        }
        EncodingForm::Branch => match m.imm_kind() {
            ImmKind::Disp26 => Instruction::new(m, 0, 0, 0, sext26(word & 0x03FF_FFFF)),
            _ => Instruction::new(m, 0, f1, f2, sext16(low16)),
        },
        EncodingForm::Sys => {
            if word & 0x03FF_FFFF != 0 {
                return Err(illegal());
            }
            Instruction::new(m, 0, 0, 0, 0)
        }
    };
    // Reject non-canonical words so encode(decode(w)) == w holds.
    match m {
        Mnemonic::Mov if instr.rs2 != 0 => Err(illegal()),
        Mnemonic::Jr if instr.rd != 0 || instr.rs2 != 0 => Err(illegal()),
        Mnemonic::Lui if instr.rs1 != 0 => Err(illegal()),
        Mnemonic::FsqrtD | Mnemonic::FsqrtS if instr.rs2 != 0 => Err(illegal()),
        _ => Ok(instr),
    }
}

/// Register conventions, part of the generated reference document.
pub const REGISTER_CONVENTIONS: &str = "\
r0        always reads 0; writes are ignored
r1..r7    general purpose
r8..r15   soft-float call convention: args r8:r9 and r10:r11 (high:low),
          result r8:r9, r12..r15 scratch; clobbered by FP mnemonics when
          assembling with soft-float lowering
r16..r29  general purpose
r30       stack pointer, initialized to the top of memory by the loader
r31       return address, written by CALL
f0..f31   64-bit FP registers; binary32 values live in the low half";

/// Generates the human-readable ISA reference document.
pub fn reference_doc() -> String {
    use std::fmt::Write;
    let mut doc = String::new();
    let w = &mut doc;
    let _ = writeln!(w, "# {ISA_VERSION} instruction set reference");
    let _ = writeln!(w);
    let _ = writeln!(w, "32-bit fixed-width instructions; memory is big-endian.");
    let _ = writeln!(w, "32 integer registers (32-bit), 32 FP registers (64-bit).");
    let _ = writeln!(w, "No register windows, delay slots or condition codes;");
    let _ = writeln!(w, "control flow uses compare-and-branch instructions.");
    let _ = writeln!(w);
    let _ = writeln!(w, "## Registers");
    let _ = writeln!(w);
    let _ = writeln!(w, "```\n{REGISTER_CONVENTIONS}\n```");
    let _ = writeln!(w);
    let _ = writeln!(w, "## Encoding forms (bit 31 is the MSB)");
    let _ = writeln!(w);
    let _ = writeln!(w, "```");
    let _ = writeln!(w, "RegReg  op[31:26] rd[25:21]  rs1[20:16] rs2[15:11] 0[10:0]");
    let _ = writeln!(w, "RegImm  op[31:26] rd[25:21]  rs1[20:16] imm16[15:0]");
    let _ = writeln!(w, "Branch  op[31:26] rs1[25:21] rs2[20:16] disp16[15:0]   (conditional)");
    let _ = writeln!(w, "        op[31:26] disp26[25:0]                         (J, CALL)");
    let _ = writeln!(w, "Mem     op[31:26] rdata[25:21] rbase[20:16] off16[15:0]");
    let _ = writeln!(w, "FpOp    op[31:26] fd[25:21]  fs1[20:16] fs2[15:11] 0[10:0]");
    let _ = writeln!(w, "Sys     op[31:26] 0[25:0]");
    let _ = writeln!(w, "```");
    let _ = writeln!(w);
    let _ = writeln!(w, "Branch displacements are signed word counts relative to the branch");
    let _ = writeln!(w, "instruction itself: target = pc + 4*disp. Word and double accesses");
    let _ = writeln!(w, "must be 4-byte aligned. Immediates are 16-bit signed unless noted.");
    let _ = writeln!(w);
    let _ = writeln!(w, "## Mnemonics");
    let _ = writeln!(w);
    let _ = writeln!(
        w,
        "| {:<8} | {:<6} | {:<6} | {:<18} | semantics |",
        "mnem", "opcode", "form", "category"
    );
    let _ = writeln!(w, "|----------|--------|--------|--------------------|-----------|");
    for &m in Mnemonic::ALL {
        let _ = writeln!(
            w,
            "| {:<8} | 0x{:02X}   | {:<6} | {:<18} | {} |",
            m.name(),
            m.opcode(),
            format!("{:?}", m.form()),
            m.category().name(),
            m.brief()
        );
    }
    doc
}
