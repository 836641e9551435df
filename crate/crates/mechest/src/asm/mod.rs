//! Two-pass assembler and disassembler for SV8-mini.
//!
//! Pass one lays out both segments and binds labels; pass two resolves
//! operands and encodes. With soft-float lowering enabled, FP mnemonics are
//! rewritten into integer call sequences and the runtime library is appended
//! before layout, so user labels keep working across the expansion.

mod image;
mod parse;

pub use image::{
    BinaryImage, ImageError, DEFAULT_DATA_BASE, DEFAULT_TEXT_BASE, IMAGE_MAGIC, IMAGE_VERSION,
};
pub use parse::parse_source;

use crate::isa::{self, EncodingForm, Instruction, IsaError, Mnemonic};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// An assembly translation unit: an ordered list of source lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceUnit {
    pub lines: Vec<Line>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: Option<String>,
    pub statement: Option<Statement>,
    pub comment: Option<String>,
    /// 1-based source line, 0 for synthesized lines.
    pub line_no: usize,
}

impl Line {
    pub fn instr(instr: AsmInstr) -> Line {
        Line {
            label: None,
            statement: Some(Statement::Instr(instr)),
            comment: None,
            line_no: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Instr(AsmInstr),
    /// Expansion of a pseudo-instruction or a lowered FP mnemonic; the
    /// line's label binds to the first instruction.
    Pseudo(Vec<AsmInstr>),
    Directive(Directive),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Text { base: Option<u32> },
    Data { base: Option<u32> },
    Word(Vec<WordInit>),
    /// IEEE-754 binary64 values, kept as raw bits for exact round-trips.
    Double(Vec<u64>),
    Space(u32),
    Global(String),
    Entry(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum WordInit {
    Value(u32),
    /// Resolves to the label's absolute address.
    Label(String),
}

/// An instruction whose immediate may still be symbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct AsmInstr {
    pub mnemonic: Mnemonic,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    pub imm: ImmOperand,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImmOperand {
    Value(i64),
    /// Branch target label; resolves to a word displacement.
    Label(String),
    /// Upper 16 bits of a label address, adjusted for the sign carry of the
    /// paired `Lo` ADDI.
    HiAdj(String),
    /// Low 16 bits of a label address, sign-extended.
    Lo(String),
}

impl AsmInstr {
    pub fn reg(mnemonic: Mnemonic, rd: u8, rs1: u8, rs2: u8) -> AsmInstr {
        AsmInstr {
            mnemonic,
            rd,
            rs1,
            rs2,
            imm: ImmOperand::Value(0),
        }
    }

    pub fn imm(mnemonic: Mnemonic, rd: u8, rs1: u8, imm: i64) -> AsmInstr {
        AsmInstr {
            mnemonic,
            rd,
            rs1,
            rs2: 0,
            imm: ImmOperand::Value(imm),
        }
    }
}

#[derive(Debug, Error)]
pub enum AsmError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate label `{name}`")]
    DuplicateLabel { line: usize, name: String },
    #[error("line {line}: undefined label `{name}`")]
    UndefinedLabel { line: usize, name: String },
    #[error("line {line}: {source}")]
    Encoding { line: usize, source: IsaError },
    #[error("line {line}: branch target `{target}` out of range (disp {disp} words)")]
    BranchOutOfRange {
        line: usize,
        target: String,
        disp: i64,
    },
    #[error("segments overlap: text ends at {text_end:#x}, data starts at {data_base:#x}")]
    SegmentOverlap { text_end: u32, data_base: u32 },
}

#[derive(Debug, Clone, Default)]
pub struct AsmOptions {
    /// Lower FP mnemonics to integer call sequences and append the
    /// soft-float runtime library.
    pub soft_float: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Text,
    Data,
}

#[derive(Debug, Clone, Copy)]
struct LabelDef {
    addr: u32,
    section: Section,
}

type SymTab = HashMap<String, LabelDef>;

/// Layout events produced by the section walker, identical across passes.
enum Ev<'u> {
    Label {
        name: &'u str,
        def: LabelDef,
        line_no: usize,
    },
    Instr {
        addr: u32,
        instr: &'u AsmInstr,
        line_no: usize,
    },
    DataPad {
        bytes: u32,
    },
    Data {
        directive: &'u Directive,
        line_no: usize,
    },
}

struct WalkResult {
    text_base: u32,
    data_base: u32,
    entry: Option<(String, usize)>,
}

fn statement_section(stmt: &Statement) -> Option<Section> {
    match stmt {
        Statement::Instr(_) | Statement::Pseudo(_) => Some(Section::Text),
        Statement::Directive(
            Directive::Word(_) | Directive::Double(_) | Directive::Space(_),
        ) => Some(Section::Data),
        Statement::Directive(_) => None,
    }
}

fn walk<'u>(
    unit: &'u SourceUnit,
    mut visit: impl FnMut(Ev<'u>) -> Result<(), AsmError>,
) -> Result<WalkResult, AsmError> {
    let mut section = Section::Text;
    let mut text_base = DEFAULT_TEXT_BASE;
    let mut data_base = DEFAULT_DATA_BASE;
    let mut text_len: u32 = 0;
    let mut data_len: u32 = 0;
    let mut entry: Option<(String, usize)> = None;

    for line in &unit.lines {
        let n = line.line_no;
        let syntax = |msg: String| AsmError::Syntax { line: n, msg };

        // Section bookkeeping first so base changes precede any use.
        if let Some(Statement::Directive(d)) = &line.statement {
            match d {
                Directive::Text { base } => {
                    if let Some(b) = base {
                        if text_len > 0 && *b != text_base {
                            return Err(syntax(format!(
                                "text base changed to {b:#x} after content"
                            )));
                        }
                        if b % 4 != 0 {
                            return Err(syntax(format!("text base {b:#x} not word-aligned")));
                        }
                        text_base = *b;
                    }
                    section = Section::Text;
                }
                Directive::Data { base } => {
                    if let Some(b) = base {
                        if data_len > 0 && *b != data_base {
                            return Err(syntax(format!(
                                "data base changed to {b:#x} after content"
                            )));
                        }
                        if b % 4 != 0 {
                            return Err(syntax(format!("data base {b:#x} not word-aligned")));
                        }
                        data_base = *b;
                    }
                    section = Section::Data;
                }
                Directive::Entry(name) => {
                    if entry.is_some() {
                        return Err(syntax("duplicate .entry".into()));
                    }
                    entry = Some((name.clone(), n));
                }
                Directive::Global(_) => {}
                _ => {}
            }
        }

        // Enforce statement / section compatibility and compute padding.
        let mut pad = 0u32;
        if let Some(stmt) = &line.statement {
            if let Some(required) = statement_section(stmt) {
                if required != section {
                    let what = match required {
                        Section::Text => "instructions belong in .text",
                        Section::Data => "data directives belong in .data",
                    };
                    return Err(syntax(what.to_string()));
                }
            }
            if let Statement::Directive(Directive::Word(_) | Directive::Double(_)) = stmt {
                pad = (4 - data_len % 4) % 4;
            }
        }
        if pad > 0 {
            visit(Ev::DataPad { bytes: pad })?;
            data_len += pad;
        }

        if let Some(name) = &line.label {
            let def = match section {
                Section::Text => LabelDef {
                    addr: text_base + text_len,
                    section: Section::Text,
                },
                Section::Data => LabelDef {
                    addr: data_base + data_len,
                    section: Section::Data,
                },
            };
            visit(Ev::Label {
                name,
                def,
                line_no: n,
            })?;
        }

        match &line.statement {
            Some(Statement::Instr(instr)) => {
                visit(Ev::Instr {
                    addr: text_base + text_len,
                    instr,
                    line_no: n,
                })?;
                text_len += 4;
            }
            Some(Statement::Pseudo(seq)) => {
                for instr in seq {
                    visit(Ev::Instr {
                        addr: text_base + text_len,
                        instr,
                        line_no: n,
                    })?;
                    text_len += 4;
                }
            }
            Some(Statement::Directive(d)) => match d {
                Directive::Word(items) => {
                    visit(Ev::Data {
                        directive: d,
                        line_no: n,
                    })?;
                    data_len += 4 * items.len() as u32;
                }
                Directive::Double(items) => {
                    visit(Ev::Data {
                        directive: d,
                        line_no: n,
                    })?;
                    data_len += 8 * items.len() as u32;
                }
                Directive::Space(bytes) => {
                    visit(Ev::Data {
                        directive: d,
                        line_no: n,
                    })?;
                    data_len += bytes;
                }
                _ => {}
            },
            None => {}
        }
    }

    Ok(WalkResult {
        text_base,
        data_base,
        entry,
    })
}

fn resolve_imm(
    instr: &AsmInstr,
    addr: u32,
    symtab: &SymTab,
    line: usize,
) -> Result<i32, AsmError> {
    let lookup = |name: &str| -> Result<LabelDef, AsmError> {
        symtab.get(name).copied().ok_or(AsmError::UndefinedLabel {
            line,
            name: name.to_string(),
        })
    };
    let is_branch = instr.mnemonic.form() == EncodingForm::Branch;
    let disp_limit: i64 = if matches!(instr.mnemonic, Mnemonic::J | Mnemonic::Call) {
        1 << 25
    } else {
        1 << 15
    };
    match &instr.imm {
        ImmOperand::Value(v) => {
            if is_branch && (*v < -disp_limit || *v >= disp_limit) {
                return Err(AsmError::BranchOutOfRange {
                    line,
                    target: v.to_string(),
                    disp: *v,
                });
            }
            i32::try_from(*v).map_err(|_| AsmError::Encoding {
                line,
                source: IsaError::EncodingOverflow {
                    mnemonic: instr.mnemonic.name(),
                    field: "imm",
                    value: *v,
                },
            })
        }
        ImmOperand::Label(name) => {
            let def = lookup(name)?;
            if !is_branch {
                return Err(AsmError::Syntax {
                    line,
                    msg: format!("label operand `{name}` only valid as a branch target"),
                });
            }
            if def.section != Section::Text {
                return Err(AsmError::Syntax {
                    line,
                    msg: format!("branch target `{name}` is not in .text"),
                });
            }
            let disp = (i64::from(def.addr) - i64::from(addr)) / 4;
            if disp < -disp_limit || disp >= disp_limit {
                return Err(AsmError::BranchOutOfRange {
                    line,
                    target: name.clone(),
                    disp,
                });
            }
            Ok(disp as i32)
        }
        ImmOperand::HiAdj(name) => {
            let target = lookup(name)?.addr;
            let lo = target as u16 as i16;
            let hi_raw = (target.wrapping_sub(lo as i32 as u32) >> 16) as u16;
            Ok((hi_raw as i16).into())
        }
        ImmOperand::Lo(name) => Ok((lookup(name)?.addr as u16 as i16).into()),
    }
}

/// Assembles a unit into a binary image.
pub fn assemble(unit: &SourceUnit, options: &AsmOptions) -> Result<BinaryImage, AsmError> {
    let lowered;
    let unit = if options.soft_float {
        lowered = crate::softfloat::lower_unit(unit)?;
        &lowered
    } else {
        unit
    };

    // Pass 1: bind labels.
    let mut symtab: SymTab = HashMap::new();
    walk(unit, |ev| {
        if let Ev::Label { name, def, line_no } = ev {
            if symtab.insert(name.to_string(), def).is_some() {
                return Err(AsmError::DuplicateLabel {
                    line: line_no,
                    name: name.to_string(),
                });
            }
        }
        Ok(())
    })?;

    // Pass 2: encode.
    let mut text: Vec<u32> = Vec::new();
    let mut data: Vec<u8> = Vec::new();
    let result = walk(unit, |ev| {
        match ev {
            Ev::Label { .. } => {}
            Ev::DataPad { bytes } => data.extend(std::iter::repeat_n(0u8, bytes as usize)),
            Ev::Instr {
                addr,
                instr,
                line_no,
            } => {
                let imm = resolve_imm(instr, addr, &symtab, line_no)?;
                let encoded = Instruction::new(instr.mnemonic, instr.rd, instr.rs1, instr.rs2, imm);
                let word = isa::encode(&encoded).map_err(|source| AsmError::Encoding {
                    line: line_no,
                    source,
                })?;
                text.push(word);
            }
            Ev::Data { directive, line_no } => match directive {
                Directive::Word(items) => {
                    for item in items {
                        let v = match item {
                            WordInit::Value(v) => *v,
                            WordInit::Label(name) => symtab
                                .get(name)
                                .ok_or(AsmError::UndefinedLabel {
                                    line: line_no,
                                    name: name.clone(),
                                })?
                                .addr,
                        };
                        data.extend_from_slice(&v.to_be_bytes());
                    }
                }
                Directive::Double(items) => {
                    for bits in items {
                        data.extend_from_slice(&bits.to_be_bytes());
                    }
                }
                Directive::Space(bytes) => data.extend(std::iter::repeat_n(0u8, *bytes as usize)),
                _ => {}
            },
        }
        Ok(())
    })?;

    if text.is_empty() {
        return Err(AsmError::Syntax {
            line: 0,
            msg: "empty text segment: a program needs at least one instruction".into(),
        });
    }
    // Keep the data segment word-sized so disassembly can express it.
    while data.len() % 4 != 0 {
        data.push(0);
    }

    let entry = match &result.entry {
        Some((name, line_no)) => {
            let def = symtab.get(name).ok_or(AsmError::UndefinedLabel {
                line: *line_no,
                name: name.clone(),
            })?;
            if def.section != Section::Text {
                return Err(AsmError::Syntax {
                    line: *line_no,
                    msg: format!("entry label `{name}` is not in .text"),
                });
            }
            def.addr
        }
        None => result.text_base,
    };

    let text_end = u64::from(result.text_base) + 4 * text.len() as u64;
    let data_end = u64::from(result.data_base) + data.len() as u64;
    if text_end > u64::from(u32::MAX) + 1 || data_end > u64::from(u32::MAX) + 1 {
        return Err(AsmError::Syntax {
            line: 0,
            msg: "segment exceeds the 32-bit address space".into(),
        });
    }
    let overlap = !data.is_empty()
        && u64::from(result.data_base) < text_end
        && u64::from(result.text_base) < data_end;
    if overlap {
        return Err(AsmError::SegmentOverlap {
            text_end: text_end as u32,
            data_base: result.data_base,
        });
    }

    Ok(BinaryImage {
        version: IMAGE_VERSION,
        entry,
        text_base: result.text_base,
        data_base: result.data_base,
        text,
        data,
    })
}

/// Parses and assembles in one step.
pub fn assemble_str(source: &str, options: &AsmOptions) -> Result<BinaryImage, AsmError> {
    assemble(&parse_source(source)?, options)
}

/// Reconstructs source from an image. Branch targets are numeric word
/// displacements, so reassembling with the same options yields identical
/// text words and entry offset.
pub fn disassemble(img: &BinaryImage) -> Result<SourceUnit, IsaError> {
    let mut lines = Vec::new();
    let mut push = |label: Option<String>, statement: Option<Statement>| {
        lines.push(Line {
            label,
            statement,
            comment: None,
            line_no: 0,
        });
    };

    push(
        None,
        Some(Statement::Directive(Directive::Text {
            base: Some(img.text_base),
        })),
    );
    push(
        None,
        Some(Statement::Directive(Directive::Entry("__entry".into()))),
    );
    for (i, &word) in img.text.iter().enumerate() {
        let addr = img.text_base + 4 * i as u32;
        let d = isa::decode(word)?;
        let label = (addr == img.entry).then(|| "__entry".to_string());
        push(
            label,
            Some(Statement::Instr(AsmInstr {
                mnemonic: d.mnemonic,
                rd: d.rd,
                rs1: d.rs1,
                rs2: d.rs2,
                imm: ImmOperand::Value(d.imm.into()),
            })),
        );
    }
    if !img.data.is_empty() {
        push(
            None,
            Some(Statement::Directive(Directive::Data {
                base: Some(img.data_base),
            })),
        );
        let mut padded = img.data.clone();
        while padded.len() % 4 != 0 {
            padded.push(0);
        }
        for chunk in padded.chunks(32) {
            let words = chunk
                .chunks_exact(4)
                .map(|c| WordInit::Value(u32::from_be_bytes(c.try_into().unwrap())))
                .collect();
            push(None, Some(Statement::Directive(Directive::Word(words))));
        }
    }
    Ok(SourceUnit { lines })
}

fn fmt_mem(base: u8, off: i32) -> String {
    if off < 0 {
        format!("[r{base} - {}]", -i64::from(off))
    } else if off > 0 {
        format!("[r{base} + {off}]")
    } else {
        format!("[r{base}]")
    }
}

fn fmt_imm_operand(imm: &ImmOperand) -> String {
    match imm {
        ImmOperand::Value(v) => v.to_string(),
        ImmOperand::Label(name) => name.clone(),
        ImmOperand::HiAdj(_) | ImmOperand::Lo(_) => {
            unreachable!("symbolic hi/lo operands only appear in pseudo expansions")
        }
    }
}

impl fmt::Display for AsmInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.mnemonic;
        let name = m.name();
        match m.form() {
            EncodingForm::RegReg => match m {
                Mnemonic::Mov => write!(f, "{name} r{}, r{}", self.rd, self.rs1),
                Mnemonic::Jr => write!(f, "{name} r{}", self.rs1),
                _ => write!(f, "{name} r{}, r{}, r{}", self.rd, self.rs1, self.rs2),
            },
            EncodingForm::RegImm => match (&self.imm, m) {
                (ImmOperand::Value(v), Mnemonic::Lui) => {
                    write!(f, "{name} r{}, 0x{:04X}", self.rd, *v as u16)
                }
                (ImmOperand::HiAdj(label), _) => write!(f, "{name} r{}, hi({label})", self.rd),
                (ImmOperand::Lo(label), _) => {
                    write!(f, "{name} r{}, r{}, lo({label})", self.rd, self.rs1)
                }
                (imm, Mnemonic::Lui) => write!(f, "{name} r{}, {}", self.rd, fmt_imm_operand(imm)),
                (imm, _) => write!(
                    f,
                    "{name} r{}, r{}, {}",
                    self.rd,
                    self.rs1,
                    fmt_imm_operand(imm)
                ),
            },
            EncodingForm::Branch => match m {
                Mnemonic::J | Mnemonic::Call => write!(f, "{name} {}", fmt_imm_operand(&self.imm)),
                _ => write!(
                    f,
                    "{name} r{}, r{}, {}",
                    self.rs1,
                    self.rs2,
                    fmt_imm_operand(&self.imm)
                ),
            },
            EncodingForm::Mem => {
                let off = match &self.imm {
                    ImmOperand::Value(v) => *v as i32,
                    _ => 0,
                };
                let mem = fmt_mem(self.rs1, off);
                let reg_class = if m.touches_fp_regs() { 'f' } else { 'r' };
                if matches!(m, Mnemonic::St | Mnemonic::Stb | Mnemonic::Fst | Mnemonic::Fsw) {
                    write!(f, "{name} {mem}, {reg_class}{}", self.rd)
                } else {
                    write!(f, "{name} {reg_class}{}, {mem}", self.rd)
                }
            }
            EncodingForm::FpOp => match m {
                Mnemonic::FsqrtD | Mnemonic::FsqrtS => {
                    write!(f, "{name} f{}, f{}", self.rd, self.rs1)
                }
                _ => write!(f, "{name} f{}, f{}, f{}", self.rd, self.rs1, self.rs2),
            },
            EncodingForm::Sys => write!(f, "{name}"),
        }
    }
}

fn fmt_double(bits: u64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let v = f64::from_bits(bits);
    // Finite values print as shortest round-trip literals; anything else as
    // raw bits so NaN payloads survive.
    if v.is_finite() && v.to_bits() == bits {
        write!(f, "{v:?}")
    } else {
        write!(f, "0x{bits:016X}")
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::Text { base: None } => write!(f, ".text"),
            Directive::Text { base: Some(b) } => write!(f, ".text 0x{b:X}"),
            Directive::Data { base: None } => write!(f, ".data"),
            Directive::Data { base: Some(b) } => write!(f, ".data 0x{b:X}"),
            Directive::Word(items) => {
                write!(f, ".word ")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match item {
                        WordInit::Value(v) => write!(f, "0x{v:08X}")?,
                        WordInit::Label(name) => write!(f, "{name}")?,
                    }
                }
                Ok(())
            }
            Directive::Double(items) => {
                write!(f, ".double ")?;
                for (i, bits) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    fmt_double(*bits, f)?;
                }
                Ok(())
            }
            Directive::Space(n) => write!(f, ".space {n}"),
            Directive::Global(name) => write!(f, ".global {name}"),
            Directive::Entry(name) => write!(f, ".entry {name}"),
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Instr(instr) => write!(f, "{instr}"),
            Statement::Pseudo(seq) => {
                for (i, instr) in seq.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                        write!(f, "        ")?;
                    }
                    write!(f, "{instr}")?;
                }
                Ok(())
            }
            Statement::Directive(d) => write!(f, "{d}"),
        }
    }
}

impl fmt::Display for SourceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            match (&line.label, &line.statement) {
                (Some(label), Some(stmt)) => write!(f, "{label}: {stmt}")?,
                (Some(label), None) => write!(f, "{label}:")?,
                (None, Some(stmt)) => write!(f, "        {stmt}")?,
                (None, None) => {}
            }
            if let Some(comment) = &line.comment {
                if !comment.is_empty() {
                    if line.label.is_some() || line.statement.is_some() {
                        write!(f, " ")?;
                    }
                    write!(f, "; {comment}")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
