//! Line-oriented parser for SV8-mini assembly source.
//!
//! Grammar per line: `[label:] [mnemonic operands... | .directive args...] [; comment]`.
//! Mnemonics and directives are case-insensitive, labels are case-sensitive.

use super::{AsmError, AsmInstr, Directive, ImmOperand, Line, SourceUnit, Statement, WordInit};
use crate::isa::{EncodingForm, Mnemonic};

pub fn parse_source(text: &str) -> Result<SourceUnit, AsmError> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        lines.push(parse_line(raw, line_no)?);
    }
    Ok(SourceUnit { lines })
}

fn syntax(line: usize, msg: impl Into<String>) -> AsmError {
    AsmError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_line(raw: &str, line_no: usize) -> Result<Line, AsmError> {
    let (code, comment) = match raw.find(';') {
        Some(pos) => (&raw[..pos], Some(raw[pos + 1..].trim().to_string())),
        None => (raw, None),
    };
    let mut rest = code.trim();

    let mut label = None;
    if let Some(colon) = rest.find(':') {
        let candidate = rest[..colon].trim();
        if is_label(candidate) {
            label = Some(candidate.to_string());
            rest = rest[colon + 1..].trim();
        } else if !candidate.is_empty() && !candidate.contains(char::is_whitespace) {
            return Err(syntax(line_no, format!("invalid label `{candidate}`")));
        }
    }

    let statement = if rest.is_empty() {
        None
    } else if let Some(stripped) = rest.strip_prefix('.') {
        Some(Statement::Directive(parse_directive(stripped, line_no)?))
    } else {
        parse_instruction(rest, line_no)?
    };

    Ok(Line {
        label,
        statement,
        comment,
        line_no,
    })
}

fn is_label(s: &str) -> bool {
    !s.is_empty()
        && s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn split_mnemonic(code: &str) -> (&str, &str) {
    match code.find(char::is_whitespace) {
        Some(pos) => (&code[..pos], code[pos..].trim()),
        None => (code, ""),
    }
}

fn split_operands(args: &str, line_no: usize) -> Result<Vec<&str>, AsmError> {
    if args.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for part in args.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(syntax(line_no, "empty operand"));
        }
        out.push(part);
    }
    Ok(out)
}

fn parse_directive(body: &str, line_no: usize) -> Result<Directive, AsmError> {
    let (name, args) = split_mnemonic(body);
    let ops = split_operands(args, line_no)?;
    let arity = |n: usize| -> Result<(), AsmError> {
        if ops.len() != n {
            return Err(syntax(line_no, format!(".{name}: expected {n} argument(s)")));
        }
        Ok(())
    };
    match name.to_ascii_lowercase().as_str() {
        "text" | "data" => {
            let base = match ops.len() {
                0 => None,
                1 => Some(parse_int(ops[0], line_no)? as u32),
                _ => return Err(syntax(line_no, format!(".{name}: expected at most one base"))),
            };
            if name.eq_ignore_ascii_case("text") {
                Ok(Directive::Text { base })
            } else {
                Ok(Directive::Data { base })
            }
        }
        "word" => {
            if ops.is_empty() {
                return Err(syntax(line_no, ".word: expected at least one value"));
            }
            let mut items = Vec::new();
            for op in ops {
                if is_label(op) {
                    items.push(WordInit::Label(op.to_string()));
                } else {
                    let v = parse_int(op, line_no)?;
                    if v < i32::MIN as i64 || v > u32::MAX as i64 {
                        return Err(syntax(line_no, format!(".word value out of range: {op}")));
                    }
                    items.push(WordInit::Value(v as u32));
                }
            }
            Ok(Directive::Word(items))
        }
        "double" => {
            if ops.is_empty() {
                return Err(syntax(line_no, ".double: expected at least one value"));
            }
            let mut bits = Vec::new();
            for op in ops {
                bits.push(parse_double_bits(op, line_no)?);
            }
            Ok(Directive::Double(bits))
        }
        "space" => {
            arity(1)?;
            let n = parse_int(ops[0], line_no)?;
            if !(0..=u32::MAX as i64).contains(&n) {
                return Err(syntax(line_no, ".space size out of range"));
            }
            Ok(Directive::Space(n as u32))
        }
        "global" => {
            arity(1)?;
            Ok(Directive::Global(ops[0].to_string()))
        }
        "entry" => {
            arity(1)?;
            Ok(Directive::Entry(ops[0].to_string()))
        }
        other => Err(syntax(line_no, format!("unknown directive .{other}"))),
    }
}

/// `.double` accepts decimal floating literals (Rust syntax, including `inf`
/// and `NaN`) and raw `0x` 64-bit patterns for exact bit control.
fn parse_double_bits(tok: &str, line_no: usize) -> Result<u64, AsmError> {
    if let Some(hex) = tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")) {
        return u64::from_str_radix(hex, 16)
            .map_err(|_| syntax(line_no, format!("bad double bit pattern `{tok}`")));
    }
    tok.parse::<f64>()
        .map(f64::to_bits)
        .map_err(|_| syntax(line_no, format!("bad double literal `{tok}`")))
}

fn parse_int(tok: &str, line_no: usize) -> Result<i64, AsmError> {
    let (neg, body) = match tok.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, tok),
    };
    let parsed = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else {
        body.parse::<u64>().ok()
    };
    let v = parsed
        .filter(|&v| v <= u32::MAX as u64 + 1)
        .ok_or_else(|| syntax(line_no, format!("bad integer `{tok}`")))? as i64;
    Ok(if neg { -v } else { v })
}

fn parse_int_reg(tok: &str, line_no: usize) -> Result<u8, AsmError> {
    let lower = tok.to_ascii_lowercase();
    match lower.as_str() {
        "zero" => return Ok(0),
        "sp" => return Ok(30),
        "ra" => return Ok(31),
        _ => {}
    }
    lower
        .strip_prefix('r')
        .and_then(|n| n.parse::<u8>().ok())
        .filter(|&n| n <= 31)
        .ok_or_else(|| syntax(line_no, format!("bad integer register `{tok}`")))
}

fn parse_fp_reg(tok: &str, line_no: usize) -> Result<u8, AsmError> {
    tok.to_ascii_lowercase()
        .strip_prefix('f')
        .and_then(|n| n.parse::<u8>().ok())
        .filter(|&n| n <= 31)
        .ok_or_else(|| syntax(line_no, format!("bad FP register `{tok}`")))
}

/// Memory operand: `[rbase]`, `[rbase + off]` or `[rbase - off]`.
fn parse_mem_operand(tok: &str, line_no: usize) -> Result<(u8, i64), AsmError> {
    let inner = tok
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| syntax(line_no, format!("bad memory operand `{tok}`")))?
        .trim();
    let (reg_part, off) = if let Some(pos) = inner.find(['+', '-']) {
        let sign = if inner.as_bytes()[pos] == b'-' { -1 } else { 1 };
        let off = parse_int(inner[pos + 1..].trim(), line_no)?;
        (inner[..pos].trim(), sign * off)
    } else {
        (inner, 0)
    };
    Ok((parse_int_reg(reg_part, line_no)?, off))
}

/// Branch target: a label or a signed word displacement.
fn parse_target(tok: &str, line_no: usize) -> Result<ImmOperand, AsmError> {
    if is_label(tok) {
        Ok(ImmOperand::Label(tok.to_string()))
    } else {
        Ok(ImmOperand::Value(parse_int(tok, line_no)?))
    }
}

/// Immediate operand of a RegImm instruction: a number, `hi(label)` or
/// `lo(label)`.
fn parse_regimm_operand(tok: &str, line_no: usize) -> Result<ImmOperand, AsmError> {
    for (prefix, symbolic) in [
        ("hi(", ImmOperand::HiAdj as fn(String) -> ImmOperand),
        ("lo(", ImmOperand::Lo as fn(String) -> ImmOperand),
    ] {
        if let Some(inner) = tok.strip_prefix(prefix).and_then(|s| s.strip_suffix(')')) {
            let inner = inner.trim();
            if !is_label(inner) {
                return Err(syntax(line_no, format!("bad label in `{tok}`")));
            }
            return Ok(symbolic(inner.to_string()));
        }
    }
    Ok(ImmOperand::Value(parse_int(tok, line_no)?))
}

fn parse_instruction(code: &str, line_no: usize) -> Result<Option<Statement>, AsmError> {
    let (name, args) = split_mnemonic(code);
    let ops = split_operands(args, line_no)?;

    // Pseudo-instructions handled before the mnemonic table.
    match name.to_ascii_lowercase().as_str() {
        "li" => return pseudo_li(&ops, line_no).map(Some),
        "la" => return pseudo_la(&ops, line_no).map(Some),
        "ret" => {
            if !ops.is_empty() {
                return Err(syntax(line_no, "RET takes no operands"));
            }
            return Ok(Some(Statement::Instr(AsmInstr::reg(Mnemonic::Jr, 0, 31, 0))));
        }
        _ => {}
    }

    let m = Mnemonic::from_name(name)
        .ok_or_else(|| syntax(line_no, format!("unknown mnemonic `{name}`")))?;
    let arity = |n: usize| -> Result<(), AsmError> {
        if ops.len() != n {
            return Err(syntax(
                line_no,
                format!("{}: expected {n} operand(s), got {}", m.name(), ops.len()),
            ));
        }
        Ok(())
    };

    let instr = match m.form() {
        EncodingForm::RegReg => match m {
            Mnemonic::Mov => {
                arity(2)?;
                AsmInstr::reg(m, parse_int_reg(ops[0], line_no)?, parse_int_reg(ops[1], line_no)?, 0)
            }
            Mnemonic::Jr => {
                arity(1)?;
                AsmInstr::reg(m, 0, parse_int_reg(ops[0], line_no)?, 0)
            }
            _ => {
                arity(3)?;
                AsmInstr::reg(
                    m,
                    parse_int_reg(ops[0], line_no)?,
                    parse_int_reg(ops[1], line_no)?,
                    parse_int_reg(ops[2], line_no)?,
                )
            }
        },
        EncodingForm::RegImm => match m {
            Mnemonic::Lui => {
                arity(2)?;
                let rd = parse_int_reg(ops[0], line_no)?;
                match parse_regimm_operand(ops[1], line_no)? {
                    ImmOperand::Value(v) => {
                        if !(-32768..=65535).contains(&v) {
                            return Err(syntax(
                                line_no,
                                format!("LUI immediate out of range: {v}"),
                            ));
                        }
                        AsmInstr::imm(m, rd, 0, (v as u16 as i16).into())
                    }
                    imm => AsmInstr {
                        mnemonic: m,
                        rd,
                        rs1: 0,
                        rs2: 0,
                        imm,
                    },
                }
            }
            _ => {
                arity(3)?;
                AsmInstr {
                    mnemonic: m,
                    rd: parse_int_reg(ops[0], line_no)?,
                    rs1: parse_int_reg(ops[1], line_no)?,
                    rs2: 0,
                    imm: parse_regimm_operand(ops[2], line_no)?,
                }
            }
        },
        EncodingForm::Branch => match m {
            Mnemonic::J | Mnemonic::Call => {
                arity(1)?;
                AsmInstr {
                    mnemonic: m,
                    rd: 0,
                    rs1: 0,
                    rs2: 0,
                    imm: parse_target(ops[0], line_no)?,
                }
            }
            _ => {
                arity(3)?;
                AsmInstr {
                    mnemonic: m,
                    rd: 0,
                    rs1: parse_int_reg(ops[0], line_no)?,
                    rs2: parse_int_reg(ops[1], line_no)?,
                    imm: parse_target(ops[2], line_no)?,
                }
            }
        },
        EncodingForm::Mem => {
            arity(2)?;
            let is_store = matches!(m, Mnemonic::St | Mnemonic::Stb | Mnemonic::Fst | Mnemonic::Fsw);
            let (data_tok, mem_tok) = if is_store { (ops[1], ops[0]) } else { (ops[0], ops[1]) };
            let rd = if m.touches_fp_regs() {
                parse_fp_reg(data_tok, line_no)?
            } else {
                parse_int_reg(data_tok, line_no)?
            };
            let (base, off) = parse_mem_operand(mem_tok, line_no)?;
            AsmInstr::imm(m, rd, base, off)
        }
        EncodingForm::FpOp => match m {
            Mnemonic::FsqrtD | Mnemonic::FsqrtS => {
                arity(2)?;
                AsmInstr::reg(m, parse_fp_reg(ops[0], line_no)?, parse_fp_reg(ops[1], line_no)?, 0)
            }
            _ => {
                arity(3)?;
                AsmInstr::reg(
                    m,
                    parse_fp_reg(ops[0], line_no)?,
                    parse_fp_reg(ops[1], line_no)?,
                    parse_fp_reg(ops[2], line_no)?,
                )
            }
        },
        EncodingForm::Sys => {
            arity(0)?;
            AsmInstr::reg(m, 0, 0, 0)
        }
    };
    Ok(Some(Statement::Instr(instr)))
}

/// `LI rd, value` — loads any 32-bit constant; one ADDI when the value fits
/// 16 signed bits, otherwise LUI plus a sign-carry-adjusted ADDI.
fn pseudo_li(ops: &[&str], line_no: usize) -> Result<Statement, AsmError> {
    if ops.len() != 2 {
        return Err(syntax(line_no, "LI: expected 2 operands"));
    }
    let rd = parse_int_reg(ops[0], line_no)?;
    let v = parse_int(ops[1], line_no)?;
    if v < i32::MIN as i64 || v > u32::MAX as i64 {
        return Err(syntax(line_no, format!("LI value out of range: {v}")));
    }
    Ok(Statement::Pseudo(expand_li(rd, v as u32)))
}

pub(super) fn expand_li(rd: u8, target: u32) -> Vec<AsmInstr> {
    let signed = target as i32;
    if (-32768..=32767).contains(&signed) {
        return vec![AsmInstr::imm(Mnemonic::Addi, rd, 0, signed as i64)];
    }
    let lo = target as u16 as i16;
    let hi_raw = (target.wrapping_sub(lo as i32 as u32) >> 16) as u16;
    vec![
        AsmInstr::imm(Mnemonic::Lui, rd, 0, (hi_raw as i16) as i64),
        AsmInstr::imm(Mnemonic::Addi, rd, rd, lo as i64),
    ]
}

/// `LA rd, label` — loads a label's absolute address. Always two
/// instructions so statement sizes are known before labels resolve.
fn pseudo_la(ops: &[&str], line_no: usize) -> Result<Statement, AsmError> {
    if ops.len() != 2 {
        return Err(syntax(line_no, "LA: expected 2 operands"));
    }
    let rd = parse_int_reg(ops[0], line_no)?;
    if !is_label(ops[1]) {
        return Err(syntax(line_no, format!("LA: bad label `{}`", ops[1])));
    }
    let name = ops[1].to_string();
    Ok(Statement::Pseudo(vec![
        AsmInstr {
            mnemonic: Mnemonic::Lui,
            rd,
            rs1: 0,
            rs2: 0,
            imm: ImmOperand::HiAdj(name.clone()),
        },
        AsmInstr {
            mnemonic: Mnemonic::Addi,
            rd,
            rs1: rd,
            rs2: 0,
            imm: ImmOperand::Lo(name),
        },
    ]))
}
