//! Soft-float support: rewrites FP mnemonics into integer-only call
//! sequences against a runtime library, mirroring a `-msoft-float` compiler
//! workflow.
//!
//! Under lowering, FP registers are backed by a 256-byte area in the data
//! segment (`__softfp_fpregs`, 8 bytes per register, big-endian high word
//! first). Arguments travel in r8:r9 and r10:r11, results in r8:r9; r12..r15
//! are scratch and CALL clobbers r31. User code assembled with soft-float
//! must treat r8..r15 and r31 as clobbered by every FP mnemonic.
//!
//! The library implements IEEE-754 binary64 arithmetic with
//! round-to-nearest-even and canonical NaNs, so results are bit-identical to
//! the hardware FPU model. Single-precision mnemonics widen to binary64,
//! run the binary64 routine and re-round through an explicit narrowing
//! routine; the extra rounding step is a documented deviation from a native
//! binary32 operation.

use crate::asm::{parse_source, AsmError, AsmInstr, ImmOperand, Line, SourceUnit, Statement};
use crate::isa::Mnemonic;
use std::sync::LazyLock;

/// Assembly source of the runtime library, appended to every soft-float
/// image.
pub const RUNTIME_LIBRARY: &str = include_str!("../../runtime/softfp.s");

/// Base label of the FP register backing store.
pub const FPREGS_LABEL: &str = "__softfp_fpregs";

/// All label names the library reserves; user programs must not define
/// labels starting with this prefix.
pub const RESERVED_PREFIX: &str = "__softfp_";

static LIBRARY_UNIT: LazyLock<SourceUnit> = LazyLock::new(|| {
    parse_source(RUNTIME_LIBRARY).expect("embedded soft-float library must parse")
});

/// Registers clobbered by a lowered FP mnemonic (soft-float ABI plus the
/// CALL return address).
pub const CLOBBERS: &[u8] = &[8, 9, 10, 11, 12, 13, 14, 15, 31];

/// How one FP mnemonic is lowered.
#[derive(Debug, Clone, Copy)]
pub struct LoweringRule {
    pub mnemonic: Mnemonic,
    /// Principal library routine, if the expansion calls one.
    pub routine: Option<&'static str>,
    /// Integer registers the expansion may overwrite.
    pub clobbers: &'static [u8],
}

/// Lowering rules for every mnemonic that touches the FP register file.
pub fn rules() -> Vec<LoweringRule> {
    Mnemonic::ALL
        .iter()
        .copied()
        .filter(|m| m.touches_fp_regs())
        .map(|mnemonic| LoweringRule {
            mnemonic,
            routine: principal_routine(mnemonic),
            clobbers: CLOBBERS,
        })
        .collect()
}

fn principal_routine(m: Mnemonic) -> Option<&'static str> {
    Some(match m {
        Mnemonic::FaddD | Mnemonic::FaddS => "__softfp_add64",
        Mnemonic::FsubD | Mnemonic::FsubS => "__softfp_sub64",
        Mnemonic::FmulD | Mnemonic::FmulS => "__softfp_mul64",
        Mnemonic::FdivD | Mnemonic::FdivS => "__softfp_div64",
        Mnemonic::FsqrtD | Mnemonic::FsqrtS => "__softfp_sqrt64",
        _ => return None,
    })
}

fn la(rd: u8, label: &str) -> [AsmInstr; 2] {
    [
        AsmInstr {
            mnemonic: Mnemonic::Lui,
            rd,
            rs1: 0,
            rs2: 0,
            imm: ImmOperand::HiAdj(label.to_string()),
        },
        AsmInstr {
            mnemonic: Mnemonic::Addi,
            rd,
            rs1: rd,
            rs2: 0,
            imm: ImmOperand::Lo(label.to_string()),
        },
    ]
}

fn call(label: &str) -> AsmInstr {
    AsmInstr {
        mnemonic: Mnemonic::Call,
        rd: 0,
        rs1: 0,
        rs2: 0,
        imm: ImmOperand::Label(label.to_string()),
    }
}

fn ld(rd: u8, base: u8, off: i64) -> AsmInstr {
    AsmInstr::imm(Mnemonic::Ld, rd, base, off)
}

fn st(base: u8, off: i64, rs: u8) -> AsmInstr {
    AsmInstr::imm(Mnemonic::St, rs, base, off)
}

fn mov(rd: u8, rs: u8) -> AsmInstr {
    AsmInstr::reg(Mnemonic::Mov, rd, rs, 0)
}

fn slot(fp_reg: u8) -> i64 {
    8 * i64::from(fp_reg)
}

/// Loads FP backing slot `fs` into the register pair `hi:lo`, assuming the
/// backing base address is already in `base`.
fn load_slot(out: &mut Vec<AsmInstr>, base: u8, fs: u8, hi: u8, lo: u8) {
    out.push(ld(hi, base, slot(fs)));
    out.push(ld(lo, base, slot(fs) + 4));
}

fn store_slot(out: &mut Vec<AsmInstr>, base: u8, fd: u8, hi: u8, lo: u8) {
    out.push(st(base, slot(fd), hi));
    out.push(st(base, slot(fd) + 4, lo));
}

/// Lowers one FP-touching instruction into integer instructions.
///
/// The input must satisfy [`Mnemonic::touches_fp_regs`]. Memory forms keep
/// their original base register, which therefore must not be one of the
/// soft-float ABI registers.
pub fn lower(instr: &AsmInstr, line_no: usize) -> Result<Vec<AsmInstr>, AsmError> {
    let m = instr.mnemonic;
    assert!(m.touches_fp_regs(), "lower() called on {m:?}");
    let mut out = Vec::with_capacity(18);

    let mem_base_ok = |base: u8| -> Result<(), AsmError> {
        if CLOBBERS.contains(&base) {
            return Err(AsmError::Syntax {
                line: line_no,
                msg: format!(
                    "{}: base register r{base} is reserved by the soft-float call convention",
                    m.name()
                ),
            });
        }
        Ok(())
    };

    match m {
        Mnemonic::FaddD | Mnemonic::FsubD | Mnemonic::FmulD | Mnemonic::FdivD => {
            out.extend(la(12, FPREGS_LABEL));
            load_slot(&mut out, 12, instr.rs1, 8, 9);
            load_slot(&mut out, 12, instr.rs2, 10, 11);
            out.push(call(principal_routine(m).unwrap()));
            out.extend(la(12, FPREGS_LABEL));
            store_slot(&mut out, 12, instr.rd, 8, 9);
        }
        Mnemonic::FsqrtD => {
            out.extend(la(12, FPREGS_LABEL));
            load_slot(&mut out, 12, instr.rs1, 8, 9);
            out.push(call("__softfp_sqrt64"));
            out.extend(la(12, FPREGS_LABEL));
            store_slot(&mut out, 12, instr.rd, 8, 9);
        }
        Mnemonic::FaddS | Mnemonic::FsubS | Mnemonic::FmulS | Mnemonic::FdivS => {
            // Widen both binary32 operands, run the binary64 routine, then
            // re-round. The conversions clobber only r8..r13, so the widened
            // first operand survives in r14:r15.
            out.extend(la(12, FPREGS_LABEL));
            out.push(ld(8, 12, slot(instr.rs1) + 4));
            out.push(call("__softfp_f32to64"));
            out.push(mov(14, 8));
            out.push(mov(15, 9));
            out.extend(la(12, FPREGS_LABEL));
            out.push(ld(8, 12, slot(instr.rs2) + 4));
            out.push(call("__softfp_f32to64"));
            out.push(mov(10, 8));
            out.push(mov(11, 9));
            out.push(mov(8, 14));
            out.push(mov(9, 15));
            out.push(call(principal_routine(m).unwrap()));
            out.push(call("__softfp_f64to32"));
            out.extend(la(12, FPREGS_LABEL));
            out.push(st(12, slot(instr.rd) + 4, 8));
            out.push(st(12, slot(instr.rd), 0));
        }
        Mnemonic::FsqrtS => {
            out.extend(la(12, FPREGS_LABEL));
            out.push(ld(8, 12, slot(instr.rs1) + 4));
            out.push(call("__softfp_f32to64"));
            out.push(call("__softfp_sqrt64"));
            out.push(call("__softfp_f64to32"));
            out.extend(la(12, FPREGS_LABEL));
            out.push(st(12, slot(instr.rd) + 4, 8));
            out.push(st(12, slot(instr.rd), 0));
        }
        Mnemonic::Fld => {
            mem_base_ok(instr.rs1)?;
            let off = imm_value(instr, line_no)?;
            out.push(AsmInstr::imm(Mnemonic::Addi, 12, instr.rs1, off));
            out.push(ld(8, 12, 0));
            out.push(ld(9, 12, 4));
            out.extend(la(13, FPREGS_LABEL));
            store_slot(&mut out, 13, instr.rd, 8, 9);
        }
        Mnemonic::Fst => {
            mem_base_ok(instr.rs1)?;
            let off = imm_value(instr, line_no)?;
            out.extend(la(13, FPREGS_LABEL));
            load_slot(&mut out, 13, instr.rd, 8, 9);
            out.push(AsmInstr::imm(Mnemonic::Addi, 12, instr.rs1, off));
            out.push(st(12, 0, 8));
            out.push(st(12, 4, 9));
        }
        Mnemonic::Flw => {
            mem_base_ok(instr.rs1)?;
            let off = imm_value(instr, line_no)?;
            out.push(AsmInstr::imm(Mnemonic::Addi, 12, instr.rs1, off));
            out.push(ld(8, 12, 0));
            out.extend(la(13, FPREGS_LABEL));
            out.push(st(13, slot(instr.rd) + 4, 8));
            out.push(st(13, slot(instr.rd), 0));
        }
        Mnemonic::Fsw => {
            mem_base_ok(instr.rs1)?;
            let off = imm_value(instr, line_no)?;
            out.extend(la(13, FPREGS_LABEL));
            out.push(ld(8, 13, slot(instr.rd) + 4));
            out.push(AsmInstr::imm(Mnemonic::Addi, 12, instr.rs1, off));
            out.push(st(12, 0, 8));
        }
        _ => unreachable!("not an FP mnemonic: {m:?}"),
    }
    Ok(out)
}

fn imm_value(instr: &AsmInstr, line_no: usize) -> Result<i64, AsmError> {
    match &instr.imm {
        ImmOperand::Value(v) => Ok(*v),
        other => Err(AsmError::Syntax {
            line: line_no,
            msg: format!("{}: unsupported operand {other:?}", instr.mnemonic.name()),
        }),
    }
}

/// Rewrites every FP mnemonic in the unit and appends the runtime library.
pub fn lower_unit(unit: &SourceUnit) -> Result<SourceUnit, AsmError> {
    let mut lines = Vec::with_capacity(unit.lines.len() + LIBRARY_UNIT.lines.len());
    for line in &unit.lines {
        let lowered = match &line.statement {
            Some(Statement::Instr(instr)) if instr.mnemonic.touches_fp_regs() => {
                Some(Statement::Pseudo(lower(instr, line.line_no)?))
            }
            _ => None,
        };
        match lowered {
            Some(statement) => lines.push(Line {
                label: line.label.clone(),
                statement: Some(statement),
                comment: line.comment.clone(),
                line_no: line.line_no,
            }),
            None => lines.push(line.clone()),
        }
    }
    lines.extend(LIBRARY_UNIT.lines.iter().cloned());
    Ok(SourceUnit { lines })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::{assemble_str, AsmOptions};
    use crate::isa::{decode, Category};

    fn soft() -> AsmOptions {
        AsmOptions { soft_float: true }
    }

    #[test]
    fn library_source_parses_and_defines_routines() {
        let unit = &*LIBRARY_UNIT;
        assert!(!unit.lines.is_empty());
        let text = RUNTIME_LIBRARY;
        for routine in [
            "__softfp_add64:",
            "__softfp_sub64:",
            "__softfp_mul64:",
            "__softfp_div64:",
            "__softfp_sqrt64:",
            "__softfp_f32to64:",
            "__softfp_f64to32:",
            "__softfp_fpregs:",
        ] {
            assert!(text.contains(routine), "library missing {routine}");
        }
    }

    #[test]
    fn soft_float_image_contains_no_fpu_category_instructions() {
        let src = "\
            .entry main\n\
            main: LA r1, vals\n\
                  FLD f1, [r1]\n\
                  FLD f2, [r1 + 8]\n\
                  FADD.D f3, f1, f2\n\
                  FSUB.S f4, f1, f2\n\
                  FSQRT.D f5, f3\n\
                  FST [r1 + 16], f3\n\
                  HALT\n\
            .data\n\
            vals: .double 1.5, 2.5, 0.0\n";
        let img = assemble_str(src, &soft()).unwrap();
        for &word in &img.text {
            let instr = decode(word).unwrap();
            assert!(
                !instr.category().is_fpu(),
                "FP instruction survived lowering: {:?}",
                instr.mnemonic
            );
        }
        // Same source with hardware FP keeps the FP ops.
        let hard = assemble_str(src, &AsmOptions::default()).unwrap();
        let fpu_words = hard
            .text
            .iter()
            .filter(|&&w| decode(w).unwrap().category().is_fpu())
            .count();
        assert_eq!(fpu_words, 3, "FADD.D, FSUB.S, FSQRT.D");
        assert!(img.text.len() > hard.text.len());
    }

    #[test]
    fn every_fp_mnemonic_has_a_rule() {
        let rules = rules();
        let covered: Vec<_> = rules.iter().map(|r| r.mnemonic).collect();
        for &m in crate::isa::Mnemonic::ALL {
            assert_eq!(
                covered.contains(&m),
                m.touches_fp_regs(),
                "rule mismatch for {m:?}"
            );
        }
        for rule in &rules {
            assert!(rule.clobbers.contains(&31), "CALL clobbers r31");
            if rule.mnemonic.category().is_fpu() {
                assert!(rule.routine.is_some());
            }
        }
    }

    #[test]
    fn reserved_base_register_is_rejected() {
        let src = ".entry main\nmain: FLD f1, [r12]\nHALT\n";
        assert!(assemble_str(src, &soft()).is_err());
    }

    #[test]
    fn expansions_reference_only_integer_registers() {
        for &m in Mnemonic::ALL {
            if !m.touches_fp_regs() {
                continue;
            }
            let instr = AsmInstr::imm(m, 3, 2, 0);
            let seq = lower(&instr, 1).unwrap();
            assert!(!seq.is_empty());
            for step in &seq {
                assert!(
                    !step.mnemonic.touches_fp_regs(),
                    "{m:?} expansion still touches FP regs via {:?}",
                    step.mnemonic
                );
                assert!(!step.mnemonic.category().is_fpu());
            }
        }
    }

    #[test]
    fn lowering_is_stable_for_user_labels_and_branches() {
        // A branch across a lowered region must still resolve.
        let src = "\
            .entry main\n\
            main: LA r1, vals\n\
                  BEQ r0, r0, skip\n\
                  FADD.D f1, f1, f1\n\
            skip: HALT\n\
            .data\n\
            vals: .double 1.0\n";
        let img = assemble_str(src, &soft()).unwrap();
        // First word after LA pair is the BEQ; its displacement must skip
        // the whole expansion (11 instructions) and land on HALT.
        let beq = decode(img.text[2]).unwrap();
        assert_eq!(beq.mnemonic, Mnemonic::Beq);
        assert_eq!(beq.imm, 12, "11 lowered instructions plus one");
        let halt = decode(img.text[2 + 12]).unwrap();
        assert_eq!(halt.category(), Category::Other);
    }
}
