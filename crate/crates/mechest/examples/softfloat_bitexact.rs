//! Assemble the same FP kernel twice — once using real FPU instructions and
//! once lowered to the integer-only soft-float library — run both, and show
//! that every stored double is bit-identical.

use mechest::asm::{assemble_str, AsmOptions};
use mechest::simulator::{run, HardwareConfig, DEFAULT_BUDGET};

// For each input pair: out[4i..] = { a+b, a*b, a/b, sqrt(a) }.
const SOURCE: &str = r"
.text 0x1000
.entry main
main:
    LA   r1, inputs
    LA   r2, outputs
    LI   r3, 4                 ; pairs
pair:
    FLD  f1, [r1 + 0]
    FLD  f2, [r1 + 8]
    FADD.D f3, f1, f2
    FST  [r2 + 0], f3
    FMUL.D f3, f1, f2
    FST  [r2 + 8], f3
    FDIV.D f3, f1, f2
    FST  [r2 + 16], f3
    FSQRT.D f3, f1
    FST  [r2 + 24], f3
    ADDI r1, r1, 16
    ADDI r2, r2, 32
    ADDI r3, r3, -1
    BNE  r3, r0, pair
    HALT

.data
inputs:
    .double 2.0,    3.0
    .double 0.1,    0.2
    .double 1.5e300, 2.5e-300
    .double 4.9406564584124654e-324, 3.0    ; smallest subnormal
outputs:
    .space 128
";

fn main() {
    let hard = assemble_str(SOURCE, &AsmOptions { soft_float: false }).expect("assembles");
    let soft = assemble_str(SOURCE, &AsmOptions { soft_float: true }).expect("lowers");
    println!(
        "hard image: {} text words; soft image: {} (library appended)",
        hard.text.len(),
        soft.text.len()
    );

    let hard_run = run(&hard, &HardwareConfig::with_fpu(), DEFAULT_BUDGET).expect("hard runs");
    // The lowered image needs no FPU at all.
    let soft_run = run(&soft, &HardwareConfig::without_fpu(), DEFAULT_BUDGET).expect("soft runs");
    println!(
        "hard: {} instructions; soft: {} instructions",
        hard_run.executed, soft_run.executed
    );

    let outputs = hard.data.len() - 128..hard.data.len();
    let hard_bytes = &hard_run.data_segment()[outputs.clone()];
    let soft_bytes = &soft_run.data_segment()[outputs];
    assert_eq!(hard_bytes, soft_bytes, "soft-float must match bit for bit");

    println!("\n{:>24}  {:>24}  bitwise equal", "hardware FPU", "soft-float");
    for i in 0..16 {
        let word = |b: &[u8]| u64::from_be_bytes(b[8 * i..8 * i + 8].try_into().unwrap());
        let (h, s) = (word(hard_bytes), word(soft_bytes));
        println!("{:>24e}  {:>24e}  {}", f64::from_bits(h), f64::from_bits(s), h == s);
    }
}
