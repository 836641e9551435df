//! Assemble a small program from source and execute it, printing the
//! per-category instruction counts that feed the cost model.

use mechest::asm::{assemble_str, AsmOptions};
use mechest::simulator::{run, HardwareConfig, DEFAULT_BUDGET};

const SOURCE: &str = r"
; sum of squares 1..10, result stored in the first data word
.text 0x1000
.entry main
main:
    LI   r1, 10
    LI   r2, 0              ; accumulator
loop:
    MUL  r3, r1, r1
    ADD  r2, r2, r3
    ADDI r1, r1, -1
    BNE  r1, r0, loop
    LA   r4, result
    ST   [r4 + 0], r2
    HALT

.data
result:
    .word 0
";

fn main() {
    let img = assemble_str(SOURCE, &AsmOptions::default()).expect("assembles");
    println!(
        "image: {} text words, {} data bytes, entry 0x{:04x}",
        img.text.len(),
        img.data.len(),
        img.entry
    );

    let state = run(&img, &HardwareConfig::with_fpu(), DEFAULT_BUDGET).expect("runs");
    let d = state.data_segment();
    let result = u32::from_be_bytes([d[0], d[1], d[2], d[3]]);
    println!("result word: {result} (expected {})", (1..=10u32).map(|i| i * i).sum::<u32>());

    println!("\nexecuted {} instructions:", state.executed);
    for (cat, n) in state.counts.iter() {
        if n > 0 {
            println!("  {:<20} {n}", cat.name());
        }
    }
    assert_eq!(state.counts.total(), state.executed); // count conservation
}
