//! The design question the toolkit answers: is an FPU worth its silicon for
//! a given workload? Estimates each bundled workload with and without the
//! FPU (the no-FPU variant runs the soft-float lowering) and prints the
//! percentage deltas.

use mechest::costmodel::CostProfile;
use mechest::evaluation::compare_configs;
use mechest::simulator::HardwareConfig;
use mechest::workloads;

fn main() {
    let pairs: Vec<_> = workloads::bundled()
        .iter()
        .map(|d| d.pair().expect("bundled workloads assemble"))
        .collect();

    // One calibrated profile per configuration; the builtin table stands in
    // for both here, as in the reference platform's setup.
    let profile = CostProfile::builtin();
    let report = compare_configs(
        &pairs,
        &HardwareConfig::with_fpu(),
        &HardwareConfig::without_fpu(),
        &profile,
        &profile,
    )
    .expect("comparison runs");

    print!("{}", report.text_table());
    println!();
    for row in &report.rows {
        println!(
            "{}: {} instructions with FPU, {} without",
            row.workload, row.with_fpu.executed, row.without_fpu.executed
        );
    }
}
