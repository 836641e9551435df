//! End-to-end accuracy study: calibrate on a noisy platform, then estimate a
//! suite of mixed kernels and grade the estimates against measurements from
//! the same platform. Mean error stays well below the per-measurement noise
//! because both calibration and estimation average over many instructions.

use mechest::asm::{assemble_str, AsmOptions};
use mechest::calibration::{
    calibrate_all, gen_mixed_kernel, CalibrationOptions, KernelPairSpec, MeasurementSource,
    SyntheticPlatform,
};
use mechest::costmodel::{estimate, CostProfile};
use mechest::evaluation::error_metrics;
use mechest::isa::Category;
use mechest::simulator::{run, HardwareConfig, DEFAULT_BUDGET};

fn main() {
    let truth = CostProfile::builtin();
    let specs: Vec<_> = Category::ALL
        .iter()
        .map(|&c| KernelPairSpec::standard(c).with_loop_count(10_000))
        .collect();

    println!(
        "{:>6}  {:>12}  {:>12}  {:>12}  {:>12}",
        "sigma", "energy mean", "energy max", "time mean", "time max"
    );
    for sigma in [0.02, 0.05, 0.10] {
        let platform = SyntheticPlatform::noisy(truth.clone(), sigma, 1).expect("valid sigma");
        let calibrated = calibrate_all(&specs, &platform, &CalibrationOptions::default())
            .expect("calibrates")
            .profile;

        let mut estimates = Vec::new();
        let mut measurements = Vec::new();
        for seed in 0..12 {
            let source = gen_mixed_kernel(seed, 20_000 + 5_000 * seed);
            let img = assemble_str(&source, &AsmOptions::default()).expect("assembles");
            let state = run(&img, &HardwareConfig::with_fpu(), DEFAULT_BUDGET).expect("runs");
            estimates.push(estimate(&state.counts, &calibrated));
            measurements.push(platform.measure(&img).expect("measures"));
        }

        let report = error_metrics(&estimates, &measurements).expect("grades");
        println!(
            "{:>6.2}  {:>11.2}%  {:>11.2}%  {:>11.2}%  {:>11.2}%",
            sigma,
            report.energy.mean_abs * 100.0,
            report.energy.max_abs * 100.0,
            report.time.mean_abs * 100.0,
            report.time.max_abs * 100.0
        );
    }
}
