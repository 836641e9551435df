//! Calibrate against the synthetic platform and show two things the whole
//! methodology rests on:
//!
//!   1. with zero measurement noise, kernel-pair differencing recovers the
//!      ground-truth per-instruction costs (to float rounding), and
//!   2. with noise, the recovered costs converge as the loop count grows,
//!      because per-instruction jitter averages out across n_test instances.

use mechest::calibration::{
    calibrate_all, CalibrationOptions, KernelPairSpec, SyntheticPlatform,
};
use mechest::costmodel::CostProfile;
use mechest::isa::Category;

fn specs(loop_count: u32) -> Vec<KernelPairSpec> {
    Category::ALL
        .iter()
        .map(|&c| KernelPairSpec::standard(c).with_loop_count(loop_count))
        .collect()
}

/// Largest relative error of any calibrated cost against the truth.
fn worst_error(calibrated: &CostProfile, truth: &CostProfile) -> f64 {
    Category::ALL
        .iter()
        .flat_map(|&c| {
            let got = calibrated.get(c);
            let want = truth.get(c);
            [
                (got.e_nj - want.e_nj).abs() / want.e_nj,
                (got.t_ns - want.t_ns).abs() / want.t_ns,
            ]
        })
        .fold(0.0, f64::max)
}

fn main() {
    let truth = CostProfile::builtin();
    let options = CalibrationOptions::default();

    let exact = SyntheticPlatform::exact(truth.clone());
    let outcome = calibrate_all(&specs(10_000), &exact, &options).expect("calibrates");
    assert!(outcome.flags.is_empty());
    println!(
        "zero noise, loop count 10^4: worst relative error {:.3e}",
        worst_error(&outcome.profile, &truth)
    );

    println!("\nnoise sigma = 0.05, seed 7:");
    for loop_count in [1_000, 10_000, 100_000] {
        let noisy = SyntheticPlatform::noisy(truth.clone(), 0.05, 7).expect("valid sigma");
        let outcome = calibrate_all(&specs(loop_count), &noisy, &options).expect("calibrates");
        println!(
            "  loop count {:>6}: worst relative error {:.3e}",
            loop_count,
            worst_error(&outcome.profile, &truth)
        );
    }
}
