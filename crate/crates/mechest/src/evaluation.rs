//! Estimation-error metrics and hardware-configuration comparison reports.
//!
//! Two consumers of the cost model live here. [`error_metrics`] grades a
//! batch of estimates against measured samples: signed relative error per
//! kernel, mean absolute error and maximum absolute error, separately for
//! energy and time. [`compare_configs`] answers the design question the
//! toolkit exists for: how much energy/time does a workload gain from an FPU,
//! and what does it cost in logic area. Deltas are percentages relative to
//! the configuration *without* the FPU, so a negative delta means the FPU
//! variant is cheaper.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::asm::BinaryImage;
use crate::calibration::MeasurementSample;
use crate::costmodel::{estimate, CostProfile, Estimate};
use crate::isa::{decode, Mnemonic};
use crate::simulator::{run, HardwareConfig, SimError, DEFAULT_BUDGET};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{estimates} estimates vs {measurements} measurements")]
    LengthMismatch {
        estimates: usize,
        measurements: usize,
    },
    #[error("measurement {index}: {field} = {value}, relative error undefined")]
    ZeroMeasurement {
        index: usize,
        field: &'static str,
        value: f64,
    },
    #[error("workload `{workload}`: soft-float image still holds {mnemonic} at 0x{addr:08x}")]
    ConfigMismatch {
        workload: String,
        mnemonic: Mnemonic,
        addr: u32,
    },
    #[error("bad comparison setup: {0}")]
    BadSetup(String),
    #[error("workload `{workload}` failed: {source}")]
    Run {
        workload: String,
        #[source]
        source: SimError,
    },
}

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

/// Signed relative errors of one kernel's estimate against its measurement.
#[derive(Debug, Clone, Serialize)]
pub struct KernelErrorRow {
    pub label: String,
    /// (estimated - measured) / measured, as a fraction.
    pub energy: f64,
    pub time: f64,
}

/// Mean and maximum of the absolute errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorStats {
    pub mean_abs: f64,
    pub max_abs: f64,
}

/// Per-kernel signed errors plus the aggregate statistics, for energy and
/// time.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub kernels: Vec<KernelErrorRow>,
    pub energy: ErrorStats,
    pub time: ErrorStats,
}

fn stats(errors: impl Iterator<Item = f64>) -> ErrorStats {
    let mut sum = 0.0;
    let mut max = 0.0f64;
    let mut n = 0usize;
    for e in errors {
        sum += e.abs();
        max = max.max(e.abs());
        n += 1;
    }
    ErrorStats {
        mean_abs: if n == 0 { 0.0 } else { sum / n as f64 },
        max_abs: max,
    }
}

/// Grades estimates against measurements, pairing them by position.
///
/// Each measured value must be positive; relative error against a zero
/// measurement is undefined.
pub fn error_metrics(
    estimates: &[Estimate],
    measurements: &[MeasurementSample],
) -> Result<ErrorReport, EvalError> {
    if estimates.len() != measurements.len() {
        return Err(EvalError::LengthMismatch {
            estimates: estimates.len(),
            measurements: measurements.len(),
        });
    }
    let mut kernels = Vec::with_capacity(estimates.len());
    for (index, (est, meas)) in estimates.iter().zip(measurements).enumerate() {
        for (field, value) in [("energy_J", meas.energy_j), ("time_s", meas.time_s)] {
            if value <= 0.0 {
                return Err(EvalError::ZeroMeasurement {
                    index,
                    field,
                    value,
                });
            }
        }
        kernels.push(KernelErrorRow {
            label: index.to_string(),
            energy: (est.energy_j() - meas.energy_j) / meas.energy_j,
            time: (est.time_s() - meas.time_s) / meas.time_s,
        });
    }
    Ok(ErrorReport {
        energy: stats(kernels.iter().map(|k| k.energy)),
        time: stats(kernels.iter().map(|k| k.time)),
        kernels,
    })
}

impl ErrorReport {
    /// Replaces the default positional labels (lengths must match).
    pub fn with_labels(mut self, labels: &[String]) -> ErrorReport {
        if labels.len() == self.kernels.len() {
            for (row, label) in self.kernels.iter_mut().zip(labels) {
                row.label = label.clone();
            }
        }
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap();
        s.push('\n');
        s
    }

    /// Aligned table; percentages rounded to two decimals (the JSON form
    /// keeps full precision).
    pub fn text_table(&self) -> String {
        let width = self
            .kernels
            .iter()
            .map(|k| k.label.len())
            .chain(["kernel".len(), "mean abs".len()])
            .max()
            .unwrap_or(6);
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  {:>10}  {:>10}", "kernel", "energy %", "time %");
        for row in &self.kernels {
            let _ = writeln!(
                s,
                "{:<width$}  {:>10.2}  {:>10.2}",
                row.label,
                row.energy * 100.0,
                row.time * 100.0
            );
        }
        let _ = writeln!(
            s,
            "{:<width$}  {:>10.2}  {:>10.2}",
            "mean abs",
            self.energy.mean_abs * 100.0,
            self.time.mean_abs * 100.0
        );
        let _ = writeln!(
            s,
            "{:<width$}  {:>10.2}  {:>10.2}",
            "max abs",
            self.energy.max_abs * 100.0,
            self.time.max_abs * 100.0
        );
        s
    }
}

// ---------------------------------------------------------------------------
// Configuration comparison
// ---------------------------------------------------------------------------

/// One workload assembled twice from the same source: natively with FP
/// instructions and lowered to soft-float.
#[derive(Debug, Clone)]
pub struct WorkloadPair {
    pub name: String,
    pub hard: BinaryImage,
    pub soft: BinaryImage,
}

/// Estimated totals of one workload under one configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SideTotals {
    pub executed: u64,
    #[serde(rename = "energy_nJ")]
    pub energy_nj: f64,
    pub time_ns: f64,
}

/// Percentage change of the FPU configuration relative to the soft-float
/// baseline.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DeltaPct {
    pub energy: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub workload: String,
    pub with_fpu: SideTotals,
    pub without_fpu: SideTotals,
    pub delta_pct: DeltaPct,
}

/// Per-workload deltas, their mean, and the configuration-level logic-area
/// delta.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub config_with_fpu: String,
    pub config_without_fpu: String,
    pub rows: Vec<ComparisonRow>,
    pub mean_delta_pct: DeltaPct,
    pub logical_elements_delta_pct: f64,
}

fn pct(with_fpu: f64, baseline: f64) -> f64 {
    (with_fpu - baseline) / baseline * 100.0
}

/// Rejects a "soft-float" image that still contains FPU-category
/// instructions in its text segment.
fn scan_for_fp_text(name: &str, img: &BinaryImage) -> Result<(), EvalError> {
    for (i, &word) in img.text.iter().enumerate() {
        if let Ok(instr) = decode(word) {
            if instr.mnemonic.category().is_fpu() {
                return Err(EvalError::ConfigMismatch {
                    workload: name.to_string(),
                    mnemonic: instr.mnemonic,
                    addr: img.text_base + 4 * i as u32,
                });
            }
        }
    }
    Ok(())
}

/// Estimates every workload under both configurations and reports the
/// percentage change from adding the FPU.
///
/// `cfg_fpu`/`profile_fpu` price the hard-float image, `cfg_nofpu`/
/// `profile_nofpu` the lowered one. Deltas use the no-FPU side as the
/// baseline: `(with - without) / without * 100`.
pub fn compare_configs(
    workloads: &[WorkloadPair],
    cfg_fpu: &HardwareConfig,
    cfg_nofpu: &HardwareConfig,
    profile_fpu: &CostProfile,
    profile_nofpu: &CostProfile,
) -> Result<ComparisonReport, EvalError> {
    if workloads.is_empty() {
        return Err(EvalError::BadSetup("no workloads given".into()));
    }
    if !cfg_fpu.fpu_present {
        return Err(EvalError::BadSetup(format!(
            "config `{}` passed as the FPU side has fpu_present = false",
            cfg_fpu.name
        )));
    }
    if cfg_nofpu.fpu_present {
        return Err(EvalError::BadSetup(format!(
            "config `{}` passed as the baseline has an FPU",
            cfg_nofpu.name
        )));
    }
    let mut rows = Vec::with_capacity(workloads.len());
    let mut mean = DeltaPct {
        energy: 0.0,
        time: 0.0,
    };
    for w in workloads {
        scan_for_fp_text(&w.name, &w.soft)?;
        let wrap = |source: SimError| EvalError::Run {
            workload: w.name.clone(),
            source,
        };
        let hard_state = run(&w.hard, cfg_fpu, DEFAULT_BUDGET).map_err(wrap)?;
        let soft_state = run(&w.soft, cfg_nofpu, DEFAULT_BUDGET).map_err(wrap)?;
        let hard_est = estimate(&hard_state.counts, profile_fpu);
        let soft_est = estimate(&soft_state.counts, profile_nofpu);
        let delta = DeltaPct {
            energy: pct(hard_est.energy_nj, soft_est.energy_nj),
            time: pct(hard_est.time_ns, soft_est.time_ns),
        };
        mean.energy += delta.energy;
        mean.time += delta.time;
        rows.push(ComparisonRow {
            workload: w.name.clone(),
            with_fpu: SideTotals {
                executed: hard_state.executed,
                energy_nj: hard_est.energy_nj,
                time_ns: hard_est.time_ns,
            },
            without_fpu: SideTotals {
                executed: soft_state.executed,
                energy_nj: soft_est.energy_nj,
                time_ns: soft_est.time_ns,
            },
            delta_pct: delta,
        });
    }
    mean.energy /= rows.len() as f64;
    mean.time /= rows.len() as f64;
    Ok(ComparisonReport {
        config_with_fpu: cfg_fpu.name.clone(),
        config_without_fpu: cfg_nofpu.name.clone(),
        rows,
        mean_delta_pct: mean,
        logical_elements_delta_pct: pct(
            cfg_fpu.logical_elements as f64,
            cfg_nofpu.logical_elements as f64,
        ),
    })
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap();
        s.push('\n');
        s
    }

    /// Aligned table, one column per workload plus the mean; metrics as rows.
    /// Percentages rounded to two decimals (JSON keeps full precision).
    pub fn text_table(&self) -> String {
        let metric_w = "logical elements %".len();
        let col_w = self
            .rows
            .iter()
            .map(|r| r.workload.len())
            .chain(["mean".len(), 10])
            .max()
            .unwrap();
        let mut s = format!(
            "change when adding the FPU ({} vs {})\n",
            self.config_with_fpu, self.config_without_fpu
        );
        let _ = write!(s, "{:<metric_w$}", "metric");
        for r in &self.rows {
            let _ = write!(s, "  {:>col_w$}", r.workload);
        }
        let _ = writeln!(s, "  {:>col_w$}", "mean");
        for (label, get, mean) in [
            (
                "energy %",
                (|r: &ComparisonRow| r.delta_pct.energy) as fn(&ComparisonRow) -> f64,
                self.mean_delta_pct.energy,
            ),
            (
                "time %",
                (|r: &ComparisonRow| r.delta_pct.time) as fn(&ComparisonRow) -> f64,
                self.mean_delta_pct.time,
            ),
        ] {
            let _ = write!(s, "{label:<metric_w$}");
            for r in &self.rows {
                let _ = write!(s, "  {:>col_w$.2}", get(r));
            }
            let _ = writeln!(s, "  {mean:>col_w$.2}");
        }
        let _ = write!(s, "{:<metric_w$}", "logical elements %");
        for _ in &self.rows {
            let _ = write!(s, "  {:>col_w$.2}", self.logical_elements_delta_pct);
        }
        let _ = writeln!(s, "  {:>col_w$.2}", self.logical_elements_delta_pct);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::{assemble_str, AsmOptions};
    use proptest::prelude::*;

    fn est(energy_nj: f64, time_ns: f64) -> Estimate {
        Estimate {
            energy_nj,
            time_ns,
            per_category: Vec::new(),
        }
    }

    fn meas(energy_j: f64, time_s: f64) -> MeasurementSample {
        MeasurementSample { energy_j, time_s }
    }

    #[test]
    fn single_kernel_substitution() {
        // estimated 103 against measured 100 is +0.03.
        let report = error_metrics(&[est(103e9, 100e9)], &[meas(100.0, 100.0)]).unwrap();
        assert!((report.kernels[0].energy - 0.03).abs() < 1e-12);
        assert!((report.kernels[0].time - 0.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_aggregates() {
        // errors {+0.02, -0.04} give mean 0.03 and max 0.04.
        let estimates = [est(102e9, 100e9), est(96e9, 100e9)];
        let measurements = [meas(100.0, 100.0), meas(100.0, 100.0)];
        let report = error_metrics(&estimates, &measurements).unwrap();
        assert!((report.energy.mean_abs - 0.03).abs() < 1e-12);
        assert!((report.energy.max_abs - 0.04).abs() < 1e-12);
        assert!(report.time.mean_abs == 0.0 && report.time.max_abs == 0.0);
    }

    #[test]
    fn perfect_estimates_have_zero_error() {
        let report = error_metrics(&[est(7e9, 3e9)], &[meas(7.0, 3.0)]).unwrap();
        assert_eq!(report.energy.mean_abs, 0.0);
        assert_eq!(report.energy.max_abs, 0.0);
        assert_eq!(report.time.max_abs, 0.0);
    }

    #[test]
    fn length_mismatch_and_zero_measurement_are_rejected() {
        assert!(matches!(
            error_metrics(&[est(1.0, 1.0)], &[]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            error_metrics(&[est(1.0, 1.0)], &[meas(0.0, 1.0)]),
            Err(EvalError::ZeroMeasurement { field: "energy_J", .. })
        ));
    }

    proptest! {
        #[test]
        fn aggregates_are_permutation_invariant(
            values in proptest::collection::vec((0.5f64..2.0, 0.5f64..2.0), 1..20),
            rot in 0usize..20,
        ) {
            let estimates: Vec<Estimate> = values.iter().map(|&(e, t)| est(e * 1e9, t * 1e9)).collect();
            let measurements: Vec<MeasurementSample> = values.iter().map(|_| meas(1.0, 1.0)).collect();
            let a = error_metrics(&estimates, &measurements).unwrap();
            let mut rotated = estimates.clone();
            rotated.rotate_left(rot % values.len());
            let b = error_metrics(&rotated, &measurements).unwrap();
            prop_assert!((a.energy.mean_abs - b.energy.mean_abs).abs() < 1e-12);
            prop_assert!((a.energy.max_abs - b.energy.max_abs).abs() < 1e-12);
            prop_assert!(a.energy.mean_abs <= a.energy.max_abs + 1e-15);
        }

        #[test]
        fn adding_a_small_error_never_raises_the_mean(
            values in proptest::collection::vec(0.5f64..2.0, 1..20),
        ) {
            let estimates: Vec<Estimate> = values.iter().map(|&e| est(e * 1e9, 1e9)).collect();
            let measurements: Vec<MeasurementSample> = values.iter().map(|_| meas(1.0, 1.0)).collect();
            let before = error_metrics(&estimates, &measurements).unwrap();
            // Append a kernel whose |error| equals the current mean.
            let mut extended = estimates;
            extended.push(est((1.0 + before.energy.mean_abs) * 1e9, 1e9));
            let mut meas2 = measurements;
            meas2.push(meas(1.0, 1.0));
            let after = error_metrics(&extended, &meas2).unwrap();
            prop_assert!(after.energy.mean_abs <= before.energy.mean_abs + 1e-12);
        }
    }

    // -- comparison ---------------------------------------------------------

    const FP_HEAVY: &str = "
.text 0x1000
.entry main
main:
    LA   r1, vals
    FLD  f1, [r1 + 0]
    FLD  f2, [r1 + 8]
    LI   r2, 200
loop:
    FMUL.D f3, f1, f2
    FADD.D f4, f3, f1
    FDIV.D f5, f4, f2
    FSQRT.D f6, f5
    ADDI r2, r2, -1
    BNE  r2, r0, loop
    FST  [r1 + 16], f6
    HALT
.data
vals:
    .double 1.5, 0.37, 0.0
";

    const INT_ONLY: &str = "
.text 0x1000
.entry main
main:
    LI   r1, 100
    LI   r2, 0
loop:
    ADD  r2, r2, r1
    ADDI r1, r1, -1
    BNE  r1, r0, loop
    LA   r3, out
    ST   [r3 + 0], r2
    HALT
.data
out:
    .word 0
";

    fn pair(name: &str, source: &str) -> WorkloadPair {
        let hard = assemble_str(source, &AsmOptions { soft_float: false }).unwrap();
        let soft = assemble_str(source, &AsmOptions { soft_float: true }).unwrap();
        WorkloadPair {
            name: name.into(),
            hard,
            soft,
        }
    }

    fn leon3_configs() -> (HardwareConfig, HardwareConfig) {
        (HardwareConfig::with_fpu(), HardwareConfig::without_fpu())
    }

    #[test]
    fn fp_heavy_workload_gains_from_the_fpu() {
        let (fpu, nofpu) = leon3_configs();
        let profile = CostProfile::builtin();
        let report = compare_configs(
            &[pair("fp_heavy", FP_HEAVY), pair("int_only", INT_ONLY)],
            &fpu,
            &nofpu,
            &profile,
            &profile,
        )
        .unwrap();
        let fp = &report.rows[0];
        let int = &report.rows[1];
        assert!(fp.delta_pct.energy < 0.0, "energy {}", fp.delta_pct.energy);
        assert!(fp.delta_pct.time < 0.0, "time {}", fp.delta_pct.time);
        // The integer workload never calls the library: identical counts,
        // exactly zero delta.
        assert_eq!(int.delta_pct.energy, 0.0);
        assert_eq!(int.delta_pct.time, 0.0);
        assert_eq!(int.with_fpu.executed, int.without_fpu.executed);
        assert!(fp.delta_pct.energy.abs() > int.delta_pct.energy.abs());
        // leon3 metadata: 20900 vs 10000 logical elements.
        assert!((report.logical_elements_delta_pct - 109.0).abs() < 1e-9);
        // Mean sits between the two rows.
        let lo = fp.delta_pct.energy.min(int.delta_pct.energy);
        let hi = fp.delta_pct.energy.max(int.delta_pct.energy);
        assert!(report.mean_delta_pct.energy >= lo && report.mean_delta_pct.energy <= hi);
    }

    #[test]
    fn soft_image_with_fp_instructions_is_a_config_mismatch() {
        let (fpu, nofpu) = leon3_configs();
        let profile = CostProfile::builtin();
        let hard = assemble_str(FP_HEAVY, &AsmOptions { soft_float: false }).unwrap();
        let bogus = WorkloadPair {
            name: "bogus".into(),
            soft: hard.clone(),
            hard,
        };
        assert!(matches!(
            compare_configs(&[bogus], &fpu, &nofpu, &profile, &profile),
            Err(EvalError::ConfigMismatch { .. })
        ));
    }

    #[test]
    fn swapped_configs_are_rejected() {
        let (fpu, nofpu) = leon3_configs();
        let profile = CostProfile::builtin();
        let w = [pair("int_only", INT_ONLY)];
        assert!(matches!(
            compare_configs(&w, &nofpu, &fpu, &profile, &profile),
            Err(EvalError::BadSetup(_))
        ));
        assert!(matches!(
            compare_configs(&[], &fpu, &nofpu, &profile, &profile),
            Err(EvalError::BadSetup(_))
        ));
    }

    #[test]
    fn text_tables_round_to_two_decimals() {
        let (fpu, nofpu) = leon3_configs();
        let profile = CostProfile::builtin();
        let report = compare_configs(
            &[pair("fp_heavy", FP_HEAVY)],
            &fpu,
            &nofpu,
            &profile,
            &profile,
        )
        .unwrap();
        let table = report.text_table();
        assert!(table.contains("109.00"), "{table}");
        assert!(table.contains("energy %"), "{table}");
        // JSON keeps full precision and parses back.
        let json = report.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["rows"][0]["workload"], "fp_heavy");

        let err_report = error_metrics(
            &[est(103.456e9, 100e9)],
            &[meas(100.0, 100.0)],
        )
        .unwrap()
        .with_labels(&["alpha".into()]);
        let table = err_report.text_table();
        assert!(table.contains("alpha"), "{table}");
        assert!(table.contains("3.46"), "{table}");
    }
}
