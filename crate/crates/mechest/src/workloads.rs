//! Bundled example workloads and their category-mix fingerprints.
//!
//! Two assembly kernels ship with the crate: `basis_projection` (FP-heavy,
//! double precision throughout its arithmetic path) and `block_decode`
//! (heterogeneous integer pipeline, no FP instructions at all). Each carries
//! a frozen fingerprint — the fraction of executed instructions per category
//! — so a change to the assembler, simulator or the kernels themselves that
//! shifts the mix is caught immediately. Workload manifests are plain JSON
//! and can also be loaded from disk for user-supplied kernels.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asm::{assemble_str, AsmError, AsmOptions};
use crate::evaluation::WorkloadPair;
use crate::isa::Category;
use crate::simulator::CategoryCounts;

pub const BASIS_PROJECTION_SOURCE: &str = include_str!("../workloads/basis_projection.s");
pub const BLOCK_DECODE_SOURCE: &str = include_str!("../workloads/block_decode.s");
pub const BUNDLED_MANIFEST: &str = include_str!("../workloads/manifest.json");

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("workload manifest: {0}")]
    Manifest(String),
    #[error("workload `{name}`: {msg}")]
    BadDescriptor { name: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A workload: assembly source plus the expected category mix.
#[derive(Debug, Clone)]
pub struct WorkloadDescriptor {
    pub name: String,
    /// Manifest-relative path the source came from.
    pub source_path: String,
    pub source: String,
    /// Expected fraction of executed instructions per category, in canonical
    /// category order. Fractions sum to one.
    pub fingerprint: [f64; Category::COUNT],
    /// Allowed absolute deviation per category.
    pub tolerance: f64,
}

#[derive(Serialize, Deserialize)]
struct ManifestJson {
    workloads: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    name: String,
    source: String,
    tolerance: f64,
    fingerprint: HashMap<String, f64>,
}

impl WorkloadDescriptor {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |msg: String| WorkloadError::BadDescriptor {
            name: self.name.clone(),
            msg,
        };
        let sum: f64 = self.fingerprint.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(bad(format!("fingerprint fractions sum to {sum}, not 1")));
        }
        if self.fingerprint.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(bad("fingerprint fraction outside [0, 1]".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(bad(format!("tolerance {} must be positive", self.tolerance)));
        }
        Ok(())
    }

    /// Assembles the source twice: natively and lowered to soft-float.
    pub fn pair(&self) -> Result<WorkloadPair, AsmError> {
        let hard = assemble_str(&self.source, &AsmOptions { soft_float: false })?;
        let soft = assemble_str(&self.source, &AsmOptions { soft_float: true })?;
        Ok(WorkloadPair {
            name: self.name.clone(),
            hard,
            soft,
        })
    }
}

fn descriptor_from_entry(
    entry: EntryJson,
    source: String,
) -> Result<WorkloadDescriptor, WorkloadError> {
    let mut fingerprint = [0.0; Category::COUNT];
    let mut seen = [false; Category::COUNT];
    for (name, fraction) in &entry.fingerprint {
        let cat = Category::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| WorkloadError::BadDescriptor {
                name: entry.name.clone(),
                msg: format!("unknown category `{name}` in fingerprint"),
            })?;
        fingerprint[cat.index()] = *fraction;
        seen[cat.index()] = true;
    }
    if let Some(missing) = Category::ALL.into_iter().find(|c| !seen[c.index()]) {
        return Err(WorkloadError::BadDescriptor {
            name: entry.name,
            msg: format!("fingerprint misses category `{}`", missing.name()),
        });
    }
    let descriptor = WorkloadDescriptor {
        name: entry.name,
        source_path: entry.source,
        source,
        fingerprint,
        tolerance: entry.tolerance,
    };
    descriptor.validate()?;
    Ok(descriptor)
}

/// The workloads embedded in the crate.
pub fn bundled() -> Vec<WorkloadDescriptor> {
    let manifest: ManifestJson =
        serde_json::from_str(BUNDLED_MANIFEST).expect("embedded manifest must parse");
    manifest
        .workloads
        .into_iter()
        .map(|entry| {
            let source = match entry.source.as_str() {
                "basis_projection.s" => BASIS_PROJECTION_SOURCE.to_string(),
                "block_decode.s" => BLOCK_DECODE_SOURCE.to_string(),
                other => panic!("embedded manifest names unknown source {other}"),
            };
            descriptor_from_entry(entry, source).expect("embedded descriptor must validate")
        })
        .collect()
}

/// Loads a manifest from disk; source paths resolve relative to the manifest
/// file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<WorkloadDescriptor>, WorkloadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let manifest: ManifestJson =
        serde_json::from_str(&text).map_err(|e| WorkloadError::Manifest(e.to_string()))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    manifest
        .workloads
        .into_iter()
        .map(|entry| {
            let source = std::fs::read_to_string(dir.join(&entry.source))?;
            descriptor_from_entry(entry, source)
        })
        .collect()
}

/// Fraction of executed instructions per category. All zeros when nothing
/// ran.
pub fn measured_fingerprint(counts: &CategoryCounts) -> [f64; Category::COUNT] {
    let total = counts.total();
    if total == 0 {
        return [0.0; Category::COUNT];
    }
    Category::ALL.map(|c| counts.get(c) as f64 / total as f64)
}

/// One category's verdict from [`verify_fingerprint`].
#[derive(Debug, Clone, Copy)]
pub struct FingerprintCheck {
    pub category: Category,
    pub expected: f64,
    pub actual: f64,
    pub pass: bool,
}

/// Compares a run's category mix against the descriptor, per category.
pub fn verify_fingerprint(
    descriptor: &WorkloadDescriptor,
    counts: &CategoryCounts,
) -> Vec<FingerprintCheck> {
    let actual = measured_fingerprint(counts);
    Category::ALL
        .into_iter()
        .map(|cat| {
            let expected = descriptor.fingerprint[cat.index()];
            let actual = actual[cat.index()];
            FingerprintCheck {
                category: cat,
                expected,
                actual,
                pass: (actual - expected).abs() <= descriptor.tolerance,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{run, HardwareConfig, DEFAULT_BUDGET};

    fn run_hard(descriptor: &WorkloadDescriptor) -> crate::simulator::MachineState {
        let pair = descriptor.pair().unwrap();
        run(&pair.hard, &HardwareConfig::with_fpu(), DEFAULT_BUDGET).unwrap()
    }

    fn checksum_word(state: &crate::simulator::MachineState) -> u32 {
        let d = state.data_segment();
        u32::from_be_bytes([d[0], d[1], d[2], d[3]])
    }

    #[test]
    #[ignore = "prints the measured manifest entries for workloads/manifest.json"]
    fn print_measured_manifest() {
        for descriptor in bundled() {
            let state = run_hard(&descriptor);
            let mix = measured_fingerprint(&state.counts);
            let mut map = serde_json::Map::new();
            for cat in Category::ALL {
                map.insert(cat.name().into(), serde_json::json!(mix[cat.index()]));
            }
            println!(
                "{}: executed {} checksum 0x{:08x}\n{}",
                descriptor.name,
                state.executed,
                checksum_word(&state),
                serde_json::to_string_pretty(&map).unwrap()
            );
        }
    }

    #[test]
    fn bundled_manifest_parses_and_validates() {
        let workloads = bundled();
        assert_eq!(workloads.len(), 2);
        assert_eq!(workloads[0].name, "basis_projection");
        assert_eq!(workloads[1].name, "block_decode");
        for w in &workloads {
            w.validate().unwrap();
        }
    }

    #[test]
    fn workloads_halt_with_nonzero_checksums() {
        for descriptor in bundled() {
            let state = run_hard(&descriptor);
            assert!(state.halted, "{} did not halt", descriptor.name);
            assert_ne!(checksum_word(&state), 0, "{} checksum", descriptor.name);
        }
    }

    #[test]
    fn frozen_workload_checksums() {
        // Regression anchors: both kernels are deterministic, so their
        // checksums never move unless semantics change somewhere.
        let by_name: HashMap<String, u32> = bundled()
            .iter()
            .map(|d| (d.name.clone(), checksum_word(&run_hard(d))))
            .collect();
        assert_eq!(by_name["basis_projection"], 0x6607_B053);
        assert_eq!(by_name["block_decode"], 0x9C1A_BE5C);
    }

    #[test]
    fn fingerprints_match_fresh_runs() {
        for descriptor in bundled() {
            let state = run_hard(&descriptor);
            let checks = verify_fingerprint(&descriptor, &state.counts);
            for check in checks {
                assert!(
                    check.pass,
                    "{} {}: expected {} got {}",
                    descriptor.name,
                    check.category.name(),
                    check.expected,
                    check.actual
                );
            }
        }
    }

    #[test]
    fn block_decode_is_fp_free() {
        let descriptor = bundled().remove(1);
        let state = run_hard(&descriptor);
        for cat in Category::ALL.into_iter().filter(|c| c.is_fpu()) {
            assert_eq!(state.counts.get(cat), 0, "{}", cat.name());
        }
        // And the lowered image equals the hard one in its own text: the
        // only difference is the appended, never-executed library.
        let pair = descriptor.pair().unwrap();
        assert_eq!(
            pair.hard.text,
            pair.soft.text[..pair.hard.text.len()],
            "lowering must not rewrite an FP-free program"
        );
    }

    #[test]
    fn projection_mix_is_fpu_arithmetic_dominant() {
        let descriptor = bundled().remove(0);
        let state = run_hard(&descriptor);
        let arith = state.counts.get(Category::FpuArithmetic);
        let div = state.counts.get(Category::FpuDivide);
        let sqrt = state.counts.get(Category::FpuSqrt);
        assert!(arith > 100 * div, "arith {arith} vs div {div}");
        assert!(arith > 100 * sqrt, "arith {arith} vs sqrt {sqrt}");
        // One divide and one square root per projection iteration.
        assert_eq!(div, 8);
        assert_eq!(sqrt, 8);
    }

    #[test]
    fn hard_and_soft_data_segments_agree() {
        for descriptor in bundled() {
            let pair = descriptor.pair().unwrap();
            let hard = run(&pair.hard, &HardwareConfig::with_fpu(), DEFAULT_BUDGET).unwrap();
            let soft = run(&pair.soft, &HardwareConfig::without_fpu(), DEFAULT_BUDGET).unwrap();
            let n = pair.hard.data.len();
            assert_eq!(
                hard.data_segment(),
                &soft.data_segment()[..n],
                "{}: hard and soft data differ",
                descriptor.name
            );
        }
    }

    #[test]
    fn bad_fingerprint_sum_is_rejected() {
        let mut descriptor = bundled().remove(1);
        descriptor.fingerprint = [0.5 / 9.0; Category::COUNT];
        assert!(matches!(
            descriptor.validate(),
            Err(WorkloadError::BadDescriptor { .. })
        ));
    }
}
