//! Cost-profile calibration by reference/test kernel differencing.
//!
//! For every category we generate a *pair* of kernels that share the exact
//! same loop scaffolding; the test kernel additionally executes `body_repeat`
//! instructions of the calibrated category per iteration. Subtracting the
//! measured energy/time of the reference kernel from the test kernel and
//! dividing by the isolated instruction count yields the per-instruction
//! cost:
//!
//! ```text
//! e_c = (E_test - E_ref) / n_test        n_test = loop_count * body_repeat
//! t_c = (T_test - T_ref) / n_test
//! ```
//!
//! Measurements come from a pluggable [`MeasurementSource`]: either the
//! [`SyntheticPlatform`] (the simulator plus a ground-truth profile and an
//! optional deterministic noise model) or a [`CsvImport`] of externally
//! collected samples keyed by image content hash.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asm::{assemble_str, AsmError, AsmOptions, BinaryImage};
use crate::costmodel::{estimate, CategoryCost, CostProfile, Override};
use crate::isa::{Category, Mnemonic};
use crate::simulator::{run, HardwareConfig, SimError, DEFAULT_BUDGET};

/// Loop iterations of the standard kernel set.
pub const STANDARD_LOOP_COUNT: u32 = 1_000_000;

/// Tested instructions per loop iteration of the standard kernel set. Large
/// enough to dilute the two loop-control instructions, small enough to keep
/// the kernel image compact.
pub const STANDARD_BODY_REPEAT: u32 = 50;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("bad kernel spec: {0}")]
    BadSpec(String),
    #[error("no calibration body template for {0}")]
    UnsupportedCategory(Mnemonic),
    #[error("kernel assembly failed: {0}")]
    Asm(#[from] AsmError),
    #[error("kernel run failed: {0}")]
    Sim(#[from] SimError),
    /// The test kernel measured below the reference kernel. The raw
    /// (negative) per-instruction values are carried along so callers can
    /// report them instead of silently clamping.
    #[error(
        "negative calibration delta for {}: e_c = {e_nj} nJ, t_c = {t_ns} ns",
        .category.name()
    )]
    NegativeDelta {
        category: Category,
        e_nj: f64,
        t_ns: f64,
    },
    #[error("kernel specs do not cover: {}", join_names(.0))]
    IncompleteCoverage(Vec<Category>),
    #[error("no measurement for kernel {0}")]
    MissingMeasurement(String),
    #[error("bad measurement: {0}")]
    BadMeasurement(String),
    #[error("measurement csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_names(cats: &[Category]) -> String {
    let names: Vec<&str> = cats.iter().map(|c| c.name()).collect();
    names.join(", ")
}

/// One energy/time sample for one kernel execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSample {
    /// Joules for the whole run.
    pub energy_j: f64,
    /// Seconds for the whole run.
    pub time_s: f64,
}

impl MeasurementSample {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        for (label, v) in [("energy_J", self.energy_j), ("time_s", self.time_s)] {
            if !v.is_finite() || v < 0.0 {
                return Err(CalibrationError::BadMeasurement(format!(
                    "{label} = {v} (must be finite and non-negative)"
                )));
            }
        }
        Ok(())
    }
}

/// Anything that can attach an energy/time sample to a kernel image.
///
/// Implementations must tolerate concurrent `measure` calls; batch
/// calibration measures kernel pairs in parallel.
pub trait MeasurementSource: Sync {
    fn measure(&self, img: &BinaryImage) -> Result<MeasurementSample, CalibrationError>;
}

// ---------------------------------------------------------------------------
// Kernel generation
// ---------------------------------------------------------------------------

/// Recipe for one reference/test kernel pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelPairSpec {
    pub category: Category,
    /// Mnemonic repeated in the test kernel body. Must belong to `category`.
    pub body_instruction: Mnemonic,
    /// Tested instructions per loop iteration.
    pub body_repeat: u32,
    /// Loop iterations.
    pub loop_count: u32,
}

impl KernelPairSpec {
    /// The standard pair for a category: default mnemonic, one million
    /// iterations, fifty instructions per iteration.
    pub fn standard(category: Category) -> KernelPairSpec {
        KernelPairSpec {
            category,
            body_instruction: default_body_mnemonic(category),
            body_repeat: STANDARD_BODY_REPEAT,
            loop_count: STANDARD_LOOP_COUNT,
        }
    }

    pub fn with_loop_count(mut self, loop_count: u32) -> KernelPairSpec {
        self.loop_count = loop_count;
        self
    }

    /// Isolated instruction count: the test kernel executes exactly this many
    /// more instructions of the tested category than the reference kernel.
    pub fn n_test(&self) -> u64 {
        self.loop_count as u64 * self.body_repeat as u64
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        if self.body_repeat == 0 {
            return Err(CalibrationError::BadSpec("body_repeat must be >= 1".into()));
        }
        if self.loop_count == 0 {
            return Err(CalibrationError::BadSpec("loop_count must be >= 1".into()));
        }
        if self.body_instruction.category() != self.category {
            return Err(CalibrationError::BadSpec(format!(
                "{} is counted as {}, not {}",
                self.body_instruction,
                self.body_instruction.category().name(),
                self.category.name()
            )));
        }
        Ok(())
    }
}

/// The standard nine-pair calibration set, one spec per category.
pub fn standard_specs() -> Vec<KernelPairSpec> {
    Category::ALL.into_iter().map(KernelPairSpec::standard).collect()
}

fn default_body_mnemonic(cat: Category) -> Mnemonic {
    match cat {
        Category::IntegerArithmetic => Mnemonic::Add,
        Category::Jump => Mnemonic::Beq,
        Category::MemoryLoad => Mnemonic::Ld,
        Category::MemoryStore => Mnemonic::St,
        Category::Nop => Mnemonic::Nop,
        Category::Other => Mnemonic::Mov,
        Category::FpuArithmetic => Mnemonic::FaddD,
        Category::FpuDivide => Mnemonic::FdivD,
        Category::FpuSqrt => Mnemonic::FsqrtD,
    }
}

/// One body line for the given mnemonic, or `None` when the mnemonic has no
/// sensible in-loop template (`JR`, `HALT`). `i` is the position inside the
/// body; memory templates use it to stride over the data buffer and branch
/// templates always target the next instruction so a chain falls through.
fn body_line(m: Mnemonic, i: u32) -> Option<String> {
    use Mnemonic::*;
    Some(match m {
        Add | Sub | And | Or | Xor | Slt | Sltu | Mul | Mulhu | Div | Divu => {
            format!("{m} r3, r4, r5")
        }
        Sll | Srl | Sra => format!("{m} r3, r4, r6"),
        Addi | Andi | Ori | Xori => format!("{m} r3, r4, 1"),
        Slli | Srli | Srai => format!("{m} r3, r4, 3"),
        Nop => "NOP".into(),
        Mov => "MOV r3, r4".into(),
        Lui => "LUI r3, 5".into(),
        Beq => "BEQ r0, r0, 1".into(),
        Bne => "BNE r4, r0, 1".into(),
        Blt => "BLT r0, r4, 1".into(),
        Bge => "BGE r4, r0, 1".into(),
        Bltu => "BLTU r0, r4, 1".into(),
        Bgeu => "BGEU r4, r0, 1".into(),
        J => "J 1".into(),
        Call => "CALL 1".into(),
        Ld => format!("LD r3, [r20 + {}]", (i % 50) * 4),
        Ldb => format!("LDB r3, [r20 + {}]", i % 200),
        St => format!("ST [r20 + {}], r4", (i % 50) * 4),
        Stb => format!("STB [r20 + {}], r4", i % 200),
        Fld => format!("FLD f3, [r20 + {}]", (i % 25) * 8),
        Flw => format!("FLW f3, [r20 + {}]", (i % 50) * 4),
        Fst => format!("FST [r20 + {}], f1", (i % 25) * 8),
        Fsw => format!("FSW [r20 + {}], f1", (i % 50) * 4),
        FaddD => "FADD.D f3, f1, f2".into(),
        FsubD => "FSUB.D f3, f1, f2".into(),
        FmulD => "FMUL.D f3, f1, f2".into(),
        FaddS => "FADD.S f3, f4, f5".into(),
        FsubS => "FSUB.S f3, f4, f5".into(),
        FmulS => "FMUL.S f3, f4, f5".into(),
        FdivD => "FDIV.D f3, f1, f2".into(),
        FdivS => "FDIV.S f3, f4, f5".into(),
        FsqrtD => "FSQRT.D f3, f1".into(),
        FsqrtS => "FSQRT.S f3, f4".into(),
        Halt | Jr => return None,
    })
}

/// Shared kernel scaffold. Both kernels of a pair use this with the same
/// `loop_count`; only `body` differs, so the executed-count difference is
/// exactly the body. The prologue pre-loads every operand any body template
/// may name: integer values, a 50-word data buffer, double and single FP
/// constants.
fn scaffold(comment: &str, loop_count: u32, body: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "; {comment}");
    s.push_str(".text 0x1000\n.entry main\nmain:\n");
    s.push_str("    LA   r20, buf\n");
    s.push_str("    LA   r7, fpvals\n");
    s.push_str("    FLD  f1, [r7 + 0]\n");
    s.push_str("    FLD  f2, [r7 + 8]\n");
    s.push_str("    FLW  f4, [r7 + 16]\n");
    s.push_str("    FLW  f5, [r7 + 20]\n");
    s.push_str("    LI   r4, 1234\n");
    s.push_str("    LI   r5, 7\n");
    s.push_str("    LI   r6, 3\n");
    let _ = writeln!(s, "    LI   r1, {loop_count}");
    s.push_str("loop:\n");
    for line in body {
        let _ = writeln!(s, "    {line}");
    }
    s.push_str("    ADDI r1, r1, -1\n");
    s.push_str("    BNE  r1, r0, loop\n");
    s.push_str("    HALT\n");
    s.push_str(".data\n");
    s.push_str("buf:\n");
    let words: Vec<String> = (0..50).map(|w| w.to_string()).collect();
    let _ = writeln!(s, "    .word {}", words.join(", "));
    s.push_str("fpvals:\n");
    s.push_str("    .double 1.25, 0.75\n");
    s.push_str("    .word 0x3FA00000, 0x3F400000\n");
    s
}

/// A generated reference/test kernel pair, as assembly source.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub spec: KernelPairSpec,
    pub reference: String,
    pub test: String,
}

impl KernelPair {
    pub fn assemble(&self) -> Result<(BinaryImage, BinaryImage), AsmError> {
        let opts = AsmOptions::default();
        let reference = assemble_str(&self.reference, &opts)?;
        let test = assemble_str(&self.test, &opts)?;
        Ok((reference, test))
    }
}

/// Generates the kernel pair for a spec. Both kernels share an identical
/// prologue, loop control and data section; the test kernel's loop body holds
/// exactly `body_repeat` instances of the tested instruction.
pub fn gen_kernel_pair(spec: &KernelPairSpec) -> Result<KernelPair, CalibrationError> {
    spec.validate()?;
    let mut body = Vec::with_capacity(spec.body_repeat as usize);
    for i in 0..spec.body_repeat {
        body.push(
            body_line(spec.body_instruction, i)
                .ok_or(CalibrationError::UnsupportedCategory(spec.body_instruction))?,
        );
    }
    let what = format!(
        "{} calibration kernel ({} x {} per iteration)",
        spec.category.name(),
        spec.loop_count,
        spec.body_repeat
    );
    Ok(KernelPair {
        spec: *spec,
        reference: scaffold(&format!("{what}, reference"), spec.loop_count, &[]),
        test: scaffold(&format!("{what}, test"), spec.loop_count, &body),
    })
}

// ---------------------------------------------------------------------------
// Measurement sources
// ---------------------------------------------------------------------------

/// Simulator-backed measurement source: runs the kernel, prices the counts
/// with a ground-truth profile, and optionally perturbs the result with
/// deterministic per-instruction jitter.
///
/// With `sigma == 0` a measurement equals `estimate(counts, truth)` exactly;
/// this is the oracle the calibration identity tests rely on. With
/// `sigma > 0` every executed instruction contributes its category cost
/// scaled by an independent factor drawn uniformly from `[1-sigma, 1+sigma)`.
/// The generator is seeded from `(seed, image content hash)`, so a given
/// kernel always measures the same and distinct kernels get independent
/// noise.
pub struct SyntheticPlatform {
    truth: CostProfile,
    config: HardwareConfig,
    sigma: f64,
    seed: u64,
}

impl SyntheticPlatform {
    /// Noise-free platform (the measurement oracle).
    pub fn exact(truth: CostProfile) -> SyntheticPlatform {
        SyntheticPlatform::noisy(truth, 0.0, 0).expect("sigma 0 is valid")
    }

    pub fn noisy(
        truth: CostProfile,
        sigma: f64,
        seed: u64,
    ) -> Result<SyntheticPlatform, CalibrationError> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(CalibrationError::BadMeasurement(format!(
                "noise sigma {sigma} outside [0, 1)"
            )));
        }
        Ok(SyntheticPlatform {
            truth,
            config: HardwareConfig::with_fpu(),
            sigma,
            seed,
        })
    }

    /// Replaces the simulated hardware configuration (default: FPU present).
    pub fn with_config(mut self, config: HardwareConfig) -> SyntheticPlatform {
        self.config = config;
        self
    }

    pub fn truth(&self) -> &CostProfile {
        &self.truth
    }

    fn rng_for(&self, content_hash: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(b"synthetic-platform-v1");
        h.update(self.seed.to_le_bytes());
        h.update(content_hash.as_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }
}

impl MeasurementSource for SyntheticPlatform {
    fn measure(&self, img: &BinaryImage) -> Result<MeasurementSample, CalibrationError> {
        let state = run(img, &self.config, DEFAULT_BUDGET)?;
        if self.sigma == 0.0 {
            let est = estimate(&state.counts, &self.truth);
            return Ok(MeasurementSample {
                energy_j: est.energy_j(),
                time_s: est.time_s(),
            });
        }
        // Jitter factors are drawn in a fixed order (per category: all energy
        // draws, then all time draws) so samples are reproducible.
        let mut rng = self.rng_for(&img.content_hash());
        let mut jitter = move || 1.0 + self.sigma * (2.0 * rng.gen::<f64>() - 1.0);
        let mut e_nj = 0.0;
        let mut t_ns = 0.0;
        for cat in Category::ALL {
            let n = state.counts.get(cat);
            let cost = self.truth.get(cat);
            let mut je = 0.0;
            for _ in 0..n {
                je += jitter();
            }
            let mut jt = 0.0;
            for _ in 0..n {
                jt += jitter();
            }
            e_nj += cost.e_nj * je;
            t_ns += cost.t_ns * jt;
        }
        Ok(MeasurementSample {
            energy_j: e_nj * 1e-9,
            time_s: t_ns * 1e-9,
        })
    }
}

/// Measurement table imported from CSV (`kernel_hash, energy_J, time_s`).
/// Rows bind to exact kernel images through the content hash, so stale
/// measurements of a regenerated kernel are caught as missing entries.
pub struct CsvImport {
    samples: HashMap<String, MeasurementSample>,
}

impl CsvImport {
    pub fn from_reader(reader: impl Read) -> Result<CsvImport, CalibrationError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| CalibrationError::Csv(e.to_string()))?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| CalibrationError::Csv(format!("missing column {name}")))
        };
        let hash_col = col("kernel_hash")?;
        let energy_col = col("energy_J")?;
        let time_col = col("time_s")?;
        let mut samples = HashMap::new();
        for record in rdr.records() {
            let record = record.map_err(|e| CalibrationError::Csv(e.to_string()))?;
            let field = |idx: usize| record.get(idx).unwrap_or("").trim().to_string();
            let parse = |idx: usize| -> Result<f64, CalibrationError> {
                field(idx)
                    .parse::<f64>()
                    .map_err(|_| CalibrationError::Csv(format!("bad number `{}`", field(idx))))
            };
            let sample = MeasurementSample {
                energy_j: parse(energy_col)?,
                time_s: parse(time_col)?,
            };
            sample.validate()?;
            let hash = field(hash_col);
            if samples.insert(hash.clone(), sample).is_some() {
                return Err(CalibrationError::Csv(format!("duplicate kernel_hash {hash}")));
            }
        }
        Ok(CsvImport { samples })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<CsvImport, CalibrationError> {
        CsvImport::from_reader(std::fs::File::open(path)?)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

impl MeasurementSource for CsvImport {
    fn measure(&self, img: &BinaryImage) -> Result<MeasurementSample, CalibrationError> {
        let hash = img.content_hash();
        self.samples
            .get(&hash)
            .copied()
            .ok_or(CalibrationError::MissingMeasurement(hash))
    }
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

/// Derives one category's per-instruction cost from its kernel pair.
///
/// A negative energy or time delta is returned as
/// [`CalibrationError::NegativeDelta`] with the raw values attached;
/// [`calibrate_all`] converts that into a `pending`-flagged profile entry.
pub fn calibrate_category(
    spec: &KernelPairSpec,
    source: &dyn MeasurementSource,
) -> Result<CategoryCost, CalibrationError> {
    let pair = gen_kernel_pair(spec)?;
    let (ref_img, test_img) = pair.assemble()?;
    let reference = source.measure(&ref_img)?;
    let test = source.measure(&test_img)?;
    reference.validate()?;
    test.validate()?;
    let n = spec.n_test() as f64;
    let e_nj = (test.energy_j - reference.energy_j) / n * 1e9;
    let t_ns = (test.time_s - reference.time_s) / n * 1e9;
    if e_nj < 0.0 || t_ns < 0.0 {
        return Err(CalibrationError::NegativeDelta {
            category: spec.category,
            e_nj,
            t_ns,
        });
    }
    Ok(CategoryCost::new(t_ns, e_nj))
}

/// Why a calibrated entry was flagged `pending`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlagReason {
    /// Test kernel measured below the reference kernel.
    NegativeDelta { e_nj: f64, t_ns: f64 },
    /// Per-instruction time under the plausibility floor.
    TimeBelowFloor { t_ns: f64, floor_ns: f64 },
    /// Implied power (e_c / t_c) outside the plausible band.
    PowerOutOfBand { watts: f64, lo: f64, hi: f64 },
}

impl fmt::Display for FlagReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlagReason::NegativeDelta { e_nj, t_ns } => {
                write!(f, "negative delta (e_c = {e_nj:.3} nJ, t_c = {t_ns:.3} ns)")
            }
            FlagReason::TimeBelowFloor { t_ns, floor_ns } => {
                write!(f, "t_c = {t_ns:.3} ns below the {floor_ns} ns floor")
            }
            FlagReason::PowerOutOfBand { watts, lo, hi } => {
                write!(f, "implied power {watts:.3} W outside [{lo}, {hi}] W")
            }
        }
    }
}

/// One flagged category with its reason.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFlag {
    pub category: Category,
    pub reason: FlagReason,
}

/// Knobs for [`calibrate_all`]: metadata stamped on the produced profile and
/// the consistency-check thresholds.
#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    pub platform: String,
    pub hardware_config: String,
    /// Minimum plausible per-instruction time; anything below is flagged.
    pub time_floor_ns: f64,
    /// Plausible implied-power band in watts; e_c / t_c outside it is flagged.
    pub power_band_w: (f64, f64),
}

impl Default for CalibrationOptions {
    fn default() -> CalibrationOptions {
        CalibrationOptions {
            platform: "calibrated".into(),
            hardware_config: "unspecified".into(),
            time_floor_ns: 1.0,
            power_band_w: (0.01, 100.0),
        }
    }
}

/// A calibrated profile plus whatever the consistency checks flagged.
#[derive(Debug)]
pub struct CalibrationOutcome {
    pub profile: CostProfile,
    pub flags: Vec<CalibrationFlag>,
}

/// Calibrates every category and assembles the profile.
///
/// `specs` must cover all nine categories (each exactly once). Kernel pairs
/// are measured in parallel; the outcome is assembled in category order, so
/// results are deterministic regardless of scheduling. Categories that fail a
/// consistency check keep their raw value but are flagged
/// `overridden: pending` for manual review.
pub fn calibrate_all(
    specs: &[KernelPairSpec],
    source: &dyn MeasurementSource,
    options: &CalibrationOptions,
) -> Result<CalibrationOutcome, CalibrationError> {
    let mut seen = [false; Category::COUNT];
    for spec in specs {
        if seen[spec.category.index()] {
            return Err(CalibrationError::BadSpec(format!(
                "duplicate spec for {}",
                spec.category.name()
            )));
        }
        seen[spec.category.index()] = true;
    }
    let missing: Vec<Category> = Category::ALL
        .into_iter()
        .filter(|c| !seen[c.index()])
        .collect();
    if !missing.is_empty() {
        return Err(CalibrationError::IncompleteCoverage(missing));
    }

    let mut results: Vec<(Category, Result<CategoryCost, CalibrationError>)> = specs
        .par_iter()
        .map(|spec| (spec.category, calibrate_category(spec, source)))
        .collect();
    results.sort_by_key(|(cat, _)| cat.index());

    let mut profile = CostProfile::builtin();
    profile.platform = options.platform.clone();
    profile.hardware_config = options.hardware_config.clone();
    let mut flags = Vec::new();
    for (category, result) in results {
        let mut cost = match result {
            Ok(cost) => cost,
            Err(CalibrationError::NegativeDelta { e_nj, t_ns, .. }) => {
                flags.push(CalibrationFlag {
                    category,
                    reason: FlagReason::NegativeDelta { e_nj, t_ns },
                });
                CategoryCost {
                    t_ns,
                    e_nj,
                    overridden: Override::Pending,
                }
            }
            Err(other) => return Err(other),
        };
        if cost.overridden != Override::Pending {
            if cost.t_ns < options.time_floor_ns {
                flags.push(CalibrationFlag {
                    category,
                    reason: FlagReason::TimeBelowFloor {
                        t_ns: cost.t_ns,
                        floor_ns: options.time_floor_ns,
                    },
                });
                cost.overridden = Override::Pending;
            } else {
                let watts = cost.e_nj / cost.t_ns;
                let (lo, hi) = options.power_band_w;
                if !(lo..=hi).contains(&watts) {
                    flags.push(CalibrationFlag {
                        category,
                        reason: FlagReason::PowerOutOfBand { watts, lo, hi },
                    });
                    cost.overridden = Override::Pending;
                }
            }
        }
        profile.set(category, cost);
    }
    Ok(CalibrationOutcome { profile, flags })
}

// ---------------------------------------------------------------------------
// Mixed evaluation kernels
// ---------------------------------------------------------------------------

/// Generates a runnable kernel with a pseudo-random category mix, about
/// `target_len` executed instructions long. Deterministic in `seed`. Used to
/// exercise a calibrated profile on workloads it was not fitted to.
pub fn gen_mixed_kernel(seed: u64, target_len: u64) -> String {
    let mut h = Sha256::new();
    h.update(b"mixed-kernel-v1");
    h.update(seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(h.finalize().into());

    // Skewed random category weights so different seeds produce anything
    // from integer-only-ish to FP-heavy mixes.
    let mut weights = [0.0f64; Category::COUNT];
    for w in &mut weights {
        let u: f64 = rng.gen();
        *w = u * u + 1e-3;
    }
    let total: f64 = weights.iter().sum();

    let body_len = rng.gen_range(30..=80u32);
    let loop_count = (target_len / (body_len as u64 + 2)).max(1) as u32;
    let mut body = Vec::with_capacity(body_len as usize);
    for i in 0..body_len {
        let mut pick = rng.gen::<f64>() * total;
        let mut cat = Category::IntegerArithmetic;
        for (idx, w) in weights.iter().enumerate() {
            pick -= w;
            if pick <= 0.0 {
                cat = Category::ALL[idx];
                break;
            }
        }
        let pool = body_pool(cat);
        let m = pool[rng.gen_range(0..pool.len())];
        body.push(body_line(m, i).expect("pool mnemonics all have templates"));
    }
    scaffold(
        &format!("mixed evaluation kernel, seed {seed}"),
        loop_count,
        &body,
    )
}

/// Mnemonics eligible for generated kernel bodies, per category.
fn body_pool(cat: Category) -> &'static [Mnemonic] {
    use Mnemonic::*;
    match cat {
        Category::IntegerArithmetic => &[
            Add, Sub, And, Or, Xor, Sll, Srl, Sra, Slt, Sltu, Mul, Mulhu, Div, Divu, Addi, Andi,
            Ori, Xori, Slli, Srli, Srai,
        ],
        Category::Jump => &[Beq, Bne, Blt, Bge, Bltu, Bgeu, J],
        Category::MemoryLoad => &[Ld, Ldb, Fld, Flw],
        Category::MemoryStore => &[St, Stb, Fst, Fsw],
        Category::Nop => &[Nop],
        Category::Other => &[Mov, Lui],
        Category::FpuArithmetic => &[FaddD, FsubD, FmulD, FaddS, FsubS, FmulS],
        Category::FpuDivide => &[FdivD, FdivS],
        Category::FpuSqrt => &[FsqrtD, FsqrtS],
    }
}
