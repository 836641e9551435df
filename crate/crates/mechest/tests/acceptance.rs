//! The eight acceptance gates, one test per criterion. Each prints an
//! `ACCEPTANCE <n> <name>: PASS` line once its checks hold (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::sync::LazyLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mechest::asm::{assemble_str, AsmOptions, BinaryImage};
use mechest::calibration::{
    calibrate_all, gen_mixed_kernel, standard_specs, CalibrationOptions, KernelPairSpec,
    MeasurementSource, SyntheticPlatform,
};
use mechest::costmodel::{estimate, CostProfile};
use mechest::evaluation::{compare_configs, error_metrics};
use mechest::isa::{decode, encode, Category, EncodingForm, Instruction, Mnemonic};
use mechest::simulator::{run, CategoryCounts, HardwareConfig, MachineState, DEFAULT_BUDGET};
use mechest::workloads;

fn pass(n: u32, what: &str) {
    println!("ACCEPTANCE {n} {what}: PASS");
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Zero-noise calibration over the full standard spec set, shared between
/// criteria 1 and 2 and timed for criterion 1's runtime bound.
struct Calibrated {
    profile: CostProfile,
    elapsed: Duration,
}

static CALIBRATED: LazyLock<Calibrated> = LazyLock::new(|| {
    let started = Instant::now();
    let platform = SyntheticPlatform::exact(CostProfile::builtin());
    let outcome = calibrate_all(
        &standard_specs(),
        &platform,
        &CalibrationOptions::default(),
    )
    .expect("standard calibration succeeds");
    assert!(outcome.flags.is_empty(), "flags: {:?}", outcome.flags);
    Calibrated {
        profile: outcome.profile,
        elapsed: started.elapsed(),
    }
});

#[test]
fn criterion_1_calibration_identity() {
    let truth = CostProfile::builtin();
    for cat in Category::ALL {
        let got = CALIBRATED.profile.get(cat);
        let want = truth.get(cat);
        assert!(
            rel(got.e_nj, want.e_nj) < 1e-9,
            "{}: e_c {} vs {}",
            cat.name(),
            got.e_nj,
            want.e_nj
        );
        assert!(
            rel(got.t_ns, want.t_ns) < 1e-9,
            "{}: t_c {} vs {}",
            cat.name(),
            got.t_ns,
            want.t_ns
        );
    }
    assert!(
        CALIBRATED.elapsed < Duration::from_secs(120),
        "calibration took {:?}",
        CALIBRATED.elapsed
    );
    pass(1, "calibration identity");
}

#[test]
fn criterion_2_estimation_consistency() {
    let platform = SyntheticPlatform::exact(CostProfile::builtin());
    for descriptor in workloads::bundled() {
        let pair = descriptor.pair().unwrap();
        let state = run(&pair.hard, &HardwareConfig::with_fpu(), DEFAULT_BUDGET).unwrap();
        let est = estimate(&state.counts, &CALIBRATED.profile);
        let meas = platform.measure(&pair.hard).unwrap();
        assert!(
            rel(est.energy_j(), meas.energy_j) < 1e-9,
            "{}: energy {} vs {}",
            descriptor.name,
            est.energy_j(),
            meas.energy_j
        );
        assert!(
            rel(est.time_s(), meas.time_s) < 1e-9,
            "{}: time {} vs {}",
            descriptor.name,
            est.time_s(),
            meas.time_s
        );
    }
    pass(2, "estimation consistency on bundled workloads");
}

#[test]
fn criterion_3_error_regime_under_noise() {
    // 20 mixed kernels spanning roughly 2k..100k executed instructions.
    let suite: Vec<BinaryImage> = (0..20)
        .map(|k| {
            let source = gen_mixed_kernel(100 + k, 2_000 + 4_900 * k);
            assemble_str(&source, &AsmOptions::default()).unwrap()
        })
        .collect();
    let specs: Vec<KernelPairSpec> = Category::ALL
        .iter()
        .map(|&c| KernelPairSpec::standard(c).with_loop_count(10_000))
        .collect();

    let mut estimates = Vec::new();
    let mut measurements = Vec::new();
    for seed in 1..=5 {
        let platform = SyntheticPlatform::noisy(CostProfile::builtin(), 0.10, seed).unwrap();
        let outcome = calibrate_all(&specs, &platform, &CalibrationOptions::default()).unwrap();
        assert!(outcome.flags.is_empty(), "seed {seed}: {:?}", outcome.flags);
        for img in &suite {
            let state = run(img, &HardwareConfig::with_fpu(), DEFAULT_BUDGET).unwrap();
            estimates.push(estimate(&state.counts, &outcome.profile));
            measurements.push(platform.measure(img).unwrap());
        }
    }

    let report = error_metrics(&estimates, &measurements).unwrap();
    for (metric, stats) in [("energy", &report.energy), ("time", &report.time)] {
        assert!(
            stats.mean_abs > 0.0,
            "{metric}: zero mean error can't happen under noise"
        );
        assert!(
            stats.mean_abs < 0.03,
            "{metric}: mean {:.4}% over 3%",
            stats.mean_abs * 100.0
        );
        assert!(
            stats.max_abs < 0.08,
            "{metric}: max {:.4}% over 8%",
            stats.max_abs * 100.0
        );
    }
    pass(3, "mean/max error bounds at sigma 0.10, seeds 1-5");
}

#[test]
fn criterion_4_count_conservation() {
    let mut images = Vec::new();
    for descriptor in workloads::bundled() {
        let pair = descriptor.pair().unwrap();
        images.push((pair.hard, HardwareConfig::with_fpu()));
        images.push((pair.soft, HardwareConfig::without_fpu()));
    }
    for seed in 0..5 {
        let source = gen_mixed_kernel(seed, 10_000);
        let img = assemble_str(&source, &AsmOptions::default()).unwrap();
        images.push((img, HardwareConfig::with_fpu()));
    }
    let halt_only = assemble_str(
        ".text 0x1000\n.entry main\nmain: HALT\n",
        &AsmOptions::default(),
    )
    .unwrap();
    images.push((halt_only, HardwareConfig::without_fpu()));

    for (img, config) in &images {
        let state = run(img, config, DEFAULT_BUDGET).unwrap();
        assert_eq!(state.counts.total(), state.executed);
    }
    pass(4, "sum of category counts equals executed, exactly");
}

// --- criterion 5 -----------------------------------------------------------

/// Bit patterns that exercise every IEEE-754 class.
const SPECIALS: &[u64] = &[
    0x0000000000000000, // +0
    0x8000000000000000, // -0
    0x0000000000000001, // smallest subnormal
    0x800FFFFFFFFFFFFF, // largest negative subnormal
    0x0010000000000000, // smallest normal
    0x3FF0000000000000, // 1.0
    0xBFF0000000000000,
    0x3FF0000000000001, // nextafter(1.0)
    0x4008000000000000, // 3.0
    0x3FD5555555555555, // ~1/3
    0x7FEFFFFFFFFFFFFF, // largest finite
    0x7FF0000000000000, // +inf
    0xFFF0000000000000, // -inf
    0x7FF8000000000000, // quiet NaN
    0x7FF0000000000001, // signaling NaN
    0x4340000000000001, // 2^53 + ulp
];

fn random_f64_bits(rng: &mut ChaCha8Rng) -> u64 {
    // Uniform over sign/exponent/fraction, not over values: covers
    // subnormals, infinities and NaNs at useful rates.
    let sign = rng.gen_range(0u64..2) << 63;
    let exp = rng.gen_range(0u64..2048) << 52;
    let frac = rng.gen::<u64>() & ((1u64 << 52) - 1);
    sign | exp | frac
}

/// `out = op(a, b)` with operands poked into memory before each run.
fn fp_probe(mnemonic: &str) -> (BinaryImage, BinaryImage) {
    let src = format!(
        "\
        .text 0x1000\n\
        .entry main\n\
        main: LA r1, vals\n\
              FLD f1, [r1]\n\
              FLD f2, [r1 + 8]\n\
              {mnemonic} f3, f1, f2\n\
              FST [r1 + 16], f3\n\
              HALT\n\
        .data 0x8000\n\
        vals: .double 0.0, 0.0, 0.0\n"
    );
    let sqrt_src = src.replace("f3, f1, f2", "f3, f1"); // FSQRT.D is unary
    let text = if mnemonic == "FSQRT.D" { &sqrt_src } else { &src };
    (
        assemble_str(text, &AsmOptions { soft_float: false }).unwrap(),
        assemble_str(text, &AsmOptions { soft_float: true }).unwrap(),
    )
}

fn probe_once(img: &BinaryImage, config: &HardwareConfig, a: u64, b: u64) -> u64 {
    let mut state = MachineState::load(img, config).unwrap();
    state.memory[0x8000..0x8008].copy_from_slice(&a.to_be_bytes());
    state.memory[0x8008..0x8010].copy_from_slice(&b.to_be_bytes());
    state.run(1 << 20).unwrap();
    u64::from_be_bytes(state.memory[0x8010..0x8018].try_into().unwrap())
}

#[test]
fn criterion_5_softfloat_bit_exactness() {
    let small = HardwareConfig {
        memory_size: 0x20000,
        ..HardwareConfig::with_fpu()
    };
    let small_nofpu = HardwareConfig {
        memory_size: 0x20000,
        ..HardwareConfig::without_fpu()
    };

    let ops: [(&str, fn(f64, f64) -> f64); 5] = [
        ("FADD.D", |a, b| a + b),
        ("FSUB.D", |a, b| a - b),
        ("FMUL.D", |a, b| a * b),
        ("FDIV.D", |a, b| a / b),
        ("FSQRT.D", |a, _| a.sqrt()),
    ];
    for (mnemonic, host) in ops {
        let (hard, soft) = fp_probe(mnemonic);
        let mut vectors: Vec<(u64, u64)> = Vec::new();
        for &a in SPECIALS {
            for &b in SPECIALS {
                vectors.push((a, b));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0005);
        while vectors.len() < 1_300 {
            vectors.push((random_f64_bits(&mut rng), random_f64_bits(&mut rng)));
        }
        assert!(vectors.len() >= 1_000);

        for &(a, b) in &vectors {
            let hard_bits = probe_once(&hard, &small, a, b);
            let soft_bits = probe_once(&soft, &small_nofpu, a, b);
            // The simulator canonicalizes NaNs; mirror that on the host side.
            let want = mechest::simulator::canonical_f64(host(
                f64::from_bits(a),
                f64::from_bits(b),
            ));
            assert_eq!(
                hard_bits, want,
                "{mnemonic} hardware vs host oracle on ({a:#x}, {b:#x})"
            );
            assert_eq!(
                soft_bits, hard_bits,
                "{mnemonic} soft vs hard on ({a:#x}, {b:#x})"
            );
        }
    }

    // Whole-workload check: lowered images must leave identical data behind.
    for descriptor in workloads::bundled() {
        let pair = descriptor.pair().unwrap();
        let hard = run(&pair.hard, &HardwareConfig::with_fpu(), DEFAULT_BUDGET).unwrap();
        let soft = run(&pair.soft, &HardwareConfig::without_fpu(), DEFAULT_BUDGET).unwrap();
        let n = pair.hard.data.len();
        assert_eq!(
            hard.data_segment(),
            &soft.data_segment()[..n],
            "{}",
            descriptor.name
        );
    }
    pass(5, "soft-float bit-exact over host-oracle vectors and workloads");
}

#[test]
fn criterion_6_fpu_comparison_direction() {
    let pairs: Vec<_> = workloads::bundled()
        .iter()
        .map(|d| d.pair().unwrap())
        .collect();
    let profile = CostProfile::builtin();
    let report = compare_configs(
        &pairs,
        &HardwareConfig::with_fpu(),
        &HardwareConfig::without_fpu(),
        &profile,
        &profile,
    )
    .unwrap();

    let fp = &report.rows[0]; // basis_projection
    let int = &report.rows[1]; // block_decode
    assert_eq!(fp.workload, "basis_projection");
    assert!(fp.delta_pct.energy < 0.0, "energy {}", fp.delta_pct.energy);
    assert!(fp.delta_pct.time < 0.0, "time {}", fp.delta_pct.time);
    assert!(fp.delta_pct.energy.abs() > int.delta_pct.energy.abs());
    assert!(fp.delta_pct.time.abs() > int.delta_pct.time.abs());
    assert!(rel(report.logical_elements_delta_pct, 109.0) < 1e-9);
    pass(6, "FPU strictly helps the FP workload, most of all workloads");
}

#[test]
fn criterion_7_unit_check() {
    let mut counts = CategoryCounts::new();
    counts.set(Category::IntegerArithmetic, 1000);
    counts.set(Category::MemoryLoad, 100);
    counts.set(Category::FpuDivide, 10);
    let est = estimate(&counts, &CostProfile::builtin());
    // 1000*15 + 100*229 + 10*431 and 1000*45 + 100*700 + 10*431; every term
    // and partial sum is integral, so the f64 result is exact.
    assert_eq!(est.energy_nj, 42_210.0);
    assert_eq!(est.time_ns, 119_310.0);
    pass(7, "hand-computed estimate totals match");
}

// --- criterion 8 -----------------------------------------------------------

fn reg(rng: &mut ChaCha8Rng) -> u8 {
    rng.gen_range(0u8..32)
}

fn s16(rng: &mut ChaCha8Rng) -> i32 {
    rng.gen_range(i16::MIN as i32..=i16::MAX as i32)
}

fn random_valid_instruction(rng: &mut ChaCha8Rng) -> Instruction {
    use Mnemonic as M;
    let m = *M::ALL.choose(rng);
    let instr = match m.form() {
        EncodingForm::RegReg | EncodingForm::FpOp => {
            Instruction::new(m, reg(rng), reg(rng), reg(rng), 0)
        }
        EncodingForm::RegImm => {
            let imm = match m {
                M::Slli | M::Srli | M::Srai => rng.gen_range(0..=31),
                _ => s16(rng),
            };
            Instruction::new(m, reg(rng), reg(rng), 0, imm)
        }
        EncodingForm::Mem => Instruction::new(m, reg(rng), reg(rng), 0, s16(rng)),
        EncodingForm::Branch => match m {
            M::J | M::Call => {
                Instruction::new(m, 0, 0, 0, rng.gen_range(-(1 << 25)..1 << 25))
            }
            _ => Instruction::new(m, 0, reg(rng), reg(rng), s16(rng)),
        },
        EncodingForm::Sys => Instruction::new(m, 0, 0, 0, 0),
    };
    // Canonical-form constraints on otherwise-random fields.
    match m {
        M::Mov => Instruction { rs2: 0, ..instr },
        M::Jr => Instruction {
            rd: 0,
            rs2: 0,
            ..instr
        },
        M::Lui => Instruction { rs1: 0, ..instr },
        M::FsqrtD | M::FsqrtS => Instruction { rs2: 0, ..instr },
        _ => instr,
    }
}

trait Choose<T> {
    fn choose(&self, rng: &mut ChaCha8Rng) -> &T;
}

impl<T> Choose<T> for [T] {
    fn choose(&self, rng: &mut ChaCha8Rng) -> &T {
        &self[rng.gen_range(0..self.len())]
    }
}

#[test]
fn criterion_8_encode_decode_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0008);
    for i in 0..100_000u32 {
        let instr = random_valid_instruction(&mut rng);
        let word = encode(&instr).unwrap_or_else(|e| panic!("#{i} {instr:?}: {e}"));
        let back = decode(word).unwrap_or_else(|e| panic!("#{i} {word:#010x}: {e}"));
        assert_eq!(back, instr, "#{i}");
        assert_eq!(encode(&back).unwrap(), word, "#{i}");
    }
    pass(8, "100000 random valid instructions round-trip");
}
