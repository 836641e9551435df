//! Exhaustive-ish verification of the soft-float runtime against the host
//! FPU: every routine is run in the simulator and compared bit for bit.

use mechest::asm::{assemble_str, AsmOptions, BinaryImage};
use mechest::simulator::{canonical_f32, canonical_f64, HardwareConfig, MachineState};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const ARGS: usize = 0x8000;
const RESULT: usize = 0x8010;

fn config() -> HardwareConfig {
    HardwareConfig {
        memory_size: 0x20000,
        ..HardwareConfig::without_fpu()
    }
}

fn binary_rig(routine: &str) -> BinaryImage {
    let src = format!(
        "\
        .text 0x1000\n\
        .entry main\n\
        main: LA r1, args\n\
              LD r8, [r1]\n\
              LD r9, [r1 + 4]\n\
              LD r10, [r1 + 8]\n\
              LD r11, [r1 + 12]\n\
              CALL {routine}\n\
              LA r2, result\n\
              ST [r2], r8\n\
              ST [r2 + 4], r9\n\
              HALT\n\
        .data 0x8000\n\
        args:   .word 0, 0, 0, 0\n\
        result: .word 0, 0\n"
    );
    assemble_str(&src, &AsmOptions { soft_float: true }).unwrap()
}

fn poke_u32(state: &mut MachineState, at: usize, v: u32) {
    state.memory[at..at + 4].copy_from_slice(&v.to_be_bytes());
}

fn peek_u64(state: &MachineState, at: usize) -> u64 {
    u64::from_be_bytes(state.memory[at..at + 8].try_into().unwrap())
}

fn call2(img: &BinaryImage, x: u64, y: u64) -> u64 {
    let mut state = MachineState::load(img, &config()).unwrap();
    poke_u32(&mut state, ARGS, (x >> 32) as u32);
    poke_u32(&mut state, ARGS + 4, x as u32);
    poke_u32(&mut state, ARGS + 8, (y >> 32) as u32);
    poke_u32(&mut state, ARGS + 12, y as u32);
    state.run(1_000_000).unwrap();
    peek_u64(&state, RESULT)
}

const SPECIALS: &[u64] = &[
    0x0000000000000000, // +0
    0x8000000000000000, // -0
    0x0000000000000001, // smallest subnormal
    0x8000000000000001,
    0x000FFFFFFFFFFFFF, // largest subnormal
    0x800FFFFFFFFFFFFF,
    0x0010000000000000, // smallest normal
    0x8010000000000000,
    0x0010000000000001,
    0x3FF0000000000000, // 1.0
    0xBFF0000000000000,
    0x3FF0000000000001, // nextafter(1.0)
    0x3FEFFFFFFFFFFFFF, // nextbefore(1.0)
    0x3FF8000000000000, // 1.5
    0x4000000000000000, // 2.0
    0x4008000000000000, // 3.0
    0x3FD5555555555555, // ~1/3
    0x400921FB54442D18, // ~pi
    0x7FEFFFFFFFFFFFFF, // largest finite
    0xFFEFFFFFFFFFFFFF,
    0x7FE0000000000000,
    0x7FF0000000000000, // +inf
    0xFFF0000000000000, // -inf
    0x7FF8000000000000, // quiet NaN
    0x7FF0000000000001, // signaling NaN
    0xFFFFFFFFFFFFFFFF, // negative NaN with payload
    0x4340000000000000, // 2^53
    0x4340000000000001,
    0x3C90000000000000, // 2^-54
    0xBC90000000000000,
    0x0030000000000000,
    0x5FE0000000000000, // 2^511-ish, squares to overflow
];

fn op_name_check(img: &BinaryImage, name: &str, host: impl Fn(f64, f64) -> f64, x: u64, y: u64) {
    let got = call2(img, x, y);
    let want = canonical_f64(host(f64::from_bits(x), f64::from_bits(y)));
    assert_eq!(
        got, want,
        "{name}({x:#018x}, {y:#018x}): got {got:#018x}, want {want:#018x}"
    );
}

fn check_all_pairs(routine: &str, host: impl Fn(f64, f64) -> f64, extra: &[(u64, u64)]) {
    let img = binary_rig(routine);
    for &x in SPECIALS {
        for &y in SPECIALS {
            op_name_check(&img, routine, &host, x, y);
        }
    }
    for &(x, y) in extra {
        op_name_check(&img, routine, &host, x, y);
    }

    // Random bit patterns with uniform exponents: covers normals,
    // subnormals, infinities and NaNs in one stream.
    let mut rng = StdRng::seed_from_u64(0x5EED_0001);
    for _ in 0..4000 {
        let x = random_f64_bits(&mut rng);
        let y = random_f64_bits(&mut rng);
        op_name_check(&img, routine, &host, x, y);
    }
    // Same-magnitude pairs: cancellation and near-cancellation paths.
    for _ in 0..2000 {
        let x = random_f64_bits(&mut rng);
        let tweak = rng.gen_range(0u64..4);
        let y = (x ^ (1u64 << 63)).wrapping_add(tweak).wrapping_sub(2);
        op_name_check(&img, routine, &host, x, y);
    }
    // Close exponents: heavy alignment-shift traffic.
    for _ in 0..2000 {
        let x = random_f64_bits(&mut rng);
        let de = rng.gen_range(-60i64..=60);
        let ex = ((x >> 52) & 0x7FF) as i64;
        let ey = (ex + de).clamp(0, 2046) as u64;
        let y = (random_f64_bits(&mut rng) & !(0x7FFu64 << 52)) | (ey << 52);
        op_name_check(&img, routine, &host, x, y);
    }
}

fn random_f64_bits(rng: &mut StdRng) -> u64 {
    let sign = rng.gen_range(0u64..2) << 63;
    let exp = rng.gen_range(0u64..2048) << 52;
    let frac = rng.gen::<u64>() & ((1u64 << 52) - 1);
    sign | exp | frac
}

#[test]
fn add_matches_host() {
    check_all_pairs(
        "__softfp_add64",
        |a, b| a + b,
        &[
            (0x4340000000000000, 0x3FF0000000000000), // 2^53 + 1: tie to even
            (0x4340000000000000, 0x4008000000000000), // 2^53 + 3
            (0x3FF0000000000000, 0xBC90000000000000), // 1 - 2^-54
            (0x0000000000000001, 0x0000000000000001), // subnormal + subnormal
            (0x7FEFFFFFFFFFFFFF, 0x7FEFFFFFFFFFFFFF), // overflow to inf
            (0x000FFFFFFFFFFFFF, 0x0000000000000001), // carry into normal
        ],
    );
}

#[test]
fn sub_matches_host() {
    check_all_pairs(
        "__softfp_sub64",
        |a, b| a - b,
        &[
            (0x3FF0000000000001, 0x3FF0000000000000), // 1 ulp difference
            (0x4000000000000000, 0x3FFFFFFFFFFFFFFF), // massive cancellation
            (0x0010000000000000, 0x0000000000000001), // normal minus subnormal
        ],
    );
}

#[test]
fn mul_matches_host() {
    check_all_pairs(
        "__softfp_mul64",
        |a, b| a * b,
        &[
            (0x3FF8000000000000, 0x3FF4000000000000), // 1.5 * 1.25
            (0x7FE0000000000000, 0x4000000000000000), // overflow
            (0x0010000000000000, 0x3FE0000000000000), // underflow to subnormal
            (0x0000000000000001, 0x3FE0000000000000), // underflow to zero (tie)
            (0x0000000000000003, 0x3FE0000000000000), // subnormal halving
        ],
    );
}

#[test]
fn div_matches_host() {
    check_all_pairs(
        "__softfp_div64",
        |a, b| a / b,
        &[
            (0x3FF0000000000000, 0x4008000000000000), // 1/3
            (0x3FF8000000000000, 0x3FF4000000000000), // 1.5 / 1.25
            (0x0010000000000000, 0x4010000000000000), // subnormal quotient
            (0x3FF0000000000000, 0x7FE0000000000000), // deep underflow
            (0x7FE0000000000000, 0x0010000000000000), // overflow
        ],
    );
}

#[test]
fn sqrt_matches_host() {
    let img = binary_rig("__softfp_sqrt64");
    let check = |x: u64| {
        let got = call2(&img, x, 0);
        let want = canonical_f64(f64::from_bits(x).sqrt());
        assert_eq!(
            got, want,
            "sqrt({x:#018x}): got {got:#018x}, want {want:#018x}"
        );
    };
    for &x in SPECIALS {
        check(x);
    }
    // Frozen anchors.
    assert_eq!(call2(&img, 0x4000000000000000, 0), 0x3FF6A09E667F3BCD);
    assert_eq!(call2(&img, 0x4010000000000000, 0), 0x4000000000000000);
    assert_eq!(call2(&img, 0x0000000000000001, 0), 0x1E60000000000000);
    let mut rng = StdRng::seed_from_u64(0x5EED_0002);
    for _ in 0..6000 {
        check(random_f64_bits(&mut rng));
    }
}

#[test]
fn sqrt_perfect_squares_are_exact() {
    let img = binary_rig("__softfp_sqrt64");
    for i in 1u64..500 {
        let x = ((i * i) as f64).to_bits();
        let got = call2(&img, x, 0);
        assert_eq!(
            got,
            (i as f64).to_bits(),
            "sqrt of {} squared",
            i
        );
    }
}

#[test]
fn widen_matches_host() {
    let img = binary_rig("__softfp_f32to64");
    let check = |s: u32| {
        // Argument arrives in r8, the first loaded word.
        let got = call2(&img, (s as u64) << 32, 0);
        let v = f32::from_bits(s);
        let want = if v.is_nan() {
            0x7FF8000000000000
        } else {
            (v as f64).to_bits()
        };
        assert_eq!(got, want, "widen({s:#010x}): got {got:#018x}");
    };
    for &s in F32_SPECIALS {
        check(s);
    }
    let mut rng = StdRng::seed_from_u64(0x5EED_0003);
    for _ in 0..8000 {
        check(random_f32_bits(&mut rng));
    }
}

#[test]
fn narrow_matches_host() {
    let img = binary_rig("__softfp_f64to32");
    let check = |x: u64| {
        let got = call2(&img, x, 0);
        let v = f64::from_bits(x);
        let want = if v.is_nan() {
            0x7FC00000u64
        } else {
            (v as f32).to_bits() as u64
        };
        // Result single lives in r8 = the stored high word; low word is 0.
        assert_eq!(
            got >> 32,
            want,
            "narrow({x:#018x}): got {:#010x}, want {want:#010x}",
            got >> 32
        );
        assert_eq!(got & 0xFFFF_FFFF, 0);
    };
    for &x in SPECIALS {
        check(x);
    }
    // Boundary traffic: single-subnormal range, overflow threshold, ties.
    for x in [
        0x3E30000000000000u64, // 2^-28
        0x36A0000000000000,    // 2^-149, smallest single subnormal
        0x3690000000000000,    // 2^-150, ties to zero
        0x3690000000000001,    // just above the tie
        0x47EFFFFFE0000000,    // largest single as double
        0x47EFFFFFEFFFFFFF,    // rounds to largest single
        0x47EFFFFFF0000000,    // ties to inf
        0x47F0000000000000,    // 2^128, inf
        0x380FFFFFFFFFFFFF,
        0x36A0000000000001,
        0x36AFFFFFFFFFFFFF,
    ] {
        check(x);
    }
    let mut rng = StdRng::seed_from_u64(0x5EED_0004);
    for _ in 0..4000 {
        check(random_f64_bits(&mut rng));
    }
    // Doubles that started life as singles narrow exactly.
    for _ in 0..4000 {
        let s = random_f32_bits(&mut rng);
        let v = f32::from_bits(s);
        if v.is_nan() {
            continue;
        }
        check((v as f64).to_bits());
    }
}

const F32_SPECIALS: &[u32] = &[
    0x00000000, 0x80000000, // zeros
    0x00000001, 0x80000001, // smallest subnormals
    0x007FFFFF, 0x807FFFFF, // largest subnormals
    0x00800000, 0x80800000, // smallest normals
    0x3F800000, 0xBF800000, // 1.0
    0x3FC00000, 0x40000000, // 1.5, 2.0
    0x7F7FFFFF, 0xFF7FFFFF, // largest finite
    0x7F800000, 0xFF800000, // inf
    0x7FC00000, 0x7F800001, // NaNs
    0x3EAAAAAB, // ~1/3
];

fn random_f32_bits(rng: &mut StdRng) -> u32 {
    let sign = rng.gen_range(0u32..2) << 31;
    let exp = rng.gen_range(0u32..256) << 23;
    let frac = rng.gen::<u32>() & ((1u32 << 23) - 1);
    sign | exp | frac
}

/// Single-precision mnemonics lower to widen/op64/narrow; the reference is
/// that same composition done with host arithmetic.
#[test]
fn lowered_single_precision_ops_match_composition() {
    let ops = [
        ("FADD.S", (|a, b| a + b) as fn(f64, f64) -> f64),
        ("FSUB.S", |a, b| a - b),
        ("FMUL.S", |a, b| a * b),
        ("FDIV.S", |a, b| a / b),
    ];
    let mut rng = StdRng::seed_from_u64(0x5EED_0005);
    for (mnemonic, host) in ops {
        let src = format!(
            "\
            .text 0x1000\n\
            .entry main\n\
            main: LA r1, args\n\
                  FLW f1, [r1]\n\
                  FLW f2, [r1 + 4]\n\
                  {mnemonic} f3, f1, f2\n\
                  FSW [r1 + 8], f3\n\
                  HALT\n\
            .data 0x8000\n\
            args: .word 0, 0, 0\n"
        );
        let img = assemble_str(&src, &AsmOptions { soft_float: true }).unwrap();
        let check = |a: u32, b: u32| {
            let mut state = MachineState::load(&img, &config()).unwrap();
            poke_u32(&mut state, ARGS, a);
            poke_u32(&mut state, ARGS + 4, b);
            state.run(1_000_000).unwrap();
            let got = u32::from_be_bytes(state.memory[ARGS + 8..ARGS + 12].try_into().unwrap());
            let wide = host(f32::from_bits(a) as f64, f32::from_bits(b) as f64);
            let want = canonical_f32(wide as f32);
            assert_eq!(
                got, want,
                "{mnemonic}({a:#010x}, {b:#010x}): got {got:#010x}, want {want:#010x}"
            );
        };
        for &a in F32_SPECIALS {
            for &b in F32_SPECIALS {
                check(a, b);
            }
        }
        for _ in 0..1500 {
            check(random_f32_bits(&mut rng), random_f32_bits(&mut rng));
        }
    }
}

/// A double-precision source assembled for the FPU and for soft-float gives
/// bit-identical data output.
#[test]
fn hard_and_soft_double_programs_agree() {
    let src = "\
        .text 0x1000\n\
        .entry main\n\
        main: LA r1, vals\n\
              FLD f1, [r1]\n\
              FLD f2, [r1 + 8]\n\
              FADD.D f3, f1, f2\n\
              FMUL.D f4, f3, f1\n\
              FDIV.D f5, f4, f2\n\
              FSQRT.D f6, f5\n\
              FSUB.D f7, f6, f3\n\
              FST [r1 + 16], f3\n\
              FST [r1 + 24], f4\n\
              FST [r1 + 32], f5\n\
              FST [r1 + 40], f6\n\
              FST [r1 + 48], f7\n\
              HALT\n\
        .data 0x8000\n\
        vals: .double 1.5, 0.37, 0.0, 0.0, 0.0, 0.0, 0.0\n";
    let hard = assemble_str(src, &AsmOptions::default()).unwrap();
    let soft = assemble_str(src, &AsmOptions { soft_float: true }).unwrap();
    let hard_cfg = HardwareConfig {
        memory_size: 0x20000,
        ..HardwareConfig::with_fpu()
    };
    let mut hs = MachineState::load(&hard, &hard_cfg).unwrap();
    hs.run(1 << 20).unwrap();
    let mut ss = MachineState::load(&soft, &config()).unwrap();
    ss.run(1 << 20).unwrap();
    // Compare the user data region only; the soft image appends the
    // library's backing store after it.
    let n = hard.data.len();
    assert_eq!(
        &hs.data_segment()[..n],
        &ss.memory[ARGS..ARGS + n],
        "hard and soft FP results differ"
    );
    assert_eq!(peek_u64(&hs, ARGS + 16), (1.5f64 + 0.37).to_bits());
}
