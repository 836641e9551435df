//! mechest: mechanistic energy and execution-time estimation for a small
//! soft-core RISC target.
//!
//! The toolkit assembles programs for the SV8-mini instruction set, runs
//! them on an instruction-accurate simulator that counts executed
//! instructions per category, and projects energy and time as a weighted sum
//! of those counts. Per-category costs come from a differencing calibration
//! against a measurement source; a soft-float lowering path makes FPU
//! trade-off studies possible on the same workloads.
//!
//! ```
//! use mechest::asm::{assemble_str, AsmOptions};
//!
//! let img = assemble_str(".entry main\nmain: HALT\n", &AsmOptions::default()).unwrap();
//! assert_eq!(img.text.len(), 1);
//! ```
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` each of
//! them, or use the `mechest` binary for the same operations from the shell.

pub mod asm;
pub mod calibration;
pub mod costmodel;
pub mod evaluation;
pub mod simulator;
pub mod isa;
pub mod softfloat;
pub mod workloads;
