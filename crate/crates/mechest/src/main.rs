//! `mechest` command line: assemble → run/count → calibrate → estimate →
//! evaluate → compare, one subcommand per stage.
//!
//! Exit codes: 0 success, 1 usage, 2 input error (unreadable or malformed
//! files, bad option syntax inside a value), 3 runtime error (simulation or
//! calibration failure).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mechest::asm::{assemble_str, AsmOptions, BinaryImage};
use mechest::calibration::{
    calibrate_all, gen_kernel_pair, standard_specs, CalibrationOptions, CsvImport,
    MeasurementSample, MeasurementSource, SyntheticPlatform,
};
use mechest::costmodel::{estimate, CostProfile};
use mechest::evaluation::{compare_configs, error_metrics};
use mechest::isa;
use mechest::simulator::{run, CategoryCounts, HardwareConfig, DEFAULT_BUDGET};
use mechest::workloads::load_manifest;

#[derive(Parser)]
#[command(
    name = "mechest",
    version = version_string(),
    about = "Mechanistic energy/time estimation toolkit for the SV8-mini soft core"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assemble a source file into a binary image.
    Asm {
        /// Assembly source (.s).
        input: PathBuf,
        /// Output image path.
        #[arg(short, long)]
        output: PathBuf,
        /// Lower FP instructions to integer-only library calls.
        #[arg(long)]
        soft_float: bool,
    },
    /// Execute an image and report per-category instruction counts.
    Run {
        /// Binary image produced by `asm`.
        image: PathBuf,
        /// Hardware configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Instruction budget (default 2^32).
        #[arg(long)]
        budget: Option<u64>,
        /// Write the counts as JSON (consumable by `estimate --counts`).
        #[arg(long)]
        dump_counts: Option<PathBuf>,
    },
    /// Price a counts file with a cost profile (count-weighted linear model).
    Estimate {
        /// Counts JSON from `run --dump-counts`.
        #[arg(long)]
        counts: PathBuf,
        /// Cost profile JSON.
        #[arg(long)]
        profile: PathBuf,
        /// Also write the estimate as JSON (an array of these is what
        /// `evaluate --estimates` consumes).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Derive a cost profile from kernel-pair measurements.
    Calibrate {
        /// `synthetic:<truth.json>:<sigma>:<seed>` or `csv:<file>`.
        #[arg(long)]
        source: String,
        /// Where to write the calibrated profile.
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the generated kernel sources and a measurement CSV
        /// template into this directory (for off-line measurement).
        #[arg(long)]
        emit_kernels: Option<PathBuf>,
        /// Platform name stamped on the profile. Defaults to the synthetic
        /// truth profile's platform, or "calibrated" for CSV sources.
        #[arg(long)]
        platform: Option<String>,
        /// Hardware-config name stamped on the profile; same defaulting.
        #[arg(long)]
        hardware_config: Option<String>,
        /// Loop iterations per kernel (default: the standard 1,000,000).
        /// Smaller values calibrate faster but average away less noise.
        #[arg(long)]
        loop_count: Option<u32>,
    },
    /// Grade estimates against measurements (relative error table).
    Evaluate {
        /// JSON array of estimates.
        #[arg(long)]
        estimates: PathBuf,
        /// Measurement CSV (kernel_hash, energy_J, time_s), same order.
        #[arg(long)]
        measurements: PathBuf,
        /// Also write the full-precision report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Estimate workloads with and without an FPU and report the deltas.
    Compare {
        /// Workload manifest JSON.
        #[arg(long)]
        workloads: PathBuf,
        /// Hardware config of the FPU side.
        #[arg(long = "config-a")]
        config_a: PathBuf,
        /// Hardware config of the baseline (no FPU).
        #[arg(long = "config-b")]
        config_b: PathBuf,
        /// Cost profile for the FPU side.
        #[arg(long = "profile-a")]
        profile_a: PathBuf,
        /// Cost profile for the baseline.
        #[arg(long = "profile-b")]
        profile_b: PathBuf,
        /// Also write the full-precision report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the normative instruction-set reference.
    IsaDoc {
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn version_string() -> String {
    format!("{} (ISA {})", env!("CARGO_PKG_VERSION"), isa::ISA_VERSION)
}

enum CliError {
    /// Unreadable or malformed input. Exit 2.
    Input(String),
    /// Failure while executing or calibrating. Exit 3.
    Runtime(String),
}

impl CliError {
    fn input(context: &str, err: impl std::fmt::Display) -> CliError {
        CliError::Input(format!("{context}: {err}"))
    }

    fn runtime(context: &str, err: impl std::fmt::Display) -> CliError {
        CliError::Runtime(format!("{context}: {err}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(&path.display().to_string(), e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::input(&path.display().to_string(), e))
}

fn load_profile(path: &Path) -> Result<CostProfile, CliError> {
    CostProfile::load(path).map_err(|e| CliError::input(&path.display().to_string(), e))
}

fn load_config(path: &Path) -> Result<HardwareConfig, CliError> {
    HardwareConfig::from_json(&read_file(path)?)
        .map_err(|e| CliError::input(&path.display().to_string(), e))
}

fn load_image(path: &Path) -> Result<BinaryImage, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::input(&path.display().to_string(), e))?;
    BinaryImage::from_bytes(&bytes).map_err(|e| CliError::input(&path.display().to_string(), e))
}

fn counts_table(counts: &CategoryCounts) -> String {
    let mut s = String::new();
    for (cat, n) in counts.iter() {
        let _ = writeln!(s, "  {:<20} {:>12}", cat.name(), n);
    }
    let _ = writeln!(s, "  {:<20} {:>12}", "total", counts.total());
    s
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Asm {
            input,
            output,
            soft_float,
        } => {
            let source = read_file(&input)?;
            let img = assemble_str(&source, &AsmOptions { soft_float })
                .map_err(|e| CliError::input(&input.display().to_string(), e))?;
            write_file(&output, img.to_bytes())?;
            println!(
                "{}: text {} words, data {} bytes, entry 0x{:08x}, sha256 {}",
                output.display(),
                img.text.len(),
                img.data.len(),
                img.entry,
                img.content_hash()
            );
            Ok(())
        }
        Cmd::Run {
            image,
            config,
            budget,
            dump_counts,
        } => {
            let img = load_image(&image)?;
            let cfg = load_config(&config)?;
            let state = run(&img, &cfg, budget.unwrap_or(DEFAULT_BUDGET))
                .map_err(|e| CliError::runtime(&image.display().to_string(), e))?;
            println!(
                "halted after {} instructions on `{}`",
                state.executed, cfg.name
            );
            print!("{}", counts_table(&state.counts));
            if let Some(path) = dump_counts {
                let mut json = serde_json::to_string_pretty(&state.counts).unwrap();
                json.push('\n');
                write_file(&path, json)?;
            }
            Ok(())
        }
        Cmd::Estimate {
            counts,
            profile,
            json,
        } => {
            let counts: CategoryCounts = serde_json::from_str(&read_file(&counts)?)
                .map_err(|e| CliError::input(&counts.display().to_string(), e))?;
            let profile = load_profile(&profile)?;
            let est = estimate(&counts, &profile);
            if let Some(path) = &json {
                let mut text = serde_json::to_string_pretty(&est).unwrap();
                text.push('\n');
                write_file(path, text)?;
            }
            println!(
                "profile `{}` / config `{}`",
                profile.platform, profile.hardware_config
            );
            println!(
                "  {:<20} {:>12}  {:>16}  {:>16}",
                "category", "count", "energy [nJ]", "time [ns]"
            );
            for c in &est.per_category {
                println!(
                    "  {:<20} {:>12}  {:>16.3}  {:>16.3}",
                    c.category.name(),
                    c.count,
                    c.energy_nj,
                    c.time_ns
                );
            }
            println!(
                "  {:<20} {:>12}  {:>16.3}  {:>16.3}",
                "total",
                counts.total(),
                est.energy_nj,
                est.time_ns
            );
            Ok(())
        }
        Cmd::Calibrate {
            source,
            output,
            emit_kernels,
            platform,
            hardware_config,
            loop_count,
        } => {
            let mut specs = standard_specs();
            if let Some(n) = loop_count {
                specs = specs.into_iter().map(|s| s.with_loop_count(n)).collect();
            }
            if let Some(dir) = &emit_kernels {
                emit_kernel_dir(dir, &specs)?;
            }
            let (source, stamp) = parse_source(&source)?;
            let mut options = CalibrationOptions::default();
            if let Some((platform, config)) = stamp {
                options.platform = platform;
                options.hardware_config = config;
            }
            if let Some(platform) = platform {
                options.platform = platform;
            }
            if let Some(config) = hardware_config {
                options.hardware_config = config;
            }
            let outcome = calibrate_all(&specs, source.as_ref(), &options)
                .map_err(|e| CliError::runtime("calibration", e))?;
            for flag in &outcome.flags {
                eprintln!(
                    "warning: {} flagged pending: {}",
                    flag.category.name(),
                    flag.reason
                );
            }
            outcome
                .profile
                .save(&output)
                .map_err(|e| CliError::input(&output.display().to_string(), e))?;
            println!("wrote {}", output.display());
            if !outcome.flags.is_empty() {
                println!(
                    "{} categor{} pending review; inspect before trusting the profile",
                    outcome.flags.len(),
                    if outcome.flags.len() == 1 { "y" } else { "ies" }
                );
            }
            Ok(())
        }
        Cmd::Evaluate {
            estimates,
            measurements,
            json,
        } => {
            let estimates: Vec<mechest::costmodel::Estimate> =
                serde_json::from_str(&read_file(&estimates)?)
                    .map_err(|e| CliError::input(&estimates.display().to_string(), e))?;
            let (labels, samples) = read_measurement_rows(&measurements)?;
            let report = error_metrics(&estimates, &samples)
                .map_err(|e| CliError::input("evaluate", e))?
                .with_labels(&labels);
            print!("{}", report.text_table());
            if let Some(path) = json {
                write_file(&path, report.to_json())?;
            }
            Ok(())
        }
        Cmd::Compare {
            workloads,
            config_a,
            config_b,
            profile_a,
            profile_b,
            json,
        } => {
            let descriptors = load_manifest(&workloads)
                .map_err(|e| CliError::input(&workloads.display().to_string(), e))?;
            let mut pairs = Vec::with_capacity(descriptors.len());
            for d in &descriptors {
                pairs.push(
                    d.pair()
                        .map_err(|e| CliError::input(&d.source_path, e))?,
                );
            }
            let report = compare_configs(
                &pairs,
                &load_config(&config_a)?,
                &load_config(&config_b)?,
                &load_profile(&profile_a)?,
                &load_profile(&profile_b)?,
            )
            .map_err(|e| CliError::runtime("compare", e))?;
            print!("{}", report.text_table());
            if let Some(path) = json {
                write_file(&path, report.to_json())?;
            }
            Ok(())
        }
        Cmd::IsaDoc { output } => {
            let doc = isa::reference_doc();
            match output {
                Some(path) => write_file(&path, doc)?,
                None => print!("{doc}"),
            }
            Ok(())
        }
    }
}

/// Parses `--source synthetic:<truth.json>:<sigma>:<seed>` or `csv:<file>`.
/// For synthetic sources, also returns the truth profile's metadata so the
/// calibrated profile is stamped consistently (a zero-noise calibration then
/// differs from the truth file only by sub-1e-9 rounding of the derived
/// values).
type SourceAndStamp = (Box<dyn MeasurementSource>, Option<(String, String)>);

fn parse_source(spec: &str) -> Result<SourceAndStamp, CliError> {
    if let Some(rest) = spec.strip_prefix("synthetic:") {
        let parts: Vec<&str> = rest.rsplitn(3, ':').collect();
        let [seed, sigma, truth] = parts[..] else {
            return Err(CliError::Input(format!(
                "source `{spec}` is not synthetic:<truth.json>:<sigma>:<seed>"
            )));
        };
        let truth = load_profile(Path::new(truth))?;
        let stamp = (truth.platform.clone(), truth.hardware_config.clone());
        let sigma: f64 = sigma
            .parse()
            .map_err(|e| CliError::input("sigma", e))?;
        let seed: u64 = seed.parse().map_err(|e| CliError::input("seed", e))?;
        let platform =
            SyntheticPlatform::noisy(truth, sigma, seed).map_err(|e| CliError::input("sigma", e))?;
        Ok((Box::new(platform), Some(stamp)))
    } else if let Some(file) = spec.strip_prefix("csv:") {
        let import = CsvImport::from_path(file).map_err(|e| CliError::input(file, e))?;
        Ok((Box::new(import), None))
    } else {
        Err(CliError::Input(format!(
            "source `{spec}` must start with synthetic: or csv:"
        )))
    }
}

/// Writes every kernel pair's sources plus a fill-in measurement CSV listing
/// each distinct kernel image hash once.
fn emit_kernel_dir(
    dir: &Path,
    specs: &[mechest::calibration::KernelPairSpec],
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(&dir.display().to_string(), e))?;
    let mut hashes = Vec::new();
    for spec in specs {
        let pair =
            gen_kernel_pair(spec).map_err(|e| CliError::input(spec.category.name(), e))?;
        let stem = spec.category.name().to_lowercase().replace(' ', "_");
        write_file(&dir.join(format!("{stem}_reference.s")), &pair.reference)?;
        write_file(&dir.join(format!("{stem}_test.s")), &pair.test)?;
        let (reference, test) = pair
            .assemble()
            .map_err(|e| CliError::input(spec.category.name(), e))?;
        for img in [reference, test] {
            let hash = img.content_hash();
            if !hashes.contains(&hash) {
                hashes.push(hash);
            }
        }
    }
    let mut csv = String::from("kernel_hash,energy_J,time_s\n");
    for hash in &hashes {
        let _ = writeln!(csv, "{hash},,");
    }
    write_file(&dir.join("measurements-template.csv"), csv)?;
    Ok(())
}

/// Reads a measurement CSV preserving row order; first column labels rows.
fn read_measurement_rows(path: &Path) -> Result<(Vec<String>, Vec<MeasurementSample>), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Input(format!("{}: {e}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| err(&e))?;
    let headers = rdr.headers().map_err(|e| err(&e))?.clone();
    let col = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| err(&format!("missing column {name}")))
    };
    let (hash_col, energy_col, time_col) = (col("kernel_hash")?, col("energy_J")?, col("time_s")?);
    let mut labels = Vec::new();
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| err(&e))?;
        let field = |i: usize| record.get(i).unwrap_or("").trim().to_string();
        let number = |i: usize| -> Result<f64, CliError> {
            field(i)
                .parse()
                .map_err(|_| err(&format!("bad number `{}`", field(i))))
        };
        labels.push(field(hash_col));
        samples.push(MeasurementSample {
            energy_j: number(energy_col)?,
            time_s: number(time_col)?,
        });
    }
    Ok((labels, samples))
}
