use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ductfan::params::VehicleParams;
use ductfan::payload::{
    attachment_stability, max_unilateral_load, trim_deflection, PayloadAttachment, StabilityVerdict,
    TrimDeflection, DEFAULT_LOAD_SHARE,
};
use ductfan::scenario::{
    parse_scenario, read_trace_csv, run_scenario, summarize_trace, write_trace_csv, Summary,
};
use ductfan::sysid::{
    fit_propeller_coefficients, fit_vane_coefficient, generate_bench_data, read_bench_csv,
    separate_motor_sweeps, vane_sweep, write_bench_csv, NoiseStd, PropellerFit, VaneFit,
};

/// Exit status when a run ends in a simulation fault.
const EXIT_FAULT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ductfan",
    version,
    about = "Ducted-fan UAV simulator and analysis tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files and write trace.csv and summary.json for each.
    Simulate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Output directory. With several scenarios each gets a subdirectory
        /// named after the file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize an existing trace CSV as JSON on stdout.
    Analyze { trace: PathBuf },
    /// Fit vane and propeller coefficients from bench CSV data.
    Identify {
        #[arg(long)]
        bench: PathBuf,
    },
    /// Static stability, trim and load limit for one attachment.
    Statics { attachment: PathBuf },
    /// Generate synthetic bench data from the default vehicle.
    Bench {
        #[arg(long)]
        out: PathBuf,
        /// Samples per sweep.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Noise standard deviation as a fraction of each channel's peak.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { scenarios, out } => simulate(&scenarios, &out),
        Command::Analyze { trace } => analyze(&trace),
        Command::Identify { bench } => identify(&bench),
        Command::Statics { attachment } => statics(&attachment),
        Command::Bench {
            out,
            samples,
            noise,
            seed,
        } => bench(&out, samples, noise, seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Runs one scenario into `dir`. Returns whether the run faulted.
fn simulate_one(path: &Path, dir: &Path) -> Result<bool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario = parse_scenario(&text).with_context(|| format!("{}", path.display()))?;
    let run = run_scenario(&scenario);

    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let trace_path = dir.join("trace.csv");
    let file = fs::File::create(&trace_path).with_context(|| format!("creating {}", trace_path.display()))?;
    write_trace_csv(BufWriter::new(file), &run.trace)?;

    let summary = Summary {
        attachments: run.attachments.clone(),
        ..summarize_trace(&run.trace)
    };
    write_json(&dir.join("summary.json"), &summary)?;

    if let Some(f) = run.faults.first() {
        eprintln!(
            "{}: fault at t = {:.3} s: {} ({})",
            path.display(),
            f.time,
            f.kind.as_str(),
            f.message
        );
    }
    Ok(!run.faults.is_empty())
}

fn simulate(scenarios: &[PathBuf], out: &Path) -> Result<ExitCode> {
    let dirs: Vec<PathBuf> = if scenarios.len() == 1 {
        vec![out.to_path_buf()]
    } else {
        scenarios
            .iter()
            .map(|p| out.join(p.file_stem().unwrap_or_default()))
            .collect()
    };
    let mut seen = std::collections::HashSet::new();
    for d in &dirs {
        if !seen.insert(d) {
            bail!("two scenarios map to output directory {}", d.display());
        }
    }

    let results: Vec<Result<bool>> = std::thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .iter()
            .zip(&dirs)
            .map(|(p, d)| s.spawn(move || simulate_one(p, d)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(anyhow::anyhow!("simulation thread panicked")))
            })
            .collect()
    });

    let mut code = ExitCode::SUCCESS;
    for r in results {
        match r {
            Ok(false) => {}
            Ok(true) => code = ExitCode::from(EXIT_FAULT),
            Err(e) => {
                eprintln!("error: {e:#}");
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(code)
}

fn analyze(trace: &Path) -> Result<ExitCode> {
    let file = fs::File::open(trace).with_context(|| format!("opening {}", trace.display()))?;
    let records = read_trace_csv(file).with_context(|| format!("{}", trace.display()))?;
    if records.is_empty() {
        bail!("{} contains no rows", trace.display());
    }
    let summary = summarize_trace(&records);
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if summary.fault.is_some() {
        ExitCode::from(EXIT_FAULT)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
#[serde(untagged)]
enum FitReport<T> {
    Fit(T),
    Error { error: String },
}

#[derive(Serialize)]
struct Identification {
    samples: usize,
    vane: FitReport<VaneFit>,
    propeller: FitReport<PropellerFit>,
}

fn identify(bench: &Path) -> Result<ExitCode> {
    let file = fs::File::open(bench).with_context(|| format!("opening {}", bench.display()))?;
    let samples = read_bench_csv(file).with_context(|| format!("{}", bench.display()))?;
    let vane = fit_vane_coefficient(&samples);
    let propeller = fit_propeller_coefficients(&samples);
    let any_ok = vane.is_ok() || propeller.is_ok();
    let report = Identification {
        samples: samples.len(),
        vane: vane.map_or_else(|e| FitReport::Error { error: e.to_string() }, FitReport::Fit),
        propeller: propeller.map_or_else(|e| FitReport::Error { error: e.to_string() }, FitReport::Fit),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if any_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn default_load_share() -> f64 {
    DEFAULT_LOAD_SHARE
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StaticsFile {
    #[serde(default = "default_load_share")]
    load_share: f64,
    #[serde(default)]
    vehicle: VehicleParams,
    attachment: PayloadAttachment,
}

#[derive(Serialize)]
struct StaticsReport {
    verdict: StabilityVerdict,
    trim: TrimDeflection,
    /// Heaviest load the vane budget can hold at this attachment's trim arm, kg.
    max_unilateral_load: f64,
    max_vane_moment: f64,
}

fn statics(path: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: StaticsFile = toml::from_str(&text).with_context(|| format!("{}", path.display()))?;
    let vehicle = file.vehicle.validate()?;
    let a = &file.attachment;
    let verdict = attachment_stability(a, file.load_share, vehicle.gravity)?;
    let report = StaticsReport {
        verdict,
        trim: trim_deflection(a, &vehicle),
        max_unilateral_load: max_unilateral_load(vehicle.max_vane_moment(), a.trim_arm(), vehicle.gravity)?,
        max_vane_moment: vehicle.max_vane_moment(),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn bench(out: &Path, samples: usize, noise: f64, seed: u64) -> Result<ExitCode> {
    if samples < 2 {
        bail!("--samples must be at least 2");
    }
    let truth = VehicleParams::default();
    let dt = 0.01;
    let mut schedule = vane_sweep(samples, 1900.0, truth.vane_deflection_max, dt);
    let offset = samples as f64 * dt;
    schedule.extend(
        separate_motor_sweeps(samples, truth.motor_speed_max, 1500.0, dt)
            .into_iter()
            .map(|mut c| {
                c.time += offset;
                c
            }),
    );
    let std = NoiseStd::relative(&truth, &schedule, noise);
    let data = generate_bench_data(&truth, &schedule, &std, seed)?;
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_bench_csv(BufWriter::new(file), &data)?;
    Ok(ExitCode::SUCCESS)
}
