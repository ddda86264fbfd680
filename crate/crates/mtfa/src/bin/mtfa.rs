use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mtfa::bench::{emit, parse_snr_list, run_example, ExampleConfig, Method};
use mtfa::cohen::cmcd;
use mtfa::io::{load_matrix, load_signal, read_json, save_signal, save_tfd, write_json, CmcdFile, MatrixFile};
use mtfa::lsfilter::{denoise, Diagnostics, DEFAULT_EPSILON};
use mtfa::metaplectic::{mt, TransformPlan};
use mtfa::optimizer::{optimize, Coset, Scenario};
use mtfa::properties::{run_properties, PropertyId};
use mtfa::signals::add_awgn_stream;
use mtfa::{MtfaError, Result};

#[derive(Parser)]
#[command(name = "mtfa", version, about = "Metaplectic time-frequency analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformKind {
    Direct,
    Chirpfft,
}

#[derive(Subcommand)]
enum Command {
    /// SNR sweep of the denoising methods on one example.
    Bench {
        #[arg(long)]
        example: u8,
        #[arg(long, default_value = "-4:6:2", allow_hyphen_values = true)]
        snr: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "all")]
        methods: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Metaplectic transform of a sampled signal.
    Transform {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "chirpfft")]
        method: TransformKind,
    },
    /// Distribution of a signal for a JSON configuration.
    Cmcd {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One oracle denoising run with an example's matrices.
    Denoise {
        #[arg(long)]
        example: u8,
        #[arg(long, allow_hyphen_values = true)]
        snr: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Residuals of the property suite.
    Properties {
        #[arg(long, default_value = "all")]
        ids: String,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nelder–Mead search over the free matrices of a scenario.
    Optimize {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = 3)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
}

fn threads() -> Result<()> {
    if let Ok(v) = std::env::var("MTFA_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| MtfaError::Parse(format!("MTFA_THREADS='{v}' is not a count")))?;
        if n == 0 {
            return Err(MtfaError::Parse("MTFA_THREADS must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| MtfaError::PipelineFailure(e.to_string()))?;
    }
    Ok(())
}

fn one_snr(s: &str) -> Result<f64> {
    match parse_snr_list(s)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(MtfaError::Parse(format!("expected one SNR value, got '{s}'"))),
    }
}

#[derive(Serialize)]
struct OptimizeReport {
    objective: f64,
    initial_objective: f64,
    evaluations: usize,
    budget_exhausted: bool,
    cosets: Vec<Coset>,
    params: Vec<f64>,
    matrices: std::collections::BTreeMap<&'static str, MatrixFile>,
}

fn write_trace(path: &Path, trace: &[mtfa::optimizer::TraceRow], dim: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = ["eval_index", "objective", "best_so_far", "restart"].map(String::from).to_vec();
    header.extend((0..dim).map(|k| format!("p{k}")));
    w.write_record(&header)?;
    for r in trace {
        let mut rec = vec![r.eval_index.to_string(), r.objective.to_string(), r.best_so_far.to_string(), r.restart.to_string()];
        rec.extend(r.params.iter().map(|p| p.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Bench { example, snr, trials, seed, methods, out, svg } => {
            let snrs = parse_snr_list(&snr)?;
            let methods = Method::parse_list(&methods)?;
            let res = run_example(example, &snrs, trials, seed, &methods)?;
            if !res.records.is_empty() {
                emit(&res.records, &out, svg.as_deref())?;
            }
            if let Some(msg) = res.aborted {
                return Err(MtfaError::PipelineFailure(format!("sweep aborted ({} records kept): {msg}", res.records.len())));
            }
            for r in &res.records {
                println!("{:<18} {:>6.1} dB  log10 mse {:>8.4}  psnr {:>7.2} dB", r.method, r.snr_db, r.log10_mse, r.psnr_db);
            }
        }
        Command::Transform { matrix, input, out, method } => {
            let m = load_matrix(&matrix)?;
            let f = load_signal(&input)?;
            let plan = if m.n() == 1 && m.det_b() != 0.0 {
                let fast = TransformPlan::chirp_fft(m.clone(), f.grid)?;
                match method {
                    TransformKind::Chirpfft => fast,
                    TransformKind::Direct => TransformPlan::direct(m, f.grid, fast.output)?,
                }
            } else {
                TransformPlan::direct(m, f.grid, f.grid)?
            };
            save_signal(&out, &mt(&f, &plan)?)?;
        }
        Command::Cmcd { config, input, out } => {
            let f = load_signal(&input)?;
            let cfg = read_json::<CmcdFile>(&config)?.to_config(&f.grid)?;
            save_tfd(&out, &cmcd(&f, &cfg)?)?;
        }
        Command::Denoise { example, snr, seed, epsilon, out, report } => {
            let ex = ExampleConfig::new(example)?;
            let clean = ex.clean()?;
            let g = add_awgn_stream(&clean, one_snr(&snr)?, seed, 0)?;
            let d = denoise(&g, &clean, &ex.matrices, epsilon)?;
            save_signal(&out, &d.estimate)?;
            write_json::<Diagnostics>(&report, &d.diagnostics)?;
            println!("signal mse {:.4e}  psnr {:.2} dB  wigner mse {:.4e}", d.diagnostics.signal_mse, d.diagnostics.psnr_db, d.diagnostics.wigner_mse);
        }
        Command::Properties { ids, seeds, out } => {
            let ids = PropertyId::parse_list(&ids)?;
            let rows = run_properties(&ids, seeds)?;
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&out)?));
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
            for id in ids {
                let worst = rows.iter().filter(|r| r.property == id.name()).map(|r| r.residual).fold(0.0f64, f64::max);
                println!("{:<24} max residual {:.3e}", id.name(), worst);
            }
        }
        Command::Optimize { scenario, budget, restarts, seed, out, trace } => {
            let sc: Scenario = read_json(&scenario)?;
            let o = optimize(&sc, budget, restarts, seed)?;
            write_trace(&trace, &o.search.trace, sc.param_count())?;
            let report = OptimizeReport {
                objective: o.search.best_objective,
                initial_objective: o.search.initial_objective(),
                evaluations: o.search.trace.len(),
                budget_exhausted: o.search.budget_exhausted,
                cosets: o.cosets.clone(),
                params: o.search.best_params.clone(),
                matrices: o.matrix_files().into_iter().collect(),
            };
            write_json(&out, &report)?;
            if o.search.budget_exhausted {
                eprintln!("warning: {}", MtfaError::BudgetExhausted(o.search.trace.len()));
            }
            println!("objective {:.4e} (initial {:.4e})", report.objective, report.initial_objective);
        }
    }
    std::io::stdout().flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match threads().and_then(|_| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
