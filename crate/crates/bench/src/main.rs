use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use rrqr_bench::config::{parse_range, Algo, RunConfig, Target};
use rrqr_bench::output::{self, Format};
use rrqr_bench::run::{run, Record};
use rrqr_bench::verify::verify;
use rrqr_bench::volume::{fitted_slope, volume_decay};
use rrqr_core::rand_srrqr::SizingPolicy;
use rrqr_core::{generate, MatrixKind, MatrixSpec, SketchKind};

/// Strong rank-revealing QR experiments.
#[derive(Parser)]
#[command(name = "spectra-rrqr", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a test matrix.
    GenMatrix {
        #[arg(long)]
        matrix: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `.bin` selects the binary format; otherwise `--format` applies.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Factor a matrix and print one record per seed.
    Factor {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Factor a matrix and print the ratio series.
    Ratios {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Check every applicable bound; exits nonzero on any violation.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Volume of a sketched sampled identity as columns are added.
    VolumeDecay {
        #[arg(long, default_value_t = 8192)]
        m: usize,
        #[arg(long, default_value_t = 1500)]
        d: usize,
        /// `start:end:step`, inclusive.
        #[arg(long, default_value = "100:300:10")]
        n: String,
        #[arg(long, value_enum, default_value_t = SketchArg::Gaussian)]
        sketch: SketchArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a gnuplot script for the CSV.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Wall time of the randomized pipeline against deterministic SRRQR.
    Timing {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SketchArg {
    Gaussian,
    Srht,
    Identity,
}

impl From<SketchArg> for SketchKind {
    fn from(s: SketchArg) -> Self {
        match s {
            SketchArg::Gaussian => SketchKind::Gaussian,
            SketchArg::Srht => SketchKind::Srht,
            SketchArg::Identity => SketchKind::Identity,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// e.g. `hc:8192x500`, `stairs:2048x125:L=25`, `kahan:128x32:s=0.9`, `diag:1,2,3`.
    #[arg(long)]
    matrix: String,
    /// Seed of the matrix itself.
    #[arg(long, default_value_t = 0)]
    matrix_seed: u64,
    #[arg(long, value_enum, default_value_t = Algo::RandSrrqrRank)]
    algo: Algo,
    #[arg(long, default_value_t = 2.0)]
    f: f64,
    #[arg(long, conflicts_with = "tau")]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum, default_value_t = SketchArg::Srht)]
    sketch: SketchArg,
    /// Sketch rows; defaults to the embedding size for the column count.
    #[arg(long)]
    d: Option<usize>,
    /// Size the sketch for a (k+1)-dimensional subspace instead of all columns.
    #[arg(long)]
    size_for_k: bool,
    /// Single sketch seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Run seeds 0..N.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let kind: MatrixKind = self.matrix.parse().with_context(|| format!("matrix {:?}", self.matrix))?;
        let target = match (self.k, self.tau) {
            (Some(k), None) => Target::Rank(k),
            (None, Some(t)) => Target::Tolerance(t),
            _ => anyhow::bail!("exactly one of --k and --tau is required"),
        };
        let seeds: Vec<u64> = match (self.seed, self.seeds) {
            (Some(s), _) => vec![s],
            (None, Some(n)) => (0..n).collect(),
            (None, None) => vec![0],
        };
        let mut cfg = RunConfig::new(MatrixSpec::new(kind, self.matrix_seed), self.algo, target)
            .with_f(self.f)
            .with_sketch(self.sketch.into(), self.d)
            .with_seeds(seeds);
        if self.size_for_k {
            cfg.sizing = SizingPolicy::OseKPlus1;
        }
        cfg.output = self.out.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(output::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(records: &[Record], format: Format, out: &Option<PathBuf>) -> Result<()> {
    let mut w = sink(out)?;
    output::write_records(records, format, &mut w)?;
    if format == Format::Json {
        writeln!(w)?;
    }
    Ok(())
}

fn records(cfg: &RunConfig) -> Result<Vec<Record>> {
    Ok(run(cfg)?.into_iter().map(|e| e.record).collect())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::GenMatrix { matrix, seed, out, format } => {
            let kind: MatrixKind = matrix.parse()?;
            let m = generate(&MatrixSpec::new(kind, seed))?;
            match &out {
                Some(p) if p.extension().is_some_and(|e| e == "bin") => {
                    rrqr_core::io::save(&m, p, rrqr_core::io::MatrixFormat::from_path(p))?;
                }
                _ => {
                    let mut w = sink(&out)?;
                    match format {
                        Format::Csv => {
                            let mut c = csv::WriterBuilder::new().has_headers(false).from_writer(&mut w);
                            for i in 0..m.rows() {
                                c.serialize(m.row(i))?;
                            }
                            c.flush()?;
                        }
                        Format::Json => {
                            let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i)).collect();
                            serde_json::to_writer(&mut w, &rows)?;
                            writeln!(w)?;
                        }
                    }
                }
            }
        }
        Cmd::Factor { run, format } | Cmd::Ratios { run, format } => {
            let cfg = run.config()?;
            emit(&records(&cfg)?, format, &cfg.output)?;
        }
        Cmd::Verify { run, format } => {
            let cfg = run.config()?;
            let report = verify(&cfg)?;
            let mut w = sink(&cfg.output)?;
            match format {
                Some(Format::Json) => writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?,
                Some(Format::Csv) => {
                    let mut c = csv::Writer::from_writer(&mut w);
                    for ch in &report.checks {
                        c.serialize(ch)?;
                    }
                    c.flush()?;
                }
                None => writeln!(w, "{report}")?,
            }
            return Ok(ExitCode::from(report.exit_code() as u8));
        }
        Cmd::VolumeDecay { m, d, n, sketch, seed, out, gnuplot, format } => {
            let ns = parse_range(&n)?;
            let pts = volume_decay(m, d, &ns, sketch.into(), seed)?;
            let mut w = sink(&out)?;
            match format {
                Format::Csv => {
                    let mut c = csv::Writer::from_writer(&mut w);
                    for p in &pts {
                        c.serialize(p)?;
                    }
                    c.flush()?;
                }
                Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&pts)?)?,
            }
            let x: Vec<f64> = pts.iter().map(|p| p.n as f64).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.log_volume).collect();
            if x.len() > 1 {
                eprintln!("fitted slope of ln V: {:.6}", fitted_slope(&x, &y));
            }
            if let Some(g) = gnuplot {
                let data = out.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "volume.csv".into());
                std::fs::write(&g, output::gnuplot_script(&data, "volume of the sketched columns", 1, 3, true))
                    .with_context(|| g.display().to_string())?;
            }
        }
        Cmd::Timing { run } => {
            let cfg = run.config()?;
            let m = generate(&cfg.matrix)?;
            let mut det = cfg.clone();
            det.algo = Algo::Srrqr;
            det.seeds = vec![cfg.seeds[0]];
            let mut all = rrqr_bench::run::run_with_matrix(&det, &m)?;
            all.extend(rrqr_bench::run::run_with_matrix(&cfg, &m)?);
            let mut w = sink(&cfg.output)?;
            writeln!(w, "algo,seed,k,sketch_ms,select_ms,factor_ms,total_ms")?;
            for e in &all {
                let (r, t) = (&e.record.run, &e.record.run.timings_ms);
                writeln!(
                    w,
                    "{},{},{},{:.3},{:.3},{:.3},{:.3}",
                    e.record.algo.name(),
                    r.seed,
                    r.k,
                    t.sketch,
                    t.select,
                    t.factor,
                    t.total
                )?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
