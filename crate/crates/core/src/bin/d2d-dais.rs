use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use d2d_dais::experiment::{
    compare, parse_list, parse_seeds, read_rows, run_scenario, summarize, sweep, write_comparison,
    write_rows, write_summary, RunConfig,
};
use d2d_dais::model::Area;
use d2d_dais::{D2dError, Scenario, Strategy};

#[derive(Parser)]
#[command(
    name = "d2d-dais",
    version,
    about = "Single-cell D2D simulator with agent-based mode selection"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a scenario file.
    Generate {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, alias = "seeds", default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: Params,
    },
    /// Run one strategy on one scenario and print a CSV row.
    Run {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, alias = "seeds", default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "dais")]
        strategy: String,
        /// Use this scenario instead of generating one.
        #[arg(long)]
        scenario_file: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
    /// Run every (N, seed, strategy) combination.
    Sweep {
        /// Comma-separated UE counts.
        #[arg(long, default_value = "10,100,1000")]
        n: String,
        /// `a..b` (inclusive) or a comma list.
        #[arg(long, default_value = "1..10")]
        seeds: String,
        #[arg(long, alias = "strategy", default_value = "dais,no_d2d,random_cluster")]
        strategies: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mean and standard deviation per N and strategy.
        #[arg(long)]
        summary_out: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
    /// Ratio table from a sweep CSV.
    Compare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "dais")]
        reference: String,
        /// Baselines; every strategy in the input when omitted.
        #[arg(long, alias = "strategy")]
        strategies: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Params {
    /// JSON file with optional `area`, `radio`, `dais` and `p_ch` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Side length, or `WxH`, in metres.
    #[arg(long)]
    area: Option<String>,
    #[arg(long)]
    perc_data_rate: Option<f64>,
    #[arg(long)]
    battery_threshold: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    battery_option: Option<bool>,
    #[arg(long)]
    sigma_shadow: Option<f64>,
    #[arg(long)]
    p_ch: Option<f64>,
    /// Record wall-clock decision time (makes output machine-dependent).
    #[arg(long)]
    timing: bool,
}

impl Params {
    fn config(&self) -> Result<RunConfig, D2dError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(a) = &self.area {
            c.area = parse_area(a)?;
        }
        if let Some(v) = self.perc_data_rate {
            c.dais.perc_data_rate = v;
        }
        if let Some(v) = self.battery_threshold {
            c.dais.battery_threshold = v;
        }
        if let Some(v) = self.battery_option {
            c.dais.battery_option_enabled = v;
        }
        if let Some(v) = self.sigma_shadow {
            c.radio.shadowing_sigma_db = v;
        }
        if let Some(v) = self.p_ch {
            c.sim.p_ch = v;
        }
        c.sim.timing = self.timing;
        c.validate()?;
        Ok(c)
    }
}

fn parse_area(s: &str) -> Result<Area, D2dError> {
    let bad = || D2dError::InvalidParams(format!("bad area '{s}'"));
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?),
        None => {
            let v: f64 = s.parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    Ok(Area { w, h })
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, D2dError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn create(p: &Path) -> Result<File, D2dError> {
    File::create(p).map_err(|source| D2dError::Io {
        path: p.to_path_buf(),
        source,
    })
}

fn exec(cmd: Cmd) -> Result<(), D2dError> {
    match cmd {
        Cmd::Generate {
            n,
            seed,
            out,
            params,
        } => {
            let c = params.config()?;
            c.scenario(n, seed)?.save(&out)
        }
        Cmd::Run {
            n,
            seed,
            strategy,
            scenario_file,
            out,
            params,
        } => {
            let strategy: Strategy = strategy.parse()?;
            let c = params.config()?;
            let sc = match scenario_file {
                Some(p) => Scenario::load(&p)?,
                None => c.scenario(n, seed)?,
            };
            let row = run_scenario(strategy, &sc, &c.sim)?;
            write_rows(&[row], output(&out)?)
        }
        Cmd::Sweep {
            n,
            seeds,
            strategies,
            out,
            summary_out,
            params,
        } => {
            let ns: Vec<usize> = parse_list(&n)?;
            let seeds = parse_seeds(&seeds)?;
            let strategies: Vec<Strategy> = parse_list(&strategies)?;
            let c = params.config()?;
            let rows = sweep(&ns, &seeds, &strategies, &c)?;
            write_rows(&rows, output(&out)?)?;
            if let Some(p) = summary_out {
                write_summary(&summarize(&rows), create(&p)?)?;
            }
            Ok(())
        }
        Cmd::Compare {
            input,
            reference,
            strategies,
            out,
        } => {
            let reference: Strategy = reference.parse()?;
            let f = File::open(&input).map_err(|source| D2dError::Io {
                path: input,
                source,
            })?;
            let rows = read_rows(f)?;
            let baselines: Vec<Strategy> = match strategies {
                Some(s) => parse_list(&s)?,
                None => {
                    let mut v: Vec<Strategy> = rows.iter().map(|r| r.strategy).collect();
                    v.sort();
                    v.dedup();
                    v
                }
            };
            write_comparison(&compare(&rows, reference, &baselines)?, output(&out)?)
        }
    }
}

fn exit_code(e: &D2dError) -> u8 {
    match e {
        D2dError::InvalidParams(_) => 1,
        D2dError::Parse { .. }
        | D2dError::Version { .. }
        | D2dError::Validation(_)
        | D2dError::Schema(_)
        | D2dError::Io { .. }
        | D2dError::EmptyScenario => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match exec(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
