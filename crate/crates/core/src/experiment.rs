//! Seeded experiment grid: single runs, sweeps over N × seed × strategy,
//! summaries and ratio tables, all as CSV.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::RadioParams;
use crate::error::{D2dError, Result};
use crate::metrics::{measure_decisions, RunMetrics};
use crate::model::{Area, DaisParams};
use crate::scenario::{generate, Scenario};
use crate::sim::{SimConfig, Strategy};

pub const CSV_HEADER: [&str; 10] = [
    "strategy",
    "n_ues",
    "seed",
    "spectral_efficiency",
    "total_tx_power_mw",
    "power_saved_mw",
    "cluster_count",
    "mean_cluster_size",
    "decision_time_us",
    "link_evaluations",
];

/// Everything needed to generate and run a scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub area: Area,
    pub radio: RadioParams,
    pub dais: DaisParams,
    pub sim: SimConfig,
}

/// JSON config file; every section optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub area: Option<Area>,
    pub radio: Option<RadioParams>,
    pub dais: Option<DaisParams>,
    pub p_ch: Option<f64>,
}

impl RunConfig {
    /// Defaults overlaid with the sections present in `file`.
    pub fn from_file(file: ConfigFile) -> Self {
        let mut c = Self::default();
        if let Some(a) = file.area {
            c.area = a;
        }
        if let Some(r) = file.radio {
            c.radio = r;
        }
        if let Some(d) = file.dais {
            c.dais = d;
        }
        if let Some(p) = file.p_ch {
            c.sim.p_ch = p;
        }
        c
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| D2dError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ConfigFile = serde_json::from_str(&text).map_err(|e| D2dError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Ok(Self::from_file(file))
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.dais.validate()?;
        if !(self.area.w > 0.0 && self.area.h > 0.0) {
            return Err(D2dError::InvalidParams("area must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.sim.p_ch) {
            return Err(D2dError::InvalidParams("p_ch must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn scenario(&self, n: usize, seed: u64) -> Result<Scenario> {
        generate(n, seed, self.area, self.radio.clone(), self.dais.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub strategy: Strategy,
    pub n_ues: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
}

pub fn run_scenario(strategy: Strategy, scenario: &Scenario, sim: &SimConfig) -> Result<RunRow> {
    Ok(RunRow {
        strategy,
        n_ues: scenario.n_ues,
        seed: scenario.seed,
        metrics: measure_decisions(strategy, scenario, sim)?,
    })
}

pub fn run_one(strategy: Strategy, n: usize, seed: u64, cfg: &RunConfig) -> Result<RunRow> {
    run_scenario(strategy, &cfg.scenario(n, seed)?, &cfg.sim)
}

/// Every (N, seed, strategy) combination, in that nesting order. Scenarios
/// run in parallel; each run is single-threaded.
pub fn sweep(
    ns: &[usize],
    seeds: &[u64],
    strategies: &[Strategy],
    cfg: &RunConfig,
) -> Result<Vec<RunRow>> {
    if ns.is_empty() || seeds.is_empty() || strategies.is_empty() {
        return Err(D2dError::InvalidParams(
            "sweep needs at least one N, seed and strategy".into(),
        ));
    }
    let grid: Vec<(usize, u64)> = ns
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let per_scenario: Vec<Result<Vec<RunRow>>> = grid
        .par_iter()
        .map(|&(n, seed)| {
            let sc = cfg.scenario(n, seed)?;
            strategies
                .iter()
                .map(|&st| run_scenario(st, &sc, &cfg.sim))
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_scenario {
        rows.extend(r?);
    }
    Ok(rows)
}

/// `x` with nine significant digits in plain decimal notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_err(e: csv::Error) -> D2dError {
    D2dError::Schema(e.to_string())
}

pub fn write_rows<W: Write>(rows: &[RunRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.strategy.name().to_string(),
            r.n_ues.to_string(),
            r.seed.to_string(),
            fmt_sig(m.spectral_efficiency),
            fmt_sig(m.total_tx_power),
            fmt_sig(m.power_saved),
            m.cluster_count.to_string(),
            fmt_sig(m.mean_cluster_size),
            fmt_sig(m.decision_time_total),
            m.link_evaluations.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| D2dError::Schema(e.to_string()))
}

pub fn rows_to_string(rows: &[RunRow]) -> String {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Parses a sweep CSV. Columns are located by header name.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<RunRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.is_empty() {
        return Err(D2dError::Schema("empty CSV".into()));
    }
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| D2dError::Schema(format!("missing column '{name}'")))
    };
    let idx: Vec<usize> = CSV_HEADER.iter().map(|h| col(h)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let bad = |k: usize| {
            D2dError::Schema(format!(
                "row {}: bad value '{}' in '{}'",
                i + 1,
                field(k),
                CSV_HEADER[k]
            ))
        };
        let f = |k: usize| field(k).parse::<f64>().map_err(|_| bad(k));
        rows.push(RunRow {
            strategy: field(0).parse().map_err(|_| bad(0))?,
            n_ues: field(1).parse().map_err(|_| bad(1))?,
            seed: field(2).parse().map_err(|_| bad(2))?,
            metrics: RunMetrics {
                spectral_efficiency: f(3)?,
                total_tx_power: f(4)?,
                power_saved: f(5)?,
                cluster_count: field(6).parse().map_err(|_| bad(6))?,
                mean_cluster_size: f(7)?,
                mode_histogram: BTreeMap::new(),
                decision_time_total: f(8)?,
                link_evaluations: field(9).parse().map_err(|_| bad(9))?,
            },
        });
    }
    if rows.is_empty() {
        return Err(D2dError::Schema("CSV has no data rows".into()));
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub n_ues: usize,
    pub strategy: Strategy,
    pub runs: usize,
    pub spectral_efficiency: Stat,
    pub total_tx_power: Stat,
    pub power_saved: Stat,
    pub cluster_count: Stat,
    pub mean_cluster_size: Stat,
    pub link_evaluations: Stat,
}

/// Mean and standard deviation per (N, strategy).
pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, Strategy), Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.n_ues, r.strategy)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n_ues, strategy), g)| {
            let stat = |f: fn(&RunMetrics) -> f64| {
                Stat::of(&g.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
            };
            SummaryRow {
                n_ues,
                strategy,
                runs: g.len(),
                spectral_efficiency: stat(|m| m.spectral_efficiency),
                total_tx_power: stat(|m| m.total_tx_power),
                power_saved: stat(|m| m.power_saved),
                cluster_count: stat(|m| m.cluster_count as f64),
                mean_cluster_size: stat(|m| m.mean_cluster_size),
                link_evaluations: stat(|m| m.link_evaluations as f64),
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n_ues".to_string(), "strategy".into(), "runs".into()];
    for m in [
        "spectral_efficiency",
        "total_tx_power_mw",
        "power_saved_mw",
        "cluster_count",
        "mean_cluster_size",
        "link_evaluations",
    ] {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    w.write_record(&header).map_err(csv_err)?;
    for s in summary {
        let mut rec = vec![
            s.n_ues.to_string(),
            s.strategy.name().to_string(),
            s.runs.to_string(),
        ];
        for st in [
            s.spectral_efficiency,
            s.total_tx_power,
            s.power_saved,
            s.cluster_count,
            s.mean_cluster_size,
            s.link_evaluations,
        ] {
            rec.push(fmt_sig(st.mean));
            rec.push(fmt_sig(st.std));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| D2dError::Schema(e.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub n_ues: usize,
    pub reference: Strategy,
    pub baseline: Strategy,
    pub se_ratio: f64,
    pub power_saved_ratio: f64,
    pub link_eval_ratio: f64,
}

/// `a / b`, with `0 / 0 = 1`.
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        1.0
    } else {
        a / b
    }
}

/// Ratios of mean metrics, `reference` over each of `baselines`, per N.
/// Rows whose N lacks either strategy are skipped.
pub fn compare(
    rows: &[RunRow],
    reference: Strategy,
    baselines: &[Strategy],
) -> Result<Vec<ComparisonRow>> {
    let summary = summarize(rows);
    let by_key: BTreeMap<(usize, Strategy), &SummaryRow> =
        summary.iter().map(|s| ((s.n_ues, s.strategy), s)).collect();
    let ns: Vec<usize> = {
        let mut v: Vec<usize> = summary.iter().map(|s| s.n_ues).collect();
        v.dedup();
        v
    };
    let mut out = Vec::new();
    for n in ns {
        let Some(r) = by_key.get(&(n, reference)) else {
            continue;
        };
        for &b in baselines {
            let Some(o) = by_key.get(&(n, b)) else {
                continue;
            };
            out.push(ComparisonRow {
                n_ues: n,
                reference,
                baseline: b,
                se_ratio: ratio(r.spectral_efficiency.mean, o.spectral_efficiency.mean),
                power_saved_ratio: ratio(r.power_saved.mean, o.power_saved.mean),
                link_eval_ratio: ratio(r.link_evaluations.mean, o.link_evaluations.mean),
            });
        }
    }
    if out.is_empty() {
        return Err(D2dError::Schema(format!(
            "no N has both '{reference}' and a baseline"
        )));
    }
    Ok(out)
}

pub fn write_comparison<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n_ues",
        "reference",
        "baseline",
        "se_ratio",
        "power_saved_ratio",
        "link_eval_ratio",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.n_ues.to_string(),
            r.reference.name().to_string(),
            r.baseline.name().to_string(),
            fmt_sig(r.se_ratio),
            fmt_sig(r.power_saved_ratio),
            fmt_sig(r.link_eval_ratio),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| D2dError::Schema(e.to_string()))
}

/// `"1..10"` (inclusive) or `"1,2,5"`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || D2dError::InvalidParams(format!("bad seed list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    parse_list(s)
}

/// Comma-separated list of values.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<T>())
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|_| D2dError::InvalidParams(format!("bad list '{s}'")))?;
    if v.is_empty() {
        return Err(D2dError::InvalidParams("empty list".into()));
    }
    Ok(v)
}
