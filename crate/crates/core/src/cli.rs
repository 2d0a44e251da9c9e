//! Batch front end.
//!
//! Each subcommand writes CSV tables into `--out` together with
//! `<command>.manifest.json`, which echoes the parsed configuration, the
//! canonical model file, the model digest, the seeds and the wall time. A
//! failing run prints one JSON error record on stderr and exits with 2
//! (configuration), 3 (assumption), 4 (numeric) or 5 (resource).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cascade::{
    cache_path, default_depth, save_binary, write_level_csv, CascadeRealization, TiltRegistry,
};
use crate::error::{Error, Result};
use crate::estimate::{
    image_box_dim_with, level_set, occupation_histogram, partition_function, summarize_holder,
    tilted_holder_samples, uniform_sweep, BoxOptions, DimensionEstimate, TestSet, GUARD_QUANTILE,
};
use crate::predict::{kpz_curve, legendre_point, predicted_levelset_dim, uniform_grid};
use crate::rng::{Domain, KeyedRng};
use crate::weights::{ModelRegistry, WeightModel};

#[derive(Parser, Debug)]
#[command(
    name = "cascade-lab",
    version,
    about = "Predictions and estimates for two-dimensional signed multiplicative cascades"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory, created when missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Run even when the model fails the assumption check.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Seeds {
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Realization depth; 18 for b = 2, 12 for b = 3, else the deepest with at most 2^18 leaves.
    #[arg(long)]
    pub depth: Option<usize>,
}

impl Seeds {
    fn list(&self) -> Result<Vec<u64>> {
        if self.seeds == 0 {
            return Err(Error::Config("--seeds must be positive".into()));
        }
        Ok((0..self.seeds).map(|i| self.seed.wrapping_add(i)).collect())
    }

    fn depth(&self, model: &WeightModel) -> usize {
        self.depth.unwrap_or_else(|| default_depth(model.base()))
    }
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Check the standing assumptions on a model.
    CheckModel {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate ξ, ζ, ξ* and the predicted image dimension over a ξ₀ grid.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Point count of a uniform grid on [0, 1], or a comma-separated list.
        #[arg(long = "xi0-grid", default_value = "65")]
        xi0_grid: String,
    },
    /// Legendre points `(∇Φ(q), ξ₀ + q·∇Φ(q) − Φ(q))` for a list of `q`.
    SpectrumPredict {
        #[command(flatten)]
        common: Common,
        /// Exponent pair `q1,q2`; repeatable.
        #[arg(long, value_parser = parse_pair, required = true)]
        q: Vec<(f64, f64)>,
        #[arg(long, default_value_t = 1.0)]
        xi0: f64,
    },
    /// Build realizations and export one level of each.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: Seeds,
        /// Level to export; defaults to min(depth, 12).
        #[arg(long)]
        level: Option<usize>,
        /// Also write the binary cache.
        #[arg(long)]
        cache: bool,
    },
    /// Box-counting dimension of the image of a test set.
    ImageDim {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: Seeds,
        /// `interval`, `cantor:<digits>:<depth>` or `blocks:<L>:<w>,<w>,…:<generations>`.
        #[arg(long, default_value = "interval")]
        set: String,
        /// Fit window `j_min:j_max`.
        #[arg(long, value_parser = parse_window)]
        scales: Option<(usize, usize)>,
        #[arg(long, default_value_t = GUARD_QUANTILE)]
        guard_quantile: f64,
    },
    /// Scaling exponents of `Σ O₁^{q₁} O₂^{q₂}` per seed and for the seed average.
    Partition {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: Seeds,
        /// Exponent pair `q1,q2`; repeatable.
        #[arg(long, value_parser = parse_pair, required = true)]
        q: Vec<(f64, f64)>,
        /// Level window `m1:m2`; defaults to `3:depth−4`.
        #[arg(long, value_parser = parse_window)]
        levels: Option<(usize, usize)>,
    },
    /// Hölder vectors along tilted paths.
    Holder {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: Seeds,
        #[arg(long, value_parser = parse_pair, default_value = "1,1")]
        q: (f64, f64),
        /// Paths per seed.
        #[arg(long, default_value_t = 125)]
        paths: usize,
        /// Tilt rule name.
        #[arg(long, default_value = "subtree-mass")]
        rule: String,
        /// Level window `n1:n2`; defaults to `3:depth−6`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(usize, usize)>,
    },
    /// Level sets of one component at levels drawn from the occupation histogram.
    Levelset {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: Seeds,
        /// Component, 1 or 2.
        #[arg(long, default_value_t = 1)]
        component: usize,
        /// Finest level; defaults to `depth − 4`.
        #[arg(long)]
        level: Option<usize>,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        /// Levels `y` drawn per seed.
        #[arg(long, default_value_t = 1)]
        samples: u64,
        /// Use this `y` instead of drawing.
        #[arg(long)]
        y: Option<f64>,
    },
    /// Image dimensions of several test sets on the same realization.
    UniformSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seeds: Seeds,
        /// Test set; repeatable.
        #[arg(long = "set", required = true)]
        sets: Vec<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckModel { .. } => "check-model",
            Command::Predict { .. } => "predict",
            Command::SpectrumPredict { .. } => "spectrum-predict",
            Command::Simulate { .. } => "simulate",
            Command::ImageDim { .. } => "image-dim",
            Command::Partition { .. } => "partition",
            Command::Holder { .. } => "holder",
            Command::Levelset { .. } => "levelset",
            Command::UniformSweep { .. } => "uniform-sweep",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::CheckModel { common }
            | Command::Predict { common, .. }
            | Command::SpectrumPredict { common, .. }
            | Command::Simulate { common, .. }
            | Command::ImageDim { common, .. }
            | Command::Partition { common, .. }
            | Command::Holder { common, .. }
            | Command::Levelset { common, .. }
            | Command::UniformSweep { common, .. } => common,
        }
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let (a, b) = (num(a)?, num(b)?);
    if a > b {
        return Err(format!("window {a}:{b} is decreasing"));
    }
    Ok((a, b))
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    if s.contains(',') {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("xi0 grid entry `{t}`: {e}")))
            })
            .collect()
    } else {
        let points = s
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Config(format!("xi0 grid `{s}`: {e}")))?;
        uniform_grid(points)
    }
}

/// A CSV table held in memory until the run succeeds.
struct Table {
    name: String,
    text: String,
}

impl Table {
    fn new(name: &str, header: &str) -> Self {
        Table {
            name: name.to_string(),
            text: format!("{header}\n"),
        }
    }

    fn row(&mut self, fields: Vec<String>) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }
}

macro_rules! fields {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

fn summary_fields(e: &DimensionEstimate, seed: &str, digest: &str) -> Vec<String> {
    fields![
        e.value,
        e.stderr,
        e.r_squared,
        e.scale_range.0,
        e.scale_range.1,
        seed,
        digest
    ]
}

const SUMMARY_HEADER: &str = "estimate,stderr,r2,j_min,j_max,seed,model_digest";

struct Output {
    tables: Vec<Table>,
    extra_files: Vec<String>,
    seeds: Vec<u64>,
    depth: Option<usize>,
    notes: Vec<String>,
    /// Raised after the files are written, for reports that still fail.
    failure: Option<Error>,
}

impl Output {
    fn new() -> Self {
        Output {
            tables: Vec::new(),
            extra_files: Vec::new(),
            seeds: Vec::new(),
            depth: None,
            notes: Vec::new(),
            failure: None,
        }
    }
}

fn load_model(common: &Common) -> Result<WeightModel> {
    ModelRegistry::with_defaults().load(&common.model)
}

fn require_assumptions(model: &WeightModel, force: bool) -> Result<()> {
    let report = model.check_assumptions();
    if report.all_ok() || force {
        return Ok(());
    }
    Err(Error::Assumption(format!(
        "model fails the assumption check (a0 {}, a1 {}, a2 {}); rerun with --force to override",
        report.a0_ok, report.a1_ok, report.a2_ok
    )))
}

/// Runs one parsed command and writes its artifacts.
pub fn run(command: &Command) -> Result<()> {
    let started = Instant::now();
    let common = command.common();
    let model = load_model(common)?;
    if !matches!(command, Command::CheckModel { .. }) {
        require_assumptions(&model, common.force)?;
    }
    let out = execute(command, &model)?;
    fs::create_dir_all(&common.out)?;
    let mut files = Vec::new();
    for t in &out.tables {
        fs::write(common.out.join(&t.name), &t.text)?;
        files.push(t.name.clone());
    }
    files.extend(out.extra_files.iter().cloned());
    let manifest = json!({
        "command": command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": command,
        "model_file": model.to_file_string(),
        "model_kind": model.kind(),
        "model_digest": model.digest(),
        "seeds": out.seeds,
        "depth": out.depth,
        "outputs": files,
        "notes": out.notes,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    let path = common.out.join(format!("{}.manifest.json", command.name()));
    fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    match out.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn execute(command: &Command, model: &WeightModel) -> Result<Output> {
    let digest = model.digest();
    let mut out = Output::new();
    match command {
        Command::CheckModel { common } => {
            let report = model.check_assumptions();
            let text = serde_json::to_string_pretty(&report)? + "\n";
            fs::create_dir_all(&common.out)?;
            fs::write(common.out.join("check-model.json"), &text)?;
            out.extra_files.push("check-model.json".into());
            print!("{text}");
            if !report.all_ok() {
                out.failure = Some(Error::Assumption(format!(
                    "a0 {}, a1 {}, a2 {}",
                    report.a0_ok, report.a1_ok, report.a2_ok
                )));
            }
        }
        Command::Predict { xi0_grid, .. } => {
            let grid = parse_grid(xi0_grid)?;
            let rows = kpz_curve(model, &grid)?;
            let mut t = Table::new("predict.csv", "xi0,xi,zeta,xistar,predicted_dim,branch");
            let mut gap: f64 = 0.0;
            for r in &rows {
                t.row(fields![r.xi0, r.xi, r.zeta, r.xi_star, r.predicted, r.branch.as_str()]);
                if let Some(c) = r.closed_form {
                    gap = gap.max((c - r.predicted).abs());
                }
            }
            if rows.iter().any(|r| r.closed_form.is_some()) {
                out.notes.push(format!("largest closed-form gap {gap:e}"));
            }
            out.tables.push(t);
        }
        Command::SpectrumPredict { q, xi0, .. } => {
            let mut t = Table::new("spectrum.csv", "q1,q2,alpha1,alpha2,dim_level_set,in_J");
            for &q in q {
                let p = legendre_point(model, q, *xi0)?;
                t.row(fields![q.0, q.1, p.alpha.0, p.alpha.1, p.dim, p.in_j]);
            }
            out.tables.push(t);
        }
        Command::Simulate {
            common,
            seeds,
            level,
            cache,
        } => {
            let depth = seeds.depth(model);
            let level = level.unwrap_or(depth.min(12));
            out.seeds = seeds.list()?;
            out.depth = Some(depth);
            for &seed in &out.seeds.clone() {
                let real = CascadeRealization::build(model, seed, depth)?;
                let mut buf = Vec::new();
                write_level_csv(&real, level, &mut buf)?;
                out.tables.push(Table {
                    name: format!("simulate-s{seed}-level{level}.csv"),
                    text: String::from_utf8(buf).expect("CSV is UTF-8"),
                });
                if *cache {
                    fs::create_dir_all(&common.out)?;
                    let path = cache_path(&common.out, model, seed, depth);
                    let name = file_name(&path);
                    if path.exists() {
                        out.notes.push(format!("kept existing cache {name}"));
                    } else {
                        save_binary(&real, &path)?;
                        out.extra_files.push(name);
                    }
                }
            }
        }
        Command::ImageDim {
            seeds,
            set,
            scales,
            guard_quantile,
            ..
        } => {
            let depth = seeds.depth(model);
            let k = TestSet::parse(set, model.base())?;
            let opts = BoxOptions {
                scales: *scales,
                guard_quantile: *guard_quantile,
            };
            out.seeds = seeds.list()?;
            out.depth = Some(depth);
            let estimates = out
                .seeds
                .par_iter()
                .map(|&seed| {
                    let real = CascadeRealization::build(model, seed, depth)?;
                    image_box_dim_with(&real, &k, &opts)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut counts = Table::new("image-dim-counts.csv", "seed,scale_j,box_count");
            let mut summary = Table::new("image-dim-summary.csv", &format!("{SUMMARY_HEADER},xi0"));
            for (seed, e) in out.seeds.iter().zip(&estimates) {
                for (j, c) in &e.counts {
                    counts.row(fields![seed, j, c]);
                }
                let mut row = summary_fields(e, &seed.to_string(), &digest);
                row.push(k.dimension().to_string());
                summary.row(row);
            }
            out.tables.push(counts);
            out.tables.push(summary);
        }
        Command::Partition { seeds, q, levels, .. } => {
            let depth = seeds.depth(model);
            let levels = levels.unwrap_or((3, depth.saturating_sub(4)));
            out.seeds = seeds.list()?;
            out.depth = Some(depth);
            let per_seed = out
                .seeds
                .par_iter()
                .map(|&seed| {
                    let real = CascadeRealization::build(model, seed, depth)?;
                    q.iter()
                        .map(|&q| partition_function(&real, q, levels))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let mut counts = Table::new("partition-counts.csv", "seed,q1,q2,level,sum");
            let mut summary = Table::new(
                "partition-summary.csv",
                &format!("{SUMMARY_HEADER},q1,q2,prediction"),
            );
            let b = model.base() as f64;
            for (qi, &q) in q.iter().enumerate() {
                let prediction = 1.0 - model.phi(q.0, q.1);
                for (seed, ests) in out.seeds.iter().zip(&per_seed) {
                    let e = &ests[qi];
                    for (m, s) in &e.counts {
                        counts.row(fields![seed, q.0, q.1, m, s]);
                    }
                    let mut row = summary_fields(e, &seed.to_string(), &digest);
                    row.extend(fields![q.0, q.1, prediction]);
                    summary.row(row);
                }
                let mean_counts: Vec<(usize, f64)> = (levels.0..=levels.1)
                    .enumerate()
                    .map(|(i, m)| {
                        let avg = per_seed.iter().map(|e| e[qi].counts[i].1).sum::<f64>()
                            / per_seed.len() as f64;
                        (m, avg)
                    })
                    .collect();
                let e = DimensionEstimate::from_counts(mean_counts, levels, b, 2)?;
                let mut row = summary_fields(&e, "ensemble", &digest);
                row.extend(fields![q.0, q.1, prediction]);
                summary.row(row);
            }
            out.tables.push(counts);
            out.tables.push(summary);
        }
        Command::Holder {
            seeds,
            q,
            paths,
            rule,
            window,
            ..
        } => {
            let depth = seeds.depth(model);
            let window = window.unwrap_or((3, depth.saturating_sub(6)));
            let rules = TiltRegistry::default();
            let rule = rules.get(rule)?;
            out.seeds = seeds.list()?;
            out.depth = Some(depth);
            let mut t = Table::new("holder.csv", "seed,path,word,h1,h2");
            let mut all = Vec::new();
            for &seed in &out.seeds {
                let real = CascadeRealization::build(model, seed, depth)?;
                let samples = tilted_holder_samples(&real, rule.as_ref(), *q, *paths, window)?;
                for (i, (w, h)) in samples.iter().enumerate() {
                    t.row(fields![seed, i, w, h.0, h.1]);
                    all.push(*h);
                }
            }
            let s = summarize_holder(model, rule.as_ref(), *q, &all)?;
            let mut summary = Table::new(
                "holder-summary.csv",
                "q1,q2,target1,target2,mean1,mean2,stderr1,stderr2,paths,rule,n1,n2,model_digest",
            );
            summary.row(fields![
                q.0, q.1, s.target.0, s.target.1, s.mean.0, s.mean.1, s.stderr.0, s.stderr.1,
                s.paths, s.rule, window.0, window.1, digest
            ]);
            out.tables.push(t);
            out.tables.push(summary);
        }
        Command::Levelset {
            seeds,
            component,
            level,
            bins,
            samples,
            y,
            ..
        } => {
            if !(1..=2).contains(component) {
                return Err(Error::Config(format!("component {component} is not 1 or 2")));
            }
            let k = component - 1;
            let depth = seeds.depth(model);
            let level = level.unwrap_or(depth.saturating_sub(4));
            let prediction = predicted_levelset_dim(model, k)
                .map(|p| p.to_string())
                .unwrap_or_else(|_| "NaN".into());
            out.seeds = seeds.list()?;
            out.depth = Some(depth);
            let mut counts = Table::new("levelset-counts.csv", "seed,sample,y,level,count");
            let mut summary = Table::new(
                "levelset-summary.csv",
                &format!("{SUMMARY_HEADER},sample,y,empty,prediction"),
            );
            for &seed in &out.seeds {
                let real = CascadeRealization::build(model, seed, depth)?;
                let hist = occupation_histogram(&real, k, *bins)?;
                for i in 0..*samples {
                    let y = match y {
                        Some(y) => *y,
                        None => hist.sample(&mut KeyedRng::new(seed, Domain::LevelSelect, k as u64, i)),
                    };
                    let s = level_set(&real, k, y, level)?;
                    for (m, c) in &s.estimate.counts {
                        counts.row(fields![seed, i, y, m, c]);
                    }
                    let mut row = summary_fields(&s.estimate, &seed.to_string(), &digest);
                    row.extend(fields![i, y, s.estimate.empty, prediction]);
                    summary.row(row);
                }
            }
            out.tables.push(counts);
            out.tables.push(summary);
        }
        Command::UniformSweep { seeds, sets, .. } => {
            let depth = seeds.depth(model);
            let sets = sets
                .iter()
                .map(|s| TestSet::parse(s, model.base()))
                .collect::<Result<Vec<_>>>()?;
            out.seeds = seeds.list()?;
            out.depth = Some(depth);
            let mut counts = Table::new("uniform-sweep-counts.csv", "seed,set,scale_j,box_count");
            let mut summary = Table::new(
                "uniform-sweep-summary.csv",
                &format!("{SUMMARY_HEADER},set,xi0,prediction"),
            );
            for &seed in &out.seeds {
                let real = CascadeRealization::build(model, seed, depth)?;
                for (i, row) in uniform_sweep(&real, &sets)?.iter().enumerate() {
                    for (j, c) in &row.estimate.counts {
                        counts.row(fields![seed, i, j, c]);
                    }
                    let mut fields = summary_fields(&row.estimate, &seed.to_string(), &digest);
                    fields.extend(fields![i, row.xi0, row.prediction]);
                    summary.row(fields);
                }
            }
            out.tables.push(counts);
            out.tables.push(summary);
        }
    }
    Ok(out)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// One JSON line describing a failed run.
pub fn error_record(e: &Error) -> String {
    json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    })
    .to_string()
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = Error::Config(e.render().to_string().trim().to_string());
            eprintln!("{}", error_record(&err));
            return err.exit_code();
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_windows() {
        assert_eq!(parse_pair("1, 0.5").unwrap(), (1.0, 0.5));
        assert!(parse_pair("1").is_err());
        assert_eq!(parse_window("3:12").unwrap(), (3, 12));
        assert!(parse_window("12:3").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.1,0.9").unwrap(), vec![0.1, 0.9]);
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn bad_flags_exit_with_config_status() {
        assert_eq!(main_with_args(["cascade-lab", "predict", "--bogus"]), 2);
    }

    #[test]
    fn missing_model_is_a_resource_error() {
        let dir = tempfile::tempdir().unwrap();
        let code = main_with_args([
            "cascade-lab".into(),
            "predict".into(),
            "--model".into(),
            dir.path().join("nope.model").into_os_string(),
        ]);
        assert_eq!(code, 5);
    }

    #[test]
    fn error_record_is_json() {
        let v: serde_json::Value =
            serde_json::from_str(&error_record(&Error::NoRoot("x".into()))).unwrap();
        assert_eq!(v["error"], "no_root");
        assert_eq!(v["exit_code"], 4);
    }
}
