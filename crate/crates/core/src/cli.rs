//! Command-line surface of the `possic` binary.
//!
//! Every command writes a table: one `#` comment line recording the full
//! configuration, a header row, then data rows. Errors are reported on
//! stderr as `error[category]: message` and mapped to exit codes
//! 1 (bad-flags), 2 (bad-csv) and 3 (math-error).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::datasets::{self, Task};
use crate::diagnostics::{
    alpha_grid, f_curve, validity_sweep, FPredictor, GeneratorSpec, NigPrior,
};
use crate::error::{Error, Result};
use crate::nonconformity::PointPredictor;
use crate::possibility::build_predictor;
use crate::predsets::{evaluate_coverage, prediction_set, SetKind};
use crate::transducer::{GridSpec, Psi, TransducerConfig};
use crate::types::{
    plaus_to_f64, Adjustment, Assertion, Dataset, Interval, Observation, Response, ResponseSpace,
};

/// Seed used when neither `--seed` nor `POSSIC_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

/// Point predictor used by the regression score unless `--psi` says otherwise.
pub const DEFAULT_REGRESSION_PSI: PointPredictor = PointPredictor::KnnMean { k: 5 };

#[derive(Debug, Parser)]
#[command(
    name = "possic",
    version,
    about = "Valid consonant possibility predictors from conformal transducers"
)]
struct Cli {
    /// Random seed; defaults to POSSIC_SEED, then 42.
    #[arg(long, global = true, env = "POSSIC_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Contour and prediction sets at one query point.
    Predict(PredictArgs),
    /// Empirical coverage and mean set size on held-out data.
    Coverage(CoverageArgs),
    /// Monte Carlo validity diagnostics.
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
    /// Built-in datasets.
    #[command(subcommand)]
    Datasets(DatasetsCommand),
}

#[derive(Debug, Subcommand)]
enum DiagnoseCommand {
    /// Empirical CDF of the plausibility of the realised response.
    Validity(ValidityArgs),
    /// Estimate f(alpha) = P{upper(A) <= alpha, Y in A}.
    Fcurve(FcurveArgs),
}

#[derive(Debug, Subcommand)]
enum DatasetsCommand {
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AdjustArg {
    None,
    Condition,
    Stretch,
}

impl From<AdjustArg> for Adjustment {
    fn from(a: AdjustArg) -> Self {
        match a {
            AdjustArg::None => Adjustment::Raw,
            AdjustArg::Condition => Adjustment::Conditioned,
            AdjustArg::Stretch => Adjustment::Stretched,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Auto,
    Regression,
    Classification,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Auto => Task::Auto,
            TaskArg::Regression => Task::Regression,
            TaskArg::Classification => Task::Classification,
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Nonconformity measure: nn, knn[:K] or ridge:LAMBDA.
    #[arg(long)]
    psi: Option<String>,

    /// Candidate grid for regression: default or LO:HI:POINTS.
    #[arg(long, allow_hyphen_values = true, default_value = "default")]
    grid: String,

    /// Standardise features with training means and deviations.
    #[arg(long)]
    standardize: bool,

    /// How to read the response column of a CSV file.
    #[arg(long, value_enum, default_value_t = TaskArg::Auto)]
    task: TaskArg,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Training data: alligator, glass=PATH, or a CSV path.
    #[arg(long)]
    data: String,

    /// Query features, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x: String,

    #[arg(long, value_enum, default_value_t = AdjustArg::Stretch)]
    adjust: AdjustArg,

    /// Prediction-set level; repeatable.
    #[arg(long)]
    alpha: Vec<f64>,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    /// Dataset to split at random into halves.
    #[arg(long, conflicts_with_all = ["train", "test"])]
    data: Option<String>,

    #[arg(long, requires = "test")]
    train: Option<String>,

    #[arg(long, requires = "train")]
    test: Option<String>,

    /// Number of random half/half splits of --data.
    #[arg(long, default_value_t = 20)]
    splits: u64,

    /// Seed for the splits; defaults to --seed.
    #[arg(long)]
    split_seed: Option<u64>,

    /// Adjustment; repeatable. Defaults to condition and stretch for
    /// classification, none for regression.
    #[arg(long, value_enum)]
    adjust: Vec<AdjustArg>,

    /// Prediction-set level; repeatable, default 0.05.
    #[arg(long)]
    alpha: Vec<f64>,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Generator: unif[:LO:HI], sincube or classif3.
    #[arg(long, allow_hyphen_values = true)]
    gen: Option<String>,

    /// Training sample size per replicate.
    #[arg(long)]
    n: Option<usize>,

    #[arg(long)]
    reps: Option<u64>,

    /// Explicit alpha levels, comma separated.
    #[arg(long, conflicts_with = "alpha_step")]
    alphas: Option<String>,

    /// Spacing of the alpha grid step, 2 step, ..., 1.
    #[arg(long, default_value_t = 0.01)]
    alpha_step: f64,

    /// Nonconformity measure: nn, knn[:K] or ridge:LAMBDA.
    #[arg(long)]
    psi: Option<String>,

    #[arg(long, value_enum, default_value_t = AdjustArg::Stretch)]
    adjust: AdjustArg,
}

#[derive(Debug, Args)]
struct ValidityArgs {
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PredictorArg {
    Conformal,
    BayesT,
}

#[derive(Debug, Args)]
struct FcurveArgs {
    #[command(flatten)]
    sweep: SweepArgs,

    #[arg(long, value_enum, default_value_t = PredictorArg::Conformal)]
    predictor: PredictorArg,

    /// Assertion: LO:HI intervals separated by ';', or labels separated by ','.
    #[arg(long, allow_hyphen_values = true, default_value = "3:5")]
    assertion: String,

    /// Normal / inverse-gamma prior m0,k0,a0,b0 for bayes-t.
    #[arg(long, allow_hyphen_values = true, default_value = "0,1,1,1")]
    hyper: String,
}

/// A rendered result: provenance line, header and rows.
#[derive(Debug, Serialize)]
struct Table {
    config: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(config: String, columns: &[&str]) -> Self {
        Self {
            config,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn write(&self, format: Format, w: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(w, "# {}", self.config)?;
                let mut cw = csv::Writer::from_writer(w);
                cw.write_record(&self.columns)?;
                for r in &self.rows {
                    cw.write_record(r)?;
                }
                cw.flush()
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, self)?;
                writeln!(w)
            }
        }
    }
}

fn bad_flag(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| bad_flag(format!("{what}: not a number: {s:?}")))
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| parse_f64(v, what)).collect()
}

fn parse_psi(s: Option<&str>, classification: bool) -> Result<Psi> {
    let Some(s) = s else {
        return Ok(if classification {
            Psi::ClassificationNn
        } else {
            Psi::Regression(DEFAULT_REGRESSION_PSI)
        });
    };
    let psi = match s.split_once(':') {
        None if s == "nn" => Psi::ClassificationNn,
        None if s == "knn" => Psi::Regression(DEFAULT_REGRESSION_PSI),
        Some(("knn", k)) => Psi::Regression(PointPredictor::KnnMean {
            k: k.parse()
                .map_err(|_| bad_flag(format!("--psi: bad k {k:?}")))?,
        }),
        Some(("ridge", l)) => Psi::Regression(PointPredictor::Ridge {
            lambda: parse_f64(l, "--psi ridge lambda")?,
        }),
        _ => {
            return Err(bad_flag(format!(
                "--psi: expected nn, knn[:K] or ridge:L, got {s:?}"
            )))
        }
    };
    if let Psi::Regression(p) = psi {
        p.check().map_err(|e| bad_flag(e.to_string()))?;
    }
    match (classification, psi) {
        (true, Psi::Regression(_)) => Err(bad_flag("--psi: classification data needs nn")),
        (false, Psi::ClassificationNn) => Err(bad_flag("--psi: nn needs a label response")),
        _ => Ok(psi),
    }
}

fn parse_grid(s: &str) -> Result<GridSpec> {
    if s == "default" {
        return Ok(GridSpec::Default);
    }
    let parts: Vec<&str> = s.split(':').collect();
    if let [lo, hi, points] = parts[..] {
        let points: usize = points
            .parse()
            .map_err(|_| bad_flag(format!("--grid: bad point count {points:?}")))?;
        let (lo, hi) = (parse_f64(lo, "--grid")?, parse_f64(hi, "--grid")?);
        if !(lo < hi) || points < 2 {
            return Err(bad_flag("--grid needs LO < HI and at least 2 points"));
        }
        return Ok(GridSpec::Uniform { lo, hi, points });
    }
    Err(bad_flag(format!(
        "--grid: expected default or LO:HI:POINTS, got {s:?}"
    )))
}

fn parse_generator(s: &str, seed: u64) -> Result<GeneratorSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts[..] {
        ["unif"] => Ok(GeneratorSpec::uniform(0.0, 1.0, seed)),
        ["unif", lo, hi] => {
            let g = GeneratorSpec::uniform(parse_f64(lo, "--gen")?, parse_f64(hi, "--gen")?, seed);
            g.check()?;
            Ok(g)
        }
        ["sincube"] => Ok(GeneratorSpec::sin_cubed(seed)),
        ["classif3"] => Ok(GeneratorSpec::three_labels(seed)),
        _ => Err(bad_flag(format!(
            "--gen: expected unif[:LO:HI], sincube or classif3, got {s:?}"
        ))),
    }
}

fn parse_assertion(s: &str, space: &ResponseSpace) -> Result<Assertion> {
    let a = match space {
        ResponseSpace::Labels(_) => {
            let idx = s
                .split(',')
                .filter(|l| !l.trim().is_empty())
                .map(|l| {
                    space
                        .label_index(l.trim())
                        .ok_or_else(|| bad_flag(format!("--assertion: unknown label {l:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Assertion::labels(idx)
        }
        ResponseSpace::Continuous { .. } => {
            let iv = s
                .split(';')
                .filter(|p| !p.trim().is_empty())
                .map(|p| {
                    let (lo, hi) = p.split_once(':').ok_or_else(|| {
                        bad_flag(format!("--assertion: expected LO:HI, got {p:?}"))
                    })?;
                    Ok(Interval::closed(
                        parse_f64(lo, "--assertion")?,
                        parse_f64(hi, "--assertion")?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Assertion::Intervals(iv)
        }
    };
    a.validate(space)
        .map_err(|e| bad_flag(format!("--assertion: {e}")))?;
    Ok(a)
}

fn parse_hyper(s: &str) -> Result<NigPrior> {
    match parse_list(s, "--hyper")?[..] {
        [m0, k0, a0, b0] => {
            if [k0, a0, b0].iter().any(|v| !(*v > 0.0)) {
                return Err(bad_flag("--hyper: k0, a0 and b0 must be positive"));
            }
            Ok(NigPrior { m0, k0, a0, b0 })
        }
        _ => Err(bad_flag("--hyper: expected m0,k0,a0,b0")),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn fmt_alphas(alphas: &[f64]) -> String {
    alphas.iter().map(|a| num(*a)).collect::<Vec<_>>().join(",")
}

fn psi_label(psi: &Psi) -> String {
    match psi {
        Psi::ClassificationNn => "nn".into(),
        Psi::Regression(PointPredictor::KnnMean { k }) => format!("knn:{k}"),
        Psi::Regression(PointPredictor::Ridge { lambda }) => format!("ridge:{lambda}"),
    }
}

fn alphas_from(sweep: &SweepArgs) -> Result<Vec<f64>> {
    match &sweep.alphas {
        Some(s) => parse_list(s, "--alphas"),
        None => {
            if !(sweep.alpha_step > 0.0 && sweep.alpha_step <= 1.0) {
                return Err(bad_flag("--alpha-step must lie in (0, 1]"));
            }
            Ok(alpha_grid(sweep.alpha_step))
        }
    }
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    match alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        Some(a) => Err(bad_flag(format!("alpha {a} must lie in [0, 1]"))),
        None => Ok(()),
    }
}

fn cmd_predict(a: &PredictArgs, seed: u64, diag: &mut dyn Write) -> Result<Table> {
    let mut train = datasets::load_dataset(&a.data, a.model.task.into())?;
    let classification = train.space.is_finite();
    let psi = parse_psi(a.model.psi.as_deref(), classification)?;
    let grid = parse_grid(&a.model.grid)?;
    let mut x = parse_list(&a.x, "--x")?;
    if train.dim() != Some(x.len()) {
        return Err(bad_flag(format!(
            "--x has {} features, the data has {}",
            x.len(),
            train.dim().unwrap_or(0)
        )));
    }
    let alphas = a.alpha.clone();
    check_alphas(&alphas)?;
    if a.model.standardize {
        let reference = train.clone();
        x = datasets::standardize_point(&reference, &x);
        datasets::standardize(&reference, &mut [&mut train]);
    }
    let adjustment: Adjustment = a.adjust.into();
    let cfg = TransducerConfig { psi, grid };
    let p = build_predictor(&train, &x, &cfg, adjustment)?;

    let config = format!(
        "possic predict data={} x={} psi={} adjust={} alpha={} grid={} standardize={} seed={}",
        a.data,
        a.x,
        psi_label(&psi),
        if classification {
            adjustment.as_str()
        } else {
            "none"
        },
        fmt_alphas(&alphas),
        a.model.grid,
        a.model.standardize,
        seed
    );
    let mut columns = vec![
        if classification { "label" } else { "y" }.to_string(),
        "plausibility".to_string(),
        "exact".to_string(),
    ];
    columns.extend(alphas.iter().map(|al| format!("in_set_{}", num(*al))));
    let mut table = Table {
        config,
        columns,
        rows: Vec::new(),
    };

    let sets = alphas
        .iter()
        .map(|&al| prediction_set(&p, al))
        .collect::<Result<Vec<_>>>()?;
    for (r, v) in &p.contour.points {
        let mut row = vec![
            match r {
                Response::Label(i) => train.space.label_name(*i).unwrap_or_default().to_string(),
                Response::Real(y) => num(*y),
            },
            num(plaus_to_f64(*v)),
            v.to_string(),
        ];
        row.extend(sets.iter().map(|s| (s.contains(r) as u8).to_string()));
        table.rows.push(row);
    }
    for s in &sets {
        let shown = match &s.kind {
            SetKind::Labels(l) => format!(
                "{{{}}}",
                l.iter()
                    .map(|i| train.space.label_name(*i).unwrap_or_default())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            SetKind::Intervals(iv) => iv
                .iter()
                .map(|(lo, hi)| format!("[{}, {}]", num(*lo), num(*hi)))
                .collect::<Vec<_>>()
                .join(" U "),
        };
        let _ = writeln!(
            diag,
            "set alpha={}: {}",
            num(s.alpha),
            if s.is_empty() { "{}".into() } else { shown }
        );
        if s.is_empty() {
            let _ = writeln!(
                diag,
                "warning: prediction set at alpha={} is empty; the raw contour peaks below this level",
                num(s.alpha)
            );
        }
    }
    Ok(table)
}

/// Re-expresses two labelled datasets over one alphabet: training labels
/// first, then labels seen only in the test file.
fn align_spaces(train: &mut Dataset, test: &mut Dataset) -> Result<()> {
    if train.space == test.space {
        return Ok(());
    }
    let (ResponseSpace::Labels(tl), ResponseSpace::Labels(sl)) = (&train.space, &test.space) else {
        return Err(Error::BadCsv(
            "train and test disagree on the response type".into(),
        ));
    };
    let mut names = tl.clone();
    for l in sl {
        if !names.contains(l) {
            names.push(l.clone());
        }
    }
    let space = ResponseSpace::labels(names)?;
    for d in [&mut *train, &mut *test] {
        let old = d.space.clone();
        let obs: Vec<Observation> = d
            .observations
            .iter()
            .map(|o| {
                let name =
                    o.y.as_label()
                        .and_then(|i| old.label_name(i))
                        .unwrap_or_default();
                Observation::new(
                    o.x.clone(),
                    Response::Label(space.label_index(name).expect("union alphabet")),
                )
            })
            .collect();
        *d = Dataset::new(space.clone(), obs);
    }
    Ok(())
}

fn cmd_coverage(a: &CoverageArgs, seed: u64) -> Result<Table> {
    let task: Task = a.model.task.into();
    let splits: Vec<(String, Dataset, Dataset)> = match (&a.data, &a.train, &a.test) {
        (Some(spec), None, None) => {
            if a.splits == 0 {
                return Err(bad_flag("--splits must be at least 1"));
            }
            let data = datasets::load_dataset(spec, task)?;
            if data.len() < 2 {
                return Err(Error::InsufficientData {
                    needed: 2,
                    have: data.len(),
                });
            }
            let split_seed = a.split_seed.unwrap_or(seed);
            (0..a.splits)
                .map(|s| {
                    let (train, test) = datasets::random_halves(&data, split_seed, s);
                    (s.to_string(), train, test)
                })
                .collect()
        }
        (None, Some(tr), Some(te)) => {
            let mut train = datasets::load_dataset(tr, task)?;
            let mut test = datasets::load_dataset(te, task)?;
            align_spaces(&mut train, &mut test)?;
            if train.dim() != test.dim() {
                return Err(Error::BadCsv(
                    "train and test have different feature counts".into(),
                ));
            }
            vec![("0".to_string(), train, test)]
        }
        _ => {
            return Err(bad_flag(
                "coverage needs --data, or both --train and --test",
            ))
        }
    };
    let classification = splits[0].1.space.is_finite();
    let psi = parse_psi(a.model.psi.as_deref(), classification)?;
    let cfg = TransducerConfig {
        psi,
        grid: parse_grid(&a.model.grid)?,
    };
    let alphas = if a.alpha.is_empty() {
        vec![0.05]
    } else {
        a.alpha.clone()
    };
    check_alphas(&alphas)?;
    let adjustments: Vec<Adjustment> = if !classification {
        vec![Adjustment::Raw]
    } else if a.adjust.is_empty() {
        vec![Adjustment::Conditioned, Adjustment::Stretched]
    } else {
        a.adjust.iter().map(|&x| x.into()).collect()
    };

    let source = match (&a.data, &a.train, &a.test) {
        (Some(d), _, _) => format!(
            "data={d} splits={} split_seed={}",
            a.splits,
            a.split_seed.unwrap_or(seed)
        ),
        (_, Some(tr), Some(te)) => format!("train={tr} test={te}"),
        _ => unreachable!(),
    };
    let config = format!(
        "possic coverage {source} psi={} adjust={} alpha={} grid={} standardize={} seed={}",
        psi_label(&psi),
        adjustments
            .iter()
            .map(|a| a.as_str())
            .collect::<Vec<_>>()
            .join(","),
        fmt_alphas(&alphas),
        a.model.grid,
        a.model.standardize,
        seed
    );
    let mut table = Table::new(
        config,
        &[
            "split",
            "adjust",
            "alpha",
            "n_train",
            "n_test",
            "coverage",
            "mean_size",
        ],
    );
    // (adjustment, alpha) -> sums for the closing mean rows.
    let mut totals = vec![(0.0f64, 0.0f64); adjustments.len() * alphas.len()];
    for (name, mut train, mut test) in splits.iter().cloned() {
        if a.model.standardize {
            let reference = train.clone();
            datasets::standardize(&reference, &mut [&mut train, &mut test]);
        }
        for (ai, &adj) in adjustments.iter().enumerate() {
            for (li, &alpha) in alphas.iter().enumerate() {
                let r = evaluate_coverage(&train, &test, &cfg, adj, alpha)?;
                let t = &mut totals[ai * alphas.len() + li];
                t.0 += r.empirical_coverage;
                t.1 += r.mean_size;
                table.rows.push(vec![
                    name.clone(),
                    adj.as_str().into(),
                    num(alpha),
                    train.len().to_string(),
                    r.n_test.to_string(),
                    num(r.empirical_coverage),
                    num(r.mean_size),
                ]);
            }
        }
    }
    let k = splits.len() as f64;
    for (ai, adj) in adjustments.iter().enumerate() {
        for (li, &alpha) in alphas.iter().enumerate() {
            let t = totals[ai * alphas.len() + li];
            table.rows.push(vec![
                "mean".into(),
                adj.as_str().into(),
                num(alpha),
                String::new(),
                String::new(),
                num(t.0 / k),
                num(t.1 / k),
            ]);
        }
    }
    Ok(table)
}

fn sweep_setup(
    s: &SweepArgs,
    seed: u64,
    default_gen: &str,
    default_n: usize,
    default_reps: u64,
) -> Result<(GeneratorSpec, String, usize, u64, Vec<f64>)> {
    let gen_name = s.gen.clone().unwrap_or_else(|| default_gen.to_string());
    let gen = parse_generator(&gen_name, seed)?;
    let n = s.n.unwrap_or(default_n);
    let reps = s.reps.unwrap_or(default_reps);
    if reps == 0 {
        return Err(bad_flag("--reps must be at least 1"));
    }
    if n == 0 {
        return Err(bad_flag("--n must be at least 1"));
    }
    let alphas = alphas_from(s)?;
    check_alphas(&alphas)?;
    Ok((gen, gen_name, n, reps, alphas))
}

fn cmd_validity(a: &ValidityArgs, seed: u64, diag: &mut dyn Write) -> Result<Table> {
    let s = &a.sweep;
    let (gen, gen_name, n, reps, alphas) = sweep_setup(s, seed, "sincube", 20, 2000)?;
    let classification = gen.space().is_finite();
    let psi = parse_psi(s.psi.as_deref(), classification)?;
    let cfg = TransducerConfig {
        psi,
        grid: GridSpec::Default,
    };
    let adjustment = if classification {
        s.adjust.into()
    } else {
        Adjustment::Raw
    };
    let r = validity_sweep(&gen, n, &cfg, adjustment, reps, &alphas)?;
    let config = format!(
        "possic diagnose validity gen={gen_name} n={n} reps={reps} psi={} adjust={} alphas={} seed={seed}",
        psi_label(&psi),
        adjustment.as_str(),
        alphas_desc(s),
    );
    let mut table = Table::new(config, &["alpha", "estimate", "stderr"]);
    for ((al, f), se) in r.alphas.iter().zip(&r.cdf).zip(&r.stderr) {
        table.rows.push(vec![num(*al), num(*f), num(*se)]);
    }
    if adjustment == Adjustment::Raw {
        let c = r.chi_square_uniform();
        let _ = writeln!(
            diag,
            "chi-square vs uniform on {{1/{m},...,{m}/{m}}}: statistic={} df={} p={}",
            num(c.statistic),
            c.df,
            num(c.p_value),
            m = n + 1
        );
    }
    let v = r.violations(3.0);
    if !v.is_empty() {
        let _ = writeln!(
            diag,
            "warning: estimate exceeds alpha + 3 se at alpha={}",
            fmt_alphas(&v)
        );
    }
    Ok(table)
}

fn alphas_desc(s: &SweepArgs) -> String {
    match &s.alphas {
        Some(a) => a.clone(),
        None => format!("step:{}", num(s.alpha_step)),
    }
}

fn cmd_fcurve(a: &FcurveArgs, seed: u64, diag: &mut dyn Write) -> Result<Table> {
    let s = &a.sweep;
    let (gen, gen_name, n, reps, alphas) = sweep_setup(s, seed, "unif:-5:5", 5, 10_000)?;
    let space = gen.space();
    let assertion = parse_assertion(&a.assertion, &space)?;
    let (predictor, detail) = match a.predictor {
        PredictorArg::BayesT => {
            if space.is_finite() {
                return Err(bad_flag("bayes-t needs a continuous generator"));
            }
            let prior = parse_hyper(&a.hyper)?;
            (FPredictor::BayesT(prior), format!("hyper={}", a.hyper))
        }
        PredictorArg::Conformal => {
            let psi = parse_psi(s.psi.as_deref(), space.is_finite())?;
            let adjustment = if space.is_finite() {
                s.adjust.into()
            } else {
                Adjustment::Raw
            };
            (
                FPredictor::Conformal {
                    cfg: TransducerConfig {
                        psi,
                        grid: GridSpec::Default,
                    },
                    adjustment,
                },
                format!("psi={} adjust={}", psi_label(&psi), adjustment.as_str()),
            )
        }
    };
    let f = f_curve(&gen, n, &predictor, &assertion, reps, &alphas)?;
    let config = format!(
        "possic diagnose fcurve gen={gen_name} n={n} reps={reps} predictor={} {detail} assertion={} alphas={} seed={seed}",
        match a.predictor {
            PredictorArg::BayesT => "bayes-t",
            PredictorArg::Conformal => "conformal",
        },
        a.assertion,
        alphas_desc(s),
    );
    let mut table = Table::new(config, &["alpha", "estimate", "stderr"]);
    for ((al, e), se) in f.alphas.iter().zip(&f.estimates).zip(&f.stderr) {
        table.rows.push(vec![num(*al), num(*e), num(*se)]);
    }
    let v = f.violations(2.0);
    if !v.is_empty() {
        let _ = writeln!(
            diag,
            "warning: validity fails; estimate exceeds alpha + 2 se at {} of {} levels",
            v.len(),
            f.alphas.len()
        );
    }
    Ok(table)
}

fn cmd_datasets_list() -> Table {
    let mut t = Table::new("possic datasets list".into(), &["name", "description"]);
    for (name, desc) in datasets::BUILTIN_NAMES {
        t.rows.push(vec![name.into(), desc.into()]);
    }
    t
}

fn run(cli: &Cli, diag: &mut dyn Write) -> Result<()> {
    let table = match &cli.command {
        Command::Predict(a) => cmd_predict(a, cli.seed, diag)?,
        Command::Coverage(a) => cmd_coverage(a, cli.seed)?,
        Command::Diagnose(DiagnoseCommand::Validity(a)) => cmd_validity(a, cli.seed, diag)?,
        Command::Diagnose(DiagnoseCommand::Fcurve(a)) => cmd_fcurve(a, cli.seed, diag)?,
        Command::Datasets(DatasetsCommand::List) => cmd_datasets_list(),
    };
    let io_err = |e: io::Error| bad_flag(format!("cannot write output: {e}"));
    match &cli.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| bad_flag(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(f);
            table.write(cli.format, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(cli.format, &mut w).map_err(io_err)
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I>(args: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[bad-flags]: {first}");
            return crate::error::ErrorCategory::BadFlags.exit_code();
        }
    };
    let stderr = io::stderr();
    let mut diag = stderr.lock();
    match run(&cli, &mut diag) {
        Ok(()) => 0,
        Err(e) => {
            let cat = e.category();
            let _ = writeln!(diag, "error[{}]: {e}", cat.as_str());
            cat.exit_code()
        }
    }
}
