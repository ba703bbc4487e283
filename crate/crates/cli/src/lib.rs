//! `khintchine-lab`: seeded, worker-count independent experiment runs over
//! `khintchine-core`, each leaving CSV/JSON outputs and a manifest of their
//! digests.

pub mod config;
pub mod output;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use khintchine_core::approx::{dani_cross_check, scan_hits, survey, ScanPoint};
use khintchine_core::constants::{alpha_estimate, cantor_alphas, cover_constant, varpi_of};
use khintchine_core::dani::{equivalence_check, RateFunction};
use khintchine_core::excursion::{
    default_budget, diagonal_excursions, growth_bound, growth_bound_check, tail_report, ExcursionRecord,
};
use khintchine_core::ifs::IfsSystem;
use khintchine_core::lattice::CompactWindow;
use khintchine_core::orbit::{stream_point, walk_heights};
use khintchine_core::seeds::{derive_seed, task_rng};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use config::*;
use output::{num, opt, OutputSet};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<khintchine_core::Error> for CliError {
    fn from(e: khintchine_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "khintchine-lab", version, about = "Diophantine approximation on fractals: lattice-orbit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Height trajectories of random walks on the space of lattices.
    Simulate(SimulateArgs),
    /// Excursion growth along diagonal orbits and return-time tails of walks.
    Excursions(ExcursionsArgs),
    /// Rate function of ψ and the series change of variables.
    Dani(DaniArgs),
    /// Brute-force approximations of a point and the lattice cross-check.
    Approx(ApproxArgs),
    /// Band-wise approximation frequencies over sampled fractal points.
    Survey(SurveyArgs),
    /// Neighbourhood decay exponents α_l and ϖ.
    Constants(ConstantsArgs),
    /// Summarise finished runs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: KHINTCHINE_LAB_WORKERS, then all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Builtin system such as `cantor:2`, or a path to an IFS description.
    #[arg(long)]
    pub system: Option<String>,
}

macro_rules! flag_struct {
    ($name:ident { $($(#[$m:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Args, Serialize)]
        pub struct $name {
            #[command(flatten)]
            #[serde(skip)]
            pub common: Common,
            $(
                $(#[$m])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

flag_struct!(SimulateArgs { walks: usize, steps: usize, level: f64 });
flag_struct!(ExcursionsArgs {
    orbits: usize,
    n_max: usize,
    level: f64,
    grid_refine: usize,
    walks: usize,
    steps: usize,
    tail_level: f64,
    m: usize,
    delta: f64,
    varpi: f64,
});
flag_struct!(DaniArgs { psi: String, d: usize, alpha: f64, t_max: f64, points: usize });
flag_struct!(ApproxArgs { point: String, psi: String, q_max: u64, cross_check: bool, tol: f64 });
flag_struct!(SurveyArgs { psi: String, points: usize, q_max: u64, depth: usize });
flag_struct!(ConstantsArgs { l_max: usize, n_min: u32, n_max: u32, samples: usize, search_budget: usize });

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directories.
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for `summary.md`; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("khintchine-lab: {e}");
            e.exit_code()
        }
    }
}

/// Settings shared by every experiment command after merging.
struct Context {
    command: &'static str,
    system_spec: SystemSpec,
    system: IfsSystem,
    seed: u64,
    workers: usize,
    out: PathBuf,
    file: ConfigFile,
}

impl Context {
    fn new(command: &'static str, common: &Common) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        if let Some(c) = &file.command {
            if c != command {
                return Err(CliError::Config(format!("config is for `{c}`, not `{command}`")));
            }
        }
        let system_spec = match &common.system {
            Some(s) if s.ends_with(".json") => {
                let text = std::fs::read_to_string(s).map_err(|e| CliError::Config(format!("system {s}: {e}")))?;
                SystemSpec::Custom(
                    khintchine_core::ifs::IfsDescription::from_json(&text)
                        .map_err(|e| CliError::Config(format!("system {s}: {e}")))?,
                )
            }
            Some(s) => SystemSpec::Builtin(s.clone()),
            None => file.system.clone().unwrap_or_else(|| SystemSpec::Builtin("cantor:1".into())),
        };
        let system = system_spec.build()?;
        let workers = resolve_workers(common.workers, file.workers)?;
        Ok(Context {
            command,
            seed: common.seed.or(file.seed).unwrap_or(1),
            out: common.out.clone().or_else(|| file.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(command)),
            system_spec,
            system,
            workers,
            file,
        })
    }

    fn params<T: serde::de::DeserializeOwned>(&self, flags: &impl Serialize) -> Result<T, CliError> {
        merge_parameters(&self.file.parameters, serde_json::to_value(flags).expect("serialisable"))
    }

    fn echo(&self, params: &impl Serialize) -> Value {
        json!({
            "command": self.command,
            "system": self.system_spec,
            "seed": self.seed,
            "workers": self.workers,
            "output_dir": self.out,
            "parameters": params,
        })
    }

    /// Runs `body` on a pool of `workers` threads and writes the manifest.
    fn execute<P: Serialize>(
        &self,
        params: &P,
        body: impl FnOnce(&mut OutputSet) -> Result<Value, CliError> + Send,
    ) -> Result<(), CliError> {
        let started = output::now();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
        let mut out = OutputSet::create(&self.out)?;
        let verdicts = pool.install(|| body(&mut out))?;
        out.json(output::SUMMARY, &verdicts)?;
        let dir = out.dir().to_path_buf();
        let manifest = out.finish(self.command, self.echo(params), started, verdicts)?;
        eprintln!("{}: wrote {} files to {}", self.command, manifest.outputs.len() + 1, dir.display());
        Ok(())
    }
}

fn positive(name: &str, ok: bool) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("parameter `{name}` is out of range")))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Excursions(a) => excursions(&a),
        Command::Dani(a) => dani(&a),
        Command::Approx(a) => approx(&a),
        Command::Survey(a) => survey_cmd(&a),
        Command::Constants(a) => constants(&a),
        Command::Report(a) => report::run(&a),
    }
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let ctx = Context::new("simulate", &args.common)?;
    let p: SimulateParams = ctx.params(args)?;
    positive("walks", p.walks > 0)?;
    positive("steps", p.steps > 0)?;
    let sys = &ctx.system;
    let window = CompactWindow::new(p.level);
    ctx.execute(&p, |out| {
        let runs = (0..p.walks)
            .into_par_iter()
            .map(|w| {
                let mut rng = task_rng(ctx.seed, w as u64);
                walk_heights(sys, &sys.random_word(p.steps, &mut rng))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::with_capacity(p.walks * (p.steps + 1));
        let mut inside = 0usize;
        let mut max_height = f64::NEG_INFINITY;
        for (w, tr) in runs.iter().enumerate() {
            for (k, &h) in tr.heights.iter().enumerate() {
                let in_window = window.contains_height(h);
                inside += usize::from(in_window && k > 0);
                max_height = max_height.max(h);
                rows.push(vec![w.to_string(), k.to_string(), num(h), u8::from(in_window).to_string()]);
            }
        }
        out.csv("heights.csv", &["walk", "step", "height", "in_window"], &rows)?;
        Ok(json!({
            "walks": p.walks,
            "steps": p.steps,
            "exact_arithmetic": runs.iter().all(|r| r.exact),
            "fraction_in_window": inside as f64 / (p.walks * p.steps) as f64,
            "max_height": max_height,
        }))
    })
}

fn excursions(args: &ExcursionsArgs) -> Result<(), CliError> {
    let ctx = Context::new("excursions", &args.common)?;
    let p: ExcursionsParams = ctx.params(args)?;
    positive("n_max", p.n_max > 0)?;
    positive("grid_refine", p.grid_refine > 0)?;
    positive("steps", p.walks == 0 || p.steps > 0)?;
    let sys = &ctx.system;
    let d = sys.dimension();
    let kappa = sys.ratio();
    let window = CompactWindow::new(p.level);
    ctx.execute(&p, |out| {
        let per_orbit: Vec<Vec<ExcursionRecord>> = (0..p.orbits)
            .into_par_iter()
            .map(|o| -> Result<_, CliError> {
                let mut rng = task_rng(ctx.seed, o as u64);
                let x = stream_point(sys, &sys.random_word(p.n_max + 40, &mut rng))?;
                Ok(diagonal_excursions(&x, kappa, &window, p.n_max, p.grid_refine)?)
            })
            .collect::<Result<_, _>>()?;
        let mut rows = Vec::new();
        let mut violations = 0;
        for (o, recs) in per_orbit.iter().enumerate() {
            let bad = growth_bound_check(recs, &window, kappa, d);
            violations += bad.len();
            for r in recs {
                let bound = growth_bound(r.length, kappa, d, window.q_const);
                rows.push(vec![
                    o.to_string(),
                    r.index.to_string(),
                    r.start_step.to_string(),
                    r.end_step.to_string(),
                    r.length.to_string(),
                    opt(r.peak),
                    num(r.peak_slack),
                    num(bound),
                    u8::from(bad.iter().any(|b| b.index == r.index)).to_string(),
                ]);
            }
        }
        out.csv(
            "excursions.csv",
            &["orbit", "index", "start_step", "end_step", "length", "peak", "peak_slack", "bound", "violation"],
            &rows,
        )?;
        let mut verdicts = json!({
            "orbits": p.orbits,
            "excursions": rows.len(),
            "growth_bound_violations": violations,
        });
        if p.walks > 0 {
            let varpi = p.varpi.unwrap_or_else(|| sys.similarity_dimension());
            let (m, delta) = match (p.m, p.delta) {
                (Some(m), Some(delta)) => (m, delta),
                (m, delta) => {
                    let b = default_budget(kappa, d, varpi)?;
                    (m.unwrap_or(b.m), delta.unwrap_or(b.delta))
                }
            };
            let tail = tail_report(sys, &CompactWindow::new(p.tail_level), p.walks, p.steps, derive_seed(ctx.seed, 1 << 40), m, delta)?;
            let rows: Vec<Vec<String>> = tail
                .thresholds
                .iter()
                .zip(&tail.empirical_tail)
                .zip(&tail.chebyshev_bound)
                .map(|((s, e), b)| vec![num(*s), num(*e), num(*b)])
                .collect();
            out.csv("tails.csv", &["s", "empirical_tail", "chebyshev_bound"], &rows)?;
            verdicts["tail"] = json!({
                "samples": tail.samples,
                "censored_walks": tail.censored,
                "start_points": tail.start_points,
                "m": tail.m,
                "delta": tail.delta,
                "theta_hat": tail.theta_hat,
                "fitted_rate": tail.fitted_rate,
                "fitted_rate_se": tail.fitted_rate_se,
                "rate_positive_95": tail.rate_significant(),
                "bound_dominates": tail.dominated(),
            });
        }
        Ok(verdicts)
    })
}

fn dani(args: &DaniArgs) -> Result<(), CliError> {
    let ctx = Context::new("dani", &args.common)?;
    let p: DaniParams = ctx.params(args)?;
    positive("d", p.d > 0)?;
    positive("points", p.points >= 2)?;
    let psi = p.psi.build()?;
    let alpha = p.alpha.unwrap_or_else(|| ctx.system.similarity_dimension());
    positive("alpha", alpha > 0.0)?;
    ctx.execute(&p, |out| {
        let rate = RateFunction::from_psi(&psi, p.d);
        let lo = rate.t_start.max(0.0) + 1e-9;
        if !(p.t_max > lo) {
            return Err(CliError::Config(format!("t_max must exceed t0 = {}", rate.t_start)));
        }
        let grid: Vec<f64> = (0..p.points).map(|i| lo + (p.t_max - lo) * i as f64 / (p.points - 1) as f64).collect();
        let rep = equivalence_check(&psi, p.d, alpha, &grid)?;
        let rows = rep
            .points
            .iter()
            .map(|q| -> Result<Vec<String>, CliError> {
                Ok(vec![
                    num(q.t),
                    num(q.x),
                    num(rate.eval(q.t)?),
                    num(q.i_psi),
                    num(q.i_r),
                    num(q.boundary),
                    num(q.residual),
                    num(q.ratio),
                ])
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.csv("dani.csv", &["t", "x", "r", "i_psi", "i_r", "boundary", "residual", "ratio"], &rows)?;
        Ok(json!({
            "d": rep.d,
            "alpha": rep.alpha,
            "gamma": rep.gamma,
            "t0": rep.t0,
            "x0": rep.x0,
            "max_residual": rep.max_residual,
            "ratio_drift": rep.ratio_drift,
            "khintchine_series": rep.khintchine,
            "rate_series": rep.rate,
            "verdicts_agree": rep.verdicts_agree,
            "q0_agree": rep.q0_agree,
        }))
    })
}

fn approx(args: &ApproxArgs) -> Result<(), CliError> {
    let ctx = Context::new("approx", &args.common)?;
    let p: ApproxParams = ctx.params(args)?;
    positive("q_max", p.q_max > 0)?;
    let psi = p.psi.build()?;
    let point = ScanPoint::parse(&p.point).map_err(|e| CliError::Config(format!("point: {e}")))?;
    ctx.execute(&p, |out| {
        let hits = scan_hits(&point, &psi, p.q_max)?;
        let rows: Vec<Vec<String>> = hits
            .iter()
            .map(|h| {
                let ps: Vec<String> = h.p.iter().map(|v| v.to_string()).collect();
                vec![h.q.to_string(), ps.join(" "), num(h.error), num(h.margin), opt(h.witness_time)]
            })
            .collect();
        out.csv("hits.csv", &["q", "p", "error", "margin", "witness_time"], &rows)?;
        let mut verdicts = json!({ "hits": hits.len(), "q_max": p.q_max });
        if p.cross_check {
            let rep = dani_cross_check(&point, &psi, p.q_max, p.tol, None)?;
            verdicts["cross_check"] = json!({
                "checked": rep.checked,
                "degenerate": rep.degenerate,
                "before_t0": rep.before_t0,
                "violations": rep.violations.len(),
                "converse_times": rep.converse_times,
                "crossings": rep.crossings,
                "converse_failures": rep.converse_failures.len(),
                "converse_unchecked": rep.converse_unchecked,
            });
        }
        Ok(verdicts)
    })
}

fn survey_cmd(args: &SurveyArgs) -> Result<(), CliError> {
    let ctx = Context::new("survey", &args.common)?;
    let p: SurveyParams = ctx.params(args)?;
    positive("q_max", p.q_max > 0)?;
    positive("points", p.points > 0)?;
    let psi = p.psi.build()?;
    let depth = p.depth.unwrap_or_else(|| ctx.system.default_depth());
    positive("depth", depth > 0)?;
    ctx.execute(&p, |out| {
        let table = survey(&ctx.system, &psi, p.points, p.q_max, depth, ctx.seed)?;
        let rows: Vec<Vec<String>> = table
            .bands
            .iter()
            .map(|b| {
                vec![
                    b.k.to_string(),
                    b.q_lo.to_string(),
                    b.q_hi.to_string(),
                    b.with_hit.to_string(),
                    b.n_uncertain.to_string(),
                    num(b.fraction),
                ]
            })
            .collect();
        out.csv("survey.csv", &["k", "q_lo", "q_hi", "with_hit", "uncertain", "fraction"], &rows)?;
        let tail: Vec<f64> = table.bands.iter().filter(|b| b.k >= 5).map(|b| b.fraction).collect();
        Ok(json!({
            "points": table.points,
            "q_max": table.q_max,
            "depth": table.depth,
            "khintchine_series": table.khintchine,
            "top_band_fraction": table.bands.last().map(|b| b.fraction),
            "non_increasing_from_k5": tail.windows(2).all(|w| w[1] <= w[0]),
        }))
    })
}

fn constants(args: &ConstantsArgs) -> Result<(), CliError> {
    let ctx = Context::new("constants", &args.common)?;
    let p: ConstantsParams = ctx.params(args)?;
    let d = ctx.system.dimension();
    let l_max = p.l_max.unwrap_or(d);
    positive("l_max", (1..=d).contains(&l_max))?;
    positive("n_min", p.n_min >= 1 && p.n_min <= p.n_max)?;
    positive("samples", p.samples > 0)?;
    let cantor = ctx.system_spec.is_cantor();
    ctx.execute(&p, |out| {
        let mut rows = Vec::new();
        let mut alphas = Vec::new();
        for l in 1..=l_max {
            let est = alpha_estimate(&ctx.system, l, (p.n_min, p.n_max), p.search_budget, p.samples, derive_seed(ctx.seed, l as u64))?;
            for r in &est.rows {
                // the covering bound μ(𝓛^{(ε)}) ≤ C_d 2^{−n} holds for every hyperplane of 𝒞^d
                let upper = (cantor && l == 1).then(|| (cover_constant(d) * 2f64.powi(-(r.n as i32))).min(1.0));
                let confidence = (r.ratio_ci.0 - r.ratio).abs().max((r.ratio_ci.1 - r.ratio).abs());
                rows.push(vec![
                    d.to_string(),
                    l.to_string(),
                    r.n.to_string(),
                    num(r.mass),
                    opt(upper),
                    num(r.ratio),
                    num(confidence),
                ]);
            }
            alphas.push(json!({ "l": l, "alpha_hat": est.alpha_hat, "alpha_se": est.alpha_se }));
        }
        out.csv("constants.csv", &["d", "l", "n", "lower", "upper", "ratio", "confidence"], &rows)?;
        let hats: Vec<f64> = alphas.iter().map(|a| a["alpha_hat"].as_f64().unwrap_or(f64::NAN)).collect();
        let mut verdicts = json!({ "d": d, "alphas": alphas, "heuristic": !cantor });
        if l_max == d {
            verdicts["varpi_estimate"] = json!(varpi_of(&hats, d)?);
        }
        if cantor {
            verdicts["varpi_exact"] = json!(varpi_of(&cantor_alphas(d), d)?);
        }
        Ok(verdicts)
    })
}
