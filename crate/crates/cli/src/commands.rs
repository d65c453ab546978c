use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use occflow::lov::{simulate_lov, GammaScale, LovConfig, Sensitivity};
use occflow::occupation::{make_grid, Clock};
use occflow::pricing::{bl_occupation_strike, mc_price, read_quotes, timer_price_mc, PayoffSpec, PriceSurface};
use occflow::sde::{
    brownian_path, euler_occupied, ConstantVol, Ensemble, GuyonToyVol, LocalVolTable, SimConfig,
};
use occflow::stats::mean_stderr;
use occflow::stopping::reference::{self, Benchmark};
use occflow::stopping::{
    analytic_euro_value, eps_sweep, european_value, inspection_value, lsmc_value, nonincreasing_within,
    two_date_value, HitRule, LsmcConfig, ScanGrid, StoppingResult, StudyConfig, SweepStrategy,
};
use serde::Serialize;

use crate::config::{
    self, echo, EllKind, FileConfig, GammaArg, HitRuleArg, LovFile, ModelKind, StopMethod, SweepArg,
};
use crate::error::{CliError, CliResult};
use crate::output::{num, Artifact};
use crate::{Cli, Command, ModelArgs, NumericArgs, Target};

/// Standard errors by which neighbouring points of an eps curve may rise.
const MONOTONE_SLACK: f64 = 3.0;
/// Published closed-form values are rounded to four decimals.
const ROUNDING: f64 = 5e-5;

struct Ctx {
    name: &'static str,
    seed: u64,
    out: Option<PathBuf>,
    timing: bool,
    start: Instant,
}

impl Ctx {
    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn finish(&self, mut art: Artifact, summary: &str) -> CliResult<()> {
        if self.timing {
            art.note("runtime_s", format!("{:.3}", self.elapsed()));
        }
        art.emit(self.out.as_deref())?;
        eprintln!("{}: {summary} (runtime {:.2} s)", self.name, self.elapsed());
        Ok(())
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.global.config {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &file.command {
        if c != name {
            return Err(CliError::Config(format!(
                "config file is written for command '{c}', not '{name}'"
            )));
        }
    }
    let ctx = Ctx {
        name,
        seed: cli.global.seed.or(file.seed).unwrap_or(0),
        out: cli.global.out.clone().or_else(|| file.output.clone()),
        timing: cli.global.timing,
        start: Instant::now(),
    };
    match cli.command {
        Command::Simulate { numeric, model } => simulate(&ctx, &file, &numeric, &model, ModelKind::Gbm),
        Command::LovSim { numeric, model } => {
            if let Some(k) = model.model.filter(|k| *k != ModelKind::Lov) {
                return Err(CliError::Config(format!("lov-sim runs the lov model, got --model {k:?}")));
            }
            simulate(&ctx, &file, &numeric, &model, ModelKind::Lov)
        }
        Command::Price { payoff, numeric, model } => price(&ctx, &file, payoff.as_deref(), &numeric, &model),
        Command::Replicate { quotes, corridor, maturity, spot, rate, dividend } => {
            let args = ReplicateArgs { quotes, corridor, maturity, spot, rate, dividend };
            replicate(&ctx, &file, args)
        }
        Command::Stop { method, t, iota, mbar, hit_rule, plain_basis, offline_paths, steps, paths, eps } => {
            let args = StopArgs { method, t, iota, mbar, hit_rule, plain_basis, offline_paths, steps, paths, eps };
            stop(&ctx, &file, args)
        }
        Command::ConvergeEps { eps, strategy, iota, steps, paths } => {
            converge(&ctx, &file, eps, strategy, iota, steps, paths)
        }
        Command::Reproduce { target } => reproduce(&ctx, target),
    }
}

#[derive(Debug, Serialize)]
struct Numeric {
    horizon: f64,
    steps: usize,
    paths: usize,
    antithetic: bool,
}

fn resolve_numeric(args: &NumericArgs, file: &FileConfig, steps: usize, paths: usize) -> Numeric {
    let f = &file.numeric;
    Numeric {
        horizon: args.horizon.or(f.horizon).unwrap_or(1.0),
        steps: args.steps.or(f.steps).unwrap_or(steps),
        paths: args.paths.or(f.paths).unwrap_or(paths),
        antithetic: args.antithetic || f.antithetic.unwrap_or(false),
    }
}

#[derive(Debug, Serialize)]
struct Model {
    kind: ModelKind,
    sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_loc: Option<String>,
    x0: f64,
    rate: f64,
    dividend: f64,
    kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
}

fn resolve_model(args: &ModelArgs, file: &FileConfig, default: ModelKind) -> Model {
    let f = &file.model;
    let kind = args.model.or(f.kind).unwrap_or(default);
    let lov = kind == ModelKind::Lov;
    let guyon = kind == ModelKind::Guyon;
    let kappa = args
        .kappa
        .or(f.kappa)
        .or(if lov { file.lov.kappa } else { None })
        .unwrap_or(if guyon { 12.0 } else { 0.0 });
    let sigma_loc = args
        .sigma_loc
        .clone()
        .or_else(|| f.sigma_loc.clone())
        .or_else(|| if lov { file.lov.sigma_loc.clone() } else { None });
    Model {
        kind,
        sigma: args.sigma.or(f.sigma).unwrap_or(0.2),
        sigma_loc: sigma_loc.map(|p| p.display().to_string()),
        x0: args.x0.or(f.x0).unwrap_or(if kind == ModelKind::Bm { 0.0 } else { 100.0 }),
        rate: args.rate.or(f.rate).unwrap_or(0.0),
        dividend: args.dividend.or(f.dividend).unwrap_or(0.0),
        kappa,
        alpha: guyon.then(|| f.alpha.unwrap_or(2.1)),
        beta: guyon.then(|| f.beta.unwrap_or(1.2)),
        gamma: guyon.then(|| f.gamma.unwrap_or(1.9)),
    }
}

#[derive(Debug, Serialize)]
struct Grid {
    center: f64,
    half_span: f64,
    bins: usize,
}

fn resolve_grid(args: &ModelArgs, file: &FileConfig, model: &Model, horizon: f64) -> Grid {
    let f = &file.grid;
    let span = if model.kind == ModelKind::Bm {
        6.0 * model.sigma * horizon.sqrt()
    } else {
        0.505 * model.x0.abs()
    };
    let (c, s, b) = match args.grid {
        Some(g) => (Some(g.0), Some(g.1), Some(g.2)),
        None => (None, None, None),
    };
    Grid {
        center: c.or(f.center).unwrap_or(model.x0),
        half_span: s.or(f.half_span).unwrap_or(span),
        bins: b.or(f.bins).unwrap_or(101),
    }
}

#[derive(Debug, Serialize)]
struct Ell {
    kind: EllKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    center: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Bandwidth {
    kappa_b: f64,
    exponent: f64,
    floor: f64,
}

#[derive(Debug, Serialize)]
struct Lov {
    multiplicative: bool,
    var_floor: f64,
    gamma: GammaArg,
    ell: Ell,
    bandwidth: Bandwidth,
}

fn need(v: Option<f64>, key: &str, kind: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Config(format!("lov.ell.{key} is required for kind = \"{kind}\"")))
}

fn resolve_lov(f: &LovFile, table: &LocalVolTable, kappa: f64) -> CliResult<(Lov, LovConfig)> {
    let e = &f.ell;
    let kind = e.kind.unwrap_or(EllKind::Zero);
    let (ell, sensitivity) = match kind {
        EllKind::Zero => {
            let ell = Ell { kind, beta: None, lo: None, hi: None, amplitude: None, alpha: None, center: None };
            (ell, Sensitivity::Zero)
        }
        EllKind::OneFactor => {
            let (beta, lo, hi) = (
                need(e.beta, "beta", "one_factor")?,
                need(e.lo, "lo", "one_factor")?,
                need(e.hi, "hi", "one_factor")?,
            );
            let ell = Ell { kind, beta: Some(beta), lo: Some(lo), hi: Some(hi), amplitude: None, alpha: None, center: None };
            (ell, Sensitivity::OneFactor { beta, lo, hi })
        }
        EllKind::Ema => {
            let beta = need(e.beta, "beta", "ema")?;
            let ell = Ell { kind, beta: Some(beta), lo: None, hi: None, amplitude: None, alpha: None, center: None };
            (ell, Sensitivity::Ema { beta })
        }
        EllKind::Tanh => {
            let alpha = need(e.alpha, "alpha", "tanh")?;
            let Sensitivity::Tanh { amplitude, center, .. } = Sensitivity::tanh_for(table, alpha)? else {
                unreachable!("tanh_for builds a tanh sensitivity")
            };
            let amplitude = e.amplitude.unwrap_or(amplitude);
            let center = e.center.unwrap_or(center);
            let ell = Ell {
                kind,
                beta: None,
                lo: None,
                hi: None,
                amplitude: Some(amplitude),
                alpha: Some(alpha),
                center: Some(center),
            };
            (ell, Sensitivity::Tanh { amplitude, alpha, center })
        }
    };
    let mut cfg = LovConfig::new(table.clone(), sensitivity);
    cfg.kappa = kappa;
    cfg.multiplicative = f.multiplicative.unwrap_or(cfg.multiplicative);
    cfg.var_floor = f.var_floor.unwrap_or(cfg.var_floor);
    cfg.gamma = match f.gamma {
        Some(GammaArg::ClosedForm) => GammaScale::ClosedForm,
        Some(GammaArg::Mass) | None => GammaScale::Mass,
    };
    cfg.kappa_b = f.bandwidth.kappa_b.unwrap_or(cfg.kappa_b);
    cfg.bandwidth_exponent = f.bandwidth.exponent.unwrap_or(cfg.bandwidth_exponent);
    cfg.bandwidth_floor = f.bandwidth.floor.unwrap_or(cfg.bandwidth_floor);
    cfg.validate()?;
    let lov = Lov {
        multiplicative: cfg.multiplicative,
        var_floor: cfg.var_floor,
        gamma: if cfg.gamma == GammaScale::Mass { GammaArg::Mass } else { GammaArg::ClosedForm },
        ell,
        bandwidth: Bandwidth {
            kappa_b: cfg.kappa_b,
            exponent: cfg.bandwidth_exponent,
            floor: cfg.bandwidth_floor,
        },
    };
    Ok((lov, cfg))
}

fn read_table(path: &str) -> CliResult<LocalVolTable> {
    let f = File::open(path).map_err(|e| CliError::Config(format!("cannot read sigma_loc {path}: {e}")))?;
    LocalVolTable::from_csv(f).map_err(|e| CliError::Config(format!("sigma_loc {path}: {e}")))
}

/// Local volatility table of the model: the `sigma_loc` file or a flat `sigma`.
fn model_table(model: &Model) -> CliResult<LocalVolTable> {
    match &model.sigma_loc {
        Some(p) => read_table(p),
        None => Ok(LocalVolTable::constant(model.sigma)?),
    }
}

struct Simulated {
    ensemble: Ensemble,
    settings: Vec<(String, String)>,
    notes: Vec<(&'static str, String)>,
}

/// Runs a path-dependent model, recording the calendar and variance flows as well.
fn simulate_model(
    file: &FileConfig,
    numeric: &Numeric,
    model: &Model,
    grid: &Grid,
    seed: u64,
    record: Vec<Clock>,
) -> CliResult<Simulated> {
    let g = Arc::new(make_grid(grid.center, grid.half_span, grid.bins)?);
    let mut cfg = SimConfig::new(numeric.horizon, numeric.steps, numeric.paths, g);
    cfg.seed = seed;
    cfg.antithetic = numeric.antithetic;
    cfg.x0 = model.x0;
    cfg.rate = model.rate;
    cfg.dividend = model.dividend;
    cfg.record_clocks = record;
    let mut settings = Vec::new();
    let mut notes = Vec::new();
    let ensemble = match model.kind {
        ModelKind::Bm => {
            return Err(CliError::Config(
                "model bm has no occupation dynamics; use gbm, local, guyon or lov".into(),
            ))
        }
        ModelKind::Gbm => euler_occupied(&cfg, &ConstantVol(model.sigma))?,
        ModelKind::Local => {
            let path = model.sigma_loc.as_deref().ok_or_else(|| {
                CliError::Config("model local needs model.sigma_loc (or --sigma-loc)".into())
            })?;
            euler_occupied(&cfg, &read_table(path)?)?
        }
        ModelKind::Guyon => {
            cfg.clock = Clock::exponential(model.kappa)?;
            let (a, b, c) = (model.alpha.unwrap_or(2.1), model.beta.unwrap_or(1.2), model.gamma.unwrap_or(1.9));
            euler_occupied(&cfg, &GuyonToyVol::new(a, b, c, model.x0)?)?
        }
        ModelKind::Lov => {
            let (lov, lcfg) = resolve_lov(&file.lov, &model_table(model)?, model.kappa)?;
            settings = echo("lov", &lov);
            let run = simulate_lov(&cfg, &lcfg)?;
            notes.push(("floor_events", run.floor_events.to_string()));
            notes.push(("positivity_pass", run.positivity.pass.to_string()));
            notes.push(("positivity_worst_ratio", num(run.positivity.worst_ratio)));
            run.ensemble
        }
    };
    Ok(Simulated { ensemble, settings, notes })
}

fn base_settings(numeric: &Numeric, model: &Model, grid: Option<&Grid>) -> Vec<(String, String)> {
    let mut s = echo("numeric", numeric);
    s.extend(echo("model", model));
    if let Some(g) = grid {
        s.extend(echo("grid", g));
    }
    s
}

const PATH_COLUMNS: [&str; 5] = ["path", "step", "time", "level", "vol"];

fn simulate(
    ctx: &Ctx,
    file: &FileConfig,
    args: &NumericArgs,
    margs: &ModelArgs,
    default: ModelKind,
) -> CliResult<()> {
    let (steps, paths) = if default == ModelKind::Lov { (50, 4096) } else { (400, 1000) };
    let numeric = resolve_numeric(args, file, steps, paths);
    let model = resolve_model(margs, file, default);
    let terminal: Vec<f64>;
    let mut art;
    if model.kind == ModelKind::Bm {
        let cfg = StudyConfig {
            horizon: numeric.horizon,
            n_steps: numeric.steps,
            eps: 1.0,
            n_paths: numeric.paths,
            seed: ctx.seed,
            antithetic: numeric.antithetic,
        };
        cfg.validate()?;
        art = Artifact::new(ctx.name, ctx.seed, base_settings(&numeric, &model, None), &PATH_COLUMNS);
        let dt = cfg.dt();
        let mut last = Vec::with_capacity(cfg.n_paths);
        for j in 0..cfg.n_paths {
            let w = brownian_path(ctx.seed, j, cfg.n_paths, cfg.antithetic, cfg.n_steps, dt, 0.0);
            for (n, x) in w.iter().enumerate() {
                let vol = if n < cfg.n_steps { num(model.sigma) } else { String::new() };
                art.row(vec![j.to_string(), n.to_string(), num(n as f64 * dt), num(model.x0 + model.sigma * x), vol]);
            }
            last.push(model.x0 + model.sigma * w[cfg.n_steps]);
        }
        terminal = last;
    } else {
        let grid = resolve_grid(margs, file, &model, numeric.horizon);
        let sim = simulate_model(file, &numeric, &model, &grid, ctx.seed, Vec::new())?;
        let mut settings = base_settings(&numeric, &model, Some(&grid));
        settings.extend(sim.settings);
        art = Artifact::new(ctx.name, ctx.seed, settings, &PATH_COLUMNS);
        for (k, v) in sim.notes {
            art.note(k, v);
        }
        let ens = &sim.ensemble;
        for (j, p) in ens.paths.iter().enumerate() {
            for (n, x) in p.levels.iter().enumerate() {
                let vol = p.vols.get(n).map(|v| num(*v)).unwrap_or_default();
                art.row(vec![j.to_string(), n.to_string(), num(ens.times[n]), num(*x), vol]);
            }
        }
        terminal = ens.paths.iter().map(|p| p.terminal()).collect();
    }
    let est = mean_stderr(&terminal, numeric.antithetic)?;
    ctx.finish(art, &format!("mean X_T = {:.6} ± {:.6}", est.mean, est.stderr))
}

fn price(
    ctx: &Ctx,
    file: &FileConfig,
    payoff: Option<&Path>,
    args: &NumericArgs,
    margs: &ModelArgs,
) -> CliResult<()> {
    let spec = match payoff {
        Some(p) => config::load_payoff(p)?,
        None => file
            .payoff
            .ok_or_else(|| CliError::Config("no payoff: pass --payoff FILE or add a [payoff] section".into()))?,
    };
    spec.validate()?;
    let numeric = resolve_numeric(args, file, 400, 1 << 14);
    let model = resolve_model(margs, file, ModelKind::Gbm);
    let grid = resolve_grid(margs, file, &model, numeric.horizon);
    let sim = simulate_model(
        file,
        &numeric,
        &model,
        &grid,
        ctx.seed,
        vec![Clock::Calendar, Clock::QuadraticVariation],
    )?;
    let mut settings = base_settings(&numeric, &model, Some(&grid));
    settings.extend(sim.settings);
    settings.extend(echo("payoff", &spec));
    let mut columns = vec!["payoff", "value", "stderr", "n_paths", "seed"];
    if ctx.timing {
        columns.push("runtime_s");
    }
    let mut art = Artifact::new(ctx.name, ctx.seed, settings, &columns);
    for (k, v) in sim.notes {
        art.note(k, v);
    }
    let est = match spec {
        PayoffSpec::TimerCall { budget, strike } => {
            let t = timer_price_mc(budget, strike, &sim.ensemble)?;
            art.note("timer_unreached", t.unreached);
            art.note("timer_mean_expiry", num(t.mean_expiry));
            t.price
        }
        _ => mc_price(&spec, &sim.ensemble)?,
    };
    let mut row = vec![
        spec.name().to_string(),
        num(est.value),
        num(est.stderr),
        est.n_paths.to_string(),
        ctx.seed.to_string(),
    ];
    if ctx.timing {
        row.push(format!("{:.3}", ctx.elapsed()));
    }
    art.row(row);
    ctx.finish(art, &format!("{} = {:.6} ± {:.6}", spec.name(), est.value, est.stderr))
}

struct ReplicateArgs {
    quotes: Option<PathBuf>,
    corridor: Option<(f64, f64)>,
    maturity: Option<f64>,
    spot: Option<f64>,
    rate: Option<f64>,
    dividend: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Replication {
    quotes: String,
    corridor: [f64; 2],
    maturity: f64,
    spot: f64,
    rate: f64,
    dividend: f64,
}

fn replicate(ctx: &Ctx, file: &FileConfig, a: ReplicateArgs) -> CliResult<()> {
    let f = &file.replicate;
    let missing = |k: &str| CliError::Config(format!("replicate needs --{k} (or replicate.{k})"));
    let quotes = a.quotes.or_else(|| f.quotes.clone()).ok_or_else(|| missing("quotes"))?;
    let (x1, x2) = a.corridor.or(f.corridor.map(|c| (c[0], c[1]))).ok_or_else(|| missing("corridor"))?;
    let maturity = a.maturity.or(f.maturity).ok_or_else(|| missing("maturity"))?;
    let r = Replication {
        quotes: quotes.display().to_string(),
        corridor: [x1, x2],
        maturity,
        spot: a.spot.or(f.spot).or(file.model.x0).unwrap_or(100.0),
        rate: a.rate.or(file.model.rate).unwrap_or(0.0),
        dividend: a.dividend.or(file.model.dividend).unwrap_or(0.0),
    };
    let input = File::open(&quotes)
        .map_err(|e| CliError::Config(format!("cannot read quotes {}: {e}", quotes.display())))?;
    let rows = read_quotes(input)?;
    let surface = PriceSurface::from_quotes(&rows, r.spot, r.rate, r.dividend)?;
    let occ = bl_occupation_strike(&surface, x1, x2, maturity)?;
    let mut art = Artifact::new(
        ctx.name,
        ctx.seed,
        echo("replicate", &r),
        &["x1", "x2", "maturity", "variance_occupation", "annualized_strike"],
    );
    art.row(vec![num(x1), num(x2), num(maturity), num(occ), num(occ / maturity)]);
    ctx.finish(art, &format!("variance occupation of [{x1}, {x2}] to {maturity} = {occ:.6}"))
}

struct StopArgs {
    method: Option<StopMethod>,
    t: Option<Vec<f64>>,
    iota: Option<Vec<f64>>,
    mbar: Option<Vec<usize>>,
    hit_rule: Option<HitRuleArg>,
    plain_basis: bool,
    offline_paths: Option<usize>,
    steps: Option<usize>,
    paths: Option<usize>,
    eps: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Study {
    horizon: f64,
    steps: usize,
    paths: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    antithetic: bool,
}

#[derive(Debug, Serialize)]
struct StopSettings {
    method: StopMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iota: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mbar: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hit_rule: Option<HitRuleArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weighted_basis: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    offline_paths: Option<usize>,
}

fn hit_rule(r: HitRuleArg) -> HitRule {
    match r {
        HitRuleArg::Corridor => HitRule::Corridor,
        HitRuleArg::GridProximity => HitRule::GridProximity,
        HitRuleArg::Crossing => HitRule::Crossing,
    }
}

fn scan_grid(file: &FileConfig) -> ScanGrid {
    let d = ScanGrid::default();
    let f = &file.stop;
    ScanGrid {
        lo: f.scan_lo.unwrap_or(d.lo),
        hi: f.scan_hi.unwrap_or(d.hi),
        n_intervals: f.scan_intervals.unwrap_or(d.n_intervals),
    }
}

fn study(file: &FileConfig, steps: Option<usize>, paths: Option<usize>, eps: Option<f64>, seed: u64) -> StudyConfig {
    let n = &file.numeric;
    let horizon = n.horizon.unwrap_or(1.0);
    let n_steps = steps.or(n.steps).unwrap_or(400);
    StudyConfig {
        horizon,
        n_steps,
        // eps = sqrt(T / N) unless given
        eps: eps.or(n.eps).unwrap_or((horizon / n_steps as f64).sqrt()),
        n_paths: paths.or(n.paths).unwrap_or(1 << 14),
        seed,
        antithetic: n.antithetic.unwrap_or(false),
    }
}

fn study_settings(cfg: &StudyConfig, with_eps: bool) -> Vec<(String, String)> {
    echo(
        "numeric",
        &Study {
            horizon: cfg.horizon,
            steps: cfg.n_steps,
            paths: cfg.n_paths,
            eps: with_eps.then_some(cfg.eps),
            antithetic: cfg.antithetic,
        },
    )
}

enum Job {
    European,
    TwoDate(f64),
    Inspection(f64),
    Lsmc(usize),
}

const STOP_COLUMNS: [&str; 6] = ["method", "param", "value", "stderr", "n_paths", "mean_stopping_time"];

fn stop(ctx: &Ctx, file: &FileConfig, a: StopArgs) -> CliResult<()> {
    let f = &file.stop;
    let method = a.method.or(f.method).unwrap_or(StopMethod::TwoDate);
    let cfg = study(file, a.steps, a.paths, a.eps, ctx.seed);
    let mut s = StopSettings {
        method,
        t: None,
        iota: None,
        mbar: None,
        hit_rule: None,
        scan: None,
        weighted_basis: None,
        offline_paths: None,
    };
    let lsmc_base = LsmcConfig {
        n_steps: cfg.n_steps,
        n_online: cfg.n_paths,
        horizon: cfg.horizon,
        seed: ctx.seed,
        ..Default::default()
    };
    let lsmc_base = LsmcConfig {
        weighted_basis: !a.plain_basis && f.weighted_basis.unwrap_or(lsmc_base.weighted_basis),
        n_offline: a.offline_paths.or(f.offline_paths).unwrap_or(lsmc_base.n_offline),
        ..lsmc_base
    };
    let rule_arg = a.hit_rule.or(f.hit_rule).unwrap_or(HitRuleArg::Corridor);
    let (grid, rule) = (scan_grid(file), hit_rule(rule_arg));
    let jobs: Vec<(String, Job)> = match method {
        StopMethod::European => vec![(String::new(), Job::European)],
        StopMethod::TwoDate => {
            let ts = a.t.or_else(|| f.t.clone()).unwrap_or_else(|| vec![0.5]);
            s.t = Some(ts.clone());
            ts.into_iter().map(|t| (num(t), Job::TwoDate(t))).collect()
        }
        StopMethod::Inspection => {
            let is = a.iota.or_else(|| f.iota.clone()).unwrap_or_else(|| vec![0.7]);
            s.iota = Some(is.clone());
            s.hit_rule = Some(rule_arg);
            s.scan = Some([grid.lo, grid.hi, grid.n_intervals as f64]);
            is.into_iter().map(|i| (num(i), Job::Inspection(i))).collect()
        }
        StopMethod::Lsmc => {
            let ms = a.mbar.or_else(|| f.mbar.clone()).unwrap_or_else(|| vec![0]);
            s.mbar = Some(ms.clone());
            s.weighted_basis = Some(lsmc_base.weighted_basis);
            s.offline_paths = Some(lsmc_base.n_offline);
            ms.into_iter().map(|m| (m.to_string(), Job::Lsmc(m))).collect()
        }
    };
    let run_job = |job: &Job| match *job {
        Job::European => european_value(&cfg),
        Job::TwoDate(t) => two_date_value(&cfg, t),
        Job::Inspection(i) => inspection_value(&cfg, i, grid, rule),
        Job::Lsmc(m) => lsmc_value(&LsmcConfig { mbar: m, ..lsmc_base.clone() }),
    };
    let mut settings = study_settings(&cfg, method != StopMethod::Lsmc);
    settings.extend(echo("stop", &s));
    let mut columns = STOP_COLUMNS.to_vec();
    if ctx.timing {
        columns.push("runtime_s");
    }
    let mut art = Artifact::new(ctx.name, ctx.seed, settings, &columns);
    let method_name = serde_plain(&method);
    let mut summary = Vec::new();
    for (param, job) in jobs {
        let t0 = Instant::now();
        let r = run_job(&job)?;
        let mut row = vec![
            method_name.clone(),
            param.clone(),
            num(r.value),
            num(r.stderr),
            r.n_paths.to_string(),
            num(r.mean_stopping_time),
        ];
        if ctx.timing {
            row.push(format!("{:.3}", t0.elapsed().as_secs_f64()));
        }
        if r.ridge_fallbacks > 0 {
            art.note(&format!("ridge_fallbacks[{param}]"), r.ridge_fallbacks);
        }
        art.row(row);
        summary.push(format!("{:.4} ± {:.4}", r.value, r.stderr));
    }
    ctx.finish(art, &format!("{method_name} {}", summary.join(", ")))
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    match toml::Value::try_from(v) {
        Ok(toml::Value::String(s)) => s,
        _ => String::new(),
    }
}

#[derive(Debug, Serialize)]
struct Converge {
    strategy: SweepArg,
    eps: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iota: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hit_rule: Option<HitRuleArg>,
}

fn converge(
    ctx: &Ctx,
    file: &FileConfig,
    eps: Option<Vec<f64>>,
    strategy: Option<SweepArg>,
    iota: Option<f64>,
    steps: Option<usize>,
    paths: Option<usize>,
) -> CliResult<()> {
    let f = &file.converge;
    let cfg = study(file, steps, paths, None, ctx.seed);
    let strategy = strategy.or(f.strategy).unwrap_or(SweepArg::Inspection);
    let eps = eps
        .or_else(|| f.eps.clone())
        .unwrap_or_else(|| vec![0.01, 0.025, 0.05, 0.1, 0.15, 0.2]);
    let mut c = Converge { strategy, eps: eps.clone(), iota: None, hit_rule: None };
    let sweep = match strategy {
        SweepArg::European => SweepStrategy::European,
        SweepArg::Inspection => {
            let iota = iota.or(f.iota).unwrap_or(0.7);
            let rule = file.stop.hit_rule.unwrap_or(HitRuleArg::Corridor);
            c.iota = Some(iota);
            c.hit_rule = Some(rule);
            SweepStrategy::Inspection { iota, grid: scan_grid(file), rule: hit_rule(rule) }
        }
    };
    let mut settings = study_settings(&cfg, false);
    settings.extend(echo("converge", &c));
    let mut art = Artifact::new(ctx.name, ctx.seed, settings, &["eps", "value", "stderr", "expansion"]);
    let pts = eps_sweep(&cfg, sweep, &eps)?;
    for p in &pts {
        art.row(vec![num(p.eps), num(p.value), num(p.stderr), p.expansion.map(num).unwrap_or_default()]);
    }
    let monotone = nonincreasing_within(&pts, MONOTONE_SLACK);
    art.note("nonincreasing_within_3se", monotone);
    ctx.finish(art, &format!("{} points, nonincreasing in eps: {monotone}", pts.len()))
}

struct Check {
    row: String,
    param: String,
    value: f64,
    stderr: f64,
    reference: Option<Benchmark>,
    tolerance: Option<f64>,
    pass: bool,
    /// Reported for reference only; never fails.
    info: bool,
}

impl Check {
    fn against(row: &str, b: Benchmark, r: &StoppingResult, param: String) -> Self {
        Self {
            row: row.into(),
            param,
            value: r.value,
            stderr: r.stderr,
            reference: Some(b),
            tolerance: Some(reference::TOLERANCE),
            pass: b.within(r.value, reference::TOLERANCE),
            info: false,
        }
    }

    fn cells(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        vec![
            self.row.clone(),
            self.param.clone(),
            num(self.value),
            num(self.stderr),
            opt(self.reference.map(|b| b.value)),
            opt(self.reference.and_then(|b| b.stderr)),
            opt(self.tolerance),
            match (self.info, self.pass) {
                (true, _) => "info",
                (false, true) => "pass",
                (false, false) => "fail",
            }
            .to_string(),
        ]
    }
}

fn reproduce(ctx: &Ctx, target: Target) -> CliResult<()> {
    let cfg = StudyConfig { seed: ctx.seed, ..Default::default() };
    let mut checks = Vec::new();
    let mut extra: Vec<(String, String)> = Vec::new();
    match target {
        Target::Table1 => {
            let b = reference::TWO_DATE;
            let r = two_date_value(&cfg, b.param)?;
            checks.push(Check::against("two-date", b, &r, num(b.param)));
            let e = reference::EUROPEAN;
            let v = analytic_euro_value(e.param)?;
            checks.push(Check {
                row: "european".into(),
                param: num(e.param),
                value: v,
                stderr: 0.0,
                reference: Some(e),
                tolerance: Some(ROUNDING),
                pass: e.within(v, ROUNDING),
                info: false,
            });
        }
        Target::Table2 => {
            let grid = ScanGrid::default();
            extra.push(("stop.hit_rule".into(), "corridor".into()));
            extra.push(("stop.scan".into(), format!("{},{},{}", grid.lo, grid.hi, grid.n_intervals)));
            let mut values = Vec::new();
            for b in reference::INSPECTION {
                let r = inspection_value(&cfg, b.param, grid, HitRule::Corridor)?;
                values.push((b.param, r.value));
                checks.push(Check::against("inspection", b, &r, num(b.param)));
            }
            let best = values.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |a, v| if v.1 > a.1 { v } else { a });
            let interior = best.0 > values[0].0 && best.0 < values[values.len() - 1].0;
            checks.push(Check {
                row: "interior-maximum".into(),
                param: num(best.0),
                value: best.1,
                stderr: 0.0,
                reference: None,
                tolerance: None,
                pass: interior,
                info: false,
            });
        }
        Target::Table3 => {
            let base = LsmcConfig { seed: ctx.seed, ..Default::default() };
            extra.push(("stop.weighted_basis".into(), base.weighted_basis.to_string()));
            extra.push(("stop.offline_paths".into(), base.n_offline.to_string()));
            for b in reference::LSMC {
                let c = LsmcConfig { mbar: b.param as usize, ..base.clone() };
                let r = lsmc_value(&c)?;
                checks.push(Check::against("lsmc", b, &r, (b.param as usize).to_string()));
            }
        }
        Target::EpsCurve => {
            let eps = [0.01, 0.025, 0.05, 0.1, 0.15, 0.2];
            let grid = ScanGrid::default();
            extra.push(("converge.iota".into(), "0.7".into()));
            extra.push(("converge.eps".into(), eps.map(num).join(",")));
            let pts = eps_sweep(&cfg, SweepStrategy::Inspection { iota: 0.7, grid, rule: HitRule::Corridor }, &eps)?;
            for p in &pts {
                checks.push(Check {
                    row: "inspection".into(),
                    param: num(p.eps),
                    value: p.value,
                    stderr: p.stderr,
                    reference: None,
                    tolerance: None,
                    pass: true,
                    info: true,
                });
            }
            let monotone = nonincreasing_within(&pts, MONOTONE_SLACK);
            checks.push(Check {
                row: "nonincreasing".into(),
                param: format!("{MONOTONE_SLACK}se"),
                value: pts[0].value - pts[pts.len() - 1].value,
                stderr: 0.0,
                reference: None,
                tolerance: None,
                pass: monotone,
                info: false,
            });
        }
    }
    let target_name = format!("{target:?}").to_lowercase().replace("epscurve", "eps-curve");
    let mut settings = vec![("target".to_string(), target_name.clone())];
    settings.extend(study_settings(&cfg, target != Target::Table3));
    settings.extend(extra);
    let columns = ["row", "param", "value", "stderr", "reference", "reference_stderr", "tolerance", "status"];
    let mut art = Artifact::new(ctx.name, ctx.seed, settings, &columns);
    for c in &checks {
        art.row(c.cells());
    }
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    let checked = checks.iter().filter(|c| !c.info).count();
    ctx.finish(
        art,
        &format!("{target_name}: {} of {} checked rows pass", checked - failed.len(), checked),
    )?;
    if failed.is_empty() {
        return Ok(());
    }
    Err(CliError::Mismatch(diff_table(&failed)))
}

/// Failing rows with their distance to the reference.
fn diff_table(failed: &[&Check]) -> String {
    let mut table = format!(
        "{:<18} {:>8} {:>10} {:>10} {:>10} {:>10}\n",
        "row", "param", "value", "reference", "diff", "tolerance"
    );
    for c in failed.iter() {
        let (r, d) = match c.reference {
            Some(b) => (format!("{:.4}", b.value), format!("{:+.4}", c.value - b.value)),
            None => ("-".into(), "-".into()),
        };
        let tol = c.tolerance.map(|t| format!("{t}")).unwrap_or_else(|| "-".into());
        table.push_str(&format!(
            "{:<18} {:>8} {:>10.4} {:>10} {:>10} {:>10}\n",
            c.row, c.param, c.value, r, d, tol
        ));
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_table_lists_failures() {
        let b = reference::LSMC[0];
        let miss = Check {
            row: "lsmc".into(),
            param: "0".into(),
            value: 1.1,
            stderr: 0.004,
            reference: Some(b),
            tolerance: Some(reference::TOLERANCE),
            pass: false,
            info: false,
        };
        let t = diff_table(&[&miss]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("row"));
        assert!(lines[1].contains("1.1916") && lines[1].contains("-0.0916"), "{t}");
        assert_eq!(CliError::Mismatch(t).exit_code(), 1);
    }
}
