//! Subcommand implementations.
//!
//! Table rows are computed in parallel over the grid and collected in grid
//! order, so output bytes are independent of the worker count. All numbers
//! are written with 17 significant digits; every CSV starts with a
//! `# manifest: <model-hash> <seed> <version>` comment.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use polar_tails::angular::{AngularModel, DirichletParams};
use polar_tails::asymptotics::{self, LimitLaw, PowerConstantMode, TailContext};
use polar_tails::estimation::{self, DeltaSource};
use polar_tails::polar_exact::PolarModel;
use polar_tails::radial::{KotzParams, RadialModel};
use polar_tails::sampling;
use rayon::prelude::*;

use crate::config::{self, Config};
use crate::{CliError, RunArgs};

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn manifest_line(model_hash: &str, seed: u64) -> String {
    format!("# manifest: {model_hash} {seed} {}", env!("CARGO_PKG_VERSION"))
}

fn load_config(args: &RunArgs, command: &str) -> Result<Config, CliError> {
    let path = args.config.as_deref().ok_or_else(|| {
        CliError::Config(format!("--config is required for {command}"))
    })?;
    Config::load(path)
}

fn write_output(out: &Option<std::path::PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            CliError::Config(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            let stdout = std::io::stdout();
            stdout
                .lock()
                .write_all(content.as_bytes())
                .map_err(|e| CliError::Config(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Seed used in the manifest: the `--seed` flag wins over the config key;
/// commands that never draw default to 0.
fn effective_seed(args: &RunArgs, cfg: &mut Config) -> Result<u64, CliError> {
    match args.seed {
        Some(s) => {
            cfg.take("seed");
            Ok(s)
        }
        None => Ok(cfg.take_parse("seed")?.unwrap_or(0)),
    }
}

pub fn tail_table(args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(args, "tail-table")?;
    let model = config::build_model(&mut cfg)?;
    let u_grid = cfg.require_grid("u_grid")?;
    let seed = effective_seed(args, &mut cfg)?;
    cfg.finish()?;

    let law = LimitLaw::from_angular(&model.angular)?;
    let delta = model.angular.delta();
    let rows = u_grid
        .par_iter()
        .map(|&u| -> Result<String, polar_tails::Error> {
            let t = model.radial.t_scale(u);
            let exact = model.marginal_survivor(u)?;
            let ctx = TailContext::from_model_leading(&model, u)?;
            let s_u = model.radial.survivor(u);
            let first_order = asymptotics::marginal_tail_first_order(&ctx, s_u, &law);
            let power_default = asymptotics::marginal_tail_power_form(
                &ctx,
                s_u,
                delta,
                PowerConstantMode::Default,
            )?;
            let power_strict = asymptotics::marginal_tail_power_form(
                &ctx,
                s_u,
                delta,
                PowerConstantMode::StrictPrinted,
            )?;
            Ok(format!(
                "{},{},{},{},{},{},{},{}",
                fmt17(u),
                fmt17(t),
                fmt17(exact),
                fmt17(first_order),
                fmt17(power_default),
                fmt17(power_strict),
                fmt17(exact / first_order),
                fmt17(exact / power_default),
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = String::new();
    let hash = sampling::model_hash(&model.descriptor());
    writeln!(out, "{}", manifest_line(&hash, seed)).unwrap();
    writeln!(out, "u,t,exact,thm1,thm3_default,thm3_strict,ratio_thm1,ratio_thm3").unwrap();
    for row in rows {
        writeln!(out, "{row}").unwrap();
    }
    write_output(&args.out, &out)
}

pub fn cond_cdf(args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(args, "cond-cdf")?;
    let model = config::build_model(&mut cfg)?;
    let u_grid = cfg.require_grid("u_grid")?;
    let y_grid = cfg.require_grid("y_grid")?;
    let seed = effective_seed(args, &mut cfg)?;
    cfg.finish()?;

    let law = LimitLaw::from_angular(&model.angular)?;
    let pairs: Vec<(f64, f64)> = u_grid
        .iter()
        .flat_map(|&u| y_grid.iter().map(move |&y| (u, y)))
        .collect();
    let rows = pairs
        .par_iter()
        .map(|&(u, y)| -> Result<String, polar_tails::Error> {
            let exact = model.conditional_cdf(u, y)?;
            let z = model.standardized_coordinate(u, y);
            let limit = law.cdf(z);
            let t = model.radial.t_scale(u);
            let second =
                asymptotics::conditional_cdf_second_order(z, model.rho(), t, &law);
            Ok(format!(
                "{},{},{},{},{},{},{}",
                fmt17(u),
                fmt17(y),
                fmt17(exact),
                fmt17(limit),
                fmt17(second),
                fmt17((exact - limit).abs()),
                fmt17((exact - second).abs()),
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = String::new();
    let hash = sampling::model_hash(&model.descriptor());
    writeln!(out, "{}", manifest_line(&hash, seed)).unwrap();
    writeln!(out, "u,y,exact,limit,second_order,err_limit,err_2nd").unwrap();
    for row in rows {
        writeln!(out, "{row}").unwrap();
    }
    write_output(&args.out, &out)
}

pub fn simulate(args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(args, "simulate")?;
    let model = config::build_model(&mut cfg)?;
    let n: usize = cfg.require_parse("n")?;
    if n == 0 {
        return Err(CliError::Config("n must be at least 1".to_string()));
    }
    let seed = effective_seed(args, &mut cfg)?;
    cfg.finish()?;

    let data = sampling::sample_polar(&model, n, seed)?;
    let hash = sampling::model_hash(&model.descriptor());
    let mut out = String::with_capacity(48 * n + 64);
    writeln!(out, "{}", manifest_line(&hash, seed)).unwrap();
    writeln!(out, "x,y").unwrap();
    for (x, y) in data {
        writeln!(out, "{},{}", fmt17(x), fmt17(y)).unwrap();
    }
    write_output(&args.out, &out)
}

pub fn estimate(args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(args, "estimate")?;
    let data_path = cfg.require("data")?;
    let k_config: Option<usize> = cfg.take_parse("k")?;
    let tail_fraction: f64 = cfg.take_parse("tail_fraction")?.unwrap_or(0.1);
    let provided_delta: Option<f64> = cfg.take_parse("delta")?;
    let seed = effective_seed(args, &mut cfg)?;
    cfg.finish()?;

    let data = read_pairs(Path::new(&data_path))?;
    // the ratio estimator needs 50 <= k <= n/10, so n < 500 can never work
    if data.len() < 500 {
        return Err(CliError::Config(format!(
            "insufficient data: estimation needs at least 500 rows, {} has {}",
            data_path,
            data.len()
        )));
    }
    // default: 1% of the sample, at least 50, never beyond the depth the
    // ratio estimator accepts
    let k = k_config.unwrap_or_else(|| (data.len() / 100).max(50).min(data.len() / 10));
    let report = estimation::estimate(&data, k, tail_fraction, provided_delta)?;

    let hash = sampling::model_hash(&format!("estimate[{data_path},n={}]", report.n));
    let mut out = String::new();
    writeln!(out, "{}", manifest_line(&hash, seed)).unwrap();
    writeln!(out, "n = {}", report.n).unwrap();
    writeln!(out, "k_used = {}", report.k_used).unwrap();
    writeln!(out, "rho_hat = {}", fmt17(report.rho_hat)).unwrap();
    writeln!(out, "rho_clipped = {}", report.rho_clipped).unwrap();
    writeln!(out, "c_hat = {}", fmt17(report.c_hat)).unwrap();
    writeln!(out, "gamma_hat = {}", fmt17(report.gamma_hat)).unwrap();
    writeln!(out, "hazard_fit_rms = {}", fmt17(report.hazard_fit_rms)).unwrap();
    writeln!(out, "n_tail_points = {}", report.n_tail_points).unwrap();
    writeln!(out, "delta_hat = {}", fmt17(report.delta_hat)).unwrap();
    let source = match report.delta_source {
        DeltaSource::SmallAngleRegression => "small-angle-regression",
        DeltaSource::Provided => "provided",
    };
    writeln!(out, "delta_source = {source}").unwrap();
    writeln!(out, "angle_fit_rms = {}", fmt17(report.angle_fit_rms)).unwrap();
    writeln!(out, "n_angle_points = {}", report.n_angle_points).unwrap();
    write_output(&args.out, &out)
}

/// Reads `x,y` rows; `#` lines are comments. An unparseable first row is
/// treated as a header; anywhere else it is a data error.
fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    let mut first_candidate = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
        match parsed {
            Some(pair) => out.push(pair),
            None if first_candidate => {}
            None => {
                return Err(CliError::Config(format!(
                    "{}:{}: expected `x,y` data row, got `{line}`",
                    path.display(),
                    idx + 1
                )))
            }
        }
        first_candidate = false;
    }
    if out.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(out)
}

pub fn validate(args: &RunArgs) -> Result<(), CliError> {
    let mut checks: Vec<(&'static str, Result<(), String>)> = vec![
        ("normal-marginal-closed-form", check_normal_marginal()),
        ("limit-law-identity", check_limit_law_identity()),
        ("radial-quantile-roundtrip", check_radial_roundtrip()),
        ("angular-normalization", check_angular_normalization()),
        ("joint-monotonicity", check_joint_monotonicity()),
        ("conditional-bounds", check_conditional_bounds()),
        ("power-form-identity", check_power_form_identity()),
        ("sampler-reproducibility", check_sampler_reproducibility()),
        ("estimator-smoke", check_estimator_smoke()),
    ];
    if let Some(path) = args.config.as_deref() {
        let mut cfg = Config::load(path)?;
        let model = config::build_model(&mut cfg)?;
        // validate only reads the model keys; grids and such may stay
        drop(cfg);
        checks.push(("config-radial-roundtrip", check_model_radial(&model)));
        checks.push(("config-angular-normalization", check_model_angular(&model)));
        checks.push(("config-conditional-bounds", check_model_conditional(&model)));
    }

    let mut out = String::new();
    let mut failed = 0usize;
    for (name, result) in &checks {
        match result {
            Ok(()) => writeln!(out, "ok {name}").unwrap(),
            Err(msg) => {
                failed += 1;
                writeln!(out, "FAIL {name}: {msg}").unwrap();
            }
        }
    }
    writeln!(out, "passed {}/{} checks", checks.len() - failed, checks.len()).unwrap();
    write_output(&args.out, &out)?;
    if failed > 0 {
        return Err(CliError::Numeric(format!(
            "{failed} of {} validation checks failed",
            checks.len()
        )));
    }
    Ok(())
}

fn lib_err(e: polar_tails::Error) -> String {
    e.to_string()
}

fn gaussian_model(rho: f64) -> Result<PolarModel<f64>, String> {
    PolarModel::new(RadialModel::rayleigh(), AngularModel::uniform(), rho).map_err(lib_err)
}

fn check_normal_marginal() -> Result<(), String> {
    let m = gaussian_model(0.0)?;
    let law = LimitLaw::power(0.0).map_err(lib_err)?;
    for u in [0.5, 2.0, 4.0] {
        let got = m.marginal_survivor(u).map_err(lib_err)?;
        let want = law.cdf(-u);
        let rel = ((got - want) / want).abs();
        if rel > 1e-7 {
            return Err(format!("marginal at u={u}: rel err {rel:.2e} exceeds 1e-7"));
        }
    }
    Ok(())
}

fn check_limit_law_identity() -> Result<(), String> {
    for delta in [0.0f64, 0.5, 2.0] {
        let law = LimitLaw::power(delta).map_err(lib_err)?;
        for z in [-3.0, -1.0, 0.0, 1.5, 4.0] {
            let diff = (law.cdf_numeric(z).map_err(lib_err)? - law.cdf(z)).abs();
            if diff > 1e-8 {
                return Err(format!(
                    "delta={delta}, z={z}: routes differ by {diff:.2e} (tol 1e-8)"
                ));
            }
        }
    }
    Ok(())
}

fn check_radial_roundtrip() -> Result<(), String> {
    let r = RadialModel::kotz(KotzParams { k: 1.2f64, n: 0.5, r: 1.0, kappa: 1.3 })
        .map_err(lib_err)?;
    for p in [1e-6, 1e-3, 0.1, 0.5, 0.99] {
        let u = r.quantile(p).map_err(lib_err)?;
        let back = r.survivor(u);
        let rel = ((back - p) / p).abs();
        if rel > 1e-8 {
            return Err(format!("p={p}: roundtrip rel err {rel:.2e} exceeds 1e-8"));
        }
    }
    Ok(())
}

fn check_angular_normalization() -> Result<(), String> {
    let models = [
        AngularModel::uniform(),
        AngularModel::dirichlet(DirichletParams { a: 1.3, b: 0.8, eps: std::f64::consts::PI })
            .map_err(lib_err)?,
    ];
    for m in &models {
        let defect = m.normalization_defect();
        if defect > 1e-9 {
            return Err(format!("normalization defect {defect:.2e} exceeds 1e-9"));
        }
        for p in [0.1, 0.3, 0.7] {
            let theta = m.quantile(p).map_err(lib_err)?;
            let back = m.cdf(theta);
            if (back - p).abs() > 1e-7 {
                return Err(format!(
                    "quantile roundtrip at p={p}: |cdf - p| = {:.2e} exceeds 1e-7",
                    (back - p).abs()
                ));
            }
        }
    }
    Ok(())
}

fn check_joint_monotonicity() -> Result<(), String> {
    let m = PolarModel::new(
        RadialModel::rayleigh(),
        AngularModel::dirichlet(DirichletParams { a: 1.3, b: 0.8, eps: std::f64::consts::PI })
            .map_err(lib_err)?,
        0.4,
    )
    .map_err(lib_err)?;
    let xs = [0.5, 1.0, 1.5, 2.0];
    let ys = [-1.0, 0.0, 0.8, 1.6];
    for &y in &ys {
        let mut prev = f64::INFINITY;
        for &x in &xs {
            let j = m.joint_survivor(x, y).map_err(lib_err)?;
            if j > prev + 1e-12 {
                return Err(format!("joint survivor increased in x at ({x},{y})"));
            }
            let marginal = m.marginal_survivor(x).map_err(lib_err)?;
            if j > marginal + 1e-12 {
                return Err(format!("joint exceeds marginal at ({x},{y})"));
            }
            prev = j;
        }
    }
    for &x in &xs {
        let mut prev = f64::INFINITY;
        for &y in &ys {
            let j = m.joint_survivor(x, y).map_err(lib_err)?;
            if j > prev + 1e-12 {
                return Err(format!("joint survivor increased in y at ({x},{y})"));
            }
            prev = j;
        }
    }
    Ok(())
}

fn check_conditional_bounds() -> Result<(), String> {
    let m = gaussian_model(0.4)?;
    let mut prev = -1.0f64;
    for i in 0..7 {
        let y = -2.0 + i as f64;
        let c = m.conditional_cdf(2.0, y).map_err(lib_err)?;
        if !(0.0..=1.0).contains(&c) {
            return Err(format!("conditional cdf out of [0,1] at y={y}: {c}"));
        }
        if c < prev - 1e-10 {
            return Err(format!("conditional cdf decreased at y={y}"));
        }
        prev = c;
    }
    Ok(())
}

fn check_power_form_identity() -> Result<(), String> {
    let m = PolarModel::new(
        RadialModel::rayleigh(),
        AngularModel::dirichlet(DirichletParams { a: 1.0, b: 1.0, eps: std::f64::consts::PI })
            .map_err(lib_err)?,
        0.0,
    )
    .map_err(lib_err)?;
    let u = 10.0;
    let law = LimitLaw::from_angular(&m.angular).map_err(lib_err)?;
    let ctx = TailContext::from_model_leading(&m, u).map_err(lib_err)?;
    let s_u = m.radial.survivor(u);
    let first = asymptotics::marginal_tail_first_order(&ctx, s_u, &law);
    let power = asymptotics::marginal_tail_power_form(
        &ctx,
        s_u,
        m.angular.delta(),
        PowerConstantMode::Default,
    )
    .map_err(lib_err)?;
    let rel = ((first - power) / power).abs();
    if rel > 1e-12 {
        return Err(format!(
            "first-order and default power forms differ by rel {rel:.2e} (tol 1e-12)"
        ));
    }
    Ok(())
}

fn check_sampler_reproducibility() -> Result<(), String> {
    let m = gaussian_model(0.25)?;
    let a = sampling::sample_polar(&m, 500, 7).map_err(lib_err)?;
    let b = sampling::sample_polar(&m, 500, 7).map_err(lib_err)?;
    if a != b {
        return Err("same seed produced different samples".to_string());
    }
    let c = sampling::sample_polar(&m, 500, 8).map_err(lib_err)?;
    if a == c {
        return Err("different seeds produced identical samples".to_string());
    }
    Ok(())
}

fn check_estimator_smoke() -> Result<(), String> {
    let m = gaussian_model(0.3)?;
    let data = sampling::sample_polar(&m, 20_000, 11).map_err(lib_err)?;
    let report = estimation::estimate(&data, 500, 0.1, None).map_err(lib_err)?;
    if (report.rho_hat - 0.3).abs() > 0.1 {
        return Err(format!(
            "rho_hat {} strays more than 0.1 from the simulated 0.3",
            report.rho_hat
        ));
    }
    // the hazard exponent is guaranteed only for exact power-hazard tails;
    // unit-exponential data has gamma = 1, c = 1
    let mut rng = sampling::CounterRng::new(13);
    let xs: Vec<f64> = (0..20_000).map(|_| -rng.uniform::<f64>().ln()).collect();
    let (fit, _, _) = estimation::estimate_w_params(&xs, 0.1).map_err(lib_err)?;
    if (fit.gamma - 1.0).abs() > 0.15 {
        return Err(format!(
            "gamma_hat {} strays more than 0.15 from the exponential rate 1",
            fit.gamma
        ));
    }
    Ok(())
}

fn check_model_radial(m: &PolarModel<f64>) -> Result<(), String> {
    for p in [1e-4, 0.3, 0.9] {
        let u = m.radial.quantile(p).map_err(lib_err)?;
        let back = m.radial.survivor(u);
        let rel = ((back - p) / p).abs();
        if rel > 1e-6 {
            return Err(format!("p={p}: roundtrip rel err {rel:.2e} exceeds 1e-6"));
        }
    }
    Ok(())
}

fn check_model_angular(m: &PolarModel<f64>) -> Result<(), String> {
    let defect = m.angular.normalization_defect();
    if defect > 1e-6 {
        return Err(format!("normalization defect {defect:.2e} exceeds 1e-6"));
    }
    Ok(())
}

fn check_model_conditional(m: &PolarModel<f64>) -> Result<(), String> {
    let u = m.radial.quantile(1e-2).map_err(lib_err)?;
    let mut prev = -1.0f64;
    for i in 0..5 {
        let z = -2.0 + i as f64;
        let y = m.conditional_threshold(u, z);
        let c = m.conditional_cdf(u, y).map_err(lib_err)?;
        if !(0.0..=1.0).contains(&c) {
            return Err(format!("conditional cdf out of [0,1] at z={z}: {c}"));
        }
        if c < prev - 1e-10 {
            return Err(format!("conditional cdf decreased at z={z}"));
        }
        prev = c;
    }
    Ok(())
}
