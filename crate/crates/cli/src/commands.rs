use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use gobound::concentration::{u_side, AdmissibleFamilyDescriptor, ConcentrationBound};
use gobound::divergence::{
    go_bias_band, kl_discrete, solve_side, tilt_discrete, CumulantFunction, DiscreteCgf, DiscreteDistribution,
    Sign, TiltRegime,
};
use gobound::empirical::empirical_cgf;
use gobound::estimator::confidence_band;
use gobound::figures::{battery_figure, exponential_figure, ising_figure, truncated_normal_figure, BatteryConfig, Figure, IsingFigureConfig};
use gobound::io::{band_sidecar, band_table, read_sample, write_band, write_text};
use gobound::models::{ExponentialModel, FailureData, GibbsConfig, TruncatedNormalModel, WeibullModel};
use gobound::par::ExecMode;
use gobound::{BoundError, Result};

use crate::{BandArgs, BoundArgs, ExampleArgs, ExampleName, Family, FitArgs, Format, GoArgs, ModelName, Side, TiltArgs};

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("plain JSON values") + "\n"
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| BoundError::Io(format!("{}: {e}", path.display())))
}

fn need(v: Option<f64>, family: &str, flag: &str) -> Result<f64> {
    v.ok_or_else(|| BoundError::Parameter(format!("--family {family} needs --{flag}")))
}

fn envelope_from_args(a: &BoundArgs) -> Result<ConcentrationBound> {
    if let Some(src) = &a.bound_json {
        let text = if src.trim_start().starts_with('{') { src.clone() } else { read_file(Path::new(src))? };
        return serde_json::from_str(&text).map_err(|e| BoundError::Parse(format!("envelope JSON: {e}")));
    }
    let family = a.family.expect("clap requires --family or --bound-json");
    let sigma = a.sigma.or(a.sigma2.map(f64::sqrt));
    let bound = match family {
        Family::Subgaussian => ConcentrationBound::SubGaussian { sigma_b: need(sigma, "subgaussian", "sigma")? },
        Family::IntervalSubgaussian => ConcentrationBound::IntervalSubGaussian {
            sigma_b: need(sigma, "interval-subgaussian", "sigma")?,
            c_max: need(a.c_max, "interval-subgaussian", "c-max")?,
            drift: a.drift,
        },
        Family::Bennett => ConcentrationBound::Bennett {
            b: need(a.b, "bennett", "b")?,
            mu: need(a.mu, "bennett", "mu")?,
            sigma_b: need(sigma, "bennett", "sigma")?,
            a: a.a,
        },
        Family::BennettAb => ConcentrationBound::BennettAb {
            a: need(a.a, "bennett-ab", "a")?,
            b: need(a.b, "bennett-ab", "b")?,
            mu: need(a.mu, "bennett-ab", "mu")?,
        },
        Family::Hoeffding => ConcentrationBound::Hoeffding { a: need(a.a, "hoeffding", "a")?, b: need(a.b, "hoeffding", "b")? },
    };
    bound.validate()?;
    Ok(bound)
}

pub fn bound(a: &BoundArgs) -> Result<()> {
    let bound = envelope_from_args(a)?;
    let eta_sq = a.radius.eta_sq_or(None)?;
    let upper = u_side(&bound, eta_sq, Sign::Plus)?;
    let (lower, note) = match u_side(&bound, eta_sq, Sign::Minus) {
        Ok(s) => (Some(s), None),
        Err(BoundError::Unsupported(m)) => (None, Some(m)),
        Err(e) => return Err(e),
    };
    let out = json!({
        "bound": bound,
        "family": AdmissibleFamilyDescriptor::new(bound.clone()).description,
        "eta_sq": eta_sq,
        "lower": lower.as_ref().map(|s| 0.0 - s.bound),
        "upper": upper.bound,
        "lower_diagnostics": lower.as_ref().map(|s| s.diagnostics()),
        "upper_diagnostics": upper.diagnostics(),
        "lower_unavailable": note,
    });
    emit(a.out.as_deref(), &pretty(&out))
}

fn load_distribution(path: &Path) -> Result<DiscreteDistribution> {
    serde_json::from_str(&read_file(path)?).map_err(|e| BoundError::Parse(format!("{}: {e}", path.display())))
}

/// Empirical law of a sample, with repeated values merged.
fn sample_distribution(path: &Path, column: Option<&str>) -> Result<DiscreteDistribution> {
    let mut xs = read_sample(path, column)?;
    xs.sort_by(f64::total_cmp);
    let mut atoms: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for x in xs {
        if atoms.last() == Some(&x) {
            *counts.last_mut().expect("nonempty") += 1.0;
        } else {
            atoms.push(x);
            counts.push(1.0);
        }
    }
    DiscreteDistribution::from_masses(atoms, &counts)
}

pub fn go(a: &GoArgs) -> Result<()> {
    let eta_sq = a.radius.eta_sq_or(None)?;
    let (h, mean, source): (Box<dyn CumulantFunction>, f64, Value) = if let Some(path) = &a.source.sample {
        let xs = read_sample(path, a.column.as_deref())?;
        let h = empirical_cgf(&xs)?;
        let m = h.mean();
        (Box::new(h), m, json!({"sample": path, "n": xs.len()}))
    } else if let Some(path) = &a.source.distribution {
        let p = load_distribution(path)?;
        let h = DiscreteCgf::identity(&p);
        let m = h.mean();
        (Box::new(h), m, json!({"distribution": path}))
    } else {
        match a.source.model.expect("clap requires a source") {
            ModelName::Exponential => {
                let m = ExponentialModel::new(a.rate)?;
                (Box::new(m.centered_cgf()), m.mean(), json!({"model": "exponential", "rate": a.rate}))
            }
            ModelName::TruncatedNormal => {
                let m = TruncatedNormalModel::new(a.mu, a.sigma, a.lo, a.hi)?;
                let h = m.cgf(1e-12)?;
                let params = json!({"model": "truncated-normal", "mu": a.mu, "sigma": a.sigma, "lo": a.lo, "hi": a.hi});
                (Box::new(h), m.moments().0, params)
            }
        }
    };
    let cert = go_bias_band(&*h, eta_sq)?;
    let out = json!({
        "source": source,
        "qoi": "x",
        "baseline_mean": mean,
        "certificate": cert,
    });
    emit(a.out.as_deref(), &pretty(&out))
}

pub fn tilt(a: &TiltArgs) -> Result<()> {
    let p = match (&a.source.sample, &a.source.distribution) {
        (Some(path), _) => sample_distribution(path, a.column.as_deref())?,
        (_, Some(path)) => load_distribution(path)?,
        _ => unreachable!("clap requires a source"),
    };
    let f = p.atoms().to_vec();
    let (c, regime, eta_sq) = match a.c {
        Some(c) => (Some(c), None, None),
        None => {
            let eta_sq = a.radius.eta_sq_or(None)?;
            let sign = if a.side == Side::Plus { Sign::Plus } else { Sign::Minus };
            let h = DiscreteCgf::identity(&p);
            let sol = solve_side(&h, eta_sq, sign)?;
            let c = match (sol.regime, sol.c_star) {
                (TiltRegime::Trivial, _) => Some(0.0),
                (_, Some(c)) => Some(if sign == Sign::Plus { c } else { -c }),
                (_, None) => None,
            };
            (c, Some(sol.regime), Some(eta_sq))
        }
    };
    let tilted = match c {
        Some(c) => tilt_discrete(&p, &f, c)?,
        None => {
            // Infinite tilt: all mass on the extreme atom of the chosen side.
            let pick = if a.side == Side::Plus { f64::max } else { f64::min };
            let init = if a.side == Side::Plus { f64::NEG_INFINITY } else { f64::INFINITY };
            let x = f.iter().copied().fold(init, pick);
            let w: Vec<f64> = f.iter().zip(p.weights()).map(|(&v, &w)| if v == x { w } else { 0.0 }).collect();
            DiscreteDistribution::from_masses(f.clone(), &w)?
        }
    };
    let kl = kl_discrete(&tilted, &p)?;
    let out = json!({
        "c": c,
        "regime": regime,
        "eta_sq": eta_sq,
        "baseline": p,
        "tilted": tilted,
        "kl": kl,
        "mean_gap": tilted.mean() - p.mean(),
    });
    emit(a.out.as_deref(), &pretty(&out))
}

pub fn band(a: &BandArgs) -> Result<()> {
    let xs = read_sample(&a.sample, a.column.as_deref())?;
    let grid = a.grid.as_deref().map(|g| read_sample(g, None)).transpose()?;
    let eta = a.radius.eta_sq_or(Some(0.0))?.sqrt();
    let band = confidence_band(&xs, grid.as_deref(), a.alpha, eta)?;
    match (a.format, &a.out) {
        (Format::Csv, Some(path)) => write_band(&band, path).map(|_| ()),
        (Format::Csv, None) => emit(None, &band_table(&band).to_csv()),
        (Format::Json, out) => {
            let mut v = band_sidecar(&band);
            v["half_width"] = json!(band.half_width());
            v["x"] = json!(band.xs.iter().map(|x| json_number(*x)).collect::<Vec<_>>());
            v["lower"] = json!(band.lower);
            v["upper"] = json!(band.upper);
            emit(out.as_deref(), &pretty(&v))
        }
    }
}

/// JSON has no infinities; the band sentinels are written as strings.
fn json_number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn fit_weibull(a: &FitArgs) -> Result<()> {
    let (data, source) = match &a.data {
        Some(path) => (FailureData::from_csv_str(&read_file(path)?)?, json!(path)),
        None => (FailureData::bundled(), json!("bundled:battery_failure_times_v1.csv")),
    };
    let model = WeibullModel::mle(&data)?;
    let (g_shape, g_scale) = model.log_likelihood_gradient(&data);
    let out = json!({
        "data": source,
        "n": data.times().len(),
        "shape": model.shape,
        "scale": model.scale,
        "log_likelihood_gradient": {"shape": g_shape, "scale": g_scale},
    });
    emit(a.out.as_deref(), &pretty(&out))
}

fn write_figure(fig: &Figure, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    match format {
        Format::Csv => fig.write(dir),
        Format::Json => {
            let path = dir.join(format!("{}.json", fig.name));
            let v = json!({"manifest": fig.manifest, "header": fig.table.header, "rows": fig.table.rows});
            write_text(&path, &pretty(&v))?;
            Ok(vec![path])
        }
    }
}

pub fn example(a: &ExampleArgs) -> Result<()> {
    let mode = ExecMode::default();
    let mut fig = match a.name {
        ExampleName::Exponential => exponential_figure(a.points.unwrap_or(50), mode)?,
        ExampleName::TruncatedNormal => truncated_normal_figure(0.05, 4.0, mode)?,
        ExampleName::Battery => {
            let cfg = BatteryConfig { points: a.points.unwrap_or(500), ..BatteryConfig::default() };
            let (mut fig, _) = battery_figure(&FailureData::bundled(), &cfg, mode)?;
            fig.manifest["parameters"]["data"] = json!("bundled:battery_failure_times_v1.csv");
            fig
        }
        ExampleName::Ising => {
            let cfg = IsingFigureConfig {
                n: a.n,
                beta: a.beta,
                j: a.j,
                h: a.h,
                m: a.m,
                gibbs: GibbsConfig {
                    sweeps: a.sweeps,
                    burn_in: a.burn_in,
                    thin: a.thin,
                    chains: a.chains,
                    batches: a.batches,
                    seed: a.seed,
                },
                exact: a.exact,
                defect: a.defect_bond.zip(a.defect_j),
                ..IsingFigureConfig::default()
            };
            ising_figure(&cfg, mode)?
        }
    };
    fig.manifest["seed"] = json!(a.seed);
    let files = write_figure(&fig, &a.out, a.format)?;
    let summary = json!({
        "example": fig.manifest["example"],
        "rows": fig.table.rows.len(),
        "files": files,
    });
    emit(None, &pretty(&summary))
}
