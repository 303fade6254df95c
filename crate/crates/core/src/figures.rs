//! Plot data for the worked examples: one CSV table (one column per curve)
//! plus a JSON manifest with every parameter and seed.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::concentration::{bias_band, ConcentrationBound};
use crate::divergence::{go_bias_band, BiasCertificate, DiscreteCgf, ExponentialCgf};
use crate::error::{BoundError, Result};
use crate::io::{write_text, Table};
use crate::models::ising::{ising_enumerate, ising_gibbs_sample_many, ising_kl_defect, GibbsConfig, IsingChain, IsingQoi, KlMethod, MAX_ENUMERATION_SITES};
use crate::models::{lifetime_qois, ExponentialModel, FailureData, TruncatedNormalModel, WeibullModel};
use crate::par::{map_indices, ExecMode};

/// Generated plot data.
#[derive(Debug, Clone)]
pub struct Figure {
    pub name: &'static str,
    pub table: Table,
    pub manifest: Value,
}

impl Figure {
    /// Writes `<name>.csv` and `<name>.manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let csv = dir.join(format!("{}.csv", self.name));
        let manifest = dir.join(format!("{}.manifest.json", self.name));
        write_text(&csv, &self.table.to_csv())?;
        let text = serde_json::to_string_pretty(&self.manifest).expect("plain JSON values");
        write_text(&manifest, &(text + "\n"))?;
        Ok(vec![csv, manifest])
    }
}

fn manifest(example: &str, parameters: Value) -> Value {
    json!({
        "example": example,
        "version": env!("CARGO_PKG_VERSION"),
        "parameters": parameters,
    })
}

fn eta_label(eta_sq: f64) -> String {
    format!("{eta_sq}")
}

/// Mean gap `1/rate_q - 1` of `Exp(rate_q)` against `Exp(1)`, with the GO
/// band and the sub-exponential envelope band at `eta^2 = R(Exp(rate_q)||Exp(1))`.
pub fn exponential_figure(points: usize, mode: ExecMode) -> Result<Figure> {
    if points == 0 {
        return Err(BoundError::Parameter("need at least one grid point".into()));
    }
    let base = ExponentialModel::new(1.0)?;
    let h = ExponentialCgf::new(1.0)?;
    let envelope = base.sub_exponential_envelope()?;
    let (lo, hi) = (1.01, 10.0);
    let rows = map_indices(points, mode, |k| -> Result<Vec<f64>> {
        let rate = lo + (hi - lo) * (k + 1) as f64 / (points + 1) as f64;
        let q = ExponentialModel::new(rate)?;
        let eta_sq = base.kl_from(&q)?;
        let go = go_bias_band(&h, eta_sq)?;
        let env = bias_band(&envelope, eta_sq)?;
        Ok(vec![rate, eta_sq, base.mean_gap(&q), go.lower, go.upper, env.lower, env.upper])
    });
    let mut table = Table::new(["lambda_q", "eta_sq", "exact_gap", "go_lower", "go_upper", "subexp_lower", "subexp_upper"]);
    for r in rows {
        table.push(r?);
    }
    let params = json!({
        "base_rate": 1.0,
        "lambda_q_range": [lo, hi],
        "points": points,
        "qoi": "x",
        "envelope": envelope,
    });
    Ok(Figure { name: "exponential", table, manifest: manifest("exponential", params) })
}

/// Upper bias bounds for `f(x) = x` under `TN(0, 1, -1, 1)` on the grid
/// `eta^2 = step, 2 step, ..., max`.
pub fn truncated_normal_figure(step: f64, max: f64, mode: ExecMode) -> Result<Figure> {
    if !(step > 0.0 && max >= step) {
        return Err(BoundError::Parameter(format!("bad grid step {step} / max {max}")));
    }
    let model = TruncatedNormalModel::new(0.0, 1.0, -1.0, 1.0)?;
    let (mu, var) = model.moments();
    let h = Arc::new(model.cgf(1e-12)?);
    let (a, b) = (model.lo, model.hi);
    let bounds = [
        ConcentrationBound::Bennett { b, mu, sigma_b: var.sqrt(), a: Some(a) },
        ConcentrationBound::BennettAb { a, b, mu },
        ConcentrationBound::Hoeffding { a, b },
    ];
    let count = (max / step + 1e-9).floor() as usize;
    let rows = map_indices(count, mode, |k| -> Result<Vec<f64>> {
        let eta_sq = step * (k + 1) as f64;
        let mut row = vec![eta_sq, go_bias_band(&*h, eta_sq)?.upper];
        for bound in &bounds {
            row.push(bias_band(bound, eta_sq)?.upper);
        }
        Ok(row)
    });
    let mut table = Table::new(["eta_sq", "go_upper", "bennett_upper", "bennett_ab_upper", "hoeffding_upper"]);
    for r in rows {
        table.push(r?);
    }
    let params = json!({
        "model": {"mu": 0.0, "sigma": 1.0, "lo": a, "hi": b},
        "mean": mu,
        "variance": var,
        "eta_sq_step": step,
        "eta_sq_max": max,
        "qoi": "x",
        "bounds": bounds,
    });
    Ok(Figure { name: "truncated_normal", table, manifest: manifest("truncated-normal", params) })
}

/// Settings for [`battery_figure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub points: usize,
    pub t_max: f64,
    pub steepness: f64,
    pub go_eta_sq: f64,
    pub band_eta_sq: Vec<f64>,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self { points: 500, t_max: 2500.0, steepness: 5.0, go_eta_sq: 0.1, band_eta_sq: vec![0.1, 0.01] }
    }
}

fn absolute(mu: f64, cert: &BiasCertificate, lo: f64, hi: f64) -> (f64, f64) {
    ((mu + cert.lower).clamp(lo, hi), (mu + cert.upper).clamp(lo, hi))
}

/// Failure probabilities before `T` under the Weibull fit of `data`, via
/// the indicator and its logistic smoothing, with a GO band for the
/// indicator and Bennett-(a,b) bands for the logistic QoI.
pub fn battery_figure(data: &FailureData, cfg: &BatteryConfig, mode: ExecMode) -> Result<(Figure, WeibullModel)> {
    if cfg.points < 2 || !(cfg.t_max > 0.0) {
        return Err(BoundError::Parameter("need >= 2 grid points and t_max > 0".into()));
    }
    let model = WeibullModel::mle(data)?;
    let rows = map_indices(cfg.points, mode, |k| -> Result<Vec<f64>> {
        let t = cfg.t_max * k as f64 / (cfg.points - 1) as f64;
        let (f1, f2) = lifetime_qois(t, cfg.steepness)?;
        let p1 = f1.expectation(&model, 1e-12)?;
        let p2 = f2.expectation(&model, 1e-10)?;
        let bern = DiscreteCgf::from_weighted(&[1.0 - p1, p1], &[0.0, 1.0])?;
        let go = go_bias_band(&bern, cfg.go_eta_sq)?;
        let (go_lo, go_hi) = absolute(p1, &go, 0.0, 1.0);
        let mut row = vec![t, p1, p2, go_lo, go_hi];
        for &eta_sq in &cfg.band_eta_sq {
            let cert = bias_band(&ConcentrationBound::BennettAb { a: 0.0, b: 1.0, mu: p2 }, eta_sq)?;
            let (lo, hi) = absolute(p2, &cert, 0.0, 1.0);
            row.extend([lo, hi]);
        }
        Ok(row)
    });
    let mut header: Vec<String> = ["t", "f1_probability", "f2_probability", "go_f1_lower", "go_f1_upper"]
        .map(String::from)
        .to_vec();
    for e in &cfg.band_eta_sq {
        header.push(format!("bennett_ab_f2_lower_{}", eta_label(*e)));
        header.push(format!("bennett_ab_f2_upper_{}", eta_label(*e)));
    }
    let mut table = Table::new(header);
    for r in rows {
        table.push(r?);
    }
    let params = json!({
        "failure_times": data.times(),
        "mle": {"shape": model.shape, "scale": model.scale},
        "config": cfg,
    });
    Ok((Figure { name: "battery", table, manifest: manifest("battery", params) }, model))
}

/// Settings for [`ising_figure`]. `defect` is a 1-based bond index and
/// its new coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingFigureConfig {
    pub n: usize,
    pub beta: f64,
    pub j: f64,
    pub h: f64,
    pub m: usize,
    pub eta_sq: Vec<f64>,
    pub gibbs: GibbsConfig,
    pub exact: bool,
    pub defect: Option<(usize, f64)>,
}

impl Default for IsingFigureConfig {
    fn default() -> Self {
        Self {
            n: 100,
            beta: 1.0,
            j: 1.0,
            h: 0.0,
            m: 1,
            eta_sq: vec![0.05, 0.5],
            gibbs: GibbsConfig::default(),
            exact: false,
            defect: None,
        }
    }
}

fn ising_bands(mu: f64, var: f64, eta_sq: f64) -> Result<[f64; 4]> {
    if !(mu > -1.0 && mu < 1.0) || !(var > 0.0) {
        return Ok([mu; 4]);
    }
    let var = var.min((mu + 1.0) * (1.0 - mu));
    let bennett = bias_band(&ConcentrationBound::Bennett { b: 1.0, mu, sigma_b: var.sqrt(), a: Some(-1.0) }, eta_sq)?;
    let ab = bias_band(&ConcentrationBound::BennettAb { a: -1.0, b: 1.0, mu }, eta_sq)?;
    let (b_lo, b_hi) = absolute(mu, &bennett, -1.0, 1.0);
    let (ab_lo, ab_hi) = absolute(mu, &ab, -1.0, 1.0);
    Ok([b_lo, b_hi, ab_lo, ab_hi])
}

/// Local magnetization of the Ising chain at every window center, with
/// Bennett and Bennett-(a,b) bands built from the sampled mean and variance.
pub fn ising_figure(cfg: &IsingFigureConfig, mode: ExecMode) -> Result<Figure> {
    let chain = IsingChain::uniform(cfg.n, cfg.beta, cfg.j, cfg.h)?;
    if cfg.n < 2 * cfg.m + 1 {
        return Err(BoundError::Parameter(format!("window 2m+1 = {} exceeds the chain", 2 * cfg.m + 1)));
    }
    let qois: Vec<IsingQoi> = (cfg.m..cfg.n - cfg.m).map(|center| IsingQoi::LocalMagnetization { center, m: cfg.m }).collect();
    let sampled = ising_gibbs_sample_many(&chain, &qois, &cfg.gibbs, mode)?;
    let exact = if cfg.exact {
        if cfg.n > MAX_ENUMERATION_SITES {
            return Err(BoundError::TooLarge { n: cfg.n, limit: MAX_ENUMERATION_SITES });
        }
        Some(qois.iter().map(|q| ising_enumerate(&chain, q)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let mut header: Vec<String> = ["site", "mean", "variance", "mean_std_error"].map(String::from).to_vec();
    if exact.is_some() {
        header.extend(["exact_mean", "exact_variance"].map(String::from));
    }
    for e in &cfg.eta_sq {
        let l = eta_label(*e);
        header.extend([
            format!("bennett_lower_{l}"),
            format!("bennett_upper_{l}"),
            format!("bennett_ab_lower_{l}"),
            format!("bennett_ab_upper_{l}"),
        ]);
    }
    let mut table = Table::new(header);
    let mut max_z = 0.0_f64;
    for (i, (q, (mean, var))) in qois.iter().zip(&sampled).enumerate() {
        let IsingQoi::LocalMagnetization { center, .. } = q else { unreachable!() };
        let mut row = vec![(center + 1) as f64, mean.value, var.value, mean.std_error()];
        if let Some(ex) = &exact {
            row.extend([ex[i].mean, ex[i].variance]);
            max_z = max_z.max((mean.value - ex[i].mean).abs() / mean.std_error());
        }
        for &eta_sq in &cfg.eta_sq {
            row.extend(ising_bands(mean.value, var.value, eta_sq)?);
        }
        table.push(row);
    }
    let mut params = json!({
        "chain": chain,
        "window_half_width": cfg.m,
        "eta_sq": cfg.eta_sq,
        "gibbs": cfg.gibbs,
        "seed": cfg.gibbs.seed,
        "site_index": "1-based window center",
        "field_assumption": "baseline field h as given (0 by default)",
    });
    if exact.is_some() {
        params["max_abs_z_mcmc_vs_exact"] = json!(max_z);
        params["mcmc_within_3_std_errors"] = json!(max_z < 3.0);
    }
    if let Some((bond, value)) = cfg.defect {
        if bond == 0 {
            return Err(BoundError::Parameter("defect bond index is 1-based".into()));
        }
        let perturbed = chain.with_bond(bond - 1, value)?;
        let method = if cfg.n <= MAX_ENUMERATION_SITES { KlMethod::Exact } else { KlMethod::Sampled(cfg.gibbs) };
        let kl = ising_kl_defect(&chain, &perturbed, method)?;
        params["defect"] = json!({
            "bond": bond,
            "coupling": value,
            "kl": kl.value,
            "kl_std_error": kl.std_error,
            "method": if matches!(method, KlMethod::Exact) { "exact" } else { "sampled" },
        });
    }
    Ok(Figure { name: "ising", table, manifest: manifest("ising", params) })
}

/// `true` when `x <= y` up to `tol` relative to `max(1, |y|)`.
pub fn le_tol(x: f64, y: f64, tol: f64) -> bool {
    x <= y + tol * y.abs().max(1.0)
}

/// Checks the row-wise ordering `GO <= Bennett <= Bennett-(a,b) <= Hoeffding`
/// of the truncated-normal table; returns the offending `eta^2` values.
pub fn truncated_normal_ordering_violations(table: &Table) -> Vec<f64> {
    table
        .rows
        .iter()
        .filter(|r| !r[1..].windows(2).all(|w| le_tol(w[0], w[1], 1e-12)))
        .map(|r| r[0])
        .collect()
}
