//! One-dimensional Ising chain with free boundaries,
//! `H(s) = -beta (sum_i J_i s_i s_{i+1} + sum_i h_i s_i)`, `s_i = +-1`.
//!
//! Small chains are summed exactly over all `2^N` configurations; larger
//! ones are sampled with single-site heat-bath sweeps. Sites and bonds are
//! 0-based here; bond `i` joins sites `i` and `i + 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::MomentEstimate;
use crate::error::{BoundError, Result};
use crate::numeric::{compensated_sum, stream_rng};
use crate::par::{map_indices, ExecMode};

/// Largest chain summed exactly.
pub const MAX_ENUMERATION_SITES: usize = 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChain")]
pub struct IsingChain {
    n: usize,
    beta: f64,
    j: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Deserialize)]
struct RawChain {
    n: usize,
    beta: f64,
    j: Vec<f64>,
    h: Vec<f64>,
}

impl TryFrom<RawChain> for IsingChain {
    type Error = BoundError;
    fn try_from(r: RawChain) -> Result<Self> {
        IsingChain::new(r.n, r.beta, r.j, r.h)
    }
}

impl IsingChain {
    pub fn new(n: usize, beta: f64, j: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(BoundError::Parameter(format!("chain needs at least 2 sites, got {n}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(BoundError::Parameter(format!("beta must be positive, got {beta}")));
        }
        if j.len() != n - 1 {
            return Err(BoundError::LengthMismatch { expected: n - 1, got: j.len() });
        }
        if h.len() != n {
            return Err(BoundError::LengthMismatch { expected: n, got: h.len() });
        }
        if j.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(BoundError::Parameter("couplings and fields must be finite".into()));
        }
        Ok(Self { n, beta, j, h })
    }

    /// Constant coupling and field.
    pub fn uniform(n: usize, beta: f64, j: f64, h: f64) -> Result<Self> {
        Self::new(n, beta, vec![j; n.saturating_sub(1)], vec![h; n])
    }

    /// Copy with bond `bond` set to `value`.
    pub fn with_bond(&self, bond: usize, value: f64) -> Result<Self> {
        if bond >= self.j.len() {
            return Err(BoundError::Parameter(format!("bond {bond} out of range 0..{}", self.j.len())));
        }
        let mut j = self.j.clone();
        j[bond] = value;
        Self::new(self.n, self.beta, j, self.h.clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn couplings(&self) -> &[f64] {
        &self.j
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    /// `H(s)`, including the factor `beta`.
    pub fn energy(&self, s: &[i8]) -> f64 {
        let bonds: f64 = self.j.iter().enumerate().map(|(i, j)| j * f64::from(s[i] * s[i + 1])).sum();
        let field: f64 = self.h.iter().zip(s).map(|(h, s)| h * f64::from(*s)).sum();
        -self.beta * (bonds + field)
    }

    /// `beta` times the local field felt by site `i`.
    fn local_field(&self, s: &[i8], i: usize) -> f64 {
        let mut f = self.h[i];
        if i > 0 {
            f += self.j[i - 1] * f64::from(s[i - 1]);
        }
        if i + 1 < self.n {
            f += self.j[i] * f64::from(s[i + 1]);
        }
        self.beta * f
    }
}

/// Observables of a spin configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IsingQoi {
    Spin { site: usize },
    /// `s_site s_{site+1}`.
    BondProduct { site: usize },
    /// Mean spin over the window `|y - center| <= m`.
    LocalMagnetization { center: usize, m: usize },
}

impl IsingQoi {
    pub fn validate(&self, n: usize) -> Result<()> {
        let ok = match *self {
            IsingQoi::Spin { site } => site < n,
            IsingQoi::BondProduct { site } => site + 1 < n,
            IsingQoi::LocalMagnetization { center, m } => center >= m && center + m < n,
        };
        if ok {
            Ok(())
        } else {
            Err(BoundError::Parameter(format!("{self:?} does not fit a chain of {n} sites")))
        }
    }

    pub fn eval(&self, s: &[i8]) -> f64 {
        match *self {
            IsingQoi::Spin { site } => f64::from(s[site]),
            IsingQoi::BondProduct { site } => f64::from(s[site] * s[site + 1]),
            IsingQoi::LocalMagnetization { center, m } => {
                let sum: i32 = s[center - m..=center + m].iter().map(|v| i32::from(*v)).sum();
                f64::from(sum) / (2 * m + 1) as f64
            }
        }
    }
}

/// Exact Gibbs expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsingExact {
    pub mean: f64,
    pub variance: f64,
    pub log_partition: f64,
}

/// Weighted sums `sum w`, `sum w f`, `sum w f^2` with `w = exp(-H - shift)`.
#[derive(Debug, Clone, Copy)]
struct Accum {
    shift: f64,
    s0: f64,
    s1: f64,
    s2: f64,
}

impl Accum {
    const EMPTY: Accum = Accum { shift: f64::NEG_INFINITY, s0: 0.0, s1: 0.0, s2: 0.0 };

    fn add(&mut self, log_w: f64, f: f64) {
        if log_w > self.shift {
            let r = (self.shift - log_w).exp();
            self.s0 *= r;
            self.s1 *= r;
            self.s2 *= r;
            self.shift = log_w;
        }
        let w = (log_w - self.shift).exp();
        self.s0 += w;
        self.s1 += w * f;
        self.s2 += w * f * f;
    }

    fn merge(self, other: Accum) -> Accum {
        if other.s0 == 0.0 {
            return self;
        }
        if self.s0 == 0.0 {
            return other;
        }
        let shift = self.shift.max(other.shift);
        let (a, b) = ((self.shift - shift).exp(), (other.shift - shift).exp());
        Accum {
            shift,
            s0: a * self.s0 + b * other.s0,
            s1: a * self.s1 + b * other.s1,
            s2: a * self.s2 + b * other.s2,
        }
    }
}

fn spins_of(bits: u32, s: &mut [i8]) {
    for (i, v) in s.iter_mut().enumerate() {
        *v = if bits >> i & 1 == 1 { 1 } else { -1 };
    }
}

/// Sums `f` against the Gibbs weights of every configuration. The state
/// space is cut into fixed chunks whose partial sums are merged in order,
/// so the result does not depend on `mode`.
fn enumerate_with<F>(chain: &IsingChain, mode: ExecMode, f: F) -> Result<IsingExact>
where
    F: Fn(&[i8]) -> f64 + Sync + Send,
{
    let n = chain.n;
    if n > MAX_ENUMERATION_SITES {
        return Err(BoundError::TooLarge { n, limit: MAX_ENUMERATION_SITES });
    }
    let states = 1u32 << n;
    let chunks = states.min(64);
    let per = states / chunks;
    let parts = map_indices(chunks as usize, mode, |k| {
        let mut acc = Accum::EMPTY;
        let mut s = vec![0i8; n];
        for bits in k as u32 * per..(k as u32 + 1) * per {
            spins_of(bits, &mut s);
            acc.add(-chain.energy(&s), f(&s));
        }
        acc
    });
    let acc = parts.into_iter().fold(Accum::EMPTY, Accum::merge);
    let mean = acc.s1 / acc.s0;
    Ok(IsingExact {
        mean,
        variance: (acc.s2 / acc.s0 - mean * mean).max(0.0),
        log_partition: acc.shift + acc.s0.ln(),
    })
}

/// Exact mean and variance of `qoi` and `log Z`, for `N <= 22`.
pub fn ising_enumerate(chain: &IsingChain, qoi: &IsingQoi) -> Result<IsingExact> {
    ising_enumerate_with(chain, qoi, ExecMode::default())
}

pub fn ising_enumerate_with(chain: &IsingChain, qoi: &IsingQoi, mode: ExecMode) -> Result<IsingExact> {
    qoi.validate(chain.n)?;
    enumerate_with(chain, mode, |s| qoi.eval(s))
}

/// Heat-bath sampler settings. Each chain runs `sweeps` full sweeps in
/// site order, drops the first `burn_in`, keeps every `thin`-th state and
/// splits the kept states into `batches` equal batches. Chain `k` draws
/// from stream `k` of `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub batches: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { sweeps: 60_000, burn_in: 10_000, thin: 10, chains: 4, batches: 20, seed: 0 }
    }
}

impl GibbsConfig {
    fn kept_per_batch(&self) -> Result<usize> {
        if self.sweeps <= self.burn_in {
            return Err(BoundError::Parameter(format!(
                "sweeps ({}) must exceed burn-in ({})",
                self.sweeps, self.burn_in
            )));
        }
        if self.thin == 0 || self.chains == 0 || self.batches == 0 {
            return Err(BoundError::Parameter("thin, chains and batches must be >= 1".into()));
        }
        let kept = (self.sweeps - self.burn_in) / self.thin;
        let per = kept / self.batches;
        if per == 0 {
            return Err(BoundError::Parameter(format!(
                "{kept} kept states cannot fill {} batches",
                self.batches
            )));
        }
        Ok(per)
    }
}

fn sweep<R: Rng>(chain: &IsingChain, s: &mut [i8], rng: &mut R) {
    for i in 0..chain.n {
        let field = chain.local_field(s, i);
        let p_up = 1.0 / (1.0 + (-2.0 * field).exp());
        s[i] = if rng.random::<f64>() < p_up { 1 } else { -1 };
    }
}

/// Runs the chains and returns, for every batch (chain-major order), the
/// batch means of the `k` observables written by `observe`.
fn batch_means<F>(chain: &IsingChain, cfg: &GibbsConfig, mode: ExecMode, k: usize, observe: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[i8], &mut [f64]) + Sync + Send,
{
    let per = cfg.kept_per_batch()?;
    let runs = map_indices(cfg.chains, mode, |c| {
        let mut rng = stream_rng(cfg.seed, c as u64);
        let mut s: Vec<i8> = (0..chain.n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        for _ in 0..cfg.burn_in {
            sweep(chain, &mut s, &mut rng);
        }
        let mut out = Vec::with_capacity(cfg.batches);
        let mut buf = vec![0.0; k];
        for _ in 0..cfg.batches {
            let mut sums = vec![0.0; k];
            for _ in 0..per {
                for _ in 0..cfg.thin {
                    sweep(chain, &mut s, &mut rng);
                }
                observe(&s, &mut buf);
                sums.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
            }
            out.push(sums.into_iter().map(|v| v / per as f64).collect::<Vec<f64>>());
        }
        out
    });
    Ok(runs.into_iter().flatten().collect())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let b = values.len() as f64;
    let m = compensated_sum(values.iter().copied()) / b;
    if values.len() < 2 {
        return (m, f64::NAN);
    }
    let v = compensated_sum(values.iter().map(|x| (x - m) * (x - m))) / (b - 1.0);
    (m, (v / b).sqrt())
}

/// Sampled mean and variance of each QoI; standard errors from batch means.
pub fn ising_gibbs_sample_many(
    chain: &IsingChain,
    qois: &[IsingQoi],
    cfg: &GibbsConfig,
    mode: ExecMode,
) -> Result<Vec<(MomentEstimate, MomentEstimate)>> {
    for q in qois {
        q.validate(chain.n)?;
    }
    let k = qois.len();
    let batches = batch_means(chain, cfg, mode, 2 * k, |s, out| {
        for (i, q) in qois.iter().enumerate() {
            let v = q.eval(s);
            out[2 * i] = v;
            out[2 * i + 1] = v * v;
        }
    })?;
    let total = batches.len() * cfg.kept_per_batch()?;
    Ok((0..k)
        .map(|i| {
            let first: Vec<f64> = batches.iter().map(|b| b[2 * i]).collect();
            let second: Vec<f64> = batches.iter().map(|b| b[2 * i + 1]).collect();
            let (m, m_se) = mean_and_se(&first);
            let (m2, _) = mean_and_se(&second);
            // Linearized variance functional: var = E f^2 - (E f)^2.
            let z: Vec<f64> = first.iter().zip(&second).map(|(a, b)| b - 2.0 * m * a).collect();
            let (_, v_se) = mean_and_se(&z);
            (
                MomentEstimate { value: m, variance_of_estimator: m_se * m_se, n: total },
                MomentEstimate { value: (m2 - m * m).max(0.0), variance_of_estimator: v_se * v_se, n: total },
            )
        })
        .collect())
}

/// Sampled `(mean, variance)` of one QoI.
pub fn ising_gibbs_sample(chain: &IsingChain, qoi: &IsingQoi, cfg: &GibbsConfig) -> Result<(MomentEstimate, MomentEstimate)> {
    Ok(ising_gibbs_sample_many(chain, std::slice::from_ref(qoi), cfg, ExecMode::default())?[0])
}

/// How [`ising_kl_defect`] evaluates the divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KlMethod {
    Exact,
    Sampled(GibbsConfig),
}

/// `R(perturbed || base)`; `std_error` is zero for the exact method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlDefect {
    pub value: f64,
    pub std_error: f64,
}

/// KL divergence of the perturbed Gibbs measure from the base one,
/// `log E_pert[exp(dH)] - E_pert[dH]` with `dH = H_pert - H_base`.
pub fn ising_kl_defect(base: &IsingChain, perturbed: &IsingChain, method: KlMethod) -> Result<KlDefect> {
    if base.n != perturbed.n {
        return Err(BoundError::Parameter(format!(
            "chains have {} and {} sites",
            base.n, perturbed.n
        )));
    }
    let delta = |s: &[i8]| perturbed.energy(s) - base.energy(s);
    match method {
        KlMethod::Exact => {
            let pert = enumerate_with(perturbed, ExecMode::default(), delta)?;
            let log_z_base = enumerate_with(base, ExecMode::default(), |_| 0.0)?.log_partition;
            let value = (log_z_base - pert.log_partition - pert.mean).max(0.0);
            Ok(KlDefect { value, std_error: 0.0 })
        }
        KlMethod::Sampled(cfg) => {
            let overflow = std::sync::atomic::AtomicBool::new(false);
            let batches = batch_means(perturbed, &cfg, ExecMode::default(), 2, |s, out| {
                let d = delta(s);
                if d > crate::empirical::EXPONENT_LIMIT {
                    overflow.store(true, std::sync::atomic::Ordering::Relaxed);
                }
                out[0] = d.exp();
                out[1] = d;
            })?;
            if overflow.load(std::sync::atomic::Ordering::Relaxed) {
                return Err(BoundError::OverflowGuard {
                    exponent: f64::INFINITY,
                    limit: crate::empirical::EXPONENT_LIMIT,
                });
            }
            let a: Vec<f64> = batches.iter().map(|b| b[0]).collect();
            let d: Vec<f64> = batches.iter().map(|b| b[1]).collect();
            let (ma, _) = mean_and_se(&a);
            let (md, _) = mean_and_se(&d);
            // Delta method on log(mean a) - mean d.
            let z: Vec<f64> = a.iter().zip(&d).map(|(a, d)| a / ma - d).collect();
            let (_, se) = mean_and_se(&z);
            Ok(KlDefect { value: ma.ln() - md, std_error: se })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ferro(n: usize) -> IsingChain {
        IsingChain::uniform(n, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let c: IsingChain = serde_json::from_str(r#"{"n":3,"beta":1.0,"j":[1,1],"h":[0,0,0]}"#).unwrap();
        assert_eq!(c, ferro(3));
        assert!(serde_json::from_str::<IsingChain>(r#"{"n":3,"beta":1.0,"j":[1],"h":[0,0,0]}"#).is_err());
    }

    #[test]
    fn two_site_examples() {
        let c = ferro(2);
        let m = ising_enumerate(&c, &IsingQoi::Spin { site: 0 }).unwrap();
        assert!(m.mean.abs() < 1e-15);
        let b = ising_enumerate(&c, &IsingQoi::BondProduct { site: 0 }).unwrap();
        assert!((b.mean - 1f64.tanh()).abs() < 1e-15);
        // Z = 2 e + 2 e^-1 = 4 cosh 1
        assert!((b.log_partition - (4.0 * 1f64.cosh()).ln()).abs() < 1e-14);
    }

    #[test]
    fn three_site_local_magnetization() {
        let e = ising_enumerate(&ferro(3), &IsingQoi::LocalMagnetization { center: 1, m: 1 }).unwrap();
        assert!(e.variance > 0.0 && e.variance <= 1.0);
        assert!(e.mean.abs() < 1e-15);
    }

    #[test]
    fn enumeration_matches_transfer_matrix() {
        // With h = 0 the bonds are independent: Z = 2 prod(2 cosh(beta J_i)).
        let c = IsingChain::new(6, 0.7, vec![1.0, -0.5, 2.0, 0.3, 1.2], vec![0.0; 6]).unwrap();
        let e = ising_enumerate(&c, &IsingQoi::BondProduct { site: 2 }).unwrap();
        let log_z = 2f64.ln() + c.couplings().iter().map(|j| (2.0 * (0.7 * j).cosh()).ln()).sum::<f64>();
        assert!((e.log_partition - log_z).abs() < 1e-13);
        assert!((e.mean - (0.7f64 * 2.0).tanh()).abs() < 1e-14);
    }

    #[test]
    fn enumeration_modes_agree() {
        let c = IsingChain::new(12, 0.9, vec![1.0; 11], (0..12).map(|i| 0.1 * i as f64 - 0.5).collect()).unwrap();
        let q = IsingQoi::LocalMagnetization { center: 5, m: 2 };
        assert_eq!(
            ising_enumerate_with(&c, &q, ExecMode::Sequential).unwrap(),
            ising_enumerate_with(&c, &q, ExecMode::Parallel).unwrap()
        );
    }

    #[test]
    fn too_large() {
        let c = ferro(23);
        assert!(matches!(
            ising_enumerate(&c, &IsingQoi::Spin { site: 0 }),
            Err(BoundError::TooLarge { n: 23, .. })
        ));
    }

    fn short_cfg(seed: u64) -> GibbsConfig {
        GibbsConfig { sweeps: 21_000, burn_in: 1_000, thin: 2, chains: 4, batches: 25, seed }
    }

    #[test]
    fn gibbs_matches_enumeration() {
        let c = ferro(10);
        let q = IsingQoi::LocalMagnetization { center: 4, m: 1 };
        let exact = ising_enumerate(&c, &q).unwrap();
        let (mean, var) = ising_gibbs_sample(&c, &q, &short_cfg(1)).unwrap();
        assert!((mean.value - exact.mean).abs() < 3.0 * mean.std_error(), "{mean:?} vs {exact:?}");
        assert!((var.value - exact.variance).abs() < 3.0 * var.std_error(), "{var:?} vs {exact:?}");
    }

    #[test]
    fn strong_field_saturates() {
        let c = IsingChain::uniform(10, 10.0, 1.0, 5.0).unwrap();
        let q = IsingQoi::LocalMagnetization { center: 4, m: 1 };
        assert!(ising_enumerate(&c, &q).unwrap().mean > 1.0 - 1e-12);
        let cfg = GibbsConfig { sweeps: 500, burn_in: 100, thin: 1, chains: 2, batches: 4, seed: 3 };
        assert!(ising_gibbs_sample(&c, &q, &cfg).unwrap().0.value > 0.999);
    }

    #[test]
    fn gibbs_is_deterministic_across_modes() {
        let c = ferro(8);
        let qs = [IsingQoi::Spin { site: 3 }, IsingQoi::LocalMagnetization { center: 2, m: 1 }];
        let cfg = GibbsConfig { sweeps: 2_000, burn_in: 100, thin: 1, chains: 3, batches: 5, seed: 9 };
        let a = ising_gibbs_sample_many(&c, &qs, &cfg, ExecMode::Sequential).unwrap();
        let b = ising_gibbs_sample_many(&c, &qs, &cfg, ExecMode::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_sampler_settings() {
        let c = ferro(4);
        let q = IsingQoi::Spin { site: 0 };
        let cfg = GibbsConfig { sweeps: 10, burn_in: 10, ..GibbsConfig::default() };
        assert!(matches!(ising_gibbs_sample(&c, &q, &cfg), Err(BoundError::Parameter(_))));
        let cfg = GibbsConfig { thin: 0, ..GibbsConfig::default() };
        assert!(matches!(ising_gibbs_sample(&c, &q, &cfg), Err(BoundError::Parameter(_))));
    }

    #[test]
    fn kl_examples() {
        let c = ferro(10);
        assert_eq!(ising_kl_defect(&c, &c, KlMethod::Exact).unwrap().value, 0.0);
        let pert = c.with_bond(4, 1.5).unwrap();
        let exact = ising_kl_defect(&c, &pert, KlMethod::Exact).unwrap().value;
        // Independent bonds: the divergence is that of one bond's two-point law.
        let (p, q) = ((1f64.exp()) / (2.0 * 1f64.cosh()), (1.5f64.exp()) / (2.0 * 1.5f64.cosh()));
        let two_point = q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
        assert!((exact - two_point).abs() < 1e-13);
        let sampled = ising_kl_defect(&c, &pert, KlMethod::Sampled(short_cfg(4))).unwrap();
        assert!((sampled.value - exact).abs() < 3.0 * sampled.std_error, "{sampled:?} vs {exact}");
    }
}
