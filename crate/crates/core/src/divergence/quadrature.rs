//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite, half-infinite
//! and infinite supports, and the quadrature-backed cumulant function.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::divergence::cgf::CumulantFunction;
use crate::error::{BoundError, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;
const INITIAL_PIECES: usize = 16;

/// Integration domain. Unbounded ends are mapped onto a finite interval by
/// `x = lo + scale * t / (1 - t)` (and its mirror images).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Interval { lo: f64, hi: f64 },
    LowerBounded { lo: f64, scale: f64 },
    UpperBounded { hi: f64, scale: f64 },
    Real { scale: f64 },
}

impl Support {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Support::Interval { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Support::LowerBounded { lo, scale } | Support::UpperBounded { hi: lo, scale } => {
                lo.is_finite() && scale > 0.0
            }
            Support::Real { scale } => scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(BoundError::Domain(format!("invalid support {self:?}")))
        }
    }

    /// Bounds of the integration variable `t`.
    fn t_range(&self) -> (f64, f64) {
        match *self {
            Support::Interval { lo, hi } => (lo, hi),
            Support::LowerBounded { .. } | Support::UpperBounded { .. } => (0.0, 1.0),
            Support::Real { .. } => (-1.0, 1.0),
        }
    }

    /// `(x(t), dx/dt)`.
    fn map(&self, t: f64) -> (f64, f64) {
        match *self {
            Support::Interval { .. } => (t, 1.0),
            Support::LowerBounded { lo, scale } => {
                let u = 1.0 - t;
                (lo + scale * t / u, scale / (u * u))
            }
            Support::UpperBounded { hi, scale } => {
                let u = 1.0 - t;
                (hi - scale * t / u, scale / (u * u))
            }
            Support::Real { scale } => {
                let u = 1.0 - t * t;
                (scale * t / u, scale * (1.0 + t * t) / (u * u))
            }
        }
    }

    fn inverse(&self, x: f64) -> f64 {
        match *self {
            Support::Interval { .. } => x,
            Support::LowerBounded { lo, scale } => {
                let u = (x - lo) / scale;
                u / (1.0 + u)
            }
            Support::UpperBounded { hi, scale } => {
                let u = (hi - x) / scale;
                u / (1.0 + u)
            }
            Support::Real { scale } => {
                if x == 0.0 {
                    0.0
                } else {
                    2.0 * x / (scale + (scale * scale + 4.0 * x * x).sqrt())
                }
            }
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Support::Interval { lo, hi } => lo <= x && x <= hi,
            Support::LowerBounded { lo, .. } => lo <= x,
            Support::UpperBounded { hi, .. } => x <= hi,
            Support::Real { .. } => x.is_finite(),
        }
    }
}

struct Piece<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
    abs: [f64; K],
    priority: f64,
}

impl<const K: usize> PartialEq for Piece<K> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<const K: usize> Eq for Piece<K> {}
impl<const K: usize> PartialOrd for Piece<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Piece<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn gk15<const K: usize, F>(f: &F, support: &Support, a: f64, b: f64) -> Piece<K>
where
    F: Fn(f64) -> [f64; K],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |t: f64| -> [f64; K] {
        let (x, jac) = support.map(t);
        if !x.is_finite() || jac == 0.0 || !jac.is_finite() {
            return [0.0; K];
        }
        let mut v = f(x);
        for vk in v.iter_mut() {
            *vk *= jac;
            if !vk.is_finite() {
                *vk = 0.0;
            }
        }
        v
    };
    let fc = eval(center);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    let mut abs = [0.0; K];
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
        abs[k] = WGK[7] * fc[k].abs();
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        for k in 0..K {
            kron[k] += WGK[j] * (f1[k] + f2[k]);
            abs[k] += WGK[j] * (f1[k].abs() + f2[k].abs());
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * (f1[k] + f2[k]);
            }
        }
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for k in 0..K {
        value[k] = kron[k] * half;
        error[k] = ((kron[k] - gauss[k]) * half).abs();
        abs[k] *= half.abs();
    }
    Piece {
        a,
        b,
        value,
        error,
        abs,
        priority: 0.0,
    }
}

/// Integrates a vector-valued function. Component `k` is accepted when its
/// error estimate is below `tol * (L1_k + L1_0)`, i.e. relative to its own
/// absolute mass plus the mass of the first component.
pub fn integrate_vec<const K: usize, F>(
    f: F,
    support: Support,
    breakpoints: &[f64],
    tol: f64,
) -> Result<[f64; K]>
where
    F: Fn(f64) -> [f64; K],
{
    support.validate()?;
    let (t0, t1) = support.t_range();
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .filter(|x| support.contains(**x))
        .map(|&x| support.inverse(x))
        .filter(|t| *t > t0 && *t < t1)
        .collect();
    for i in 1..INITIAL_PIECES {
        cuts.push(t0 + (t1 - t0) * i as f64 / INITIAL_PIECES as f64);
    }
    cuts.push(t0);
    cuts.push(t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let target = |value: &[f64; K], abs: &[f64; K], k: usize| -> f64 {
        let _ = value;
        let base = if k == 0 { abs[0] } else { abs[k] + abs[0] };
        (tol * base).max(1e-300)
    };
    let priority = |p: &Piece<K>, abs: &[f64; K]| -> f64 {
        (0..K)
            .map(|k| p.error[k] / target(&p.value, abs, k))
            .fold(0.0, f64::max)
    };

    let mut pieces: Vec<Piece<K>> = cuts.windows(2).map(|w| gk15(&f, &support, w[0], w[1])).collect();
    loop {
        let mut value = [0.0; K];
        let mut error = [0.0; K];
        let mut abs = [0.0; K];
        for p in &pieces {
            for k in 0..K {
                value[k] += p.value[k];
                error[k] += p.error[k];
                abs[k] += p.abs[k];
            }
        }
        let converged = (0..K).all(|k| error[k] <= target(&value, &abs, k));
        if converged {
            return Ok(value);
        }
        if pieces.len() >= MAX_INTERVALS {
            let worst = (0..K)
                .map(|k| error[k] / target(&value, &abs, k))
                .fold(0.0, f64::max);
            return Err(BoundError::QuadratureNonconvergence {
                error: worst * tol,
                tol,
            });
        }
        // Bisect the pieces carrying the most error (batch of up to 16).
        let mut heap: BinaryHeap<Piece<K>> = pieces
            .into_iter()
            .map(|mut p| {
                p.priority = priority(&p, &abs);
                p
            })
            .collect();
        let mut next = Vec::with_capacity(heap.len() + 16);
        let mut splits = 0;
        for _ in 0..16 {
            match heap.peek() {
                Some(p) if p.priority > 1.0 / (MAX_INTERVALS as f64) => {}
                _ => break,
            }
            let p = heap.pop().expect("peeked");
            let mid = 0.5 * (p.a + p.b);
            if mid <= p.a || mid >= p.b {
                next.push(p);
                break;
            }
            next.push(gk15(&f, &support, p.a, mid));
            next.push(gk15(&f, &support, mid, p.b));
            splits += 1;
        }
        next.extend(heap.into_vec());
        if splits == 0 {
            let worst = (0..K)
                .map(|k| error[k] / target(&value, &abs, k))
                .fold(0.0, f64::max);
            return Err(BoundError::QuadratureNonconvergence {
                error: worst * tol,
                tol,
            });
        }
        pieces = next;
    }
}

/// Scalar adaptive quadrature with L1-relative tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, support: Support, tol: f64) -> Result<f64> {
    integrate_vec(|x| [f(x)], support, &[], tol).map(|v| v[0])
}

/// Like [`integrate`], with extra breakpoints where `f` has kinks or jumps.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    support: Support,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    integrate_vec(|x| [f(x)], support, breakpoints, tol).map(|v| v[0])
}

type Density = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Cumulant generating function of `f(X) - E[f(X)]` for a one-dimensional
/// density, evaluated by adaptive quadrature of the tilted moments.
///
/// Tilted integrands are computed relative to a shift found on a coarse grid
/// so that large `c` does not overflow.
pub struct QuadratureCgf {
    log_density: Density,
    qoi: Density,
    support: Support,
    breakpoints: Vec<f64>,
    tol: f64,
    mean: f64,
    domain: (f64, f64),
    variance: f64,
    probe: Vec<f64>,
}

impl std::fmt::Debug for QuadratureCgf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadratureCgf")
            .field("support", &self.support)
            .field("mean", &self.mean)
            .field("variance", &self.variance)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Cumulants evaluated at one tilt parameter.
#[derive(Debug, Clone, Copy)]
struct Cumulants {
    value: f64,
    d1: f64,
    d2: f64,
}

impl QuadratureCgf {
    /// `domain` is the declared open interval of `c` on which the MGF is
    /// finite. The density must integrate to one within `tol`.
    pub fn new<D, Q>(
        density: D,
        support: Support,
        qoi: Q,
        domain: (f64, f64),
        tol: f64,
    ) -> Result<Self>
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        Q: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_log_density(move |x| density(x).ln(), support, qoi, domain, tol, Vec::new())
    }

    /// Same as [`QuadratureCgf::new`] but takes `log p(x)`, which keeps far
    /// tails accurate where the density itself would underflow. `breakpoints`
    /// mark points where the density or the QoI is not smooth.
    pub fn from_log_density<D, Q>(
        log_density: D,
        support: Support,
        qoi: Q,
        domain: (f64, f64),
        tol: f64,
        breakpoints: Vec<f64>,
    ) -> Result<Self>
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        Q: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(domain.0 < 0.0 && 0.0 < domain.1) {
            return Err(BoundError::Domain(format!(
                "MGF finiteness interval {domain:?} must contain 0"
            )));
        }
        if !(tol > 0.0) {
            return Err(BoundError::Domain(format!("tolerance must be positive, got {tol}")));
        }
        support.validate()?;
        let density = |x: f64| {
            let l = log_density(x);
            if l == f64::NEG_INFINITY || l.is_nan() {
                0.0
            } else {
                l.exp()
            }
        };
        let [mass, m1] = integrate_vec(
            |x| {
                let p = density(x);
                [p, p * qoi(x)]
            },
            support,
            &breakpoints,
            tol,
        )?;
        if (mass - 1.0).abs() > tol.max(1e-12) * 10.0 {
            return Err(BoundError::InvalidDistribution(format!(
                "density integrates to {mass}, not 1"
            )));
        }
        let mean = m1 / mass;
        let var = integrate_vec(
            |x| {
                let d = qoi(x) - mean;
                [density(x) * d * d]
            },
            support,
            &breakpoints,
            tol,
        )?[0]
            / mass;
        let (t0, t1) = support.t_range();
        let probe: Vec<f64> = (1..2048)
            .map(|i| support.map(t0 + (t1 - t0) * i as f64 / 2048.0).0)
            .chain(breakpoints.iter().copied())
            .chain(match support {
                Support::Interval { lo, hi } => vec![lo, hi],
                Support::LowerBounded { lo, .. } => vec![lo],
                Support::UpperBounded { hi, .. } => vec![hi],
                Support::Real { .. } => vec![],
            })
            .filter(|x| x.is_finite())
            .collect();
        Ok(Self {
            log_density: Box::new(log_density),
            qoi: Box::new(qoi),
            support,
            breakpoints,
            tol,
            mean,
            domain,
            variance: var,
            probe,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    fn cumulants(&self, c: f64) -> Result<Cumulants> {
        if !(c > self.domain.0 && c < self.domain.1) {
            return Err(BoundError::Domain(format!(
                "c = {c} outside the declared MGF domain {:?}",
                self.domain
            )));
        }
        if c == 0.0 {
            return Ok(Cumulants {
                value: 0.0,
                d1: 0.0,
                d2: self.variance,
            });
        }
        let log_integrand = |x: f64| {
            let lp = (self.log_density)(x);
            if lp == f64::NEG_INFINITY || lp.is_nan() {
                f64::NEG_INFINITY
            } else {
                lp + c * ((self.qoi)(x) - self.mean)
            }
        };
        let shift = self
            .probe
            .iter()
            .map(|&x| log_integrand(x))
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(BoundError::Domain("density vanishes on the probe grid".into()));
        }
        let [i0, i1, i2] = integrate_vec(
            |x| {
                let l = log_integrand(x);
                if l == f64::NEG_INFINITY {
                    return [0.0; 3];
                }
                let w = (l - shift).exp();
                let d = (self.qoi)(x) - self.mean;
                [w, w * d, w * d * d]
            },
            self.support,
            &self.breakpoints,
            self.tol,
        )?;
        if !(i0 > 0.0) || !i0.is_finite() {
            return Err(BoundError::QuadratureNonconvergence {
                error: f64::INFINITY,
                tol: self.tol,
            });
        }
        let d1 = i1 / i0;
        let d2 = (i2 / i0 - d1 * d1).max(0.0);
        Ok(Cumulants {
            value: shift + i0.ln(),
            d1,
            d2,
        })
    }
}

impl CumulantFunction for QuadratureCgf {
    fn value(&self, c: f64) -> Result<f64> {
        self.cumulants(c).map(|k| k.value)
    }
    fn deriv1(&self, c: f64) -> Result<f64> {
        self.cumulants(c).map(|k| k.d1)
    }
    fn deriv2(&self, c: f64) -> Result<f64> {
        self.cumulants(c).map(|k| k.d2)
    }
    fn all(&self, c: f64) -> Result<(f64, f64, f64)> {
        self.cumulants(c).map(|k| (k.value, k.d1, k.d2))
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn is_degenerate(&self) -> bool {
        !(self.variance > 1e-14 * (1.0 + self.mean * self.mean))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn std_normal(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x, Support::Interval { lo: 0.0, hi: 3.0 }, 1e-12).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_supports() {
        let v = integrate(std_normal, Support::Real { scale: 1.0 }, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
        let v = integrate(|x| (-x).exp(), Support::LowerBounded { lo: 0.0, scale: 1.0 }, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
        let v = integrate(|x| x.exp(), Support::UpperBounded { hi: 0.0, scale: 1.0 }, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn breakpoints_handle_jumps() {
        let v = integrate_with_breaks(
            |x| if x < 0.3 { 1.0 } else { 0.0 },
            Support::Interval { lo: 0.0, hi: 1.0 },
            &[0.3],
            1e-12,
        )
        .unwrap();
        assert!((v - 0.3).abs() < 1e-12);
    }

    #[test]
    fn gaussian_cgf() {
        let real = (f64::NEG_INFINITY, f64::INFINITY);
        let h = QuadratureCgf::new(std_normal, Support::Real { scale: 1.0 }, |x| x, real, 1e-11).unwrap();
        assert!((h.value(1.0).unwrap() - 0.5).abs() < 1e-9);
        assert!((h.deriv1(1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!((h.deriv2(1.0).unwrap() - 1.0).abs() < 1e-8);
        assert!((h.value(-3.0).unwrap() - 4.5).abs() < 1e-8);
        assert!((h.value(20.0).unwrap() - 200.0).abs() < 1e-7);
        // Far tilts need the log-density form.
        let log_phi = |x: f64| -0.5 * x * x - 0.5 * (2.0 * PI).ln();
        let h = QuadratureCgf::from_log_density(log_phi, Support::Real { scale: 1.0 }, |x| x, real, 1e-11, vec![]).unwrap();
        assert!((h.value(40.0).unwrap() - 800.0).abs() < 1e-7);
        assert!((h.deriv1(40.0).unwrap() - 40.0).abs() < 1e-7);
    }

    #[test]
    fn truncated_normal_variance() {
        let z = 0.682_689_492_137_085_9;
        let h = QuadratureCgf::new(
            move |x| std_normal(x) / z,
            Support::Interval { lo: -1.0, hi: 1.0 },
            |x| x,
            (f64::NEG_INFINITY, f64::INFINITY),
            1e-11,
        )
        .unwrap();
        assert!((h.deriv2(0.0).unwrap() - 0.291_125_094_772_793).abs() < 1e-9);
        assert!((h.deriv2(1e-3).unwrap() - 0.291125).abs() < 1e-4);
    }

    #[test]
    fn exponential_cgf_and_domain() {
        let h = QuadratureCgf::new(
            |x| (-x).exp(),
            Support::LowerBounded { lo: 0.0, scale: 1.0 },
            |x| x,
            (f64::NEG_INFINITY, 1.0),
            1e-11,
        )
        .unwrap();
        for c in [-1.0, 0.25, 0.5, 0.8] {
            let exact = -(1.0f64 - c).ln() - c;
            assert!((h.value(c).unwrap() - exact).abs() < 1e-8, "c = {c}");
        }
        assert_eq!(h.domain().1, 1.0);
        assert!(matches!(h.value(1.5), Err(BoundError::Domain(_))));
    }

    #[test]
    fn rejects_unnormalized_density() {
        let r = QuadratureCgf::new(|_| 2.0, Support::Interval { lo: 0.0, hi: 1.0 }, |x| x, (-1.0, 1.0), 1e-10);
        assert!(matches!(r, Err(BoundError::InvalidDistribution(_))));
    }
}
