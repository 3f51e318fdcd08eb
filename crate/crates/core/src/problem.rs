//! The cylinder `Ω_T = Ω × (0, T)`, its parabolic boundary `P_T`, and the
//! boundary datum `h` (initial values `f` on `Ω`, side values `g` on
//! `∂Ω × [0, T)`).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{norm, Exponents};
use crate::domain::SpatialDomain;
use crate::error::{invalid, Error, Result};
use crate::expr::DataExpression;
use crate::sampling::{ball_point, Halton};

/// A point `(x, t)` of space-time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Self { x, t }
    }
}

/// A scalar function of `(x, t)`.
pub type DataFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// The datum `h`: `f` on the initial slice, `g` on the lateral boundary.
#[derive(Clone)]
pub struct BoundaryDatum {
    initial: DataFn,
    side: DataFn,
    label: String,
}

impl fmt::Debug for BoundaryDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryDatum").field("label", &self.label).finish()
    }
}

impl BoundaryDatum {
    /// Separate initial and side functions. `f` receives `t = 0`.
    pub fn new(
        f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { initial: Arc::new(f), side: Arc::new(g), label: "closure".into() }
    }

    /// One space-time function used for both parts; compatible by construction.
    pub fn from_space_time(h: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        let h: DataFn = Arc::new(h);
        Self { initial: h.clone(), side: h, label: "closure".into() }
    }

    pub fn constant(c: f64) -> Self {
        let mut d = Self::from_space_time(move |_, _| c);
        d.label = format!("{c:?}");
        d
    }

    /// Data from expressions; `g` defaults to `f` when absent.
    pub fn from_expressions(f: DataExpression, g: Option<DataExpression>) -> Self {
        let label = match &g {
            Some(g) => format!("f = {f}; g = {g}"),
            None => format!("h = {f}"),
        };
        let fe = Arc::new(f);
        let ge = g.map(Arc::new).unwrap_or_else(|| fe.clone());
        let f_fn: DataFn = Arc::new(move |x, t| fe.eval(x, t));
        let g_fn: DataFn = Arc::new(move |x, t| ge.eval(x, t));
        Self { initial: f_fn, side: g_fn, label }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `f(x)`.
    pub fn initial(&self, x: &[f64]) -> f64 {
        (self.initial)(x, 0.0)
    }

    /// `g(x, t)`.
    pub fn side(&self, x: &[f64], t: f64) -> f64 {
        (self.side)(x, t)
    }

    /// The datum multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let (f, g) = (self.initial.clone(), self.side.clone());
        Self {
            initial: Arc::new(move |x, t| c * f(x, t)),
            side: Arc::new(move |x, t| c * g(x, t)),
            label: format!("{c:?} * ({})", self.label),
        }
    }

    /// The datum plus `c`.
    pub fn shifted(&self, c: f64) -> Self {
        let (f, g) = (self.initial.clone(), self.side.clone());
        Self {
            initial: Arc::new(move |x, t| f(x, t) + c),
            side: Arc::new(move |x, t| g(x, t) + c),
            label: format!("({}) + {c:?}", self.label),
        }
    }
}

/// Sampled infimum and supremum of `h` over `P_T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub m: f64,
    pub big_m: f64,
    /// Estimated amount by which the true extrema may exceed the sampled ones.
    pub slack: f64,
    pub samples: usize,
}

/// `(δ0, τ0)` from the local oscillation search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    pub delta0: f64,
    pub tau0: f64,
}

/// Search settings for [`CylinderProblem::local_modulus_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulusConfig {
    pub delta_cap: Option<f64>,
    pub tau_cap: Option<f64>,
    /// Sample count per ladder rung.
    pub samples: usize,
    pub rungs: usize,
}

impl Default for ModulusConfig {
    fn default() -> Self {
        Self { delta_cap: None, tau_cap: None, samples: 384, rungs: 48 }
    }
}

/// Default number of `P_T` samples for extrema.
pub const EXTREMA_SAMPLES: usize = 100_000;

/// A complete instance: domain, horizon, exponents and datum.
#[derive(Clone, Debug)]
pub struct CylinderProblem {
    domain: SpatialDomain,
    horizon: f64,
    exponents: Exponents,
    datum: BoundaryDatum,
    extrema: Extrema,
}

impl CylinderProblem {
    pub fn new(domain: SpatialDomain, horizon: f64, exponents: Exponents, datum: BoundaryDatum) -> Result<Self> {
        Self::with_extrema_samples(domain, horizon, exponents, datum, EXTREMA_SAMPLES)
    }

    pub fn with_extrema_samples(
        domain: SpatialDomain,
        horizon: f64,
        exponents: Exponents,
        datum: BoundaryDatum,
        samples: usize,
    ) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid(format!("horizon T must be positive and finite, got {horizon}")));
        }
        if domain.dim() != exponents.n() {
            return Err(invalid(format!(
                "domain dimension {} differs from exponent dimension n = {}",
                domain.dim(),
                exponents.n()
            )));
        }
        check_compatibility(&domain, &datum)?;
        let extrema = sample_extrema(&domain, horizon, &datum, samples)?;
        Ok(Self { domain, horizon, exponents, datum, extrema })
    }

    pub fn domain(&self) -> &SpatialDomain {
        &self.domain
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn exponents(&self) -> &Exponents {
        &self.exponents
    }

    pub fn datum(&self) -> &BoundaryDatum {
        &self.datum
    }

    /// Same geometry and exponents with a different datum.
    pub fn with_datum(&self, datum: BoundaryDatum) -> Result<Self> {
        Self::with_extrema_samples(self.domain.clone(), self.horizon, self.exponents, datum, self.extrema.samples)
    }

    /// Whether `pt` lies on `P_T` (closed in time at `T`).
    pub fn on_parabolic_boundary(&self, pt: &SpaceTimePoint) -> bool {
        let t_tol = 1e-12 * self.horizon;
        if pt.x.len() != self.domain.dim() || !(pt.t >= -t_tol) || pt.t > self.horizon + t_tol {
            return false;
        }
        if pt.t.abs() <= t_tol {
            self.domain.contains_closed(&pt.x)
        } else {
            self.domain.on_boundary(&pt.x)
        }
    }

    /// `h(x, t)` on `P_T`: `f(x)` at `t = 0`, `g(x, t)` on the side.
    pub fn eval_h(&self, pt: &SpaceTimePoint) -> Result<f64> {
        if !self.on_parabolic_boundary(pt) {
            return Err(Error::Domain(format!("({:?}, {}) is not on the parabolic boundary", pt.x, pt.t)));
        }
        let v = if pt.t.abs() <= 1e-12 * self.horizon {
            self.datum.initial(&pt.x)
        } else {
            self.datum.side(&pt.x, pt.t)
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Positivity(format!("h({:?}, {}) = {v}", pt.x, pt.t)));
        }
        Ok(v)
    }

    /// `(m, M)` with the sampling slack.
    pub fn extrema_h(&self) -> Extrema {
        self.extrema
    }

    pub fn m(&self) -> f64 {
        self.extrema.m
    }

    pub fn big_m(&self) -> f64 {
        self.extrema.big_m
    }

    /// `(δ0, τ0)` with the default caps.
    pub fn local_modulus(&self, y: &[f64], s: f64, eps: f64) -> Result<Modulus> {
        self.local_modulus_with(y, s, eps, &ModulusConfig::default(), |v| v)
    }

    /// Largest rung `(δ_cap 2^-j, τ_cap 2^-j)` on which the sampled
    /// oscillation of `transform(h)` over `D̄_{δ,2τ}(y,s) ∩ P_T` stays within
    /// `eps` of `transform(h(y,s))`.
    ///
    /// The rungs are scanned from the top and every rung uses the same
    /// scaled sample pattern, so a larger `eps` never yields a smaller result.
    pub fn local_modulus_with(
        &self,
        y: &[f64],
        s: f64,
        eps: f64,
        cfg: &ModulusConfig,
        transform: impl Fn(f64) -> f64,
    ) -> Result<Modulus> {
        if !(eps > 0.0) {
            return Err(invalid(format!("eps must be positive, got {eps}")));
        }
        let anchor = SpaceTimePoint::new(y.to_vec(), s);
        let centre = transform(self.eval_h(&anchor)?);
        let delta_cap = cfg.delta_cap.unwrap_or(self.domain.diameter() / 2.0);
        let tau_cap = cfg.tau_cap.unwrap_or_else(|| {
            let w = s.min(self.horizon - s) / 2.0;
            if w > 0.0 {
                w
            } else {
                self.horizon / 2.0
            }
        });
        let n = self.domain.dim();
        let pattern = Halton::new(n + 2, 0);
        let mut u = vec![0.0; n + 2];
        let mut delta = delta_cap;
        let mut tau = tau_cap;
        for _ in 0..cfg.rungs {
            let mut ok = true;
            for i in 0..cfg.samples as u64 {
                pattern.point(i, &mut u);
                let offset = ball_point(&u[..n], n);
                let x: Vec<f64> = y.iter().zip(&offset).map(|(a, b)| a + delta * b).collect();
                let dt = tau * (2.0 * u[n] - 1.0);
                let t = s + dt;
                let candidates = self.local_p_t_points(y, delta, &x, t);
                for pt in candidates {
                    let v = transform(self.raw_h(&pt));
                    if !((v - centre).abs() <= eps) {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    break;
                }
            }
            if ok {
                return Ok(Modulus { delta0: delta, tau0: tau });
            }
            delta *= 0.5;
            tau *= 0.5;
        }
        Ok(Modulus { delta0: delta, tau0: tau })
    }

    /// Points of `P_T` near `(x, t)` inside `B̄_δ(y)`: the projection onto
    /// `∂Ω` at time `t` when that is in `[0, T]`, and `x` on the initial
    /// slice when `t <= 0`.
    fn local_p_t_points(&self, y: &[f64], delta: f64, x: &[f64], t: f64) -> Vec<SpaceTimePoint> {
        let mut out = Vec::with_capacity(2);
        let within = |p: &[f64]| norm(&p.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>()) <= delta;
        if (0.0..=self.horizon).contains(&t) {
            let b = self.domain.nearest_boundary_point(x);
            if within(&b) {
                out.push(SpaceTimePoint::new(b, t));
            }
        }
        if t <= 0.0 && self.domain.contains_closed(x) {
            out.push(SpaceTimePoint::new(x.to_vec(), 0.0));
        }
        out
    }

    /// `h` without the `P_T` membership check; `f` at `t <= 0`, else `g`.
    pub(crate) fn raw_h(&self, pt: &SpaceTimePoint) -> f64 {
        if pt.t <= 0.0 {
            self.datum.initial(&pt.x)
        } else {
            self.datum.side(&pt.x, pt.t)
        }
    }

    /// Quasi-uniform samples of `P_T`: about half on the initial slice and
    /// half on the lateral boundary, plus the domain landmarks at `t = 0`.
    pub fn sample_parabolic_boundary(&self, count: usize, seed: u64) -> Vec<SpaceTimePoint> {
        sample_p_t(&self.domain, self.horizon, count, seed)
    }
}

fn check_compatibility(domain: &SpatialDomain, datum: &BoundaryDatum) -> Result<()> {
    let n = domain.dim();
    let h = Halton::new(n + 1, 0);
    let mut u = vec![0.0; n + 1];
    for i in 0..512 {
        h.point(i, &mut u);
        if let Some(x) = domain.sample_boundary(&u) {
            let (f, g) = (datum.initial(&x), datum.side(&x, 0.0));
            if (f - g).abs() > 1e-12 * f.abs().max(g.abs()).max(1.0) {
                return Err(Error::DataInconsistency(format!(
                    "initial and side data disagree at {x:?}: f = {f}, g(x, 0) = {g}"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn sample_p_t(domain: &SpatialDomain, horizon: f64, count: usize, seed: u64) -> Vec<SpaceTimePoint> {
    let n = domain.dim();
    let mut out: Vec<SpaceTimePoint> =
        domain.landmark_points().into_iter().map(|x| SpaceTimePoint::new(x, 0.0)).collect();
    let half = count / 2;
    let inner = Halton::new(n, seed);
    let mut u = vec![0.0; n + 2];
    let mut i = 0u64;
    let mut got = 0;
    while got < half && i < 64 * count as u64 + 64 {
        inner.point(i, &mut u[..n]);
        i += 1;
        if let Some(x) = domain.sample_closure(&u[..n]) {
            out.push(SpaceTimePoint::new(x, 0.0));
            got += 1;
        }
    }
    let side = Halton::new(n + 2, seed.wrapping_add(1));
    let mut i = 0u64;
    let mut got = 0;
    while got < count - half && i < 64 * count as u64 + 64 {
        side.point(i, &mut u);
        i += 1;
        if let Some(x) = domain.sample_boundary(&u[..n + 1]) {
            out.push(SpaceTimePoint::new(x, u[n + 1] * horizon));
            got += 1;
        }
    }
    for x in domain.landmark_points() {
        out.push(SpaceTimePoint::new(x, horizon * (1.0 - 1e-12)));
    }
    out
}

/// Extrema of `h` over a quasi-uniform sample of `P_T` with a Lipschitz
/// slack estimate (largest sampled difference quotient times the typical
/// sample spacing).
pub fn sample_extrema(domain: &SpatialDomain, horizon: f64, datum: &BoundaryDatum, count: usize) -> Result<Extrema> {
    let pts = sample_p_t(domain, horizon, count.max(16), 0);
    let eval = |p: &SpaceTimePoint| if p.t <= 0.0 { datum.initial(&p.x) } else { datum.side(&p.x, p.t) };
    let mut m = f64::INFINITY;
    let mut big_m = f64::NEG_INFINITY;
    for p in &pts {
        let v = eval(p);
        if !v.is_finite() {
            return Err(Error::DataInconsistency(format!("datum is not finite at ({:?}, {}): {v}", p.x, p.t)));
        }
        m = m.min(v);
        big_m = big_m.max(v);
    }
    if !(m > 0.0) {
        return Err(Error::Positivity(format!("sampled infimum of the datum is {m}")));
    }
    let n = domain.dim() as f64;
    let spacing = (domain.diameter().powf(n) * horizon / pts.len() as f64).powf(1.0 / (n + 1.0));
    let step = 1e-3 * spacing.max(1e-12);
    let mut lip = 0.0f64;
    for p in pts.iter().step_by(16) {
        let v = eval(p);
        for i in 0..p.x.len() {
            let mut x = p.x.clone();
            x[i] += step;
            let w = eval(&SpaceTimePoint::new(x, p.t));
            if w.is_finite() {
                lip = lip.max((w - v).abs() / step);
            }
        }
        if p.t > 0.0 {
            let w = eval(&SpaceTimePoint::new(p.x.clone(), p.t + step));
            if w.is_finite() {
                lip = lip.max((w - v).abs() / step);
            }
        }
    }
    Ok(Extrema { m, big_m, slack: lip * spacing, samples: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn heat_problem() -> CylinderProblem {
        let domain = SpatialDomain::boxed(vec![0.0, 0.0], vec![PI, 1.0]).unwrap();
        let datum = BoundaryDatum::from_space_time(|x, t| 2.0 + x[0].sin() * (-t).exp());
        CylinderProblem::new(domain, 0.5, Exponents::new(2.0, 2).unwrap(), datum).unwrap()
    }

    #[test]
    fn eval_h_examples() {
        let prob = heat_problem();
        let v = prob.eval_h(&SpaceTimePoint::new(vec![PI / 2.0, 0.5], 0.0)).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
        assert!(matches!(prob.eval_h(&SpaceTimePoint::new(vec![1.0, 0.5], 0.2)), Err(Error::Domain(_))));
        let side = prob.eval_h(&SpaceTimePoint::new(vec![PI / 2.0, 1.0], 0.2)).unwrap();
        assert!((side - (2.0 + (-0.2f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn extrema_examples() {
        let prob = heat_problem();
        let e = prob.extrema_h();
        assert!((e.m - 2.0).abs() <= 1e-12 + e.slack);
        assert!((e.big_m - 3.0).abs() <= 1e-3 + e.slack);
        assert!(e.slack > 0.0 && e.slack < 0.05);

        let domain = SpatialDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let c = CylinderProblem::new(domain.clone(), 1.0, Exponents::new(3.0, 2).unwrap(), BoundaryDatum::constant(1.7))
            .unwrap();
        assert_eq!((c.m(), c.big_m(), c.extrema_h().slack), (1.7, 1.7, 0.0));

        let corner = BoundaryDatum::from_space_time(|x, _| 0.5 + x[0] + x[1]);
        let c = CylinderProblem::new(domain.clone(), 1.0, Exponents::new(3.0, 2).unwrap(), corner).unwrap();
        assert_eq!(c.m(), 0.5);

        let neg = BoundaryDatum::from_space_time(|x, _| x[0] - 0.5);
        let err = CylinderProblem::new(domain, 1.0, Exponents::new(3.0, 2).unwrap(), neg).unwrap_err();
        assert!(matches!(err, Error::Positivity(_)));
    }

    #[test]
    fn validation() {
        let domain = SpatialDomain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let e = Exponents::new(3.0, 2).unwrap();
        assert!(CylinderProblem::new(domain.clone(), -1.0, e, BoundaryDatum::constant(1.0)).is_err());
        let e3 = Exponents::new(3.0, 3).unwrap();
        assert!(CylinderProblem::new(domain.clone(), 1.0, e3, BoundaryDatum::constant(1.0)).is_err());
        let bad = BoundaryDatum::new(|_, _| 1.0, |_, _| 2.0);
        assert!(matches!(CylinderProblem::new(domain, 1.0, e, bad), Err(Error::DataInconsistency(_))));
    }

    #[test]
    fn modulus_caps_and_lipschitz_scale() {
        let domain = SpatialDomain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let e = Exponents::new(3.0, 2).unwrap();
        let prob = CylinderProblem::new(domain.clone(), 1.0, e, BoundaryDatum::constant(2.0)).unwrap();
        let m = prob.local_modulus(&[1.0, 0.0], 0.5, 0.01).unwrap();
        assert_eq!((m.delta0, m.tau0), (1.0, 0.25));

        let lip = 3.0;
        let prob = CylinderProblem::new(domain, 1.0, e, BoundaryDatum::from_space_time(move |x, _| 5.0 + lip * x[1]))
            .unwrap();
        let eps = 0.03;
        let m = prob.local_modulus(&[1.0, 0.0], 0.5, eps).unwrap();
        let ratio = m.delta0 / (eps / lip);
        assert!((0.25..=2.0).contains(&ratio), "delta0 = {}", m.delta0);
        let big = prob.local_modulus(&[1.0, 0.0], 0.5, 100.0).unwrap();
        assert_eq!((big.delta0, big.tau0), (1.0, 0.25));
    }
}
