//! Pointwise jet forms of the p-Laplacian family and the radial identities
//! the barrier constructions rest on.
//!
//! With `L_p(q, X) = |q|^{p-2} tr X + (p-2)|q|^{p-4} q_i q_j X_ij`:
//!
//! * `T_p(r, a, q, X) = L_p(q, X) - (p-1)|r|^{p-2} a` is the jet form of
//!   `Δ_p u - (p-1) u^{p-2} u_t`,
//! * `K_p(a, q, X) = L_p(q, X) + (p-1)|q|^p - (p-1) a` is the jet form of the
//!   log-transformed operator `Δ_p η + (p-1)|Dη|^p - (p-1) η_t`,
//! * `K_p^λ` replaces the gradient weight `(p-1)` by `λ(p-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// The exponent pair `(p, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExponents", into = "RawExponents")]
pub struct Exponents {
    p: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct RawExponents {
    p: f64,
    n: usize,
}

impl TryFrom<RawExponents> for Exponents {
    type Error = Error;
    fn try_from(raw: RawExponents) -> Result<Self> {
        Exponents::new(raw.p, raw.n)
    }
}

impl From<Exponents> for RawExponents {
    fn from(e: Exponents) -> Self {
        RawExponents { p: e.p, n: e.n }
    }
}

impl Exponents {
    /// `p >= 2` and `n >= 1`. Dimension one is accepted for test oracles.
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if !p.is_finite() || p < 2.0 {
            return Err(invalid(format!("exponent p must be finite with p >= 2, got {p}")));
        }
        if n == 0 {
            return Err(invalid("spatial dimension n must be at least 1"));
        }
        Ok(Self { p, n })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `σ_p = p + n - 2`.
    pub fn sigma_p(&self) -> f64 {
        self.p + self.n as f64 - 2.0
    }

    /// `p > n`: the regime of the cusp barriers centred at the anchor.
    pub fn is_high_p(&self) -> bool {
        self.p > self.n as f64
    }
}

/// Dense symmetric `n x n` matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Rejects data that is not exactly symmetric.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(invalid(format!("matrix of order {n} needs {} entries, got {}", n * n, data.len())));
        }
        check_symmetric(n, &data)?;
        Ok(Self { n, data })
    }

    /// Builds the matrix from its upper triangle; `f(i, j)` is called for `i <= j`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_upper(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    /// `v^T X v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += v[i] * self.data[i * n + j] * v[j];
            }
        }
        s
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `X + s v v^T`.
    pub fn plus_outer(&self, s: f64, v: &[f64]) -> Self {
        let n = self.n;
        Self::from_upper(n, |i, j| self.data[i * n + j] + s * v[i] * v[j])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_symmetric(n: usize, x: &[f64]) -> Result<()> {
    for i in 0..n {
        for j in (i + 1)..n {
            if x[i * n + j] != x[j * n + i] {
                return Err(invalid(format!(
                    "matrix is not symmetric: X[{i}][{j}] = {} but X[{j}][{i}] = {}",
                    x[i * n + j],
                    x[j * n + i]
                )));
            }
        }
    }
    Ok(())
}

/// A parabolic jet `(a, q, X)`: time slope, gradient and Hessian at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub a: f64,
    pub q: Vec<f64>,
    pub x: SymMatrix,
}

impl Jet {
    pub fn new(a: f64, q: Vec<f64>, x: SymMatrix) -> Result<Self> {
        if q.len() != x.order() {
            return Err(invalid(format!("gradient has length {} but Hessian has order {}", q.len(), x.order())));
        }
        Ok(Self { a, q, x })
    }

    /// The jet of a function that is constant in space with time slope `a`.
    pub fn flat(a: f64, n: usize) -> Self {
        Self { a, q: vec![0.0; n], x: SymMatrix::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Multiplies every component by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { a: self.a * s, q: self.q.iter().map(|v| v * s).collect(), x: self.x.scaled(s) }
    }
}

/// Radial data `(f(r), f'(r), f''(r), r)` of a radially symmetric function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub r: f64,
}

/// Sign in front of a power-radial term `± c r^γ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Parameters of `Δ_p(± c r^γ) + λ(p-1)|D(± c r^γ)|^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRadialParams {
    pub c: f64,
    pub gamma: f64,
    pub sign: Sign,
    pub lambda: f64,
    /// `Λ = (p - n)/(p - 1) - γ`.
    pub big_lambda: f64,
}

impl PowerRadialParams {
    pub fn new(c: f64, gamma: f64, sign: Sign, lambda: f64, e: &Exponents) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(invalid(format!("amplitude c must be positive, got {c}")));
        }
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(invalid("exponent gamma must be finite and nonzero"));
        }
        if !lambda.is_finite() {
            return Err(invalid("drift coefficient lambda must be finite"));
        }
        let big_lambda = (e.p - e.n as f64) / (e.p - 1.0) - gamma;
        Ok(Self { c, gamma, sign, lambda, big_lambda })
    }
}

/// `x^e` for `x > 0` through `exp(e ln x)`; `x^0 = 1` exactly.
pub(crate) fn pow_pos(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        (e * x.ln()).exp()
    }
}

/// `|x|^e` for `e >= 0`, with `0^0 = 1` and `0^e = 0` for `e > 0`.
pub(crate) fn pow_abs(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if x == 0.0 {
        0.0
    } else {
        pow_pos(x.abs(), e)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `L_p` on raw row-major storage; callers guarantee shape and symmetry.
pub(crate) fn lp_raw(q: &[f64], x: &[f64], n: usize, p: f64) -> f64 {
    let mut tr = 0.0;
    for i in 0..n {
        tr += x[i * n + i];
    }
    if p == 2.0 {
        return tr;
    }
    let qn = norm(q);
    if qn == 0.0 {
        return 0.0;
    }
    let mut quad = 0.0;
    for i in 0..n {
        let qi = q[i] / qn;
        for j in 0..n {
            quad += qi * x[i * n + j] * (q[j] / qn);
        }
    }
    pow_pos(qn, p - 2.0) * (tr + (p - 2.0) * quad)
}

fn check_dims(q: &[f64], x: &SymMatrix, e: &Exponents) -> Result<()> {
    if q.len() != e.n || x.order() != e.n {
        return Err(invalid(format!(
            "jet dimension mismatch: gradient {}, Hessian {}, exponents n = {}",
            q.len(),
            x.order(),
            e.n
        )));
    }
    Ok(())
}

/// `L_p(q, X)` from a gradient and a symmetric Hessian.
pub fn lp_form(q: &[f64], x: &SymMatrix, e: &Exponents) -> Result<f64> {
    check_dims(q, x, e)?;
    Ok(lp_raw(q, x.as_slice(), e.n, e.p))
}

/// `L_p(q, X)` from row-major Hessian storage, checked for exact symmetry.
pub fn lp_form_dense(q: &[f64], x: &[f64], e: &Exponents) -> Result<f64> {
    let sym = SymMatrix::new(q.len(), x.to_vec())?;
    lp_form(q, &sym, e)
}

/// `T_p(r, a, q, X) = L_p(q, X) - (p-1)|r|^{p-2} a`.
pub fn tp_form(r: f64, jet: &Jet, e: &Exponents) -> Result<f64> {
    let l = lp_form(&jet.q, &jet.x, e)?;
    Ok(l - (e.p - 1.0) * pow_abs(r, e.p - 2.0) * jet.a)
}

/// `K_p(a, q, X) = L_p(q, X) + (p-1)|q|^p - (p-1) a`.
pub fn kp_form(jet: &Jet, e: &Exponents) -> Result<f64> {
    let l = lp_form(&jet.q, &jet.x, e)?;
    Ok(l + (e.p - 1.0) * pow_abs(norm(&jet.q), e.p) - (e.p - 1.0) * jet.a)
}

/// `K_p^λ(a, q, X) = L_p(q, X) + λ(p-1)|q|^p - (p-1) a` for `λ > 0`.
pub fn kp_lambda_form(jet: &Jet, lambda: f64, e: &Exponents) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let l = lp_form(&jet.q, &jet.x, e)?;
    Ok(l + lambda * (e.p - 1.0) * pow_abs(norm(&jet.q), e.p) - (e.p - 1.0) * jet.a)
}

/// `Δ_p f` of a radial function: `|f'|^{p-2}((p-1) f'' + (n-1) f'/r)`.
pub fn radial_plaplacian(prof: &RadialProfile, e: &Exponents) -> Result<f64> {
    if !(prof.r > 0.0) {
        return Err(Error::Domain(format!("radial formula needs r > 0, got {}", prof.r)));
    }
    let lin = (e.p - 1.0) * prof.d2 + (e.n as f64 - 1.0) / prof.r * prof.d1;
    Ok(pow_abs(prof.d1, e.p - 2.0) * lin)
}

/// Closed form of `Δ_p(± c r^γ) + λ(p-1)|D(± c r^γ)|^p`:
/// `(p-1) c^{p-1} |γ|^p r^{p(γ-1)} { cλ ± (-Λ/(γ r^γ)) }`.
pub fn power_radial_residual(params: &PowerRadialParams, r: f64, e: &Exponents) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radial formula needs r > 0, got {r}")));
    }
    let PowerRadialParams { c, gamma, sign, lambda, big_lambda } = *params;
    let p = e.p;
    let lead = (p - 1.0) * pow_pos(c, p - 1.0) * pow_pos(gamma.abs(), p) * pow_pos(r, p * (gamma - 1.0));
    let bracket = c * lambda + sign.value() * (-big_lambda / (gamma * pow_pos(r, gamma)));
    Ok(lead * bracket)
}

/// Gradient and Hessian of `x -> f(|x - z|)` from the radial derivatives
/// `f'(r)` and `f''(r)`; `r = |x - z|` must be positive.
pub fn radial_jet_parts(x: &[f64], z: &[f64], d1: f64, d2: f64) -> (Vec<f64>, SymMatrix) {
    let n = x.len();
    let diff: Vec<f64> = x.iter().zip(z).map(|(a, b)| a - b).collect();
    let r = norm(&diff);
    let e: Vec<f64> = diff.iter().map(|v| v / r).collect();
    let q = e.iter().map(|v| d1 * v).collect();
    let tang = d1 / r;
    let hess = SymMatrix::from_upper(n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        d2 * e[i] * e[j] + tang * (delta - e[i] * e[j])
    });
    (q, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(p: f64, n: usize) -> Exponents {
        Exponents::new(p, n).unwrap()
    }

    #[test]
    fn exponents_validate_and_derive_sigma() {
        assert!(Exponents::new(1.5, 2).is_err());
        assert!(Exponents::new(f64::NAN, 2).is_err());
        assert!(Exponents::new(3.0, 0).is_err());
        assert_eq!(ex(3.0, 2).sigma_p(), 3.0);
        assert_eq!(ex(2.5, 3).sigma_p(), 3.5);
    }

    #[test]
    fn lp_form_examples() {
        let e3 = ex(3.0, 2);
        assert_eq!(lp_form(&[0.0, 0.0], &SymMatrix::diagonal(&[5.0, 7.0]), &e3).unwrap(), 0.0);
        let e2 = ex(2.0, 2);
        assert_eq!(lp_form(&[3.0, 4.0], &SymMatrix::identity(2), &e2).unwrap(), 2.0);
        let e4 = ex(4.0, 2);
        let (a, b) = (1.7, -0.3);
        let v = lp_form(&[1.0, 0.0], &SymMatrix::diagonal(&[a, b]), &e4).unwrap();
        assert!((v - (3.0 * a + b)).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_hessian_is_rejected() {
        let e = ex(3.0, 2);
        let err = lp_form_dense(&[1.0, 0.0], &[1.0, 2.0, 2.5, 1.0], &e).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(SymMatrix::new(2, vec![1.0, 0.0, 1e-300, 1.0]).is_err());
    }

    #[test]
    fn tp_form_examples() {
        let e2 = ex(2.0, 3);
        let jet = Jet::new(1.0, vec![0.0; 3], SymMatrix::identity(3)).unwrap();
        assert_eq!(tp_form(5.0, &jet, &e2).unwrap(), 2.0);
        let e3 = ex(3.0, 2);
        let jet = Jet::new(1.0, vec![1.0, 0.0], SymMatrix::diagonal(&[1.0, 0.0])).unwrap();
        assert_eq!(tp_form(2.0, &jet, &e3).unwrap(), -2.0);
        assert_eq!(tp_form(7.0, &Jet::flat(0.0, 2), &e3).unwrap(), 0.0);
    }

    #[test]
    fn kp_form_examples() {
        assert_eq!(kp_form(&Jet::flat(1.0, 2), &ex(3.0, 2)).unwrap(), -2.0);
        let jet = Jet::new(0.0, vec![1.0, 0.0], SymMatrix::identity(2)).unwrap();
        assert_eq!(kp_form(&jet, &ex(2.0, 2)).unwrap(), 3.0);
    }

    #[test]
    fn kp_lambda_examples() {
        let e2 = ex(2.0, 2);
        let jet = Jet::new(0.0, vec![1.0, 0.0], SymMatrix::zeros(2)).unwrap();
        assert_eq!(kp_lambda_form(&jet, 0.5, &e2).unwrap(), 0.5);
        let jet = Jet::new(1.0, vec![0.0, 0.0], SymMatrix::diagonal(&[2.0, 2.0])).unwrap();
        assert_eq!(kp_lambda_form(&jet, 0.1, &ex(3.0, 2)).unwrap(), -2.0);
        assert!(kp_lambda_form(&jet, 0.0, &e2).is_err());
        assert!(kp_lambda_form(&jet, -1.0, &e2).is_err());
    }

    #[test]
    fn radial_plaplacian_examples() {
        let prof = RadialProfile { value: 1.0, d1: 2.0, d2: 2.0, r: 1.0 };
        assert_eq!(radial_plaplacian(&prof, &ex(2.0, 2)).unwrap(), 4.0);
        assert_eq!(radial_plaplacian(&prof, &ex(3.0, 2)).unwrap(), 12.0);
        let flat = RadialProfile { value: 3.0, d1: 0.0, d2: 0.0, r: 0.5 };
        assert_eq!(radial_plaplacian(&flat, &ex(4.0, 3)).unwrap(), 0.0);
        let bad = RadialProfile { r: 0.0, ..prof };
        assert!(matches!(radial_plaplacian(&bad, &ex(3.0, 2)), Err(Error::Domain(_))));
    }

    #[test]
    fn power_radial_examples() {
        let e = ex(4.0, 2);
        let gamma = 2.0 / 3.0;
        for sign in [Sign::Plus, Sign::Minus] {
            let params = PowerRadialParams::new(1.3, gamma, sign, 0.0, &e).unwrap();
            assert!(params.big_lambda.abs() < 1e-15);
            for r in [0.1, 0.7, 3.0] {
                assert!(power_radial_residual(&params, r, &e).unwrap().abs() < 1e-14);
            }
        }
        let e = ex(2.0, 3);
        let params = PowerRadialParams::new(1.0, 1.0, Sign::Plus, 0.0, &e).unwrap();
        assert!((power_radial_residual(&params, 1.0, &e).unwrap() - 2.0).abs() < 1e-14);
        assert!(power_radial_residual(&params, -1.0, &e).is_err());
        assert!(PowerRadialParams::new(1.0, 0.0, Sign::Plus, 0.0, &e).is_err());
    }

    #[test]
    fn radial_jet_parts_of_r_squared() {
        let x = [0.3, -0.4];
        let (q, h) = radial_jet_parts(&x, &[0.0, 0.0], 2.0 * 0.5, 2.0);
        assert!((q[0] - 0.6).abs() < 1e-15 && (q[1] + 0.8).abs() < 1e-15);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((h.get(i, j) - want).abs() < 1e-14);
            }
        }
    }
}
