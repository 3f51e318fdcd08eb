//! Side barriers for `2 <= p <= n`, in `η = log u`, on domains with a
//! uniform exterior ball of radius `ρ0`.
//!
//! Both constructions use `r = |x - z|` with `z` the center of an exterior
//! ball of radius `ρ` touching at `y`, so the cusp lives in the shell
//! `ρ <= r <= ρ + δ` and the singular center stays outside the closure.
//!
//! Sub (bump): `η = log(m-2ε) + kτ - k|t-s| + r^{-γ} - ρ^{-γ}`.
//!
//! Super (indent) in scaled variables `ω = λ^{p-2} t`, `η = λ φ`:
//! `φ = log(M̂+2ε̂) - kτ + k|ω-ŝ| + c(ρ^{-γ} - r^{-γ})`, `M̂ = M^{1/λ}`.
//! The residual of `φ` is taken with `K_p^λ`, whose `|Dφ|^p` coefficient is
//! `λ(p-1)`; a small `λ` is what lets the indent beat that term.

use serde::{Deserialize, Serialize};

use super::side_high::DEFAULT_TAU;
use super::{check_side_anchor, extreme_tolerance, Barrier, BarrierParams, Check, Cusp, Family, Orientation, Profile, Variable};
use crate::calculus::{pow_pos, Exponents};
use crate::error::{Error, Result};
use crate::problem::{CylinderProblem, ModulusConfig, SpaceTimePoint};

/// Rungs of the `ε̂ = ε 2^{-j}` search.
pub const EPS_HAT_RUNGS: u32 = 21;

/// `λ = LAMBDA_FRACTION / α` keeps `αλ < 1`.
pub const LAMBDA_FRACTION: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideBarrierLowP {
    pub y: Vec<f64>,
    pub s: f64,
    pub eps: f64,
    /// Exterior ball center.
    pub z: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub k: f64,
    /// Half-window, in the local time variable.
    pub tau: f64,
    pub delta: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    /// Radial amplitude; 1 for the sub construction.
    pub c: f64,
    pub kind: Orientation,
    pub h_anchor: f64,
    /// `m` for sub, `M` for super.
    pub extreme: f64,
    pub delta0: f64,
    pub tau0: f64,
    /// Value outside `R` in local variables.
    pub base: f64,
    /// Local time of the anchor (`s`, or `ŝ = λ^{p-2} s`).
    pub s_local: f64,
    /// `ω/t`: 1, or `λ^{p-2}` for the scaled construction.
    pub time_scale: f64,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub cap_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l_const: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vartheta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_hat: Option<f64>,
    /// `log((M+2ε)/(h+2ε))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// `λ kτ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

/// Cap constant and shell geometry of the sub construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowPSubGeometry {
    #[serde(rename = "A")]
    pub cap_a: f64,
    pub rho: f64,
    pub delta: f64,
}

/// `A = (γ^p/k)^{γ/(p(1+γ))}` and the largest admissible `ρ`:
/// `ρ^γ = min(ρ0^γ, A/(1+kτA), D/(1+kτD))` with `D = (δ0/2)^γ`, which
/// gives `(ρ+δ)^γ <= min(A, D)`.
pub fn low_p_sub_geometry(e: &Exponents, k: f64, tau: f64, gamma: f64, rho0: f64, delta0: f64) -> LowPSubGeometry {
    let p = e.p();
    let kt = k * tau;
    let cap_a = pow_pos(pow_pos(gamma, p) / k, gamma / (p * (1.0 + gamma)));
    let d = pow_pos(delta0 / 2.0, gamma);
    let rho_g = pow_pos(rho0, gamma).min(cap_a / (1.0 + kt * cap_a)).min(d / (1.0 + kt * d));
    let rho = pow_pos(rho_g, 1.0 / gamma);
    LowPSubGeometry { cap_a, rho, delta: shell_width(rho, gamma, kt) }
}

/// `δ = ρ((1 - ρ^γ kτ)^{-1/γ} - 1)`.
fn shell_width(rho: f64, gamma: f64, kt: f64) -> f64 {
    rho * (pow_pos(1.0 - pow_pos(rho, gamma) * kt, -1.0 / gamma) - 1.0)
}

fn require_low_p(e: &Exponents) -> Result<()> {
    if e.is_high_p() {
        return Err(Error::WrongRegime(format!("needs 2 <= p <= n, got p = {}, n = {}", e.p(), e.n())));
    }
    Ok(())
}

fn beta(e: &Exponents) -> f64 {
    (e.n() as f64 - e.p()) / (e.p() - 1.0)
}

fn rho0_of(prob: &CylinderProblem) -> Result<f64> {
    prob.domain().outer_ball_radius().ok_or_else(|| {
        Error::UnsupportedDomain(format!("{} domain has no uniform exterior ball radius", prob.domain().kind_name()))
    })
}

/// Degenerate-data shortcut shared by both constructions.
fn degenerate(prob: &CylinderProblem, family: Family, anchor: &SpaceTimePoint, h: f64) -> Result<Option<Barrier>> {
    let kind = family.orientation();
    let extreme = match kind {
        Orientation::Sub => prob.m(),
        Orientation::Super => prob.big_m(),
    };
    let gap = kind.sign() * (h - extreme);
    if gap < -extreme_tolerance(prob) {
        return Err(Error::DataInconsistency(format!("h(y, s) = {h} lies beyond the sampled extreme {extreme}")));
    }
    if gap <= 1e-12 * extreme {
        let value = match kind {
            Orientation::Sub => extreme.min(h),
            Orientation::Super => extreme.max(h),
        };
        return Ok(Some(Barrier::constant(family, Variable::Eta, *prob.exponents(), anchor.clone(), value.ln())));
    }
    Ok(None)
}

pub fn make_side_sub_lowp(prob: &CylinderProblem, y: &[f64], s: f64, eps: f64) -> Result<Barrier> {
    make_sub(prob, y, s, eps, None)
}

/// Sub construction with a caller-chosen `ρ`, skipping the `A` and shell
/// caps; only `ρ <= ρ0` and `ρ^γ kτ < 1` are enforced. Used to probe that
/// the caps matter.
pub fn make_side_sub_lowp_with_rho(prob: &CylinderProblem, y: &[f64], s: f64, eps: f64, rho: f64) -> Result<Barrier> {
    make_sub(prob, y, s, eps, Some(rho))
}

fn make_sub(prob: &CylinderProblem, y: &[f64], s: f64, eps: f64, rho_override: Option<f64>) -> Result<Barrier> {
    let e = *prob.exponents();
    require_low_p(&e)?;
    let rho0 = rho0_of(prob)?;
    let h = check_side_anchor(prob, y, s, eps)?;
    let anchor = SpaceTimePoint::new(y.to_vec(), s);
    if let Some(b) = degenerate(prob, Family::SideSubLowP, &anchor, h)? {
        return Ok(b);
    }
    let m = prob.m();
    let modulus = prob.local_modulus(y, s, eps)?;
    let tau = modulus.tau0.min(DEFAULT_TAU);
    let k = ((h - 2.0 * eps) / (m - 2.0 * eps)).ln() / tau;
    let gamma = beta(&e) + 1.0;
    let geo = low_p_sub_geometry(&e, k, tau, gamma, rho0, modulus.delta0);
    let (rho, delta) = match rho_override {
        None => (geo.rho, geo.delta),
        Some(rho) => {
            if !(rho > 0.0 && pow_pos(rho, gamma) * k * tau < 1.0) {
                return Err(crate::error::invalid(format!("ρ = {rho} needs 0 < ρ and ρ^γ kτ < 1")));
            }
            (rho, shell_width(rho, gamma, k * tau))
        }
    };
    let z = prob.domain().outer_ball(y, rho)?;
    let params = SideBarrierLowP {
        y: y.to_vec(),
        s,
        eps,
        z,
        rho,
        gamma,
        k,
        tau,
        delta,
        big_lambda: gamma - beta(&e),
        c: 1.0,
        kind: Orientation::Sub,
        h_anchor: h,
        extreme: m,
        delta0: modulus.delta0,
        tau0: modulus.tau0,
        base: (m - 2.0 * eps).ln(),
        s_local: s,
        time_scale: 1.0,
        cap_a: Some(geo.cap_a),
        lambda_scale: None,
        theta: None,
        l_const: None,
        vartheta: None,
        eps_hat: None,
        alpha: None,
        kappa: None,
    };
    Ok(finish(Family::SideSubLowP, e, anchor, params))
}

fn finish(family: Family, e: Exponents, anchor: SpaceTimePoint, params: SideBarrierLowP) -> Barrier {
    let anchor_value = params.cusp().value(&anchor);
    Barrier {
        family,
        kind: family.orientation(),
        variable: Variable::Eta,
        exponents: e,
        anchor,
        anchor_value,
        params: BarrierParams::SideLowP(params),
    }
}

/// `(θ, γ)` with `θ² Λ/γ = κ`, `Λ = γ - β`: for `β = 0`, `θ = √κ` and
/// `γ = 1`; otherwise the first `θ = 1 - 2^{-(j+1)}` with `θ² > κ` and
/// `γ = β/(1 - κ/θ²)`.
fn theta_gamma(kappa: f64, beta: f64) -> Result<(f64, f64)> {
    if beta.abs() <= 1e-14 {
        return Ok((kappa.sqrt(), 1.0));
    }
    for j in 0..52 {
        let theta = 1.0 - 0.5f64.powi(j + 1);
        if theta * theta > kappa {
            return Ok((theta, beta / (1.0 - kappa / (theta * theta))));
        }
    }
    Err(Error::MarginSearch(format!("no θ < 1 with θ² > κ = {kappa}")))
}

/// `L = Λ γ^{p-1} (kτ)^{ϑ/γ} ((1-θ)^{p(1+γ)} / θ^ϑ)^{1/γ}`, `ϑ = p(1+γ) - γ`.
fn l_constant(p: f64, gamma: f64, big_lambda: f64, kt: f64, theta: f64) -> (f64, f64) {
    let vartheta = p * (1.0 + gamma) - gamma;
    let l = big_lambda
        * pow_pos(gamma, p - 1.0)
        * pow_pos(kt, vartheta / gamma)
        * pow_pos(pow_pos(1.0 - theta, p * (1.0 + gamma)) / pow_pos(theta, vartheta), 1.0 / gamma);
    (l, vartheta)
}

pub fn make_side_super_lowp(prob: &CylinderProblem, y: &[f64], s: f64, eps: f64) -> Result<Barrier> {
    let e = *prob.exponents();
    require_low_p(&e)?;
    let p = e.p();
    let rho0 = rho0_of(prob)?;
    let h = check_side_anchor(prob, y, s, eps)?;
    let anchor = SpaceTimePoint::new(y.to_vec(), s);
    if let Some(b) = degenerate(prob, Family::SideSuperLowP, &anchor, h)? {
        return Ok(b);
    }
    let big_m = prob.big_m();
    let alpha = ((big_m + 2.0 * eps) / (h + 2.0 * eps)).ln();
    let lambda = LAMBDA_FRACTION / alpha;
    let inv = 1.0 / lambda;
    let (h_hat, m_hat) = (pow_pos(h, inv), pow_pos(big_m, inv));

    let mut found = None;
    for j in 0..EPS_HAT_RUNGS {
        let eh = eps * 0.5f64.powi(j as i32);
        let kappa = lambda * ((m_hat + 2.0 * eh) / (h_hat + 2.0 * eh)).ln();
        if h_hat + 2.0 * eh <= pow_pos(h + 2.0 * eps, inv) && kappa < 1.0 {
            found = Some((eh, kappa));
            break;
        }
    }
    let (eps_hat, kappa) = found.ok_or_else(|| {
        Error::MarginSearch(format!(
            "no ε̂ = ε 2^-j (j < {EPS_HAT_RUNGS}) meets both margin conditions; log(M/h) = {}",
            (big_m / h).ln()
        ))
    })?;

    let time_scale = pow_pos(lambda, p - 2.0);
    let modulus = prob.local_modulus_with(y, s, eps_hat, &ModulusConfig::default(), |v| pow_pos(v, inv))?;
    let tau = (time_scale * modulus.tau0).min(DEFAULT_TAU);
    let kt = kappa / lambda;
    let k = kt / tau;
    let b = beta(&e);
    let (theta, gamma) = theta_gamma(kappa, b)?;
    let big_lambda = gamma - b;
    let (l_const, vartheta) = l_constant(p, gamma, big_lambda, kt, theta);
    let c = pow_pos(l_const / k, gamma / p)
        .min(kt * pow_pos(rho0, gamma) / theta)
        .min(kt * (1.0 - theta) * pow_pos(modulus.delta0 / 2.0, gamma) / theta);
    let rho = pow_pos(c * theta / kt, 1.0 / gamma);
    let delta = rho * (pow_pos(1.0 - theta, -1.0 / gamma) - 1.0);
    let z = prob.domain().outer_ball(y, rho)?;
    let params = SideBarrierLowP {
        y: y.to_vec(),
        s,
        eps,
        z,
        rho,
        gamma,
        k,
        tau,
        delta,
        big_lambda,
        c,
        kind: Orientation::Super,
        h_anchor: h,
        extreme: big_m,
        delta0: modulus.delta0,
        tau0: modulus.tau0,
        base: (m_hat + 2.0 * eps_hat).ln(),
        s_local: time_scale * s,
        time_scale,
        cap_a: None,
        lambda_scale: Some(lambda),
        theta: Some(theta),
        l_const: Some(l_const),
        vartheta: Some(vartheta),
        eps_hat: Some(eps_hat),
        alpha: Some(alpha),
        kappa: Some(kappa),
    };
    Ok(finish(Family::SideSuperLowP, e, anchor, params))
}

impl SideBarrierLowP {
    pub(crate) fn cusp(&self) -> Cusp {
        Cusp {
            center: self.z.clone(),
            s: self.s_local,
            k: self.k,
            tau: self.tau,
            profile: Profile::Inverse { c: self.c, gamma: self.gamma, rho: self.rho },
            base: self.base,
            sign: self.kind.sign(),
            outer: self.lambda_scale.unwrap_or(1.0),
            time_factor: self.time_scale,
            r_lo: self.rho,
            r_hi: self.rho + self.delta,
        }
    }

    pub(crate) fn checks(&self, prob: &CylinderProblem, e: &Exponents) -> Vec<Check> {
        let p = e.p();
        let b = beta(e);
        let kt = self.k * self.tau;
        let rho_g = pow_pos(self.rho, self.gamma);
        let mut out = vec![
            Check::lt("gamma_floor", b, self.gamma),
            Check::le("shell", self.rho + self.delta, self.delta0 / 2.0),
            Check::le("tau_modulus", self.tau, self.time_scale * self.tau0),
        ];
        if let Some(rho0) = prob.domain().outer_ball_radius() {
            out.push(Check::le("rho_outer", self.rho, rho0));
        }
        match self.kind {
            Orientation::Sub => {
                out.push(Check::eq("k", self.k, ((self.h_anchor - 2.0 * self.eps) / (self.extreme - 2.0 * self.eps)).ln() / self.tau));
                out.push(Check::lt("rho_time", rho_g * kt, 1.0));
                let a = pow_pos(pow_pos(self.gamma, p) / self.k, self.gamma / (p * (1.0 + self.gamma)));
                out.push(Check::le("a_cap", rho_g, a / (1.0 + kt * a)));
                out.push(Check::eq("delta", self.delta, shell_width(self.rho, self.gamma, kt)));
            }
            Orientation::Super => {
                let (Some(lambda), Some(theta), Some(eh)) = (self.lambda_scale, self.theta, self.eps_hat) else {
                    out.push(Check { name: "scaled_parameters".into(), pass: false, value: f64::NAN, bound: f64::NAN });
                    return out;
                };
                let inv = 1.0 / lambda;
                let alpha = ((self.extreme + 2.0 * self.eps) / (self.h_anchor + 2.0 * self.eps)).ln();
                out.push(Check::lt("alpha_lambda", alpha * lambda, 1.0));
                out.push(Check::le(
                    "eps_hat_anchor",
                    pow_pos(self.h_anchor, inv) + 2.0 * eh,
                    pow_pos(self.h_anchor + 2.0 * self.eps, inv),
                ));
                let ratio = (pow_pos(self.extreme, inv) + 2.0 * eh) / (pow_pos(self.h_anchor, inv) + 2.0 * eh);
                out.push(Check::lt("eps_hat_ratio", lambda * ratio.ln(), 1.0));
                out.push(Check::eq("k", kt, ratio.ln()));
                out.push(Check::lt("theta_positive", 0.0, theta));
                out.push(Check::lt("theta_below_one", theta, 1.0));
                out.push(Check::eq("scaling_identity", lambda * kt, theta * theta * self.big_lambda / self.gamma));
                out.push(Check::eq("rho_identity", rho_g, self.c * theta / kt));
                let (l, _) = l_constant(p, self.gamma, self.big_lambda, kt, theta);
                out.push(Check::le("residual_bound", self.k, l / pow_pos(self.c, p / self.gamma)));
                out.push(Check::eq("delta", self.delta, self.rho * (pow_pos(1.0 - theta, -1.0 / self.gamma) - 1.0)));
            }
        }
        out
    }
}
