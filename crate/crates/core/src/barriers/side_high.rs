//! Side barriers for `p > n`, in `η = log u`.
//!
//! Sub (bump): `η = log(m-2ε) + kτ - k|t-s| - c r^γ` on the cusp where that
//! exceeds `log(m-2ε)`, `r = |x - y|`, `γ = (p-n)/(p-1)`. The radial part is
//! then `p`-harmonic-like (`Λ = 0`) and the residual is
//! `(p-1)(c^p γ^p r^{p(γ-1)} ± k)`, nonnegative once `c` clears its bound.
//!
//! Super (indent): `η = log(M+2ε) - kτ + k|t-s| + c r^γ` with
//! `γ = α/(1+2kτ)` strictly below `α = (p-n)/(p-1)`, so `Λ = α - γ > 0`
//! supplies the negative term.

use serde::{Deserialize, Serialize};

use super::{check_side_anchor, extreme_tolerance, Barrier, BarrierParams, Check, Cusp, Family, Orientation, Profile, Variable};
use crate::calculus::{pow_pos, Exponents};
use crate::error::{Error, Result};
use crate::problem::{CylinderProblem, SpaceTimePoint};

/// Default upper bound on the half-window `τ`.
pub const DEFAULT_TAU: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideBarrierHighP {
    pub y: Vec<f64>,
    pub s: f64,
    pub eps: f64,
    pub k: f64,
    pub tau: f64,
    pub gamma: f64,
    pub c: f64,
    pub c_min: f64,
    pub delta: f64,
    pub mu: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub kind: Orientation,
    pub h_anchor: f64,
    /// `m` for sub, `M` for super.
    pub extreme: f64,
    pub delta0: f64,
    pub tau0: f64,
    /// `log(m - 2ε)` or `log(M + 2ε)`.
    pub base: f64,
}

/// Exponents and the amplitude bound of the `p > n` constructions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighPConstants {
    pub k: f64,
    pub gamma: f64,
    pub mu: f64,
    pub c_min: f64,
    /// `(p-n)/(p-1) - γ`.
    pub big_lambda: f64,
}

/// Sub constants: `k = log((h-2ε)/(m-2ε))/τ`, `γ = (p-n)/(p-1)`,
/// `μ = (γ + p(1-γ))/p`, `c_min = (kτ)^μ / (γ^γ τ^{γ/p})`.
pub fn high_p_sub_constants(e: &Exponents, h_anchor: f64, m: f64, eps: f64, tau: f64) -> Result<HighPConstants> {
    require_high_p(e)?;
    let p = e.p();
    let k = ((h_anchor - 2.0 * eps) / (m - 2.0 * eps)).ln() / tau;
    let gamma = (p - e.n() as f64) / (p - 1.0);
    let mu = (gamma + p * (1.0 - gamma)) / p;
    let c_min = pow_pos(k * tau, mu) / (pow_pos(gamma, gamma) * pow_pos(tau, gamma / p));
    Ok(HighPConstants { k, gamma, mu, c_min, big_lambda: 0.0 })
}

/// Super constants: `k = log((M+2ε)/(h+2ε))/τ`, `γ = α/(1+2kτ)`,
/// `Λ = α - γ`, `μ = p(1-γ)/γ + 2`,
/// `c_min = (2 (kτ)^μ / (τ Λ γ^{p-1}))^{γ/p}`.
pub fn high_p_super_constants(e: &Exponents, h_anchor: f64, big_m: f64, eps: f64, tau: f64) -> Result<HighPConstants> {
    require_high_p(e)?;
    let p = e.p();
    let k = ((big_m + 2.0 * eps) / (h_anchor + 2.0 * eps)).ln() / tau;
    let alpha = (p - e.n() as f64) / (p - 1.0);
    let gamma = alpha / (1.0 + 2.0 * k * tau);
    let big_lambda = alpha - gamma;
    let mu = p * (1.0 - gamma) / gamma + 2.0;
    let c_min = pow_pos(2.0 * pow_pos(k * tau, mu) / (tau * big_lambda * pow_pos(gamma, p - 1.0)), gamma / p);
    Ok(HighPConstants { k, gamma, mu, c_min, big_lambda })
}

fn require_high_p(e: &Exponents) -> Result<()> {
    if !e.is_high_p() {
        return Err(Error::WrongRegime(format!("needs p > n, got p = {}, n = {}", e.p(), e.n())));
    }
    Ok(())
}

pub fn make_side_sub_highp(prob: &CylinderProblem, y: &[f64], s: f64, eps: f64) -> Result<Barrier> {
    make(prob, y, s, eps, Orientation::Sub)
}

pub fn make_side_super_highp(prob: &CylinderProblem, y: &[f64], s: f64, eps: f64) -> Result<Barrier> {
    make(prob, y, s, eps, Orientation::Super)
}

fn make(prob: &CylinderProblem, y: &[f64], s: f64, eps: f64, kind: Orientation) -> Result<Barrier> {
    let e = *prob.exponents();
    require_high_p(&e)?;
    let h = check_side_anchor(prob, y, s, eps)?;
    let anchor = SpaceTimePoint::new(y.to_vec(), s);
    let (family, extreme) = match kind {
        Orientation::Sub => (Family::SideSubHighP, prob.m()),
        Orientation::Super => (Family::SideSuperHighP, prob.big_m()),
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
        return Ok(Barrier::constant(family, Variable::Eta, e, anchor, value.ln()));
    }

    let modulus = prob.local_modulus(y, s, eps)?;
    let tau = modulus.tau0.min(DEFAULT_TAU);
    let consts = match kind {
        Orientation::Sub => high_p_sub_constants(&e, h, extreme, eps, tau)?,
        Orientation::Super => high_p_super_constants(&e, h, extreme, eps, tau)?,
    };
    let kt = consts.k * tau;
    let c = consts.c_min.max(kt / pow_pos(modulus.delta0, consts.gamma));
    let params = SideBarrierHighP {
        y: y.to_vec(),
        s,
        eps,
        k: consts.k,
        tau,
        gamma: consts.gamma,
        c,
        c_min: consts.c_min,
        delta: pow_pos(kt / c, 1.0 / consts.gamma),
        mu: consts.mu,
        big_lambda: consts.big_lambda,
        kind,
        h_anchor: h,
        extreme,
        delta0: modulus.delta0,
        tau0: modulus.tau0,
        base: (extreme - 2.0 * kind.sign() * eps).ln(),
    };
    let anchor_value = params.cusp().value(&anchor);
    Ok(Barrier {
        family,
        kind,
        variable: Variable::Eta,
        exponents: e,
        anchor,
        anchor_value,
        params: BarrierParams::SideHighP(params),
    })
}

impl SideBarrierHighP {
    pub(crate) fn cusp(&self) -> Cusp {
        Cusp {
            center: self.y.clone(),
            s: self.s,
            k: self.k,
            tau: self.tau,
            profile: Profile::Power { c: self.c, gamma: self.gamma },
            base: self.base,
            sign: self.kind.sign(),
            outer: 1.0,
            time_factor: 1.0,
            r_lo: 0.0,
            r_hi: self.delta,
        }
    }

    pub(crate) fn checks(&self, e: &Exponents) -> Vec<Check> {
        let mut out = Vec::new();
        let consts = match self.kind {
            Orientation::Sub => high_p_sub_constants(e, self.h_anchor, self.extreme, self.eps, self.tau),
            Orientation::Super => high_p_super_constants(e, self.h_anchor, self.extreme, self.eps, self.tau),
        };
        if let Ok(cs) = consts {
            out.push(Check::eq("k", self.k, cs.k));
            out.push(Check::eq("gamma", self.gamma, cs.gamma));
            out.push(Check::le("amplitude", cs.c_min, self.c));
        }
        out.push(Check::eq("delta", self.delta, pow_pos(self.k * self.tau / self.c, 1.0 / self.gamma)));
        out.push(Check::le("delta_modulus", self.delta, self.delta0));
        out.push(Check::le("tau_modulus", self.tau, self.tau0));
        if self.kind == Orientation::Super {
            let lhs = self.c * self.gamma * pow_pos(self.delta, self.gamma);
            out.push(Check::eq("half_lambda_identity", lhs, self.big_lambda / 2.0));
        }
        out
    }
}
