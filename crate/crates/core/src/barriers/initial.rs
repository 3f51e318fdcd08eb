//! Initial-time barriers in `u`.
//!
//! Sub: `ψ = φ(r) e^{-ℓ t}` with `φ = h(y,0) - 2ε - (h(y,0) - m) r²/δ²` on
//! `B_δ(y)` and `φ = m - 2ε` outside. Super mirrors it with `+2ε`, `M` and
//! `e^{+ℓ t}`. In the interior `ℓ = λ/(p-1)`; at boundary anchors `ℓ` is
//! raised until the ball part has decayed below the base after time `τ`.

use serde::{Deserialize, Serialize};

use super::{check_margin, extreme_tolerance, Barrier, BarrierParams, Check, Family, Orientation, Piece, Variable, GUARD_BAND};
use crate::calculus::{norm, pow_pos, Exponents, Jet, SymMatrix};
use crate::error::{Error, Result};
use crate::problem::{CylinderProblem, SpaceTimePoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Interior,
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialBarrierParams {
    pub y: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
    pub lambda: f64,
    /// Boundary-case rate; `None` for interior anchors.
    pub ell: Option<f64>,
    /// Boundary-case time window; `None` for interior anchors.
    pub tau: Option<f64>,
    pub kind: Orientation,
    pub placement: Placement,
    /// Exponential rate actually used: `ell` or `λ/(p-1)`.
    pub rate: f64,
    pub h_anchor: f64,
    /// `m` for sub, `M` for super.
    pub extreme: f64,
    pub delta0: f64,
    pub tau0: f64,
}

/// `σ_p 2^{p-1} / δ^p · (gap / floor)^{p-1}` where the gap is `h - m`
/// (sub) or `M - h` (super) and the floor is `m - 2ε` or `h + 2ε`.
pub fn initial_lambda(e: &Exponents, h_anchor: f64, extreme: f64, eps: f64, delta: f64, kind: Orientation) -> f64 {
    let p = e.p();
    let ratio = match kind {
        Orientation::Sub => (h_anchor - extreme) / (extreme - 2.0 * eps),
        Orientation::Super => (extreme - h_anchor) / (h_anchor + 2.0 * eps),
    };
    e.sigma_p() * pow_pos(2.0, p - 1.0) / pow_pos(delta, p) * ratio.max(0.0).powf(p - 1.0)
}

/// Boundary-case rate `max(λ/(p-1), log(ratio)/τ)`, with the ratio
/// `(h-2ε)/(m-2ε)` (sub) or `(M+2ε)/(h+2ε)` (super).
pub fn boundary_rate(e: &Exponents, lambda: f64, h_anchor: f64, extreme: f64, eps: f64, tau: f64, kind: Orientation) -> f64 {
    let ratio = match kind {
        Orientation::Sub => (h_anchor - 2.0 * eps) / (extreme - 2.0 * eps),
        Orientation::Super => (extreme + 2.0 * eps) / (h_anchor + 2.0 * eps),
    };
    (lambda / (e.p() - 1.0)).max(ratio.ln() / tau)
}

pub fn make_initial_sub(prob: &CylinderProblem, y: &[f64], eps: f64) -> Result<Barrier> {
    make_initial(prob, y, eps, Orientation::Sub)
}

pub fn make_initial_super(prob: &CylinderProblem, y: &[f64], eps: f64) -> Result<Barrier> {
    make_initial(prob, y, eps, Orientation::Super)
}

fn make_initial(prob: &CylinderProblem, y: &[f64], eps: f64, kind: Orientation) -> Result<Barrier> {
    check_margin(prob, eps)?;
    let dom = prob.domain();
    if y.len() != prob.exponents().n() || !dom.contains_closed(y) {
        return Err(Error::Domain(format!("initial anchor {y:?} is not in the closed domain")));
    }
    let e = *prob.exponents();
    let anchor = SpaceTimePoint::new(y.to_vec(), 0.0);
    let h = prob.eval_h(&anchor)?;
    let (family, extreme) = match kind {
        Orientation::Sub => (Family::InitialSub, prob.m()),
        Orientation::Super => (Family::InitialSuper, prob.big_m()),
    };
    let tol = extreme_tolerance(prob);
    let gap = kind.sign() * (h - extreme);
    if gap < -tol {
        return Err(Error::DataInconsistency(format!("h(y, 0) = {h} lies beyond the sampled extreme {extreme}")));
    }
    if gap <= 1e-12 * extreme {
        // Degenerate data: the extreme itself is a barrier.
        let value = match kind {
            Orientation::Sub => extreme.min(h),
            Orientation::Super => extreme.max(h),
        };
        return Ok(Barrier::constant(family, Variable::U, e, anchor, value));
    }

    let modulus = prob.local_modulus(y, 0.0, eps)?;
    let boundary = dom.distance_to_boundary(y) <= dom.boundary_tol();
    let (placement, delta) = if boundary {
        (Placement::Boundary, modulus.delta0)
    } else {
        (Placement::Interior, dom.distance_to_boundary(y).min(modulus.delta0))
    };
    let lambda = initial_lambda(&e, h, extreme, eps, delta, kind);
    let (ell, tau, rate) = match placement {
        Placement::Interior => (None, None, lambda / (e.p() - 1.0)),
        Placement::Boundary => {
            let tau = modulus.tau0;
            let ell = boundary_rate(&e, lambda, h, extreme, eps, tau, kind);
            (Some(ell), Some(tau), ell)
        }
    };
    let params = InitialBarrierParams {
        y: y.to_vec(),
        eps,
        delta,
        lambda,
        ell,
        tau,
        kind,
        placement,
        rate,
        h_anchor: h,
        extreme,
        delta0: modulus.delta0,
        tau0: modulus.tau0,
    };
    Ok(Barrier {
        family,
        kind,
        variable: Variable::U,
        exponents: e,
        anchor_value: params.value(&anchor),
        anchor,
        params: BarrierParams::Initial(params),
    })
}

impl InitialBarrierParams {
    fn sigma(&self) -> f64 {
        self.kind.sign()
    }

    fn time_factor(&self, t: f64) -> f64 {
        (-self.sigma() * self.rate * t).exp()
    }

    /// Coefficient of `r²` in `φ`.
    fn curvature(&self) -> f64 {
        (self.extreme - self.h_anchor) / (self.delta * self.delta)
    }

    fn radius(&self, x: &[f64]) -> f64 {
        norm(&x.iter().zip(&self.y).map(|(a, b)| a - b).collect::<Vec<_>>())
    }

    fn profile(&self, r: f64) -> f64 {
        let r = r.min(self.delta);
        self.h_anchor - 2.0 * self.sigma() * self.eps + self.curvature() * r * r
    }

    pub(crate) fn value(&self, pt: &SpaceTimePoint) -> f64 {
        self.profile(self.radius(&pt.x)) * self.time_factor(pt.t)
    }

    pub(crate) fn base_value(&self, t: f64) -> f64 {
        (self.extreme - 2.0 * self.sigma() * self.eps) * self.time_factor(t)
    }

    pub(crate) fn peak_value(&self, t: f64) -> f64 {
        (self.h_anchor - 2.0 * self.sigma() * self.eps) * self.time_factor(t)
    }

    pub(crate) fn in_region(&self, pt: &SpaceTimePoint) -> bool {
        self.radius(&pt.x) <= self.delta
    }

    pub(crate) fn piece(&self, pt: &SpaceTimePoint) -> Result<Piece> {
        let r = self.radius(&pt.x);
        if r < self.delta * (1.0 - GUARD_BAND) {
            Ok(Piece::Plus)
        } else if r > self.delta * (1.0 + GUARD_BAND) {
            Ok(Piece::Exterior)
        } else {
            Err(Error::OnRidge(format!("|x - y| = {r} is within the guard band of δ = {}", self.delta)))
        }
    }

    pub(crate) fn jet(&self, pt: &SpaceTimePoint) -> Result<(Piece, Jet)> {
        let piece = self.piece(pt)?;
        let n = pt.x.len();
        let ef = self.time_factor(pt.t);
        let a = -self.sigma() * self.rate * self.value(pt);
        let jet = match piece {
            Piece::Exterior => Jet::flat(a, n),
            _ => {
                let two_b = 2.0 * self.curvature() * ef;
                let q = pt.x.iter().zip(&self.y).map(|(x, y)| two_b * (x - y)).collect();
                Jet { a, q, x: SymMatrix::identity(n).scaled(two_b) }
            }
        };
        Ok((piece, jet))
    }

    pub(crate) fn checks(&self, prob: &CylinderProblem, e: &Exponents) -> Vec<Check> {
        let m = prob.m();
        let mut out = vec![Check::lt("margin", 2.0 * self.eps, m)];
        if let Ok(h) = prob.eval_h(&SpaceTimePoint::new(self.y.clone(), 0.0)) {
            out.push(Check::eq("lambda", self.lambda, initial_lambda(e, h, self.extreme, self.eps, self.delta, self.kind)));
        }
        out.push(Check::le("delta_modulus", self.delta, self.delta0));
        let floor = self.lambda / (e.p() - 1.0);
        match (self.placement, self.ell, self.tau) {
            (Placement::Boundary, Some(ell), Some(tau)) => {
                out.push(Check::le("rate_floor", floor, ell));
                out.push(Check::le("tau_modulus", tau, self.tau0));
                let (lhs, rhs) = match self.kind {
                    Orientation::Sub => {
                        ((self.h_anchor - 2.0 * self.eps) * (-ell * tau).exp(), self.extreme - 2.0 * self.eps)
                    }
                    Orientation::Super => {
                        (self.extreme + 2.0 * self.eps, (self.h_anchor + 2.0 * self.eps) * (ell * tau).exp())
                    }
                };
                out.push(Check::le("rate_window", lhs, rhs));
            }
            _ => {
                out.push(Check::eq("rate", self.rate, floor));
                out.push(Check::le("delta_distance", self.delta, prob.domain().distance_to_boundary(&self.y)));
            }
        }
        out
    }
}
