//! Explicit sub- and super-solution barriers.
//!
//! Six families:
//!
//! * initial-time barriers in `u`, a quadratic cap `φ(|x - y|)` times an
//!   exponential in `t` ([`initial`]),
//! * side barriers for `p > n` in `η = log u`, a bump or indent
//!   `± (kτ - k|t - s| - c r^γ)` on a cusp around the anchor ([`side_high`]),
//! * side barriers for `2 <= p <= n` in `η`, built on a shell around an
//!   exterior ball, with the super-solution living in the scaled variables
//!   `ω = λ^{p-2} t`, `η = λ φ` ([`side_low`]).
//!
//! Each barrier equals a base value outside its region `R`, which is what
//! the extension argument needs: a sub-solution `w >= α` on an open set
//! with `w = α` outside it is a sub-solution everywhere.

pub mod initial;
pub mod side_high;
pub mod side_low;

use serde::{Deserialize, Serialize};

pub use initial::{boundary_rate, initial_lambda, make_initial_sub, make_initial_super, InitialBarrierParams};
pub use side_high::{
    high_p_sub_constants, high_p_super_constants, make_side_sub_highp, make_side_super_highp, HighPConstants,
    SideBarrierHighP,
};
pub use side_low::{
    low_p_sub_geometry, make_side_sub_lowp, make_side_sub_lowp_with_rho, make_side_super_lowp, LowPSubGeometry,
    SideBarrierLowP,
};

use crate::calculus::{norm, pow_pos, Exponents, Jet, SymMatrix};
use crate::error::{Error, Result};
use crate::problem::{CylinderProblem, SpaceTimePoint};

/// Relative width of the band around piece boundaries in which no jet is
/// returned.
pub const GUARD_BAND: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Sub,
    Super,
}

impl Orientation {
    /// `+1` for sub, `-1` for super.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Sub => 1.0,
            Orientation::Super => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    InitialSub,
    InitialSuper,
    #[serde(rename = "side_sub_highp")]
    SideSubHighP,
    #[serde(rename = "side_super_highp")]
    SideSuperHighP,
    #[serde(rename = "side_sub_lowp")]
    SideSubLowP,
    #[serde(rename = "side_super_lowp")]
    SideSuperLowP,
}

impl std::str::FromStr for Family {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| crate::error::invalid(format!("unknown barrier family {s:?}")))
    }
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::InitialSub,
        Family::InitialSuper,
        Family::SideSubHighP,
        Family::SideSuperHighP,
        Family::SideSubLowP,
        Family::SideSuperLowP,
    ];

    pub fn orientation(self) -> Orientation {
        match self {
            Family::InitialSub | Family::SideSubHighP | Family::SideSubLowP => Orientation::Sub,
            _ => Orientation::Super,
        }
    }

    pub fn is_initial(self) -> bool {
        matches!(self, Family::InitialSub | Family::InitialSuper)
    }

    /// Initial families work for every `p`; side families need their regime.
    pub fn applies_to(self, e: &Exponents) -> bool {
        match self {
            Family::InitialSub | Family::InitialSuper => true,
            Family::SideSubHighP | Family::SideSuperHighP => e.is_high_p(),
            Family::SideSubLowP | Family::SideSuperLowP => !e.is_high_p(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::InitialSub => "initial_sub",
            Family::InitialSuper => "initial_super",
            Family::SideSubHighP => "side_sub_highp",
            Family::SideSuperHighP => "side_super_highp",
            Family::SideSubLowP => "side_sub_lowp",
            Family::SideSuperLowP => "side_super_lowp",
        }
    }

    /// Builds the barrier of this family anchored at `(y, s)`; `s` is
    /// ignored by the initial-time families.
    pub fn construct(self, prob: &CylinderProblem, y: &[f64], s: f64, eps: f64) -> Result<Barrier> {
        match self {
            Family::InitialSub => make_initial_sub(prob, y, eps),
            Family::InitialSuper => make_initial_super(prob, y, eps),
            Family::SideSubHighP => make_side_sub_highp(prob, y, s, eps),
            Family::SideSuperHighP => make_side_super_highp(prob, y, s, eps),
            Family::SideSubLowP => make_side_sub_lowp(prob, y, s, eps),
            Family::SideSuperLowP => make_side_super_lowp(prob, y, s, eps),
        }
    }
}

/// Which unknown a barrier is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// `u` itself.
    U,
    /// `η = log u`.
    Eta,
}

/// Smooth piece containing a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Piece {
    /// Region part with `t > s` (the whole ball for initial-time barriers).
    #[serde(rename = "R+")]
    Plus,
    /// Region part with `t < s`.
    #[serde(rename = "R-")]
    Minus,
    #[serde(rename = "exterior")]
    Exterior,
}

/// Operator whose sign certifies the barrier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualForm {
    /// `T_p(u, a, q, X)` on the `u` jet.
    Tp,
    /// `K_p(a, q, X)` on the `η` jet.
    Kp,
    /// `K_p^λ(a, q, X)` on the jet in scaled variables.
    KpLambda { lambda: f64 },
}

/// One named inequality or identity among the construction parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    /// `value <= bound` up to a relative rounding allowance.
    pub fn le(name: &str, value: f64, bound: f64) -> Self {
        let slack = 1e-12 * value.abs().max(bound.abs());
        Self { name: name.into(), pass: value <= bound + slack, value, bound }
    }

    /// Strict `value < bound`.
    pub fn lt(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), pass: value < bound, value, bound }
    }

    /// `value == target` to `1e-12` relative.
    pub fn eq(name: &str, value: f64, target: f64) -> Self {
        let pass = (value - target).abs() <= 1e-12 * value.abs().max(target.abs()).max(1e-300);
        Self { name: name.into(), pass, value, bound: target }
    }
}

/// Parameters of the constructed barrier, one variant per construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BarrierParams {
    /// Degenerate data: the constant barrier.
    Constant { value: f64 },
    Initial(InitialBarrierParams),
    SideHighP(SideBarrierHighP),
    SideLowP(SideBarrierLowP),
}

/// A constructed barrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub family: Family,
    pub kind: Orientation,
    pub variable: Variable,
    pub exponents: Exponents,
    pub anchor: SpaceTimePoint,
    /// Value at the anchor in the barrier's own variable.
    pub anchor_value: f64,
    pub params: BarrierParams,
}

/// Spatial and temporal extent of the region `R`, for sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct Support {
    pub center: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Profile {
    /// `c r^γ`.
    Power { c: f64, gamma: f64 },
    /// `c (ρ^{-γ} - r^{-γ})`, with `r` clamped to `ρ` in values.
    Inverse { c: f64, gamma: f64, rho: f64 },
}

impl Profile {
    fn value(&self, r: f64) -> f64 {
        match *self {
            Profile::Power { c, gamma } => {
                if r == 0.0 {
                    0.0
                } else {
                    c * pow_pos(r, gamma)
                }
            }
            Profile::Inverse { c, gamma, rho } => c * (pow_pos(rho, -gamma) - pow_pos(r.max(rho), -gamma)),
        }
    }

    /// `(f'(r), f''(r))` for `r > 0`.
    fn derivatives(&self, r: f64) -> (f64, f64) {
        match *self {
            Profile::Power { c, gamma } => {
                (c * gamma * pow_pos(r, gamma - 1.0), c * gamma * (gamma - 1.0) * pow_pos(r, gamma - 2.0))
            }
            Profile::Inverse { c, gamma, .. } => {
                (c * gamma * pow_pos(r, -gamma - 1.0), -c * gamma * (gamma + 1.0) * pow_pos(r, -gamma - 2.0))
            }
        }
    }
}

/// The common cusp form `outer * (base + sign * b)` with
/// `b = kτ - k|ω - s| - f(r)`, `ω = time_factor * t`, active where `b >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Cusp {
    pub center: Vec<f64>,
    pub s: f64,
    pub k: f64,
    pub tau: f64,
    pub profile: Profile,
    pub base: f64,
    pub sign: f64,
    pub outer: f64,
    pub time_factor: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Cusp {
    /// The spatial profile `f(r)`.
    pub(crate) fn profile_value(&self, r: f64) -> f64 {
        self.profile.value(r)
    }

    /// `f'(r)` for `r > 0`.
    pub(crate) fn profile_slope(&self, r: f64) -> f64 {
        self.profile.derivatives(r).0
    }

    fn radius(&self, x: &[f64]) -> f64 {
        norm(&x.iter().zip(&self.center).map(|(a, b)| a - b).collect::<Vec<_>>())
    }

    /// `(b, ω - s, r)`.
    fn bump(&self, pt: &SpaceTimePoint) -> (f64, f64, f64) {
        let r = self.radius(&pt.x);
        let d = self.time_factor * pt.t - self.s;
        (self.k * self.tau - self.k * d.abs() - self.profile.value(r), d, r)
    }

    fn in_region(&self, pt: &SpaceTimePoint) -> bool {
        let (b, d, _) = self.bump(pt);
        b >= 0.0 && d.abs() <= self.tau
    }

    fn local_value(&self, pt: &SpaceTimePoint) -> f64 {
        let (b, d, _) = self.bump(pt);
        if b >= 0.0 && d.abs() <= self.tau {
            self.base + self.sign * b
        } else {
            self.base
        }
    }

    fn value(&self, pt: &SpaceTimePoint) -> f64 {
        self.outer * self.local_value(pt)
    }

    fn piece(&self, pt: &SpaceTimePoint) -> Result<Piece> {
        let (b, d, r) = self.bump(pt);
        let gb = GUARD_BAND * self.k * self.tau;
        if b < -gb || d.abs() > self.tau * (1.0 + GUARD_BAND) {
            return Ok(Piece::Exterior);
        }
        if b <= gb || d.abs() >= self.tau * (1.0 - GUARD_BAND) {
            return Err(Error::OnRidge(format!("within the guard band of the region boundary (b = {b:e})")));
        }
        if d.abs() <= GUARD_BAND * self.tau {
            return Err(Error::OnRidge(format!("within the guard band of the ridge t = s (ω - s = {d:e})")));
        }
        if r <= GUARD_BAND * (self.r_hi - self.r_lo).max(self.r_hi) && matches!(self.profile, Profile::Power { .. }) {
            return Err(Error::OnRidge("at the cusp tip".into()));
        }
        Ok(if d > 0.0 { Piece::Plus } else { Piece::Minus })
    }

    /// Spatial part of the local jet inside the region, with time slope `a`.
    fn region_jet(&self, x: &[f64], a: f64) -> Jet {
        let n = x.len();
        let r = self.radius(x);
        let (d1, d2) = self.profile.derivatives(r);
        let e: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| (a - b) / r).collect();
        let sg = self.sign;
        let q = e.iter().map(|v| -sg * d1 * v).collect();
        let tang = d1 / r;
        let hess = SymMatrix::from_upper(n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            -sg * (d2 * e[i] * e[j] + tang * (delta - e[i] * e[j]))
        });
        Jet { a, q, x: hess }
    }

    /// Jet in the local variables (`φ` for the scaled construction).
    fn local_jet(&self, pt: &SpaceTimePoint) -> Result<(Piece, Jet)> {
        let piece = self.piece(pt)?;
        let jet = match piece {
            Piece::Exterior => Jet::flat(0.0, pt.x.len()),
            Piece::Plus => self.region_jet(&pt.x, -self.sign * self.k),
            Piece::Minus => self.region_jet(&pt.x, self.sign * self.k),
        };
        Ok((piece, jet))
    }

    /// Ridge jet at `t = s` with the one-sided slope `a_local`.
    fn ridge_jet(&self, x: &[f64], a_local: f64) -> Jet {
        self.region_jet(x, a_local)
    }

    /// Converts a local jet into the `η` jet.
    fn to_eta(&self, jet: Jet) -> Jet {
        Jet {
            a: self.outer * self.time_factor * jet.a,
            q: jet.q.iter().map(|v| self.outer * v).collect(),
            x: jet.x.scaled(self.outer),
        }
    }
}

impl Barrier {
    /// Constant barrier for degenerate data.
    pub(crate) fn constant(
        family: Family,
        variable: Variable,
        exponents: Exponents,
        anchor: SpaceTimePoint,
        value: f64,
    ) -> Self {
        Barrier {
            family,
            kind: family.orientation(),
            variable,
            exponents,
            anchor,
            anchor_value: value,
            params: BarrierParams::Constant { value },
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.params, BarrierParams::Constant { .. })
    }

    pub(crate) fn cusp(&self) -> Option<Cusp> {
        match &self.params {
            BarrierParams::SideHighP(p) => Some(p.cusp()),
            BarrierParams::SideLowP(p) => Some(p.cusp()),
            _ => None,
        }
    }

    /// Value in the barrier's own variable.
    pub fn eval(&self, pt: &SpaceTimePoint) -> f64 {
        match &self.params {
            BarrierParams::Constant { value } => *value,
            BarrierParams::Initial(p) => p.value(pt),
            BarrierParams::SideHighP(p) => p.cusp().value(pt),
            BarrierParams::SideLowP(p) => p.cusp().value(pt),
        }
    }

    /// Value as `u`.
    pub fn eval_u(&self, pt: &SpaceTimePoint) -> f64 {
        match self.variable {
            Variable::U => self.eval(pt),
            Variable::Eta => self.eval(pt).exp(),
        }
    }

    /// Value as `η = log u`.
    pub fn eval_eta(&self, pt: &SpaceTimePoint) -> f64 {
        match self.variable {
            Variable::U => self.eval(pt).ln(),
            Variable::Eta => self.eval(pt),
        }
    }

    /// Value outside `R` at time `t`, in the barrier's variable.
    pub fn base_value(&self, t: f64) -> f64 {
        match &self.params {
            BarrierParams::Constant { value } => *value,
            BarrierParams::Initial(p) => p.base_value(t),
            BarrierParams::SideHighP(p) => p.cusp().outer * p.cusp().base,
            BarrierParams::SideLowP(p) => p.cusp().outer * p.cusp().base,
        }
    }

    /// Extreme value over space at time `t` (the anchor line), in the
    /// barrier's variable. Sub barriers lie below it, super barriers above.
    pub fn peak_value(&self, t: f64) -> f64 {
        match &self.params {
            BarrierParams::Initial(p) => p.peak_value(t),
            _ => self.anchor_value,
        }
    }

    /// Whether `pt` lies in the closed region `R`.
    pub fn in_region(&self, pt: &SpaceTimePoint) -> bool {
        match &self.params {
            BarrierParams::Constant { .. } => false,
            BarrierParams::Initial(p) => p.in_region(pt),
            BarrierParams::SideHighP(p) => p.cusp().in_region(pt),
            BarrierParams::SideLowP(p) => p.cusp().in_region(pt),
        }
    }

    /// Smooth piece containing `pt`, or an on-ridge error inside the guard band.
    pub fn piece(&self, pt: &SpaceTimePoint) -> Result<Piece> {
        match &self.params {
            BarrierParams::Constant { .. } => Ok(Piece::Exterior),
            BarrierParams::Initial(p) => p.piece(pt),
            BarrierParams::SideHighP(p) => p.cusp().piece(pt),
            BarrierParams::SideLowP(p) => p.cusp().piece(pt),
        }
    }

    /// Analytic jet in the barrier's own variable.
    pub fn jet(&self, pt: &SpaceTimePoint) -> Result<Jet> {
        let n = self.exponents.n();
        match &self.params {
            BarrierParams::Constant { .. } => Ok(Jet::flat(0.0, n)),
            BarrierParams::Initial(p) => p.jet(pt).map(|(_, j)| j),
            BarrierParams::SideHighP(p) => {
                let c = p.cusp();
                c.local_jet(pt).map(|(_, j)| c.to_eta(j))
            }
            BarrierParams::SideLowP(p) => {
                let c = p.cusp();
                c.local_jet(pt).map(|(_, j)| c.to_eta(j))
            }
        }
    }

    /// The certifying operator.
    pub fn residual_form(&self) -> ResidualForm {
        match &self.params {
            BarrierParams::Initial(_) => ResidualForm::Tp,
            BarrierParams::Constant { .. } => match self.variable {
                Variable::U => ResidualForm::Tp,
                Variable::Eta => ResidualForm::Kp,
            },
            BarrierParams::SideHighP(_) => ResidualForm::Kp,
            BarrierParams::SideLowP(p) => match p.lambda_scale {
                Some(lambda) => ResidualForm::KpLambda { lambda },
                None => ResidualForm::Kp,
            },
        }
    }

    /// `(piece, value, jet)` in the variables of [`Barrier::residual_form`].
    pub fn residual_inputs(&self, pt: &SpaceTimePoint) -> Result<(Piece, f64, Jet)> {
        let n = self.exponents.n();
        match &self.params {
            BarrierParams::Constant { value } => Ok((Piece::Exterior, *value, Jet::flat(0.0, n))),
            BarrierParams::Initial(p) => {
                let (piece, jet) = p.jet(pt)?;
                Ok((piece, p.value(pt), jet))
            }
            BarrierParams::SideHighP(p) => {
                let c = p.cusp();
                let (piece, jet) = c.local_jet(pt)?;
                Ok((piece, c.local_value(pt), jet))
            }
            BarrierParams::SideLowP(p) => {
                let c = p.cusp();
                let (piece, jet) = c.local_jet(pt)?;
                Ok((piece, c.local_value(pt), jet))
            }
        }
    }

    /// Ridge jets at `x` on `t = s` in residual variables, with the adverse
    /// one-sided slope: `+k` for sub barriers, `-k` for super barriers.
    /// `None` for barriers without a time ridge.
    pub fn ridge_jet(&self, x: &[f64]) -> Result<Option<(f64, Jet)>> {
        let Some(c) = self.cusp() else { return Ok(None) };
        let pt = SpaceTimePoint::new(x.to_vec(), self.anchor.t);
        let (b, _, r) = c.bump(&pt);
        let inside = b > GUARD_BAND * c.k * c.tau && r > c.r_lo && r < c.r_hi;
        if !inside {
            return Err(Error::Domain(format!("{x:?} is outside the open cusp base")));
        }
        let slope = self.kind.sign() * c.k;
        Ok(Some((slope, c.ridge_jet(x, slope))))
    }

    /// Extent of `R` for sampling.
    pub fn support(&self) -> Option<Support> {
        match &self.params {
            BarrierParams::Constant { .. } => None,
            BarrierParams::Initial(p) => Some(Support {
                center: p.y.clone(),
                r_min: 0.0,
                r_max: p.delta,
                t_min: 0.0,
                t_max: f64::INFINITY,
            }),
            BarrierParams::SideHighP(_) | BarrierParams::SideLowP(_) => {
                let c = self.cusp().expect("side barrier has a cusp");
                let w = c.tau / c.time_factor;
                let s = c.s / c.time_factor;
                Some(Support { center: c.center.clone(), r_min: c.r_lo, r_max: c.r_hi, t_min: s - w, t_max: s + w })
            }
        }
    }

    /// Parameter inequalities and identities of the construction,
    /// re-evaluated from the stored parameters.
    pub fn parameter_checks(&self, prob: &CylinderProblem) -> Vec<Check> {
        match &self.params {
            BarrierParams::Constant { .. } => Vec::new(),
            BarrierParams::Initial(p) => p.checks(prob, &self.exponents),
            BarrierParams::SideHighP(p) => p.checks(&self.exponents),
            BarrierParams::SideLowP(p) => p.checks(prob, &self.exponents),
        }
    }

    /// The expected anchor value recomputed from `h`, independent of the
    /// stored parameters: `h ∓ 2ε` in `u`, `log(h ∓ 2ε)` in `η`, and
    /// `λ log(h^{1/λ} + 2ε̂)` for the scaled construction.
    pub fn expected_anchor_value(&self, prob: &CylinderProblem) -> Result<f64> {
        let h = prob.eval_h(&self.anchor)?;
        let sg = self.kind.sign();
        Ok(match &self.params {
            BarrierParams::Constant { value } => *value,
            BarrierParams::Initial(p) => h - 2.0 * sg * p.eps,
            BarrierParams::SideHighP(p) => (h - 2.0 * sg * p.eps).ln(),
            BarrierParams::SideLowP(p) => match (p.lambda_scale, p.eps_hat) {
                (Some(l), Some(eh)) => l * (pow_pos(h, 1.0 / l) + 2.0 * eh).ln(),
                _ => (h - 2.0 * sg * p.eps).ln(),
            },
        })
    }

    /// Copy with the cusp amplitude `c` multiplied by `factor` (region and
    /// `δ` follow). Used to build deliberately broken barriers.
    pub fn with_amplitude_factor(&self, factor: f64) -> Result<Barrier> {
        let mut b = self.clone();
        match &mut b.params {
            BarrierParams::SideHighP(p) => {
                p.c *= factor;
                p.delta = pow_pos(p.k * p.tau / p.c, 1.0 / p.gamma);
            }
            _ => return Err(crate::error::invalid("barrier has no adjustable amplitude")),
        }
        Ok(b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Shared preconditions for side barriers: `y ∈ ∂Ω`, `0 < s < T`, `0 < ε < m/2`.
pub(crate) fn check_side_anchor(prob: &CylinderProblem, y: &[f64], s: f64, eps: f64) -> Result<f64> {
    check_margin(prob, eps)?;
    if y.len() != prob.exponents().n() || !prob.domain().on_boundary(y) {
        return Err(Error::Domain(format!("side anchor {y:?} is not on the boundary")));
    }
    if !(s > 0.0 && s < prob.horizon()) {
        return Err(Error::Domain(format!("side anchor time {s} is not in (0, T)")));
    }
    prob.eval_h(&SpaceTimePoint::new(y.to_vec(), s))
}

pub(crate) fn check_margin(prob: &CylinderProblem, eps: f64) -> Result<()> {
    let half_m = prob.m() / 2.0;
    if !(eps > 0.0 && eps < half_m) {
        return Err(Error::InvalidMargin { eps, half_m });
    }
    Ok(())
}

/// Tolerance separating degenerate anchors (`h` at an extreme) from data
/// that contradicts the sampled extrema.
pub(crate) fn extreme_tolerance(prob: &CylinderProblem) -> f64 {
    prob.extrema_h().slack + 1e-12 * prob.big_m()
}
