//! Bounded spatial domains with analytic boundaries.

use serde::{Deserialize, Serialize};

use crate::calculus::norm;
use crate::error::{invalid, Error, Result};
use crate::sampling::{sphere_point, Halton};

/// Geometric kind and parameters of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    BallUnionBox { center: Vec<f64>, radius: f64, lo: Vec<f64>, hi: Vec<f64> },
}

/// An open bounded set `Ω ⊂ R^n` together with its uniform outer-ball
/// radius `ρ0`, when it has one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub struct SpatialDomain {
    shape: Shape,
    outer_ball_radius: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct DomainSpec {
    #[serde(flatten)]
    shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outer_ball_radius: Option<f64>,
}

impl TryFrom<DomainSpec> for SpatialDomain {
    type Error = Error;
    fn try_from(spec: DomainSpec) -> Result<Self> {
        let d = SpatialDomain::from_shape(spec.shape)?;
        match spec.outer_ball_radius {
            Some(r) => d.with_outer_ball_radius(r),
            None => Ok(d),
        }
    }
}

impl From<SpatialDomain> for DomainSpec {
    fn from(d: SpatialDomain) -> Self {
        DomainSpec { shape: d.shape, outer_ball_radius: d.outer_ball_radius }
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn box_sdf(x: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut outside = 0.0;
    let mut inside = f64::NEG_INFINITY;
    for i in 0..x.len() {
        let c = 0.5 * (lo[i] + hi[i]);
        let q = (x[i] - c).abs() - 0.5 * (hi[i] - lo[i]);
        outside += q.max(0.0).powi(2);
        inside = inside.max(q);
    }
    outside.sqrt() + inside.min(0.0)
}

fn box_project(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    if box_sdf(x, lo, hi) > 0.0 {
        return x.iter().enumerate().map(|(i, v)| v.clamp(lo[i], hi[i])).collect();
    }
    let mut best = (f64::INFINITY, 0usize, 0.0);
    for i in 0..x.len() {
        for face in [lo[i], hi[i]] {
            let d = (x[i] - face).abs();
            if d < best.0 {
                best = (d, i, face);
            }
        }
    }
    let mut y = x.to_vec();
    y[best.1] = best.2;
    y
}

fn sphere_project(x: &[f64], c: &[f64], r: f64) -> Vec<f64> {
    let d = sub(x, c);
    let dn = norm(&d);
    if dn == 0.0 {
        let mut y = c.to_vec();
        y[0] += r;
        return y;
    }
    c.iter().zip(&d).map(|(ci, di)| ci + r * di / dn).collect()
}

fn box_face_sample(u: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = lo.len();
    let len: Vec<f64> = (0..n).map(|i| hi[i] - lo[i]).collect();
    let areas: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| len[j]).product::<f64>())
        .collect();
    let total: f64 = 2.0 * areas.iter().sum::<f64>();
    let mut pick = u[0] * total;
    let mut axis = n - 1;
    let mut upper = true;
    'outer: for i in 0..n {
        for side in [false, true] {
            if pick < areas[i] {
                axis = i;
                upper = side;
                break 'outer;
            }
            pick -= areas[i];
        }
    }
    let mut k = 1;
    (0..n)
        .map(|i| {
            if i == axis {
                if upper {
                    hi[i]
                } else {
                    lo[i]
                }
            } else {
                let v = lo[i] + u[k] * len[i];
                k += 1;
                v
            }
        })
        .collect()
}

impl SpatialDomain {
    fn from_shape(shape: Shape) -> Result<Self> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let default_rho = match &shape {
            Shape::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() || !finite(lo) || !finite(hi) {
                    return Err(invalid("box corners must be finite vectors of equal nonzero length"));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(invalid("box needs lo < hi on every axis"));
                }
                Some(norm(&sub(hi, lo)))
            }
            Shape::Ball { center, radius } => {
                if center.is_empty() || !finite(center) || !(*radius > 0.0) || !radius.is_finite() {
                    return Err(invalid("ball needs a finite center and a positive radius"));
                }
                Some(*radius)
            }
            Shape::Annulus { center, inner, outer } => {
                if center.is_empty() || !finite(center) || !(*inner > 0.0) || !(outer > inner) || !outer.is_finite() {
                    return Err(invalid("annulus needs 0 < inner < outer"));
                }
                Some(*inner)
            }
            Shape::BallUnionBox { center, radius, lo, hi } => {
                let n = center.len();
                if n == 0 || lo.len() != n || hi.len() != n || !finite(center) || !finite(lo) || !finite(hi) {
                    return Err(invalid("ball-union-box needs vectors of equal nonzero length"));
                }
                if !(*radius > 0.0) || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(invalid("ball-union-box needs a positive radius and lo < hi"));
                }
                None
            }
        };
        Ok(Self { shape, outer_ball_radius: default_rho })
    }

    /// The open box `(lo, hi)`.
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::from_shape(Shape::Box { lo, hi })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::from_shape(Shape::Ball { center, radius })
    }

    /// `inner < |x - center| < outer`.
    pub fn annulus(center: Vec<f64>, inner: f64, outer: f64) -> Result<Self> {
        Self::from_shape(Shape::Annulus { center, inner, outer })
    }

    /// Union of a ball and a box. Has no uniform outer-ball radius.
    pub fn ball_union_box(center: Vec<f64>, radius: f64, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::from_shape(Shape::BallUnionBox { center, radius, lo, hi })
    }

    /// Overrides `ρ0`. It must not exceed what the geometry supports.
    pub fn with_outer_ball_radius(mut self, rho0: f64) -> Result<Self> {
        if !(rho0 > 0.0) || !rho0.is_finite() {
            return Err(invalid(format!("outer-ball radius must be positive, got {rho0}")));
        }
        match &self.shape {
            Shape::BallUnionBox { .. } => {
                return Err(Error::UnsupportedDomain("ball-union-box has no uniform outer-ball radius".into()))
            }
            Shape::Annulus { inner, .. } if rho0 > *inner => {
                return Err(invalid(format!("annulus outer-ball radius {rho0} exceeds the hole radius {inner}")))
            }
            _ => {}
        }
        self.outer_ball_radius = Some(rho0);
        Ok(self)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn outer_ball_radius(&self) -> Option<f64> {
        self.outer_ball_radius
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            Shape::Box { .. } => "box",
            Shape::Ball { .. } => "ball",
            Shape::Annulus { .. } => "annulus",
            Shape::BallUnionBox { .. } => "ball_union_box",
        }
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Box { lo, .. } => lo.len(),
            Shape::Ball { center, .. } | Shape::Annulus { center, .. } | Shape::BallUnionBox { center, .. } => {
                center.len()
            }
        }
    }

    /// Signed distance: negative inside, positive outside. Exact except
    /// inside the ball-union-box, where only the sign is reliable.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Box { lo, hi } => box_sdf(x, lo, hi),
            Shape::Ball { center, radius } => norm(&sub(x, center)) - radius,
            Shape::Annulus { center, inner, outer } => {
                let d = norm(&sub(x, center));
                (inner - d).max(d - outer)
            }
            Shape::BallUnionBox { center, radius, lo, hi } => {
                (norm(&sub(x, center)) - radius).min(box_sdf(x, lo, hi))
            }
        }
    }

    /// Absolute tolerance for boundary membership.
    pub fn boundary_tol(&self) -> f64 {
        1e-9 * self.diameter()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) < 0.0
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        self.signed_distance(x) <= self.boundary_tol()
    }

    pub fn on_boundary(&self, x: &[f64]) -> bool {
        self.distance_to_boundary(x) <= self.boundary_tol()
    }

    /// `dist(x, Ω̄)`, zero inside.
    pub fn distance_to_closure(&self, x: &[f64]) -> f64 {
        self.signed_distance(x).max(0.0)
    }

    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        match self.shape {
            Shape::BallUnionBox { .. } => norm(&sub(x, &self.nearest_boundary_point(x))),
            _ => self.signed_distance(x).abs(),
        }
    }

    /// Nearest point of `∂Ω` to `x`.
    pub fn nearest_boundary_point(&self, x: &[f64]) -> Vec<f64> {
        match &self.shape {
            Shape::Box { lo, hi } => box_project(x, lo, hi),
            Shape::Ball { center, radius } => sphere_project(x, center, *radius),
            Shape::Annulus { center, inner, outer } => {
                let d = norm(&sub(x, center));
                let r = if (d - inner).abs() <= (d - outer).abs() { *inner } else { *outer };
                sphere_project(x, center, r)
            }
            Shape::BallUnionBox { center, radius, lo, hi } => {
                let tol = self.boundary_tol();
                let mut cands = Vec::new();
                let pb = sphere_project(x, center, *radius);
                if box_sdf(&pb, lo, hi) >= -tol {
                    cands.push(pb);
                }
                let px = box_project(x, lo, hi);
                if norm(&sub(&px, center)) - radius >= -tol {
                    cands.push(px);
                }
                let n = x.len();
                let h = Halton::new(n + 1, 0);
                let mut u = vec![0.0; n + 1];
                for i in 0..4096 {
                    h.point(i, &mut u);
                    if let Some(p) = self.sample_boundary(&u) {
                        cands.push(p);
                    }
                }
                cands
                    .into_iter()
                    .min_by(|a, b| norm(&sub(a, x)).total_cmp(&norm(&sub(b, x))))
                    .expect("boundary sampling produced candidates")
            }
        }
    }

    /// Outward unit normal at a boundary point; at box edges and corners the
    /// normalised sum of the adjacent face normals (inside the normal cone).
    pub fn outward_normal(&self, y: &[f64]) -> Result<Vec<f64>> {
        if !self.on_boundary(y) {
            return Err(Error::Domain(format!("{y:?} is not on the boundary")));
        }
        let tol = self.boundary_tol();
        let normalize = |v: Vec<f64>| {
            let nv = norm(&v);
            v.into_iter().map(|c| c / nv).collect::<Vec<f64>>()
        };
        match &self.shape {
            Shape::Box { lo, hi } => {
                let mut v = vec![0.0; y.len()];
                for i in 0..y.len() {
                    if (y[i] - lo[i]).abs() <= tol {
                        v[i] -= 1.0;
                    }
                    if (y[i] - hi[i]).abs() <= tol {
                        v[i] += 1.0;
                    }
                }
                Ok(normalize(v))
            }
            Shape::Ball { center, .. } => Ok(normalize(sub(y, center))),
            Shape::Annulus { center, inner, outer } => {
                let d = sub(y, center);
                let dn = norm(&d);
                let v = normalize(d);
                if (dn - outer).abs() <= (dn - inner).abs() {
                    Ok(v)
                } else {
                    Ok(v.into_iter().map(|c| -c).collect())
                }
            }
            Shape::BallUnionBox { .. } => {
                Err(Error::UnsupportedDomain("ball-union-box has no analytic normal field".into()))
            }
        }
    }

    /// Center `z = y + ρν` of an exterior ball of radius `ρ` touching `∂Ω` at `y`.
    pub fn outer_ball(&self, y: &[f64], rho: f64) -> Result<Vec<f64>> {
        let rho0 = self
            .outer_ball_radius
            .ok_or_else(|| Error::UnsupportedDomain(format!("{} has no outer-ball radius", self.kind_name())))?;
        if !(rho > 0.0) || rho > rho0 * (1.0 + 1e-12) {
            return Err(invalid(format!("outer-ball radius {rho} must lie in (0, {rho0}]")));
        }
        let nu = self.outward_normal(y)?;
        Ok(y.iter().zip(&nu).map(|(a, b)| a + rho * b).collect())
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            Shape::Box { lo, hi } => (lo.clone(), hi.clone()),
            Shape::Ball { center, radius: r } | Shape::Annulus { center, outer: r, .. } => {
                (center.iter().map(|c| c - r).collect(), center.iter().map(|c| c + r).collect())
            }
            Shape::BallUnionBox { center, radius, lo, hi } => (
                center.iter().zip(lo).map(|(c, l)| (c - radius).min(*l)).collect(),
                center.iter().zip(hi).map(|(c, h)| (c + radius).max(*h)).collect(),
            ),
        }
    }

    /// Diameter (bounding-box diagonal for the non-round kinds).
    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::Annulus { outer, .. } => 2.0 * outer,
            _ => {
                let (lo, hi) = self.bounding_box();
                norm(&sub(&hi, &lo))
            }
        }
    }

    /// Maps `u ∈ [0,1)^{n+1}` onto `∂Ω`. `None` when a candidate on one piece
    /// of a union lies inside the other piece.
    pub fn sample_boundary(&self, u: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim();
        assert!(u.len() > n, "boundary sampling needs n + 1 coordinates");
        match &self.shape {
            Shape::Box { lo, hi } => Some(box_face_sample(u, lo, hi)),
            Shape::Ball { center, radius } => {
                let d = sphere_point(u, n);
                Some(center.iter().zip(&d).map(|(c, v)| c + radius * v).collect())
            }
            Shape::Annulus { center, inner, outer } => {
                let d = sphere_point(u, n);
                let wi = inner.powi(n as i32 - 1);
                let wo = outer.powi(n as i32 - 1);
                let r = if u[n] * (wi + wo) < wi { *inner } else { *outer };
                Some(center.iter().zip(&d).map(|(c, v)| c + r * v).collect())
            }
            Shape::BallUnionBox { center, radius, lo, hi } => {
                let tol = self.boundary_tol();
                let ball_area = radius.powi(n as i32 - 1) * std::f64::consts::TAU;
                let box_area: f64 = 2.0
                    * (0..n)
                        .map(|i| (0..n).filter(|&j| j != i).map(|j| hi[j] - lo[j]).product::<f64>())
                        .sum::<f64>();
                if u[n] * (ball_area + box_area) < ball_area {
                    let d = sphere_point(u, n);
                    let p: Vec<f64> = center.iter().zip(&d).map(|(c, v)| c + radius * v).collect();
                    (box_sdf(&p, lo, hi) >= -tol).then_some(p)
                } else {
                    let p = box_face_sample(u, lo, hi);
                    (norm(&sub(&p, center)) - radius >= -tol).then_some(p)
                }
            }
        }
    }

    /// Maps `u ∈ [0,1)^n` into the bounding box; `None` outside `Ω̄`.
    pub fn sample_closure(&self, u: &[f64]) -> Option<Vec<f64>> {
        let (lo, hi) = self.bounding_box();
        let x: Vec<f64> = (0..lo.len()).map(|i| lo[i] + u[i] * (hi[i] - lo[i])).collect();
        self.contains_closed(&x).then_some(x)
    }

    /// Corners and axis extreme points of `∂Ω`, used to seed extrema sampling.
    pub fn landmark_points(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        match &self.shape {
            Shape::Box { lo, hi } => (0..(1usize << n.min(10)))
                .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect())
                .collect(),
            Shape::Ball { center, radius } => axis_points(center, &[*radius]),
            Shape::Annulus { center, inner, outer } => axis_points(center, &[*inner, *outer]),
            Shape::BallUnionBox { .. } => Vec::new(),
        }
    }
}

fn axis_points(center: &[f64], radii: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for &r in radii {
        for i in 0..center.len() {
            for s in [-1.0, 1.0] {
                let mut p = center.to_vec();
                p[i] += s * r;
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_ball_examples() {
        let ball = SpatialDomain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let z = ball.outer_ball(&[1.0, 0.0], 0.3).unwrap();
        assert!((z[0] - 1.3).abs() < 1e-15 && z[1].abs() < 1e-15);

        let ann = SpatialDomain::annulus(vec![0.0, 0.0], 1.0, 2.0).unwrap();
        let z = ann.outer_ball(&[1.0, 0.0], 0.5).unwrap();
        assert!((z[0] - 0.5).abs() < 1e-15 && z[1].abs() < 1e-15);
        assert!(ann.distance_to_closure(&z) >= 0.5 - 1e-12);

        let rho0 = ball.outer_ball_radius().unwrap();
        assert!(matches!(ball.outer_ball(&[1.0, 0.0], 2.0 * rho0), Err(Error::InvalidInput(_))));

        let u = SpatialDomain::ball_union_box(vec![0.0, 0.0], 1.0, vec![0.0, -0.5], vec![2.0, 0.5]).unwrap();
        assert!(matches!(u.outer_ball(&[-1.0, 0.0], 0.1), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn box_corner_normal_lies_in_the_normal_cone() {
        let b = SpatialDomain::boxed(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let nu = b.outward_normal(&[1.0, 2.0]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((nu[0] - s).abs() < 1e-15 && (nu[1] - s).abs() < 1e-15);
        let z = b.outer_ball(&[1.0, 2.0], 0.4).unwrap();
        assert!((b.distance_to_closure(&z) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn nearest_boundary_points() {
        let b = SpatialDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(b.nearest_boundary_point(&[0.2, 0.5]), vec![0.0, 0.5]);
        assert_eq!(b.nearest_boundary_point(&[1.5, -0.5]), vec![1.0, 0.0]);
        let ann = SpatialDomain::annulus(vec![0.0, 0.0], 1.0, 2.0).unwrap();
        let p = ann.nearest_boundary_point(&[0.0, 1.2]);
        assert!((p[1] - 1.0).abs() < 1e-15);
        let p = ann.nearest_boundary_point(&[0.0, -1.9]);
        assert!((p[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_samples_lie_on_the_boundary() {
        let domains = vec![
            SpatialDomain::boxed(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 0.5]).unwrap(),
            SpatialDomain::ball(vec![0.5, 0.0, 0.0], 1.5).unwrap(),
            SpatialDomain::annulus(vec![0.0, 0.0], 1.0, 2.0).unwrap(),
            SpatialDomain::ball_union_box(vec![0.0, 0.0], 1.0, vec![0.0, -0.5], vec![2.0, 0.5]).unwrap(),
        ];
        for d in domains {
            let h = Halton::new(d.dim() + 1, 3);
            let mut hits = 0;
            for i in 0..500 {
                if let Some(p) = d.sample_boundary(&h.point_vec(i)) {
                    assert!(d.on_boundary(&p), "{} {p:?}", d.kind_name());
                    hits += 1;
                }
            }
            assert!(hits > 250);
        }
    }

    #[test]
    fn serde_round_trip() {
        let d = SpatialDomain::annulus(vec![0.0, 0.0], 1.0, 2.0).unwrap().with_outer_ball_radius(0.5).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"kind\":\"annulus\""));
        let back: SpatialDomain = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"kind":"ball","center":[0,0],"radius":-1}"#;
        assert!(serde_json::from_str::<SpatialDomain>(bad).is_err());
    }
}
