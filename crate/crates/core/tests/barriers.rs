//! Barrier constructions: frozen constants, analytic jets against finite
//! differences, and certification beyond the acceptance regimes.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trudinger::barriers::*;
use trudinger::calculus::Exponents;
use trudinger::domain::SpatialDomain;
use trudinger::problem::{BoundaryDatum, CylinderProblem, SpaceTimePoint};
use trudinger::suite::{side_anchors, smooth_datum};
use trudinger::verify::{sweep, SweepConfig};
use trudinger::Error;

fn ex(p: f64, n: usize) -> Exponents {
    Exponents::new(p, n).unwrap()
}

fn ball_problem(p: f64, n: usize) -> CylinderProblem {
    CylinderProblem::new(SpatialDomain::ball(vec![0.0; n], 1.0).unwrap(), 1.0, ex(p, n), smooth_datum()).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

#[test]
fn high_p_constants_match_frozen_oracle() {
    let e = ex(3.0, 2);
    let (h, m, big_m, eps, tau): (f64, f64, f64, f64, f64) = (2.5, 1.5, 2.8, 0.05, 0.5);

    // Oracle: direct evaluation of the defining formulas.
    let k = ((h - 2.0 * eps) / (m - 2.0 * eps)).ln() / tau;
    let gamma: f64 = 0.5;
    let mu = (gamma + 3.0 * (1.0 - gamma)) / 3.0;
    let c_min = (k * tau).powf(mu) / (gamma.powf(gamma) * tau.powf(gamma / 3.0));
    let sub = high_p_sub_constants(&e, h, m, eps, tau).unwrap();
    for (got, oracle, frozen) in [
        (sub.k, k, 1.0779930014653742),
        (sub.gamma, gamma, 0.5),
        (sub.mu, mu, 0.6666666666666666),
        (sub.c_min, c_min, 1.0513418705517497),
    ] {
        assert!(close(got, oracle, 1e-13) && close(got, frozen, 1e-13), "{got} {oracle} {frozen}");
    }

    let k2 = ((big_m + 2.0 * eps) / (h + 2.0 * eps)).ln() / tau;
    let alpha = 0.5;
    let g2 = alpha / (1.0 + 2.0 * k2 * tau);
    let lam = alpha - g2;
    let mu2 = 3.0 * (1.0 - g2) / g2 + 2.0;
    let c2 = (2.0 * (k2 * tau).powf(mu2) / (tau * lam * g2.powf(2.0))).powf(g2 / 3.0);
    let sup = high_p_super_constants(&e, h, big_m, eps, tau).unwrap();
    for (got, oracle, frozen) in [
        (sup.k, k2, 0.218398583929984),
        (sup.gamma, g2, 0.41037473827918763),
        (sup.big_lambda, lam, 0.08962526172081237),
        (sup.mu, mu2, 6.310391503579904),
        (sup.c_min, c2, 0.3171509031359878),
    ] {
        assert!(close(got, oracle, 1e-12) && close(got, frozen, 1e-12), "{got} {oracle} {frozen}");
    }
}

#[test]
fn initial_constants_match_frozen_oracle() {
    let e = ex(3.0, 2);
    let (h, m, eps, delta): (f64, f64, f64, f64) = (2.5, 1.5, 0.05, 0.2);
    // σ_p = p + n - 2 = 3.
    let oracle = 3.0 * 4.0 / delta.powi(3) * ((h - m) / (m - 2.0 * eps)).powi(2);
    let got = initial_lambda(&e, h, m, eps, delta, Orientation::Sub);
    assert!(close(got, oracle, 1e-13) && close(got, 765.3061224489794, 1e-13));
    let tau = 0.1;
    let rate = boundary_rate(&e, got, h, m, eps, tau, Orientation::Sub);
    assert_eq!(rate, (got / 2.0).max(((h - 2.0 * eps) / (m - 2.0 * eps)).ln() / tau));
}

#[test]
fn regime_and_input_errors() {
    let low = ball_problem(2.0, 2);
    let high = ball_problem(3.0, 2);
    let y = [1.0, 0.0];
    assert!(matches!(make_side_sub_highp(&low, &y, 0.5, 0.05), Err(Error::WrongRegime(_))));
    assert!(matches!(make_side_super_lowp(&high, &y, 0.5, 0.05), Err(Error::WrongRegime(_))));
    assert!(matches!(make_side_sub_highp(&high, &y, 0.5, 2.0), Err(Error::InvalidMargin { .. })));
    assert!(make_side_sub_highp(&high, &[0.5, 0.0], 0.5, 0.05).is_err());
    assert!(make_side_sub_highp(&high, &y, 1.5, 0.05).is_err());
    let union = SpatialDomain::ball_union_box(vec![0.0, 0.0], 1.0, vec![0.0, -0.5], vec![1.5, 0.5]).unwrap();
    let prob = CylinderProblem::new(union, 1.0, ex(2.0, 2), smooth_datum()).unwrap();
    assert!(matches!(make_side_sub_lowp(&prob, &[-1.0, 0.0], 0.5, 0.05), Err(Error::UnsupportedDomain(_))));
}

#[test]
fn constant_data_give_constant_barriers() {
    let dom = SpatialDomain::ball(vec![0.0, 0.0], 1.0).unwrap();
    for (p, fams) in [
        (3.0, [Family::InitialSub, Family::InitialSuper, Family::SideSubHighP, Family::SideSuperHighP]),
        (2.0, [Family::InitialSub, Family::InitialSuper, Family::SideSubLowP, Family::SideSuperLowP]),
    ] {
        let prob = CylinderProblem::new(dom.clone(), 1.0, ex(p, 2), BoundaryDatum::constant(1.5)).unwrap();
        for fam in fams {
            let b = fam.construct(&prob, &[0.0, 1.0], 0.5, 0.1).unwrap();
            assert!(b.is_constant(), "{fam:?}");
            let u = b.eval_u(&SpaceTimePoint::new(vec![0.1, 0.2], 0.3));
            assert!((u - 1.5).abs() < 1e-12);
            let rep = sweep(&b, &prob, &SweepConfig { samples_per_piece: 500, global_samples: 500, boundary_samples: 500, ..SweepConfig::default() });
            assert!(rep.pass, "{fam:?}: {:?}", rep.failures());
        }
    }
}

#[test]
fn family_names_round_trip_through_serde() {
    for fam in Family::ALL {
        let s = serde_json::to_string(&fam).unwrap();
        assert_eq!(s, format!("\"{}\"", fam.name()));
        assert_eq!(serde_json::from_str::<Family>(&s).unwrap(), fam);
        assert_eq!(fam.name().parse::<Family>().unwrap(), fam);
    }
    let b = Family::SideSuperHighP.construct(&ball_problem(3.0, 2), &[1.0, 0.0], 0.5, 0.05).unwrap();
    let back: Barrier = serde_json::from_str(&b.to_json().unwrap()).unwrap();
    assert_eq!(back, b);
}

/// Central differences of `eval` against the analytic jet at points whose
/// whole stencil stays in one piece.
fn fd_jet_check(b: &Barrier, rng: &mut ChaCha8Rng, horizon: f64) -> usize {
    let sup = b.support().expect("non-constant barrier");
    let n = sup.center.len();
    let d = 2e-5 * sup.r_max;
    let dt = 1e-7;
    let mut checked = 0;
    for _ in 0..4000 {
        if checked >= 200 {
            break;
        }
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = sup.r_min + rng.gen_range(0.0..1.0) * (sup.r_max - sup.r_min) * 1.1;
        let x: Vec<f64> = sup.center.iter().zip(&dir).map(|(c, v)| c + r * v / norm).collect();
        let t = rng.gen_range(sup.t_min.max(0.0)..sup.t_max.min(horizon));
        // Near the cusp vertex the stencil truncation error dominates.
        if r < 200.0 * d {
            continue;
        }
        let pt = SpaceTimePoint::new(x.clone(), t);
        let Ok(piece) = b.piece(&pt) else { continue };
        let at = |dx: &[f64], dtt: f64| SpaceTimePoint::new(x.iter().zip(dx).map(|(a, b)| a + b).collect(), t + dtt);
        let mut offsets = vec![(vec![0.0; n], dt), (vec![0.0; n], -dt)];
        for i in 0..n {
            for si in [1.0, -1.0] {
                let mut o = vec![0.0; n];
                o[i] = si * d;
                offsets.push((o, 0.0));
            }
            for j in 0..n {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut o = vec![0.0; n];
                    o[i] += si * d;
                    o[j] += sj * d;
                    offsets.push((o, 0.0));
                }
            }
        }
        if offsets.iter().any(|(o, s)| b.piece(&at(o, *s)).map_or(true, |p| p != piece)) {
            continue;
        }
        let jet = b.jet(&pt).unwrap();
        // Super barriers may overflow far from the anchor; nothing to compare there.
        if !(jet.a.is_finite() && jet.x.max_abs().is_finite() && jet.q.iter().all(|v| v.is_finite())) {
            continue;
        }
        let f = |o: &[f64], s: f64| b.eval(&at(o, s));
        let zero = vec![0.0; n];
        let a = (f(&zero, dt) - f(&zero, -dt)) / (2.0 * dt);
        let scale_t = jet.a.abs().max(1.0);
        assert!((a - jet.a).abs() <= 1e-4 * scale_t, "{:?} a: fd {a} vs {}", b.family, jet.a);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = d;
            let m: Vec<f64> = e.iter().map(|v| -v).collect();
            let qi = (f(&e, 0.0) - f(&m, 0.0)) / (2.0 * d);
            let scale_q = jet.q.iter().map(|v| v.abs()).fold(1.0, f64::max);
            assert!((qi - jet.q[i]).abs() <= 1e-4 * scale_q, "{:?} q{i}: fd {qi} vs {}", b.family, jet.q[i]);
            for j in 0..n {
                let mut pp = vec![0.0; n];
                let mut pm = vec![0.0; n];
                let mut mp = vec![0.0; n];
                let mut mm = vec![0.0; n];
                pp[i] += d;
                pp[j] += d;
                pm[i] += d;
                pm[j] -= d;
                mp[i] -= d;
                mp[j] += d;
                mm[i] -= d;
                mm[j] -= d;
                let xij = (f(&pp, 0.0) - f(&pm, 0.0) - f(&mp, 0.0) + f(&mm, 0.0)) / (4.0 * d * d);
                let scale_x = jet.x.max_abs().max(1.0);
                assert!((xij - jet.x.get(i, j)).abs() <= 1e-3 * scale_x, "{:?} X{i}{j}: fd {xij} vs {}", b.family, jet.x.get(i, j));
            }
        }
        checked += 1;
    }
    checked
}

#[test]
fn analytic_jets_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (p, fams) in [
        (3.0, vec![Family::InitialSub, Family::InitialSuper, Family::SideSubHighP, Family::SideSuperHighP]),
        (2.0, vec![Family::InitialSub, Family::InitialSuper, Family::SideSubLowP, Family::SideSuperLowP]),
    ] {
        let prob = ball_problem(p, 2);
        for fam in fams {
            for y in side_anchors(2) {
                let b = fam.construct(&prob, &y, 0.5, 0.05).unwrap();
                let checked = fd_jet_check(&b, &mut rng, prob.horizon());
                assert!(checked >= 50, "{fam:?} at {y:?}: only {checked} stencils fit a piece");
            }
        }
    }
}

fn quick_sweep() -> SweepConfig {
    SweepConfig { samples_per_piece: 3000, global_samples: 4000, boundary_samples: 3000, ..SweepConfig::default() }
}

#[test]
fn high_exponent_matrix_certifies() {
    for n in [2usize, 3] {
        let e = ex(6.0, n);
        for dom in [SpatialDomain::ball(vec![0.0; n], 1.0).unwrap(), SpatialDomain::annulus(vec![0.0; n], 0.5, 1.0).unwrap()] {
            let prob = CylinderProblem::new(dom, 1.0, e, smooth_datum()).unwrap();
            for fam in [Family::InitialSub, Family::InitialSuper, Family::SideSubHighP, Family::SideSuperHighP] {
                for y in side_anchors(n) {
                    let b = fam.construct(&prob, &y, 0.5, 0.05).unwrap();
                    let rep = sweep(&b, &prob, &quick_sweep());
                    assert!(rep.pass, "p=6 n={n} {fam:?} {y:?}: {:?}", rep.failures());
                }
            }
        }
    }
}

#[test]
fn three_dimensional_low_p_certifies_at_p_three() {
    let prob = ball_problem(3.0, 3);
    for fam in [Family::SideSubLowP, Family::SideSuperLowP] {
        for y in side_anchors(3) {
            let b = fam.construct(&prob, &y, 0.5, 0.05).unwrap();
            let rep = sweep(&b, &prob, &quick_sweep());
            assert!(rep.pass, "{fam:?} {y:?}: {:?}", rep.failures());
        }
    }
}

#[test]
fn barriers_match_the_datum_at_the_anchor() {
    for (p, fams) in [(3.0, [Family::SideSubHighP, Family::SideSuperHighP]), (2.0, [Family::SideSubLowP, Family::SideSuperLowP])] {
        let prob = ball_problem(p, 2);
        for fam in fams {
            for y in side_anchors(2) {
                let b = fam.construct(&prob, &y, 0.5, 0.05).unwrap();
                let anchor = SpaceTimePoint::new(y.clone(), 0.5);
                let want = b.expected_anchor_value(&prob).unwrap();
                if fam != Family::SideSuperLowP {
                    let h = prob.eval_h(&anchor).unwrap();
                    assert!((want - (h - 2.0 * 0.05 * b.kind.sign()).ln()).abs() < 1e-14);
                }
                assert!((b.eval(&anchor) - want).abs() <= 1e-12, "{fam:?} {y:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// `δ = (kτ/c)^{1/γ}` with `c = max(c_min(τ), kτ/δ0^γ)` and `kτ` fixed
    /// by the data grows with the window.
    #[test]
    fn high_p_width_is_monotone_in_tau(h in 1.6f64..2.7, t1 in 0.05f64..1.0, t2 in 0.05f64..1.0, delta0 in 0.05f64..1.0) {
        let (m, big_m, eps) = (1.5, 2.8, 0.05);
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        for p in [3.0, 4.0, 6.0] {
            let e = ex(p, 2);
            for which in [0, 1] {
                let width = |tau: f64| {
                    let c = if which == 0 {
                        high_p_sub_constants(&e, h, m, eps, tau).unwrap()
                    } else {
                        high_p_super_constants(&e, h, big_m, eps, tau).unwrap()
                    };
                    let kt = c.k * tau;
                    let amp = c.c_min.max(kt / delta0.powf(c.gamma));
                    (kt / amp).powf(1.0 / c.gamma)
                };
                prop_assert!(width(lo) <= width(hi) * (1.0 + 1e-12));
            }
        }
    }

    /// The shell cap keeps `(ρ+δ)^γ <= min(A, (δ0/2)^γ)` and `ρ <= ρ0`.
    #[test]
    fn low_p_shell_respects_its_caps(k in 0.01f64..20.0, tau in 0.01f64..1.0, rho0 in 0.05f64..2.0, delta0 in 0.02f64..1.0, n in 2usize..5) {
        let p = 2.0 + (n as f64 - 2.0) * 0.5;
        let e = ex(p, n);
        let gamma = (n as f64 - p) / (p - 1.0) + 1.0;
        let g = low_p_sub_geometry(&e, k, tau, gamma, rho0, delta0);
        let outer = (g.rho + g.delta).powf(gamma);
        prop_assert!(outer <= g.cap_a.min((delta0 / 2.0).powf(gamma)) * (1.0 + 1e-10));
        prop_assert!(g.rho <= rho0 * (1.0 + 1e-12));
        prop_assert!(g.rho.powf(gamma) * k * tau < 1.0);
    }
}
