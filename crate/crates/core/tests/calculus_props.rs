//! Jet forms against finite-difference and closed-form oracles.

use proptest::prelude::*;
use trudinger::calculus::*;
use trudinger::verify::{exp_jet, log_equiv_check, scaling_check};

fn ex(p: f64, n: usize) -> Exponents {
    Exponents::new(p, n).unwrap()
}

fn sym(n: usize, raw: &[f64]) -> SymMatrix {
    SymMatrix::from_upper(n, |i, j| raw[i * n + j])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `div(|Dφ|^{p-2} Dφ)` at the origin for `φ = q·x + xᵀXx/2`, by central
/// differences of the flux. `Dφ(x) = q + Xx` is exact.
fn flux_divergence(q: &[f64], x: &SymMatrix, p: f64, d: f64) -> f64 {
    let n = q.len();
    let flux = |pt: &[f64], i: usize| {
        let g: Vec<f64> = (0..n).map(|k| q[k] + (0..n).map(|l| x.get(k, l) * pt[l]).sum::<f64>()).collect();
        norm(&g).powf(p - 2.0) * g[i]
    };
    (0..n)
        .map(|i| {
            let mut plus = vec![0.0; n];
            let mut minus = vec![0.0; n];
            plus[i] = d;
            minus[i] = -d;
            (flux(&plus, i) - flux(&minus, i)) / (2.0 * d)
        })
        .sum()
}

fn jet_strategy(n: usize) -> impl Strategy<Value = Jet> {
    (-3.0f64..3.0, prop::collection::vec(-2.0f64..2.0, n), prop::collection::vec(-3.0f64..3.0, n * n))
        .prop_map(move |(a, q, raw)| Jet::new(a, q, sym(n, &raw)).unwrap())
}

fn dims_and_jet() -> impl Strategy<Value = (f64, usize, Jet)> {
    (2.0f64..7.0, 1usize..4).prop_flat_map(|(p, n)| (Just(p), Just(n), jet_strategy(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lp_is_the_divergence_of_the_flux((p, n, jet) in dims_and_jet()) {
        prop_assume!(norm(&jet.q) >= 0.3);
        let e = ex(p, n);
        let l = lp_form(&jet.q, &jet.x, &e).unwrap();
        let fd = flux_divergence(&jet.q, &jet.x, p, 1e-4);
        let scale = norm(&jet.q).powf(p - 2.0) * (1.0 + jet.x.max_abs() * (n as f64) * (p - 1.0));
        prop_assert!((l - fd).abs() <= 1e-5 * scale.max(1.0), "L = {l}, fd = {fd}");
    }

    #[test]
    fn radial_jets_reproduce_the_radial_formula(
        p in 2.0f64..6.0, n in 1usize..4, r in 0.1f64..2.0, d1 in -3.0f64..3.0, d2 in -3.0f64..3.0,
        dir in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let dir = &dir[..n];
        prop_assume!(norm(dir) > 0.1 && d1.abs() > 1e-3);
        let z = vec![0.5; n];
        let x: Vec<f64> = z.iter().zip(dir).map(|(zi, v)| zi + r * v / norm(dir)).collect();
        let e = ex(p, n);
        let (q, hess) = radial_jet_parts(&x, &z, d1, d2);
        let via_jet = lp_form(&q, &hess, &e).unwrap();
        let via_radial = radial_plaplacian(&RadialProfile { value: 0.0, d1, d2, r }, &e).unwrap();
        let scale = d1.abs().powf(p - 2.0) * ((p - 1.0) * d2.abs() + (n as f64 - 1.0) * d1.abs() / r);
        prop_assert!((via_jet - via_radial).abs() <= 1e-12 * scale.max(1.0));
    }

    /// `±c r^γ` through the generic radial formula agrees with the closed form.
    #[test]
    fn power_radial_closed_form(
        p in 2.0f64..6.0, n in 1usize..4, c in 0.1f64..3.0, gamma in 0.2f64..3.0,
        lambda in 0.0f64..2.0, r in 0.05f64..2.0, plus in any::<bool>(),
    ) {
        let e = ex(p, n);
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let params = PowerRadialParams::new(c, gamma, sign, lambda, &e).unwrap();
        let s = sign.value();
        let d1 = s * c * gamma * r.powf(gamma - 1.0);
        let d2 = s * c * gamma * (gamma - 1.0) * r.powf(gamma - 2.0);
        let lap = radial_plaplacian(&RadialProfile { value: s * c * r.powf(gamma), d1, d2, r }, &e).unwrap();
        let want = lap + lambda * (p - 1.0) * d1.abs().powf(p);
        let got = power_radial_residual(&params, r, &e).unwrap();
        let scale = (p - 1.0) * c.powf(p - 1.0) * gamma.powf(p) * r.powf(p * (gamma - 1.0))
            * (c * lambda + (params.big_lambda / (gamma * r.powf(gamma))).abs());
        prop_assert!((got - want).abs() <= 1e-11 * scale.max(1e-300), "{got} vs {want}");
    }

    #[test]
    fn unit_lambda_recovers_kp((p, n, jet) in dims_and_jet()) {
        let e = ex(p, n);
        prop_assert_eq!(kp_lambda_form(&jet, 1.0, &e).unwrap(), kp_form(&jet, &e).unwrap());
    }

    #[test]
    fn quadratic_p_is_the_trace((_p, n, jet) in dims_and_jet()) {
        let e = ex(2.0, n);
        prop_assert_eq!(lp_form(&jet.q, &jet.x, &e).unwrap(), jet.x.trace());
        let t = tp_form(7.0, &jet, &e).unwrap();
        prop_assert!((t - (jet.x.trace() - jet.a)).abs() <= 1e-14 * (jet.x.trace().abs() + jet.a.abs()).max(1.0));
    }

    /// `u = e^η` maps `K_p` on `η` to `u^{1-p} T_p` on `u`.
    #[test]
    fn log_change_of_variable((p, n, jet) in dims_and_jet(), eta in -2.0f64..2.0) {
        let e = ex(p, n);
        let (u, jet_u) = exp_jet(eta, &jet);
        let res = log_equiv_check(u, &jet_u, &jet, &e).unwrap();
        prop_assert!(res.relative() <= 1e-12, "relative residual {}", res.relative());
    }

    /// `φ(x,t) = η(αx, α^p t)` scales every term of `K_p` by `α^p`.
    #[test]
    fn parabolic_scaling((p, n, jet) in dims_and_jet(), alpha in 0.1f64..10.0) {
        let res = scaling_check(&jet, alpha, &ex(p, n)).unwrap();
        prop_assert!(res.relative() <= 1e-12, "relative residual {}", res.relative());
    }

    /// `L_p` is positively homogeneous: degree `p-1` in `q`, degree 1 in `X`.
    #[test]
    fn lp_homogeneity((p, n, jet) in dims_and_jet(), s in 0.1f64..5.0) {
        let e = ex(p, n);
        let base = lp_form(&jet.q, &jet.x, &e).unwrap();
        let qs: Vec<f64> = jet.q.iter().map(|v| v * s).collect();
        let in_q = lp_form(&qs, &jet.x, &e).unwrap();
        let in_x = lp_form(&jet.q, &jet.x.scaled(s), &e).unwrap();
        let tol = 1e-12 * (norm(&qs).powf(p - 2.0) + norm(&jet.q).powf(p - 2.0)) * jet.x.max_abs() * (p * n as f64) * s.max(1.0);
        prop_assert!((in_q - s.powf(p - 2.0) * base).abs() <= tol.max(1e-300));
        prop_assert!((in_x - s * base).abs() <= tol.max(1e-300));
    }
}

#[test]
fn worked_values() {
    let e = ex(3.0, 2);
    // q = (3, 4), X = diag(1, 2): |q| (3 + q̂ᵀXq̂) = 5 (3 + (9 + 32)/25).
    let l = lp_form(&[3.0, 4.0], &SymMatrix::diagonal(&[1.0, 2.0]), &e).unwrap();
    assert!((l - 5.0 * (3.0 + 41.0 / 25.0)).abs() < 1e-13);
    assert_eq!(lp_form(&[0.0, 0.0], &SymMatrix::identity(2), &e).unwrap(), 0.0);
    assert_eq!(e.sigma_p(), 3.0);
    assert!(lp_form(&[1.0], &SymMatrix::identity(2), &e).is_err());
    assert!(kp_lambda_form(&Jet::flat(0.0, 2), 0.0, &e).is_err());
}
