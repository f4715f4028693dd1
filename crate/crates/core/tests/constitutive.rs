use approx::assert_relative_eq;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use limitfrac::constitutive::{
    compliance, half_norm_strain, half_norm_stress, hooke_stress, phi_tilde, strain_nl, stress_sl, tangent_sl, MaterialParams,
    SymTensor2,
};

fn params(lambda: f64, mu: f64, alpha: f64, beta: f64) -> MaterialParams {
    MaterialParams {
        lambda,
        mu,
        alpha,
        beta,
        gc: 1.0,
        xi: 0.1,
        kappa: 0.0,
    }
}

fn random_material(rng: &mut StdRng) -> MaterialParams {
    params(
        rng.random_range(0.0..4.0),
        rng.random_range(0.1..4.0),
        rng.random_range(0.1..3.0),
        rng.random_range(0.05..3.0),
    )
}

fn random_tensor(rng: &mut StdRng) -> SymTensor2 {
    SymTensor2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Scales `raw` so that `β |E^{1/2}[ε]| = frac`.
fn admissible(raw: SymTensor2, m: &MaterialParams, frac: f64) -> SymTensor2 {
    (frac / (m.beta * half_norm_strain(&raw, m))) * raw
}

#[test]
fn hooke_matches_componentwise_formula() {
    let m = params(121.15e3, 80.77e3, 0.25, 4.8e-4);
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..100 {
        let e = random_tensor(&mut rng);
        let s = hooke_stress(&e, &m);
        let tr = e.xx + e.yy;
        assert_relative_eq!(s.xx, 2.0 * 80.77e3 * e.xx + 121.15e3 * tr, max_relative = 1e-14);
        assert_relative_eq!(s.yy, 2.0 * 80.77e3 * e.yy + 121.15e3 * tr, max_relative = 1e-14);
        assert_relative_eq!(s.xy, 2.0 * 80.77e3 * e.xy, max_relative = 1e-14);
        assert_relative_eq!(s.zz, 121.15e3 * tr, max_relative = 1e-14);
    }
}

#[test]
fn hooke_inverts_compliance() {
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..500 {
        let m = random_material(&mut rng);
        let s = SymTensor2::with_zz(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        );
        let back = hooke_stress(&compliance(&s, &m), &m);
        assert!((back - s).max_abs() <= 1e-12 * s.max_abs().max(1.0));
    }
}

#[test]
fn half_norms_are_energy_contractions() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..500 {
        let m = random_material(&mut rng);
        let e = random_tensor(&mut rng);
        assert_relative_eq!(half_norm_strain(&e, &m), e.ddot(&hooke_stress(&e, &m)).sqrt(), max_relative = 1e-12);
        let s = hooke_stress(&random_tensor(&mut rng), &m);
        let r = half_norm_stress(&s, &m).unwrap();
        assert_relative_eq!(r, s.ddot(&compliance(&s, &m)).sqrt(), max_relative = 1e-12);
    }
}

#[test]
fn hydrostatic_strain_nl_value() {
    // K[I] = I/(2μ+3λ) = 0.2 I, |K^{1/2}[I]| = sqrt(3/5), φ̃ = 1/(1 + sqrt(0.6))
    let m = params(1.0, 1.0, 1.0, 1.0);
    let e = strain_nl(&SymTensor2::hydrostatic(1.0), &m).unwrap();
    let want = 0.2 / (1.0 + 0.6f64.sqrt());
    assert_relative_eq!(want, 0.112702, epsilon = 1e-6);
    for v in [e.xx, e.yy, e.zz] {
        assert_relative_eq!(v, want, max_relative = 1e-14);
    }
    assert_eq!(e.xy, 0.0);
}

#[test]
fn phi_tilde_is_decreasing_and_bounded() {
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..200 {
        let (a, b) = (rng.random_range(0.1..4.0), rng.random_range(0.01..5.0));
        assert_eq!(phi_tilde(0.0, a, b), 1.0);
        let mut prev = 1.0;
        for k in 1..100 {
            let v = phi_tilde(0.1 * k as f64, a, b);
            assert!(v > 0.0 && v <= prev, "alpha {a} beta {b} r {}", 0.1 * k as f64);
            prev = v;
        }
    }
    // (1 + (βr)^α)^{-1/α} at α = 2, βr = 3/4: (1 + 9/16)^{-1/2} = 4/5
    assert_relative_eq!(phi_tilde(1.5, 2.0, 0.5), 0.8, max_relative = 1e-15);
}

#[test]
fn strain_nl_inverts_stress_sl_on_1000_states() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..1000 {
        let m = random_material(&mut rng);
        let eps = admissible(random_tensor(&mut rng), &m, rng.random_range(0.01..0.95));
        let back = strain_nl(&stress_sl(&eps, &m).unwrap(), &m).unwrap();
        assert!((back - eps).max_abs() <= 1e-10 * eps.max_abs(), "{eps:?} -> {back:?}");
    }
}

#[test]
fn tangent_matches_central_difference() {
    let mut rng = StdRng::seed_from_u64(6);
    for _ in 0..300 {
        let m = random_material(&mut rng);
        let eps = admissible(random_tensor(&mut rng), &m, rng.random_range(0.05..0.8));
        let d = random_tensor(&mut rng);
        let h = 1e-6 * eps.frobenius() / d.frobenius();
        let fd = (1.0 / (2.0 * h)) * (stress_sl(&(eps + h * d), &m).unwrap() - stress_sl(&(eps - h * d), &m).unwrap());
        let t = tangent_sl(&eps, &d, &m).unwrap();
        assert!((t - fd).frobenius() <= 1e-6 * fd.frobenius(), "{t:?} vs {fd:?}");
    }
}
