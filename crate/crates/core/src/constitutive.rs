//! Material laws for isotropic bodies: Hooke's law, its compliance inverse,
//! the strain-limiting relation and its inverse, and the consistent tangent.
//!
//! Tensors are symmetric 3x3 in plane strain: the in-plane block plus the
//! out-of-plane normal component `zz`. Strains built from a 2D displacement
//! gradient carry `zz = 0`; stresses carry the plane-strain `σ_zz = λ tr ε`.
//! Keeping `zz` makes the compliance (with its `2μ + 3λ` constant) an exact
//! inverse of Hooke's law.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Radicands of the half-norms above this (negative) value are clamped to 0.
pub const RADICAND_CLAMP: f64 = -1e-14;

/// Margin kept between `(β s)^α` and 1 before the stress is declared singular.
pub const ELLIPTICITY_GUARD: f64 = 1e-10;

/// Below this value of `|E^{1/2}[ε]|` the second tangent term is set to 0.
pub const TANGENT_ZERO_STRAIN: f64 = 1e-14;

/// Symmetric second-order tensor in plane strain.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 {
        xx: 0.0,
        yy: 0.0,
        zz: 0.0,
        xy: 0.0,
    };

    /// In-plane tensor (`zz = 0`).
    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, zz: 0.0, xy }
    }

    pub fn with_zz(xx: f64, yy: f64, zz: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, zz, xy }
    }

    /// `p I` with the full 3x3 identity.
    pub fn hydrostatic(p: f64) -> Self {
        SymTensor2::with_zz(p, p, p, 0.0)
    }

    /// Symmetric part of a 2D displacement gradient `[[ux_x, ux_y], [uy_x, uy_y]]`.
    pub fn sym_grad(grad: [[f64; 2]; 2]) -> Self {
        SymTensor2::new(grad[0][0], grad[1][1], 0.5 * (grad[0][1] + grad[1][0]))
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Double contraction `A : B`.
    pub fn ddot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + self.zz * other.zz + 2.0 * self.xy * other.xy
    }

    pub fn frobenius(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.xx
            .abs()
            .max(self.yy.abs())
            .max(self.zz.abs())
            .max(self.xy.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.zz.is_finite() && self.xy.is_finite()
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::with_zz(self.xx + o.xx, self.yy + o.yy, self.zz + o.zz, self.xy + o.xy)
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::with_zz(self.xx - o.xx, self.yy - o.yy, self.zz - o.zz, self.xy - o.xy)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        SymTensor2::with_zz(self * t.xx, self * t.yy, self * t.zz, self * t.xy)
    }
}

/// Which stress-strain law drives the mechanics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Linear elastic fracture mechanics (Hooke's law).
    Lefm,
    /// Nonlinear strain-limiting elasticity.
    Nlsl,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Lefm => "lefm",
            Model::Nlsl => "nlsl",
        }
    }

    pub fn parse(s: &str) -> Option<Model> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lefm" | "linear" => Some(Model::Lefm),
            "nlsl" | "nonlinear" => Some(Model::Nlsl),
            _ => None,
        }
    }
}

/// Elastic, strain-limiting and fracture parameters of one material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// First Lamé coefficient.
    pub lambda: f64,
    /// Shear modulus.
    pub mu: f64,
    /// Strain-limiting exponent, `> 0`.
    pub alpha: f64,
    /// Strain-limiting coefficient, `>= 0`; zero recovers Hooke's law.
    pub beta: f64,
    /// Critical energy release rate.
    pub gc: f64,
    /// Phase-field bandwidth.
    pub xi: f64,
    /// Residual stiffness in the degradation function.
    pub kappa: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMaterial(msg));
        if !(self.mu > 0.0) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.lambda + 2.0 / 3.0 * self.mu > 0.0) {
            return bad(format!(
                "bulk modulus lambda + 2mu/3 must be positive, got {}",
                self.lambda + 2.0 / 3.0 * self.mu
            ));
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(self.kappa >= 0.0) || !(self.xi > 0.0) || !(self.gc >= 0.0) {
            return bad(format!(
                "need kappa >= 0, xi > 0, gc >= 0 (kappa={}, xi={}, gc={})",
                self.kappa, self.xi, self.gc
            ));
        }
        Ok(())
    }

    /// Degradation function `g(φ) = (1 - κ) φ² + κ`.
    pub fn degradation(&self, phi: f64) -> f64 {
        (1.0 - self.kappa) * phi * phi + self.kappa
    }
}

/// `σ = 2μ ε + λ tr(ε) I`.
pub fn hooke_stress(eps: &SymTensor2, m: &MaterialParams) -> SymTensor2 {
    let lt = m.lambda * eps.trace();
    SymTensor2::with_zz(
        2.0 * m.mu * eps.xx + lt,
        2.0 * m.mu * eps.yy + lt,
        2.0 * m.mu * eps.zz + lt,
        2.0 * m.mu * eps.xy,
    )
}

/// `K[σ] = σ / 2μ - λ tr(σ) I / (2μ (2μ + 3λ))`.
pub fn compliance(sigma: &SymTensor2, m: &MaterialParams) -> SymTensor2 {
    let a = 1.0 / (2.0 * m.mu);
    let b = m.lambda * sigma.trace() / (2.0 * m.mu * (2.0 * m.mu + 3.0 * m.lambda));
    SymTensor2::with_zz(
        a * sigma.xx - b,
        a * sigma.yy - b,
        a * sigma.zz - b,
        a * sigma.xy,
    )
}

fn clamped_sqrt(radicand: f64) -> Result<f64> {
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= RADICAND_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeRadicand(radicand))
    }
}

/// `|K^{1/2}[σ]| = (σ:σ / 2μ - λ tr(σ)² / (2μ(2μ+3λ)))^{1/2}`.
pub fn half_norm_stress(sigma: &SymTensor2, m: &MaterialParams) -> Result<f64> {
    let tr = sigma.trace();
    let radicand = sigma.ddot(sigma) / (2.0 * m.mu)
        - m.lambda * tr * tr / (2.0 * m.mu * (2.0 * m.mu + 3.0 * m.lambda));
    clamped_sqrt(radicand)
}

/// `|E^{1/2}[ε]| = (2μ ε:ε + λ tr(ε)²)^{1/2}`.
pub fn half_norm_strain(eps: &SymTensor2, m: &MaterialParams) -> f64 {
    let tr = eps.trace();
    let radicand = 2.0 * m.mu * eps.ddot(eps) + m.lambda * tr * tr;
    radicand.max(0.0).sqrt()
}

/// `φ̃(r) = (1 + (β r)^α)^{-1/α}`.
pub fn phi_tilde(r: f64, alpha: f64, beta: f64) -> f64 {
    if beta == 0.0 || r == 0.0 {
        return 1.0;
    }
    (1.0 + (beta * r).powf(alpha)).powf(-1.0 / alpha)
}

/// Strain-limiting strain `ε_NL = K[σ] φ̃(|K^{1/2}[σ]|)`.
pub fn strain_nl(sigma: &SymTensor2, m: &MaterialParams) -> Result<SymTensor2> {
    let k = compliance(sigma, m);
    if m.beta == 0.0 {
        return Ok(k);
    }
    let r = half_norm_stress(sigma, m)?;
    Ok(phi_tilde(r, m.alpha, m.beta) * k)
}

/// `β |E^{1/2}[ε]|`, the quantity that must stay below 1.
pub fn ellipticity_monitor(eps: &SymTensor2, m: &MaterialParams) -> f64 {
    m.beta * half_norm_strain(eps, m)
}

/// Denominator `(1 - (β s)^α)^{1/α}` with `s = |E^{1/2}[ε]|`, checked
/// against the ellipticity guard.
fn limiting_denominator(s: f64, m: &MaterialParams) -> Result<(f64, f64)> {
    let monitor = m.beta * s;
    if monitor == 0.0 {
        return Ok((1.0, 0.0));
    }
    let pow = monitor.powf(m.alpha);
    if !(pow < 1.0 - ELLIPTICITY_GUARD) {
        return Err(Error::LimitExceeded { monitor });
    }
    Ok(((1.0 - pow).powf(1.0 / m.alpha), pow))
}

/// Inverted strain-limiting stress `σ = E[ε] / (1 - (β |E^{1/2}[ε]|)^α)^{1/α}`.
pub fn stress_sl(eps: &SymTensor2, m: &MaterialParams) -> Result<SymTensor2> {
    let e = hooke_stress(eps, m);
    if m.beta == 0.0 {
        return Ok(e);
    }
    let (d, _) = limiting_denominator(half_norm_strain(eps, m), m)?;
    Ok((1.0 / d) * e)
}

/// Directional derivative of [`stress_sl`] at `eps` along `deps`.
pub fn tangent_sl(eps: &SymTensor2, deps: &SymTensor2, m: &MaterialParams) -> Result<SymTensor2> {
    let point = StressPoint::new(Model::Nlsl, eps, m)?;
    Ok(point.tangent(deps, m))
}

/// Stress response at one material point, with what is needed to apply the
/// tangent along many directions.
#[derive(Debug, Clone, Copy)]
pub struct StressPoint {
    /// `E[ε]`
    pub elastic: SymTensor2,
    /// `1 / D`
    pub inv_denominator: f64,
    /// Coefficient of `(E[ε]:dε) E[ε]` in the tangent.
    pub rank_one: f64,
    /// `β |E^{1/2}[ε]|`
    pub monitor: f64,
}

impl StressPoint {
    pub fn new(model: Model, eps: &SymTensor2, m: &MaterialParams) -> Result<Self> {
        let elastic = hooke_stress(eps, m);
        if model == Model::Lefm || m.beta == 0.0 {
            return Ok(StressPoint {
                elastic,
                inv_denominator: 1.0,
                rank_one: 0.0,
                monitor: ellipticity_monitor(eps, m),
            });
        }
        let s = half_norm_strain(eps, m);
        let (d, pow) = limiting_denominator(s, m)?;
        let rank_one = if s < TANGENT_ZERO_STRAIN {
            0.0
        } else {
            // β^α s^{α-2} / (1 - (βs)^α)^{1 + 1/α}, written via (βs)^α / s².
            pow / (s * s) / ((1.0 - pow) * d)
        };
        Ok(StressPoint {
            elastic,
            inv_denominator: 1.0 / d,
            rank_one,
            monitor: m.beta * s,
        })
    }

    pub fn stress(&self) -> SymTensor2 {
        self.inv_denominator * self.elastic
    }

    pub fn tangent(&self, deps: &SymTensor2, m: &MaterialParams) -> SymTensor2 {
        let de = hooke_stress(deps, m);
        let mut t = self.inv_denominator * de;
        if self.rank_one != 0.0 {
            t = t + (self.rank_one * self.elastic.ddot(deps)) * self.elastic;
        }
        t
    }
}

/// Stress of the selected model.
pub fn model_stress(model: Model, eps: &SymTensor2, m: &MaterialParams) -> Result<SymTensor2> {
    match model {
        Model::Lefm => Ok(hooke_stress(eps, m)),
        Model::Nlsl => stress_sl(eps, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(alpha: f64, beta: f64) -> MaterialParams {
        MaterialParams {
            lambda: 1.0,
            mu: 1.0,
            alpha,
            beta,
            gc: 1.0,
            xi: 0.1,
            kappa: 1e-10,
        }
    }

    fn steel() -> MaterialParams {
        MaterialParams {
            lambda: 121.15e3,
            mu: 80.77e3,
            alpha: 0.25,
            beta: 4.8e-4,
            gc: 1.0,
            xi: 0.004,
            kappa: 1e-13,
        }
    }

    #[test]
    fn hooke_examples() {
        let m = unit(1.0, 0.0);
        assert_eq!(hooke_stress(&SymTensor2::ZERO, &m), SymTensor2::ZERO);
        let s = hooke_stress(&SymTensor2::new(1.0, 1.0, 0.0), &m);
        assert_eq!((s.xx, s.yy, s.xy), (4.0, 4.0, 0.0));
        // component-wise oracle
        let m = steel();
        let e = SymTensor2::new(1.3e-3, -4.0e-4, 7.5e-4);
        let s = hooke_stress(&e, &m);
        let tr = 1.3e-3 - 4.0e-4;
        assert_relative_eq!(s.xx, 2.0 * 80.77e3 * 1.3e-3 + 121.15e3 * tr, max_relative = 1e-14);
        assert_relative_eq!(s.yy, 2.0 * 80.77e3 * -4.0e-4 + 121.15e3 * tr, max_relative = 1e-14);
        assert_relative_eq!(s.xy, 2.0 * 80.77e3 * 7.5e-4, max_relative = 1e-14);
        assert_relative_eq!(s.zz, 121.15e3 * tr, max_relative = 1e-14);
    }

    #[test]
    fn hydrostatic_closed_forms() {
        let m = unit(1.0, 1.0);
        let k = compliance(&SymTensor2::hydrostatic(1.0), &m);
        assert_relative_eq!(k.xx, 0.2, epsilon = 1e-15);
        assert_relative_eq!(k.zz, 0.2, epsilon = 1e-15);
        assert_eq!(compliance(&SymTensor2::ZERO, &m), SymTensor2::ZERO);
        let r = half_norm_stress(&SymTensor2::hydrostatic(1.0), &m).unwrap();
        assert_relative_eq!(r, 0.6f64.sqrt(), epsilon = 1e-15);
        let nl = strain_nl(&SymTensor2::hydrostatic(1.0), &m).unwrap();
        assert_relative_eq!(nl.xx, 0.2 / (1.0 + 0.6f64.sqrt()), epsilon = 1e-15);
        assert_relative_eq!(nl.xx, 0.112_701_665_379_258_3, epsilon = 1e-12);
    }

    #[test]
    fn half_norm_strain_of_identity() {
        let m = unit(1.0, 1.0);
        assert_eq!(half_norm_strain(&SymTensor2::ZERO, &m), 0.0);
        let s = half_norm_strain(&SymTensor2::new(1.0, 1.0, 0.0), &m);
        assert_relative_eq!(s, 8f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn phi_tilde_examples() {
        assert_eq!(phi_tilde(0.0, 0.5, 3.0), 1.0);
        assert_eq!(phi_tilde(17.0, 0.5, 0.0), 1.0);
        assert_relative_eq!(phi_tilde(3.0, 1.0, 2.0), 1.0 / 7.0, epsilon = 1e-15);
    }

    #[test]
    fn strain_nl_with_zero_beta_is_compliance() {
        let m = unit(0.3, 0.0);
        let s = SymTensor2::with_zz(0.4, -1.2, 0.3, 0.9);
        assert_eq!(strain_nl(&s, &m).unwrap(), compliance(&s, &m));
        assert_eq!(strain_nl(&SymTensor2::ZERO, &unit(0.3, 2.0)).unwrap(), SymTensor2::ZERO);
    }

    #[test]
    fn stress_sl_limits() {
        let m = unit(0.5, 0.0);
        let e = SymTensor2::new(0.1, -0.3, 0.2);
        assert_eq!(stress_sl(&e, &m).unwrap(), hooke_stress(&e, &m));
        let m = unit(0.5, 0.7);
        assert_eq!(stress_sl(&SymTensor2::ZERO, &m).unwrap(), SymTensor2::ZERO);
    }

    #[test]
    fn stress_sl_rejects_inadmissible_strain() {
        let m = unit(1.0, 1.0);
        let e = SymTensor2::new(1.0, 1.0, 0.0); // s = sqrt(8) > 1
        match stress_sl(&e, &m) {
            Err(Error::LimitExceeded { monitor }) => assert_relative_eq!(monitor, 8f64.sqrt()),
            other => panic!("expected LimitExceeded, got {other:?}"),
        }
    }

    #[test]
    fn negative_radicand_is_reported() {
        // lambda chosen so that 2mu + 3lambda < 0 flips the sign of the radicand
        let m = MaterialParams {
            lambda: -1.0,
            ..unit(1.0, 1.0)
        };
        assert!(m.validate().is_err());
        let r = half_norm_stress(&SymTensor2::hydrostatic(1.0), &m);
        assert!(matches!(r, Err(Error::NegativeRadicand(_))));
    }

    #[test]
    fn tangent_limits() {
        let e = SymTensor2::new(0.01, -0.02, 0.005);
        let de = SymTensor2::new(0.3, 0.1, -0.2);
        let m = unit(0.5, 0.0);
        assert_eq!(tangent_sl(&e, &de, &m).unwrap(), hooke_stress(&de, &m));
        for alpha in [2.0, 3.0, 0.25] {
            let m = unit(alpha, 0.9);
            let t = tangent_sl(&SymTensor2::ZERO, &de, &m).unwrap();
            assert_eq!(t, hooke_stress(&de, &m));
        }
    }

    #[test]
    fn validate_rules() {
        assert!(unit(1.0, 0.0).validate().is_ok());
        assert!(unit(0.0, 0.0).validate().is_err());
        assert!(unit(1.0, -1.0).validate().is_err());
        assert!(MaterialParams { mu: 0.0, ..unit(1.0, 0.0) }.validate().is_err());
    }

    fn admissible_strain(m: &MaterialParams, raw: [f64; 3], frac: f64) -> SymTensor2 {
        let e = SymTensor2::new(raw[0], raw[1], raw[2]);
        let s = half_norm_strain(&e, m);
        if s == 0.0 || m.beta == 0.0 {
            return e;
        }
        // rescale so that beta * s = frac < 1
        (frac / (m.beta * s)) * e
    }

    proptest! {
        #[test]
        fn compliance_round_trips(
            xx in -10.0..10.0f64, yy in -10.0..10.0f64, zz in -10.0..10.0f64, xy in -10.0..10.0f64,
            lambda in 0.01..200.0f64, mu in 0.01..200.0f64,
        ) {
            let m = MaterialParams { lambda, mu, ..unit(1.0, 0.0) };
            let s = SymTensor2::with_zz(xx, yy, zz, xy);
            let back = hooke_stress(&compliance(&s, &m), &m);
            prop_assert!((back - s).max_abs() <= 1e-12 * s.max_abs().max(1.0));
            let eps = SymTensor2::new(xx, yy, xy);
            let again = compliance(&hooke_stress(&eps, &m), &m);
            prop_assert!((again - eps).max_abs() <= 1e-12 * eps.max_abs().max(1.0));
        }

        #[test]
        fn half_norms_are_contractions(
            xx in -5.0..5.0f64, yy in -5.0..5.0f64, zz in -5.0..5.0f64, xy in -5.0..5.0f64,
            lambda in 0.01..50.0f64, mu in 0.01..50.0f64,
        ) {
            let m = MaterialParams { lambda, mu, ..unit(1.0, 0.0) };
            let s = SymTensor2::with_zz(xx, yy, zz, xy);
            let r = half_norm_stress(&s, &m).unwrap();
            let oracle = s.ddot(&compliance(&s, &m)).max(0.0).sqrt();
            prop_assert!((r - oracle).abs() <= 1e-12 * oracle.max(1.0));
            let e = SymTensor2::new(xx, yy, xy);
            let se = half_norm_strain(&e, &m);
            let oracle = e.ddot(&hooke_stress(&e, &m)).sqrt();
            prop_assert!((se - oracle).abs() <= 1e-12 * oracle.max(1.0));
        }

        #[test]
        fn phi_tilde_is_monotone_and_bounded(
            r1 in 0.0..100.0f64, dr in 1e-6..100.0f64, alpha in 0.05..8.0f64, beta in 0.0..10.0f64,
        ) {
            let r2 = r1 + dr;
            let (p1, p2) = (phi_tilde(r1, alpha, beta), phi_tilde(r2, alpha, beta));
            prop_assert!(p1 > 0.0 && p1 <= 1.0 && p2 > 0.0 && p2 <= 1.0);
            prop_assert!(p1 >= p2);
            if beta > 0.0 && (beta * r2).powf(alpha) > 1e-12 {
                prop_assert!(p1 > p2);
                prop_assert!(r2 * p2 <= 1.0 / beta * (1.0 + 1e-12));
            }
        }

        #[test]
        fn tangent_matches_central_difference(
            raw in prop::array::uniform3(-1.0..1.0f64),
            draw in prop::array::uniform3(-1.0..1.0f64),
            frac in 0.05..0.9f64,
            alpha in prop::sample::select(vec![0.1, 0.25, 0.5, 1.0, 2.0, 4.0]),
        ) {
            let m = MaterialParams { alpha, beta: 0.7, ..unit(alpha, 0.7) };
            let e = admissible_strain(&m, raw, frac);
            prop_assume!(e.frobenius() > 1e-3);
            let de = SymTensor2::new(draw[0], draw[1], draw[2]);
            let h = 1e-6 * e.frobenius() / de.frobenius().max(1e-12);
            let plus = stress_sl(&(e + h * de), &m).unwrap();
            let minus = stress_sl(&(e - h * de), &m).unwrap();
            let fd = (1.0 / (2.0 * h)) * (plus - minus);
            let t = tangent_sl(&e, &de, &m).unwrap();
            let scale = t.max_abs().max(fd.max_abs());
            prop_assert!((t - fd).max_abs() <= 1e-6 * scale, "t={t:?} fd={fd:?}");
        }

        #[test]
        fn strain_nl_is_monotone_in_beta(
            xx in -5.0..5.0f64, yy in -5.0..5.0f64, zz in -5.0..5.0f64, xy in -5.0..5.0f64,
            alpha in 0.1..4.0f64,
        ) {
            let s = SymTensor2::with_zz(xx, yy, zz, xy);
            let mut last = f64::INFINITY;
            for beta in [0.0, 0.01, 0.1, 0.5, 1.0, 5.0, 50.0] {
                let n = strain_nl(&s, &unit(alpha, beta)).unwrap().frobenius();
                prop_assert!(n <= last * (1.0 + 1e-14));
                last = n;
            }
        }

        #[test]
        fn large_alpha_recovers_hooke(raw in prop::array::uniform3(-1.0..1.0f64), frac in 0.0..0.5f64) {
            let m = unit(64.0, 0.8);
            let e = admissible_strain(&m, raw, frac);
            let a = stress_sl(&e, &m).unwrap();
            let b = hooke_stress(&e, &m);
            prop_assert!((a - b).max_abs() <= 1e-3 * b.max_abs().max(1e-300));
        }
    }
}
