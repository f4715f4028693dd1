//! Manufactured solution `u = (sin x sin y, cos x cos y)` on the unit square.

use crate::constitutive::{model_stress, MaterialParams, Model, SymTensor2};
use crate::error::Result;

/// Central-difference step for the divergence of the nonlinear stress.
pub const FD_STEP: f64 = 1e-6;

pub fn exact(p: [f64; 2]) -> [f64; 2] {
    let (sx, cx) = p[0].sin_cos();
    let (sy, cy) = p[1].sin_cos();
    [sx * sy, cx * cy]
}

/// Strain of the exact field. The shear part vanishes identically.
pub fn exact_strain(p: [f64; 2]) -> SymTensor2 {
    let e = p[0].cos() * p[1].sin();
    SymTensor2::new(e, -e, 0.0)
}

fn stress_at(p: [f64; 2], model: Model, m: &MaterialParams) -> Result<SymTensor2> {
    model_stress(model, &exact_strain(p), m)
}

/// Body force `f = -div σ(ε(u))` for the exact field.
///
/// For LEFM the closed form is `f = 2μ u` (the strain is trace free and
/// the shear strain vanishes). For NLSL the divergence of the stress is
/// taken by central differences of step [`FD_STEP`].
pub fn forcing(p: [f64; 2], model: Model, m: &MaterialParams) -> Result<[f64; 2]> {
    if model == Model::Lefm {
        let u = exact(p);
        return Ok([2.0 * m.mu * u[0], 2.0 * m.mu * u[1]]);
    }
    let h = FD_STEP;
    let dx = {
        let a = stress_at([p[0] + h, p[1]], model, m)?;
        let b = stress_at([p[0] - h, p[1]], model, m)?;
        (1.0 / (2.0 * h)) * (a - b)
    };
    let dy = {
        let a = stress_at([p[0], p[1] + h], model, m)?;
        let b = stress_at([p[0], p[1] - h], model, m)?;
        (1.0 / (2.0 * h)) * (a - b)
    };
    Ok([-(dx.xx + dy.xy), -(dx.xy + dy.yy)])
}
