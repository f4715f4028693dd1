//! Named run configurations for the four experiments.

use crate::constitutive::Model;
use crate::error::{Error, Result};
use crate::mesh::Slit;
use crate::postprocess::Quantity;

use super::config::{Boundary, CrackBand, Experiment, Length, RefineBox, RunConfig};

/// Top displacement and β of each static slit case.
const EX2_CASES: [(f64, f64); 4] = [(2.0, 0.04), (1.0, 0.09), (0.5, 0.18), (0.1, 0.92)];
const EX2_ALPHAS: [f64; 4] = [2.0, 1.0, 0.5, 0.25];
const EX3_CASE1_ALPHAS: [f64; 3] = [2.0, 1.0, 0.5];
const EX3_CASE2_BETAS: [f64; 3] = [1.0, 10.0, 50.0];
const ROMAN: [&str; 4] = ["i", "ii", "iii", "iv"];

/// Every preset name, in a stable order.
pub fn preset_names() -> Vec<String> {
    let mut names = vec!["ex1_linear".to_string(), "ex1_nlsl".to_string()];
    for c in 1..=4 {
        names.push(format!("ex2_lefm_case{c}"));
        for r in ROMAN {
            names.push(format!("ex2_nlsl_case{c}_{r}"));
        }
    }
    names.push("ex3_lefm".into());
    for c in 1..=2 {
        for r in &ROMAN[..3] {
            names.push(format!("ex3_nlsl_case{c}_{r}"));
        }
    }
    for n in ["ex4_lefm", "ex4_nlsl", "ex4_lefm_reduced", "ex4_nlsl_reduced"] {
        names.push(n.into());
    }
    names
}

/// The LEFM preset an NLSL preset should reproduce when `β = 0`.
pub fn lefm_counterpart(name: &str) -> Option<String> {
    if name == "ex1_nlsl" {
        return Some("ex1_linear".into());
    }
    if let Some(rest) = name.strip_prefix("ex2_nlsl_") {
        return Some(format!("ex2_lefm_{}", rest.split('_').next()?));
    }
    if name.starts_with("ex3_nlsl_") {
        return Some("ex3_lefm".into());
    }
    if name.starts_with("ex4_nlsl") {
        return Some(name.replace("nlsl", "lefm"));
    }
    None
}

fn roman(s: &str) -> Option<usize> {
    ROMAN.iter().position(|r| *r == s)
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let unknown = || Error::UnknownPreset {
        name: name.to_string(),
        available: preset_names().join("\n"),
    };
    let parts: Vec<&str> = name.split('_').collect();
    let mut cfg = match parts.as_slice() {
        ["ex1", "linear"] => ex1(Model::Lefm),
        ["ex1", "nlsl"] => ex1(Model::Nlsl),
        ["ex2", "lefm", case] => {
            let c = case_index(case, 4).ok_or_else(unknown)?;
            ex2(EX2_CASES[c].0, Model::Lefm, 1.0, 0.0)
        }
        ["ex2", "nlsl", case, r] => {
            let c = case_index(case, 4).ok_or_else(unknown)?;
            let a = roman(r).ok_or_else(unknown)?;
            let (u, beta) = EX2_CASES[c];
            ex2(u, Model::Nlsl, EX2_ALPHAS[a], beta)
        }
        ["ex3", "lefm"] => ex3(Model::Lefm, 1.0, 0.0),
        ["ex3", "nlsl", case, r] => {
            let c = case_index(case, 2).ok_or_else(unknown)?;
            let k = roman(r).filter(|&k| k < 3).ok_or_else(unknown)?;
            if c == 0 {
                ex3(Model::Nlsl, EX3_CASE1_ALPHAS[k], 127.0)
            } else {
                ex3(Model::Nlsl, 0.25, EX3_CASE2_BETAS[k])
            }
        }
        ["ex4", "lefm"] => ex4(Model::Lefm, false),
        ["ex4", "nlsl"] => ex4(Model::Nlsl, false),
        ["ex4", "lefm", "reduced"] => ex4(Model::Lefm, true),
        ["ex4", "nlsl", "reduced"] => ex4(Model::Nlsl, true),
        _ => return Err(unknown()),
    };
    cfg.name = name.to_string();
    Ok(cfg)
}

fn case_index(s: &str, n: usize) -> Option<usize> {
    let c: usize = s.strip_prefix("case")?.parse().ok()?;
    (1..=n).contains(&c).then_some(c - 1)
}

fn ex1(model: Model) -> RunConfig {
    let mut c = RunConfig {
        experiment: Experiment::Ex1,
        boundary: Boundary::Mms,
        mms_cycles: 6,
        ..RunConfig::default()
    };
    c.material.lambda = 0.01;
    c.material.mu = 0.01;
    c.material.alpha = 0.1;
    c.material.beta = if model == Model::Nlsl { 0.1 } else { 0.0 };
    c.material.kappa = Length::Absolute(0.0);
    c.mechanics.model = model;
    c.mechanics.quad_order = 3;
    c.mechanics.l_u = 0.0;
    c.mechanics.newton_tol = 1e-10;
    c.mesh.global = 1;
    c.coupling.phase_field = false;
    c.coupling.load_rate = 0.0;
    c.output.quantities = Vec::new();
    c
}

fn static_tension(c: &mut RunConfig, u_top: f64) {
    c.boundary = Boundary::Tension;
    c.coupling.dt = 1.0;
    c.coupling.n_steps = 1;
    c.coupling.load_rate = u_top;
}

fn ex2(u_top: f64, model: Model, alpha: f64, beta: f64) -> RunConfig {
    let mut c = RunConfig {
        experiment: Experiment::Ex2,
        ..RunConfig::default()
    };
    c.material.lambda = 1.0;
    c.material.mu = 1.0;
    c.material.alpha = alpha;
    c.material.beta = beta;
    c.mechanics.model = model;
    c.mesh.global = 7;
    c.slit = Some(Slit {
        y: 0.5,
        x_tip: 0.5,
        x_end: 1.0,
    });
    c.coupling.phase_field = false;
    static_tension(&mut c, u_top);
    c.output.quantities = vec![Quantity::Sigma22, Quantity::Eps22];
    c
}

fn crack_band() -> CrackBand {
    CrackBand {
        x0: 0.5,
        x1: 1.0,
        y: 0.5,
        half_width: Length::Hmin(1.0),
    }
}

fn ex3(model: Model, alpha: f64, beta: f64) -> RunConfig {
    let mut c = RunConfig {
        experiment: Experiment::Ex3,
        ..RunConfig::default()
    };
    c.material.lambda = 1.0;
    c.material.mu = 1.0;
    c.material.alpha = alpha;
    c.material.beta = beta;
    c.material.gc = 5.0;
    c.material.xi = Length::Hmin(2.0);
    c.material.kappa = Length::Hmin(1e-10);
    c.mechanics.model = model;
    c.mechanics.l_u = 1e-6;
    c.mechanics.newton_tol = 1e-8;
    c.phasefield.l_phi = 1e-6;
    c.phasefield.gamma = 1e4;
    c.phasefield.newton_tol = 1e-8;
    c.coupling.tol = 1e-6;
    c.coupling.phase_field = true;
    c.mesh.global = 7;
    c.mesh.band_levels = 3;
    c.crack = Some(crack_band());
    static_tension(&mut c, 1e-4);
    c.output.quantities = vec![Quantity::Sigma22, Quantity::Eps22, Quantity::SigmaPhi22, Quantity::Phi];
    c
}

fn ex4(model: Model, reduced: bool) -> RunConfig {
    let mut c = RunConfig {
        experiment: Experiment::Ex4,
        ..RunConfig::default()
    };
    c.material.lambda = 121.15e3;
    c.material.mu = 80.77e3;
    c.material.gc = 1.0;
    c.material.xi = Length::Hmin(2.0);
    c.material.kappa = Length::Hmin(1e-10);
    c.material.alpha = 0.25;
    c.material.beta = if model == Model::Nlsl { 4.8e-4 } else { 0.0 };
    c.mechanics.model = model;
    c.mechanics.l_u = 1e-6;
    c.mechanics.newton_tol = 1e-8;
    c.phasefield.l_phi = 1e-6;
    c.phasefield.gamma = 1e-7;
    c.phasefield.newton_tol = 1e-8;
    c.coupling.tol = 1e-6;
    c.coupling.phase_field = true;
    c.coupling.dt = 1e-4;
    c.coupling.n_steps = 50;
    c.coupling.load_rate = 1.0;
    c.boundary = Boundary::Tension;
    c.mesh.global = if reduced { 5 } else { 7 };
    c.mesh.boxes = vec![RefineBox {
        x0: 0.0,
        y0: 0.4,
        x1: 0.6,
        y1: 0.6,
        levels: 2,
    }];
    c.crack = Some(crack_band());
    c.output.quantities = vec![Quantity::Phi, Quantity::Sigma22];
    c.output.sample_steps = vec![10, 25, 35, 50];
    c.output.vtk_steps = if reduced {
        vec![50]
    } else {
        vec![25, 30, 33, 35, 38, 42, 50]
    };
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_name_resolves() {
        for n in preset_names() {
            let c = preset(&n).unwrap();
            assert_eq!(c.name, n);
            let back = RunConfig::parse(&c.render()).unwrap();
            assert_eq!(back, c, "{n}");
        }
    }

    #[test]
    fn unknown_names_list_the_presets() {
        for bad in ["ex5", "ex2_lefm_case5", "ex3_nlsl_case1_iv", "ex2_nlsl_case1"] {
            let err = preset(bad).unwrap_err().to_string();
            assert!(err.contains("ex4_nlsl_reduced"), "{err}");
        }
    }

    #[test]
    fn printed_values() {
        let c = preset("ex3_nlsl_case1_i").unwrap();
        assert_eq!((c.material.alpha, c.material.beta), (2.0, 127.0));
        assert_eq!(c.material.xi, Length::Hmin(2.0));
        let c = preset("ex2_nlsl_case4_iv").unwrap();
        assert_eq!((c.material.alpha, c.material.beta, c.coupling.load_rate), (0.25, 0.92, 0.1));
        let c = preset("ex4_nlsl").unwrap();
        assert_eq!((c.coupling.n_steps, c.coupling.dt, c.phasefield.gamma), (50, 1e-4, 1e-7));
        assert_eq!((c.material.alpha, c.material.beta), (0.25, 4.8e-4));
        assert_eq!(lefm_counterpart("ex2_nlsl_case3_ii").as_deref(), Some("ex2_lefm_case3"));
        assert_eq!(lefm_counterpart("ex4_nlsl_reduced").as_deref(), Some("ex4_lefm_reduced"));
    }
}
