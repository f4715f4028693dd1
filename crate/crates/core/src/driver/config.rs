//! Run descriptions and their line-oriented `section.key = value` format.

use std::fmt::Write as _;

use crate::constitutive::{MaterialParams, Model};
use crate::coupling::CouplingConfig;
use crate::error::{Error, Result};
use crate::mechanics::MechanicsConfig;
use crate::mesh::Slit;
use crate::phasefield::PhaseFieldConfig;
use crate::postprocess::Quantity;

/// A length given outright or as a multiple of the smallest cell size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Length {
    Absolute(f64),
    Hmin(f64),
}

impl Length {
    pub fn resolve(&self, h_min: f64) -> f64 {
        match *self {
            Length::Absolute(v) => v,
            Length::Hmin(k) => k * h_min,
        }
    }

    fn parse(s: &str) -> Result<Length> {
        let t = s.trim();
        if let Some(k) = t.strip_suffix("hmin") {
            let k = k.trim().trim_end_matches('*').trim();
            let k = if k.is_empty() { 1.0 } else { parse_f64(k)? };
            Ok(Length::Hmin(k))
        } else {
            Ok(Length::Absolute(parse_f64(t)?))
        }
    }

    fn render(&self) -> String {
        match *self {
            Length::Absolute(v) => format!("{v:?}"),
            Length::Hmin(k) => format!("{k:?} hmin"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Manufactured-solution convergence study.
    Ex1,
    /// Static geometric slit.
    Ex2,
    /// Static phase-field crack.
    Ex3,
    /// Quasi-static propagation.
    Ex4,
    Custom,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Ex1 => "ex1",
            Experiment::Ex2 => "ex2",
            Experiment::Ex3 => "ex3",
            Experiment::Ex4 => "ex4",
            Experiment::Custom => "custom",
        }
    }

    fn parse(s: &str) -> Result<Experiment> {
        Ok(match s {
            "ex1" => Experiment::Ex1,
            "ex2" => Experiment::Ex2,
            "ex3" => Experiment::Ex3,
            "ex4" => Experiment::Ex4,
            "custom" => Experiment::Custom,
            _ => return Err(Error::Config(format!("unknown experiment `{s}`"))),
        })
    }
}

/// Displacement boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Top `u = (0, ū_top)`, bottom `u_y = 0`, sides traction free.
    Tension,
    /// Exact manufactured solution on the whole boundary.
    Mms,
}

/// Axis-aligned box whose cells are refined `levels` more times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub levels: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    pub global: u32,
    /// Refined by cell centroid.
    pub boxes: Vec<RefineBox>,
    /// Extra levels around the initial crack band (cells touching it).
    pub band_levels: u32,
}

/// Initial crack: `φ = 0` at vertices with `x0 ≤ x ≤ x1`, `|y - y| ≤ half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackBand {
    pub x0: f64,
    pub x1: f64,
    pub y: f64,
    pub half_width: Length,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub line_from: [f64; 2],
    pub line_to: [f64; 2],
    pub quantities: Vec<Quantity>,
    /// Steps with line samples; empty means the final step.
    pub sample_steps: Vec<usize>,
    /// Steps with VTK snapshots; empty means the final step.
    pub vtk_steps: Vec<usize>,
    pub newton_log: bool,
}

/// Material with the regularization lengths possibly tied to `h_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialSpec {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gc: f64,
    pub xi: Length,
    pub kappa: Length,
}

impl MaterialSpec {
    pub fn resolve(&self, h_min: f64) -> MaterialParams {
        MaterialParams {
            lambda: self.lambda,
            mu: self.mu,
            alpha: self.alpha,
            beta: self.beta,
            gc: self.gc,
            xi: self.xi.resolve(h_min),
            kappa: self.kappa.resolve(h_min),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub experiment: Experiment,
    pub material: MaterialSpec,
    pub mesh: MeshSpec,
    pub slit: Option<Slit>,
    pub crack: Option<CrackBand>,
    pub boundary: Boundary,
    pub mechanics: MechanicsConfig,
    pub phasefield: PhaseFieldConfig,
    pub coupling: CouplingConfig,
    pub output: OutputSpec,
    /// Refinement cycles of the convergence study.
    pub mms_cycles: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "custom".into(),
            experiment: Experiment::Custom,
            material: MaterialSpec {
                lambda: 1.0,
                mu: 1.0,
                alpha: 1.0,
                beta: 0.0,
                gc: 1.0,
                xi: Length::Hmin(2.0),
                kappa: Length::Hmin(1e-10),
            },
            mesh: MeshSpec {
                global: 4,
                boxes: Vec::new(),
                band_levels: 0,
            },
            slit: None,
            crack: None,
            boundary: Boundary::Tension,
            mechanics: MechanicsConfig::default(),
            phasefield: PhaseFieldConfig::default(),
            coupling: CouplingConfig::default(),
            output: OutputSpec {
                line_from: [0.0, 0.5],
                line_to: [0.5, 0.5],
                quantities: vec![Quantity::Sigma22, Quantity::Eps22],
                sample_steps: Vec::new(),
                vtk_steps: Vec::new(),
                newton_log: true,
            },
            mms_cycles: 6,
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Config(format!("expected a number, got `{s}`")))
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse::<T>().map_err(|_| Error::Config(format!("expected an integer, got `{s}`")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("expected true/false, got `{s}`"))),
    }
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split([',', ' '])
        .filter(|t| !t.trim().is_empty())
        .map(|t| f(t.trim()))
        .collect()
}

fn parse_point(s: &str) -> Result<[f64; 2]> {
    let v = parse_list(s, parse_f64)?;
    match v.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => Err(Error::Config(format!("expected `x, y`, got `{s}`"))),
    }
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Applies one `section.key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let none = v.eq_ignore_ascii_case("none");
        match key.trim() {
            "run.name" => self.name = v.to_string(),
            "run.experiment" => self.experiment = Experiment::parse(v)?,
            "run.model" | "mechanics.model" => {
                self.mechanics.model = Model::parse(v).ok_or_else(|| Error::Config(format!("unknown model `{v}`")))?
            }
            "run.boundary" => {
                self.boundary = match v {
                    "tension" => Boundary::Tension,
                    "mms" => Boundary::Mms,
                    _ => return Err(Error::Config(format!("unknown boundary `{v}`"))),
                }
            }
            "run.mms_cycles" => self.mms_cycles = parse_int(v)?,
            "material.lambda" => self.material.lambda = parse_f64(v)?,
            "material.mu" => self.material.mu = parse_f64(v)?,
            "material.alpha" => self.material.alpha = parse_f64(v)?,
            "material.beta" => self.material.beta = parse_f64(v)?,
            "material.gc" => self.material.gc = parse_f64(v)?,
            "material.xi" => self.material.xi = Length::parse(v)?,
            "material.kappa" => self.material.kappa = Length::parse(v)?,
            "mesh.global" => self.mesh.global = parse_int(v)?,
            "mesh.band_levels" => self.mesh.band_levels = parse_int(v)?,
            "mesh.boxes" => {
                self.mesh.boxes = if none {
                    Vec::new()
                } else {
                    v.split(';')
                        .filter(|b| !b.trim().is_empty())
                        .map(|b| {
                            let n = parse_list(b, parse_f64)?;
                            match n.as_slice() {
                                [x0, y0, x1, y1, l] if *l >= 0.0 && l.fract() == 0.0 => Ok(RefineBox {
                                    x0: *x0,
                                    y0: *y0,
                                    x1: *x1,
                                    y1: *y1,
                                    levels: *l as u32,
                                }),
                                _ => Err(Error::Config(format!("expected `x0, y0, x1, y1, levels`, got `{b}`"))),
                            }
                        })
                        .collect::<Result<_>>()?
                }
            }
            "mesh.slit" => {
                self.slit = if none {
                    None
                } else {
                    match parse_list(v, parse_f64)?.as_slice() {
                        [y, x_tip, x_end] => Some(Slit {
                            y: *y,
                            x_tip: *x_tip,
                            x_end: *x_end,
                        }),
                        _ => return Err(Error::Config(format!("expected `y, x_tip, x_end`, got `{v}`"))),
                    }
                }
            }
            "crack.band" => {
                self.crack = if none {
                    None
                } else {
                    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                    match parts.as_slice() {
                        [x0, x1, y, w] => Some(CrackBand {
                            x0: parse_f64(x0)?,
                            x1: parse_f64(x1)?,
                            y: parse_f64(y)?,
                            half_width: Length::parse(w)?,
                        }),
                        _ => return Err(Error::Config(format!("expected `x0, x1, y, half_width`, got `{v}`"))),
                    }
                }
            }
            "mechanics.l_u" => self.mechanics.l_u = parse_f64(v)?,
            "mechanics.newton_tol" => self.mechanics.newton_tol = parse_f64(v)?,
            "mechanics.max_newton" => self.mechanics.max_newton = parse_int(v)?,
            "mechanics.max_backtracks" => self.mechanics.max_backtracks = parse_int(v)?,
            "mechanics.warm_start" => self.mechanics.warm_start_linear = parse_bool(v)?,
            "mechanics.quad_order" => self.mechanics.quad_order = parse_int(v)?,
            "phasefield.l_phi" => self.phasefield.l_phi = parse_f64(v)?,
            "phasefield.gamma" => self.phasefield.gamma = parse_f64(v)?,
            "phasefield.newton_tol" => self.phasefield.newton_tol = parse_f64(v)?,
            "phasefield.max_newton" => self.phasefield.max_newton = parse_int(v)?,
            "phasefield.max_backtracks" => self.phasefield.max_backtracks = parse_int(v)?,
            "coupling.tol" => self.coupling.tol = parse_f64(v)?,
            "coupling.max_stagger" => self.coupling.max_stagger = parse_int(v)?,
            "coupling.dt" => self.coupling.dt = parse_f64(v)?,
            "coupling.n_steps" => self.coupling.n_steps = parse_int(v)?,
            "coupling.load_rate" => self.coupling.load_rate = parse_f64(v)?,
            "coupling.phase_field" => self.coupling.phase_field = parse_bool(v)?,
            "output.line_from" => self.output.line_from = parse_point(v)?,
            "output.line_to" => self.output.line_to = parse_point(v)?,
            "output.quantities" => {
                self.output.quantities = parse_list(v, |q| Quantity::parse(q).ok_or_else(|| Error::Config(format!("unknown quantity `{q}`"))))?
            }
            "output.sample_steps" => self.output.sample_steps = if none { Vec::new() } else { parse_list(v, parse_int)? },
            "output.vtk_steps" => self.output.vtk_steps = if none { Vec::new() } else { parse_list(v, parse_int)? },
            "output.newton_log" => self.output.newton_log = parse_bool(v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
        self.set(k, v)
    }

    /// Parses a config on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.update(text)?;
        Ok(cfg)
    }

    /// Applies every assignment in `text` to this config.
    pub fn update(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    /// Renders every key; `parse(render())` reproduces the config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let m = &self.material;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("run.name", self.name.clone());
        kv("run.experiment", self.experiment.name().into());
        kv("run.model", self.mechanics.model.name().into());
        kv(
            "run.boundary",
            match self.boundary {
                Boundary::Tension => "tension",
                Boundary::Mms => "mms",
            }
            .into(),
        );
        kv("run.mms_cycles", self.mms_cycles.to_string());
        kv("material.lambda", format!("{:?}", m.lambda));
        kv("material.mu", format!("{:?}", m.mu));
        kv("material.alpha", format!("{:?}", m.alpha));
        kv("material.beta", format!("{:?}", m.beta));
        kv("material.gc", format!("{:?}", m.gc));
        kv("material.xi", m.xi.render());
        kv("material.kappa", m.kappa.render());
        kv("mesh.global", self.mesh.global.to_string());
        kv("mesh.band_levels", self.mesh.band_levels.to_string());
        kv(
            "mesh.boxes",
            if self.mesh.boxes.is_empty() {
                "none".into()
            } else {
                self.mesh
                    .boxes
                    .iter()
                    .map(|b| format!("{:?}, {:?}, {:?}, {:?}, {}", b.x0, b.y0, b.x1, b.y1, b.levels))
                    .collect::<Vec<_>>()
                    .join("; ")
            },
        );
        kv(
            "mesh.slit",
            self.slit
                .map_or("none".into(), |sl| format!("{:?}, {:?}, {:?}", sl.y, sl.x_tip, sl.x_end)),
        );
        kv(
            "crack.band",
            self.crack.map_or("none".into(), |c| {
                format!("{:?}, {:?}, {:?}, {}", c.x0, c.x1, c.y, c.half_width.render())
            }),
        );
        let me = &self.mechanics;
        kv("mechanics.l_u", format!("{:?}", me.l_u));
        kv("mechanics.newton_tol", format!("{:?}", me.newton_tol));
        kv("mechanics.max_newton", me.max_newton.to_string());
        kv("mechanics.max_backtracks", me.max_backtracks.to_string());
        kv("mechanics.warm_start", me.warm_start_linear.to_string());
        kv("mechanics.quad_order", me.quad_order.to_string());
        let pf = &self.phasefield;
        kv("phasefield.l_phi", format!("{:?}", pf.l_phi));
        kv("phasefield.gamma", format!("{:?}", pf.gamma));
        kv("phasefield.newton_tol", format!("{:?}", pf.newton_tol));
        kv("phasefield.max_newton", pf.max_newton.to_string());
        kv("phasefield.max_backtracks", pf.max_backtracks.to_string());
        let c = &self.coupling;
        kv("coupling.tol", format!("{:?}", c.tol));
        kv("coupling.max_stagger", c.max_stagger.to_string());
        kv("coupling.dt", format!("{:?}", c.dt));
        kv("coupling.n_steps", c.n_steps.to_string());
        kv("coupling.load_rate", format!("{:?}", c.load_rate));
        kv("coupling.phase_field", c.phase_field.to_string());
        let o = &self.output;
        kv("output.line_from", format!("{:?}, {:?}", o.line_from[0], o.line_from[1]));
        kv("output.line_to", format!("{:?}, {:?}", o.line_to[0], o.line_to[1]));
        kv("output.quantities", join(&o.quantities, |q| q.name().to_string()));
        let steps = |v: &[usize]| if v.is_empty() { "none".to_string() } else { join(v, |k| k.to_string()) };
        kv("output.sample_steps", steps(&o.sample_steps));
        kv("output.vtk_steps", steps(&o.vtk_steps));
        kv("output.newton_log", o.newton_log.to_string());
        s
    }

    pub fn model(&self) -> Model {
        self.mechanics.model
    }
}
