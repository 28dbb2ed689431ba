//! Derivative-free maximisation of the steady-state nuclear polarisation
//! over a bounded subset of spin-system parameters.
//!
//! The objective is `max(-min P, max P)` with `P` the rotating-frame nuclear
//! polarisation over a grid of microwave offsets. The optimiser evaluates the
//! base system, a seeded Latin-hypercube batch, then refines the best point
//! with Nelder-Mead in the unit cube of the bounds.

use std::fmt;

use log::debug;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::steady::FieldContext;
use crate::sweeps::sci;
use crate::system::SpinSystem;

/// A scalar field of [`SpinSystem`] that the search may vary. Values are in
/// the unit given by [`Parameter::name`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameter {
    /// Principal value `axis` of the g-tensor of electron `electron`.
    GEig { electron: usize, axis: usize },
    /// Euler angle `angle` of the g-tensor of electron `electron`, rad.
    GEuler { electron: usize, angle: usize },
    /// Coordinate of electron `electron`, angstrom.
    ElectronCoord { electron: usize, axis: usize },
    /// Principal value of the nuclear shielding, ppm.
    ShiftEig { axis: usize },
    /// Exchange coupling, MHz.
    Exchange,
    /// Rotational correlation time, ps.
    TauC,
}

const XYZ: [char; 3] = ['x', 'y', 'z'];

impl Parameter {
    /// Name with unit suffix, e.g. `g1_eig2`, `e2_x_angstrom`, `exchange_J_MHz`.
    pub fn name(&self) -> String {
        match *self {
            Parameter::GEig { electron, axis } => format!("g{}_eig{}", electron + 1, axis + 1),
            Parameter::GEuler { electron, angle } => {
                format!("g{}_euler{}_rad", electron + 1, angle + 1)
            }
            Parameter::ElectronCoord { electron, axis } => {
                format!("e{}_{}_angstrom", electron + 1, XYZ[axis])
            }
            Parameter::ShiftEig { axis } => format!("shift_eig{}_ppm", axis + 1),
            Parameter::Exchange => "exchange_J_MHz".into(),
            Parameter::TauC => "tau_c_ps".into(),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown search parameter '{name}'"));
        let index = |s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(k @ 1..=3) => Ok(k - 1),
                _ => Err(bad()),
            }
        };
        let electron = |s: &str| -> Result<usize> {
            match s {
                "1" => Ok(0),
                "2" => Ok(1),
                _ => Err(bad()),
            }
        };
        match name {
            "exchange_J_MHz" => return Ok(Parameter::Exchange),
            "tau_c_ps" => return Ok(Parameter::TauC),
            _ => {}
        }
        if let Some(rest) = name
            .strip_prefix("shift_eig")
            .and_then(|r| r.strip_suffix("_ppm"))
        {
            return Ok(Parameter::ShiftEig { axis: index(rest)? });
        }
        if let Some(rest) = name.strip_prefix('g') {
            let (e, tail) = rest.split_at(rest.len().min(1));
            if let Some(k) = tail.strip_prefix("_eig") {
                return Ok(Parameter::GEig {
                    electron: electron(e)?,
                    axis: index(k)?,
                });
            }
            if let Some(k) = tail
                .strip_prefix("_euler")
                .and_then(|t| t.strip_suffix("_rad"))
            {
                return Ok(Parameter::GEuler {
                    electron: electron(e)?,
                    angle: index(k)?,
                });
            }
        }
        if let Some(rest) = name
            .strip_prefix('e')
            .and_then(|r| r.strip_suffix("_angstrom"))
        {
            if let Some((e, axis)) = rest.split_once('_') {
                let axis = XYZ
                    .iter()
                    .position(|c| axis.len() == 1 && axis.starts_with(*c))
                    .ok_or_else(bad)?;
                return Ok(Parameter::ElectronCoord {
                    electron: electron(e)?,
                    axis,
                });
            }
        }
        Err(bad())
    }

    fn electron(&self) -> Option<usize> {
        match *self {
            Parameter::GEig { electron, .. }
            | Parameter::GEuler { electron, .. }
            | Parameter::ElectronCoord { electron, .. } => Some(electron),
            _ => None,
        }
    }

    pub fn get(&self, sys: &SpinSystem) -> f64 {
        match *self {
            Parameter::GEig { electron, axis } => sys.electrons[electron].g_eigs[axis],
            Parameter::GEuler { electron, angle } => sys.electrons[electron].g_euler[angle],
            Parameter::ElectronCoord { electron, axis } => sys.electrons[electron].coords[axis],
            Parameter::ShiftEig { axis } => sys.shift_eigs_ppm[axis],
            Parameter::Exchange => sys.exchange_hz * 1e-6,
            Parameter::TauC => sys.tau_c * 1e12,
        }
    }

    pub fn set(&self, sys: &mut SpinSystem, value: f64) {
        match *self {
            Parameter::GEig { electron, axis } => sys.electrons[electron].g_eigs[axis] = value,
            Parameter::GEuler { electron, angle } => sys.electrons[electron].g_euler[angle] = value,
            Parameter::ElectronCoord { electron, axis } => {
                sys.electrons[electron].coords[axis] = value
            }
            Parameter::ShiftEig { axis } => sys.shift_eigs_ppm[axis] = value,
            Parameter::Exchange => sys.exchange_hz = value * 1e6,
            Parameter::TauC => sys.tau_c = value * 1e-12,
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub parameter: Parameter,
    pub lower: f64,
    pub upper: f64,
}

/// Bounded parameters over a base system. A point of the search space is a
/// vector with one value per bound, in the parameters' display units.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub base: SpinSystem,
    pub bounds: Vec<Bound>,
}

impl SearchSpace {
    pub fn new(base: SpinSystem, bounds: Vec<Bound>) -> Result<Self> {
        base.validate()?;
        for (i, b) in bounds.iter().enumerate() {
            if b.parameter
                .electron()
                .is_some_and(|e| e >= base.n_electrons())
            {
                return Err(Error::InvalidArgument(format!(
                    "{} refers to a missing electron",
                    b.parameter
                )));
            }
            if !(b.lower < b.upper) || !b.lower.is_finite() || !b.upper.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "bound on {} must satisfy lower < upper",
                    b.parameter
                )));
            }
            if bounds[..i].iter().any(|o| o.parameter == b.parameter) {
                return Err(Error::InvalidArgument(format!(
                    "parameter {} bounded twice",
                    b.parameter
                )));
            }
            let v = b.parameter.get(&base);
            if v < b.lower || v > b.upper {
                return Err(Error::InvalidArgument(format!(
                    "base value {v} of {} lies outside [{}, {}]",
                    b.parameter, b.lower, b.upper
                )));
            }
        }
        Ok(Self { base, bounds })
    }

    /// Bounds of `half_width` around the base value of each parameter.
    pub fn around(base: SpinSystem, parameters: &[(Parameter, f64)]) -> Result<Self> {
        if let Some((p, _)) = parameters
            .iter()
            .find(|(p, _)| p.electron().is_some_and(|e| e >= base.n_electrons()))
        {
            return Err(Error::InvalidArgument(format!(
                "{p} refers to a missing electron"
            )));
        }
        let bounds = parameters
            .iter()
            .map(|&(parameter, half_width)| {
                let v = parameter.get(&base);
                Bound {
                    parameter,
                    lower: v - half_width,
                    upper: v + half_width,
                }
            })
            .collect();
        Self::new(base, bounds)
    }

    /// Electron coordinates within 0.5 angstrom, principal g values within
    /// 5e-4 and the exchange coupling within 2 MHz of the base system.
    pub fn default_for(base: SpinSystem) -> Result<Self> {
        let mut parameters = Vec::new();
        for electron in 0..base.n_electrons() {
            for axis in 0..3 {
                parameters.push((Parameter::ElectronCoord { electron, axis }, 0.5));
                parameters.push((Parameter::GEig { electron, axis }, 5e-4));
            }
        }
        let mut space = Self::around(base, &parameters)?;
        if space.base.n_electrons() == 2 {
            let j = space.base.exchange_hz * 1e-6;
            space.bounds.push(Bound {
                parameter: Parameter::Exchange,
                lower: (j - 2.0).max(0.0),
                upper: j + 2.0,
            });
        }
        Ok(space)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn base_point(&self) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|b| b.parameter.get(&self.base))
            .collect()
    }

    /// System for a point, which must lie within the bounds.
    pub fn system(&self, x: &[f64]) -> Result<SpinSystem> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut sys = self.base.clone();
        for (b, &v) in self.bounds.iter().zip(x) {
            if !(v >= b.lower && v <= b.upper) {
                return Err(Error::InvalidArgument(format!(
                    "{} = {v} outside [{}, {}]",
                    b.parameter, b.lower, b.upper
                )));
            }
            b.parameter.set(&mut sys, v);
        }
        sys.validate()?;
        Ok(sys)
    }

    fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(u)
            .map(|(b, &t)| b.lower + t.clamp(0.0, 1.0) * (b.upper - b.lower))
            .collect()
    }

    fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(x)
            .map(|(b, &v)| (v - b.lower) / (b.upper - b.lower))
            .collect()
    }
}

/// Microwave offsets and field at which the objective is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGrid {
    pub b0: f64,
    pub offsets_hz: Vec<f64>,
}

impl ObjectiveGrid {
    /// 161 offsets in 0.5 MHz steps across +-40 MHz.
    pub fn default_at(b0: f64) -> Self {
        Self {
            b0,
            offsets_hz: (0..161).map(|i| -40e6 + 0.5e6 * i as f64).collect(),
        }
    }
}

/// `max(-min P, max P)` over the offset grid, with `P` the signed steady-state
/// nuclear polarisation. Offsets whose solve fails are skipped.
pub fn objective(sys: &SpinSystem, grid: &ObjectiveGrid) -> Result<f64> {
    if grid.offsets_hz.is_empty() {
        return Err(Error::InvalidArgument(
            "objective needs at least one offset".into(),
        ));
    }
    let ctx = FieldContext::new(sys, grid.b0)?;
    let mut values = Vec::with_capacity(grid.offsets_hz.len());
    let mut last_error = None;
    for &offset in &grid.offsets_hz {
        match ctx.rotating(offset) {
            Ok(state) => values.push(state.nuclear_polarization()),
            Err(e) => {
                debug!("objective: offset {offset} Hz skipped: {e}");
                last_error = Some(e);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::AllEvaluationsFailed(
            last_error.map(|e| e.to_string()).unwrap_or_default(),
        ));
    }
    Ok(objective_from_values(&values))
}

/// The max/-min combination applied to a polarisation profile.
pub fn objective_from_values(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max.max(-min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Base,
    Sample,
    Refine,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Base => "base",
            Stage::Sample => "sample",
            Stage::Refine => "refine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub stage: Stage,
    pub x: Vec<f64>,
    /// `None` when the evaluation failed.
    pub objective: Option<f64>,
    /// Best objective so far, including this evaluation.
    pub incumbent: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_x: Vec<f64>,
    pub best_objective: f64,
    pub best_system: SpinSystem,
    pub log: Vec<Evaluation>,
    pub parameter_names: Vec<String>,
}

impl SearchResult {
    /// Evaluation log as CSV, one row per objective evaluation.
    pub fn log_csv(&self) -> String {
        let mut out = format!(
            "evaluation,stage,{},objective,incumbent\n",
            self.parameter_names.join(",")
        );
        for (i, e) in self.log.iter().enumerate() {
            let mut row = vec![i.to_string(), e.stage.name().to_string()];
            row.extend(e.x.iter().map(|&v| sci(v)));
            row.push(e.objective.map(sci).unwrap_or_else(|| "nan".into()));
            row.push(sci(e.incumbent));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Total number of objective evaluations.
    pub budget: usize,
    pub seed: u64,
    /// Fraction of the budget after the base point spent on sampling.
    pub sample_fraction: f64,
    /// Initial Nelder-Mead step in unit-cube coordinates.
    pub initial_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: 50,
            seed: 0,
            sample_fraction: 0.5,
            initial_step: 0.1,
        }
    }
}

struct Recorder<'a> {
    space: &'a SearchSpace,
    grid: &'a ObjectiveGrid,
    log: Vec<Evaluation>,
    best: (f64, Vec<f64>),
    budget: usize,
}

impl Recorder<'_> {
    fn remaining(&self) -> usize {
        self.budget - self.log.len()
    }

    fn evaluate_point(&self, x: &[f64]) -> Option<f64> {
        match self.space.system(x).and_then(|s| objective(&s, self.grid)) {
            Ok(v) => Some(v),
            Err(e) => {
                debug!("evaluation failed: {e}");
                None
            }
        }
    }

    fn record(&mut self, stage: Stage, x: Vec<f64>, objective: Option<f64>) -> f64 {
        if let Some(v) = objective {
            if v > self.best.0 {
                self.best = (v, x.clone());
            }
        }
        self.log.push(Evaluation {
            stage,
            x,
            objective,
            incumbent: self.best.0,
        });
        objective.unwrap_or(f64::NEG_INFINITY)
    }

    /// Evaluates a batch in parallel and records it in input order.
    fn batch(&mut self, stage: Stage, points: Vec<Vec<f64>>) -> Vec<f64> {
        let values: Vec<Option<f64>> = points.par_iter().map(|x| self.evaluate_point(x)).collect();
        points
            .into_iter()
            .zip(values)
            .map(|(x, v)| self.record(stage, x, v))
            .collect()
    }

    fn single(&mut self, stage: Stage, x: Vec<f64>) -> f64 {
        let v = self.evaluate_point(&x);
        self.record(stage, x, v)
    }
}

fn latin_hypercube(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (point, &s) in points.iter_mut().zip(&strata) {
            point[d] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

/// Maximises [`objective`] over `space` within `options.budget` evaluations.
/// The base system is always evaluated first, so the result is never worse
/// than the base.
pub fn search(
    space: &SearchSpace,
    grid: &ObjectiveGrid,
    options: &SearchOptions,
) -> Result<SearchResult> {
    if options.budget == 0 {
        return Err(Error::InvalidArgument(
            "search budget must be at least 1".into(),
        ));
    }
    let mut rec = Recorder {
        space,
        grid,
        log: Vec::new(),
        best: (f64::NEG_INFINITY, space.base_point()),
        budget: options.budget,
    };
    rec.single(Stage::Base, space.base_point());

    let dim = space.dim();
    if dim > 0 && rec.remaining() > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let n_samples = ((rec.remaining() as f64 * options.sample_fraction).round() as usize)
            .clamp(1, rec.remaining());
        let samples = latin_hypercube(&mut rng, n_samples, dim)
            .iter()
            .map(|u| space.from_unit(u))
            .collect();
        rec.batch(Stage::Sample, samples);
        nelder_mead(&mut rec, options.initial_step);
    }

    if !rec.best.0.is_finite() {
        return Err(Error::AllEvaluationsFailed(
            "no parameter vector could be evaluated".into(),
        ));
    }
    let (best_objective, best_x) = rec.best.clone();
    Ok(SearchResult {
        best_system: space.system(&best_x)?,
        best_x,
        best_objective,
        parameter_names: space.bounds.iter().map(|b| b.parameter.name()).collect(),
        log: rec.log,
    })
}

/// Nelder-Mead on `-objective` in unit-cube coordinates, started from the
/// incumbent. Points are clamped to the cube.
fn nelder_mead(rec: &mut Recorder, step: f64) {
    let space = rec.space;
    let dim = space.dim();
    let start = space.to_unit(&rec.best.1);
    let start_value = -rec.best.0;
    let mut simplex = vec![(start_value, start.clone())];
    let vertices: Vec<Vec<f64>> = (0..dim)
        .map(|d| {
            let mut v = start.clone();
            v[d] = if v[d] + step <= 1.0 {
                v[d] + step
            } else {
                v[d] - step
            };
            v
        })
        .collect();
    let take = vertices.len().min(rec.remaining());
    let values = rec.batch(
        Stage::Refine,
        vertices[..take]
            .iter()
            .map(|u| space.from_unit(u))
            .collect(),
    );
    if take < dim {
        return;
    }
    simplex.extend(values.into_iter().map(|v| -v).zip(vertices));

    let clamp = |u: Vec<f64>| u.into_iter().map(|t| t.clamp(0.0, 1.0)).collect::<Vec<_>>();
    let eval = |rec: &mut Recorder, u: &[f64]| -rec.single(Stage::Refine, space.from_unit(u));
    while rec.remaining() > 0 {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spread = simplex
            .iter()
            .flat_map(|(_, u)| u.iter().zip(&simplex[0].1).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread < 1e-9 {
            break;
        }
        let worst = simplex[dim].clone();
        let centroid: Vec<f64> = (0..dim)
            .map(|d| simplex[..dim].iter().map(|(_, u)| u[d]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| {
            clamp(
                centroid
                    .iter()
                    .zip(&worst.1)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };

        let reflected = along(1.0);
        let fr = eval(rec, &reflected);
        if fr < simplex[0].0 {
            if rec.remaining() == 0 {
                simplex[dim] = (fr, reflected);
                break;
            }
            let expanded = along(2.0);
            let fe = eval(rec, &expanded);
            simplex[dim] = if fe < fr {
                (fe, expanded)
            } else {
                (fr, reflected)
            };
        } else if fr < simplex[dim - 1].0 {
            simplex[dim] = (fr, reflected);
        } else {
            if rec.remaining() == 0 {
                break;
            }
            let (contracted, fc) = if fr < worst.0 {
                let u = along(0.5);
                let f = eval(rec, &u);
                (u, f)
            } else {
                let u = along(-0.5);
                let f = eval(rec, &u);
                (u, f)
            };
            if fc < worst.0.min(fr) {
                simplex[dim] = (fc, contracted);
            } else {
                let best = simplex[0].1.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    if rec.remaining() == 0 {
                        return;
                    }
                    let u: Vec<f64> = best
                        .iter()
                        .zip(&vertex.1)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    *vertex = (eval(rec, &u), u);
                }
            }
        }
    }
}
