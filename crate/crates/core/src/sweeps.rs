//! Parameter sweeps over field, microwave offset and correlation time,
//! ablation switches, and CSV/SVG output of the resulting grids.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relaxation::zero_coherence_part;
use crate::spin::{frobenius_norm, trace, ProductOperator};
use crate::steady::{FieldContext, Frame, LabSolverOptions, SteadyState};
use crate::system::SpinSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Static field, tesla.
    B0,
    /// Microwave offset from electron 1, Hz.
    MwOffset,
    /// Rotational correlation time, s.
    TauC,
}

impl SweepAxis {
    /// Column label with the unit used in CSV files.
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::B0 => "B0_tesla",
            SweepAxis::MwOffset => "mw_offset_MHz",
            SweepAxis::TauC => "tau_c_ps",
        }
    }

    /// Converts an SI value into the unit of [`SweepAxis::label`].
    pub fn display_value(self, value: f64) -> f64 {
        match self {
            SweepAxis::B0 => value,
            SweepAxis::MwOffset => value * 1e-6,
            SweepAxis::TauC => value * 1e12,
        }
    }
}

/// Grid along one axis in SI units, linearly or logarithmically spaced.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisRange {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

impl AxisRange {
    pub fn linear(axis: SweepAxis, start: f64, stop: f64, points: usize) -> Self {
        Self {
            axis,
            start,
            stop,
            points,
            log: false,
        }
    }

    pub fn logarithmic(axis: SweepAxis, start: f64, stop: f64, points: usize) -> Self {
        Self {
            axis,
            start,
            stop,
            points,
            log: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidArgument(format!(
                "{} axis needs at least 2 points",
                self.axis.label()
            )));
        }
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{} range must be strictly increasing, got {} .. {}",
                self.axis.label(),
                self.start,
                self.stop
            )));
        }
        if self.log && self.start <= 0.0 {
            return Err(Error::InvalidArgument(
                "logarithmic axis must start above zero".into(),
            ));
        }
        let positive = matches!(self.axis, SweepAxis::B0 | SweepAxis::TauC);
        if positive && self.start <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "{} values must be positive",
                self.axis.label()
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                if self.log {
                    (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + t * (self.stop - self.start)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    None,
    /// Divide by the thermal nuclear polarisation at the grid point's field.
    ThermalNuclear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis1: AxisRange,
    pub axis2: AxisRange,
    /// Product operators to record; `Nz` is reported as the signed polarisation.
    pub observables: Vec<String>,
    pub normalization: Normalization,
    pub frame: Frame,
    /// Field used when neither axis is [`SweepAxis::B0`], tesla.
    pub b0: f64,
    /// Offset used when neither axis is [`SweepAxis::MwOffset`], Hz.
    pub mw_offset_hz: f64,
}

/// Offset window used by the default field/offset and correlation-time maps, Hz.
pub const DEFAULT_OFFSET_WINDOW_HZ: f64 = 40e6;
/// Points per axis of the desk-scale default maps.
pub const DEFAULT_POINTS: usize = 21;

impl SweepSpec {
    /// Enhancement map over field (1 to 28 T) and offset.
    pub fn field_offset(points: usize) -> Self {
        Self {
            axis1: AxisRange::linear(SweepAxis::B0, 1.0, 28.0, points),
            axis2: AxisRange::linear(
                SweepAxis::MwOffset,
                -DEFAULT_OFFSET_WINDOW_HZ,
                DEFAULT_OFFSET_WINDOW_HZ,
                points,
            ),
            observables: vec!["Nz".into()],
            normalization: Normalization::ThermalNuclear,
            frame: Frame::Rotating,
            b0: 14.1,
            mw_offset_hz: 0.0,
        }
    }

    /// Enhancement map over correlation time (10 ps to 1 ns) and offset at 14.1 T.
    pub fn tau_offset(points: usize) -> Self {
        Self {
            axis1: AxisRange::logarithmic(SweepAxis::TauC, 10e-12, 1e-9, points),
            axis2: AxisRange::linear(
                SweepAxis::MwOffset,
                -DEFAULT_OFFSET_WINDOW_HZ,
                DEFAULT_OFFSET_WINDOW_HZ,
                points,
            ),
            observables: vec!["Nz".into()],
            normalization: Normalization::ThermalNuclear,
            frame: Frame::Rotating,
            b0: 14.1,
            mw_offset_hz: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.axis1.axis == self.axis2.axis {
            return Err(Error::InvalidArgument("sweep axes must differ".into()));
        }
        if self.observables.is_empty() {
            return Err(Error::InvalidArgument(
                "sweep needs at least one observable".into(),
            ));
        }
        if !(self.b0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "magnetic field must be positive, got {}",
                self.b0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AblationSwitch {
    ZeroG1Anisotropy,
    ZeroG2Anisotropy,
    #[serde(rename = "ZeroCSA")]
    ZeroCsa,
    ZeroExchange,
    #[serde(rename = "ZeroIsotropicHF")]
    ZeroIsotropicHf,
    RemoveElectron2,
}

impl AblationSwitch {
    pub const ALL: [AblationSwitch; 6] = [
        AblationSwitch::ZeroG1Anisotropy,
        AblationSwitch::ZeroG2Anisotropy,
        AblationSwitch::ZeroCsa,
        AblationSwitch::ZeroExchange,
        AblationSwitch::ZeroIsotropicHf,
        AblationSwitch::RemoveElectron2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationSwitch::ZeroG1Anisotropy => "ZeroG1Anisotropy",
            AblationSwitch::ZeroG2Anisotropy => "ZeroG2Anisotropy",
            AblationSwitch::ZeroCsa => "ZeroCSA",
            AblationSwitch::ZeroExchange => "ZeroExchange",
            AblationSwitch::ZeroIsotropicHf => "ZeroIsotropicHF",
            AblationSwitch::RemoveElectron2 => "RemoveElectron2",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ablation switch '{name}'")))
    }
}

/// Set of simplifications applied to a system before solving.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ablation {
    pub switches: BTreeSet<AblationSwitch>,
}

impl Ablation {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(switch: AblationSwitch) -> Self {
        Self {
            switches: [switch].into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.switches.is_empty()
    }

    pub fn label(&self) -> String {
        if self.switches.is_empty() {
            "baseline".into()
        } else {
            self.switches
                .iter()
                .map(|s| s.name())
                .collect::<Vec<_>>()
                .join("+")
        }
    }
}

fn mean3(v: [f64; 3]) -> [f64; 3] {
    let m = (v[0] + v[1] + v[2]) / 3.0;
    [m; 3]
}

/// Applies the switches of `ablation` to a copy of `sys`. Electron-2 switches
/// on a system that has no second electron are rejected, so a repeated
/// `RemoveElectron2` is an error rather than a no-op.
pub fn apply_ablation(sys: &SpinSystem, ablation: &Ablation) -> Result<SpinSystem> {
    let mut out = sys.clone();
    for &switch in &ablation.switches {
        match switch {
            AblationSwitch::ZeroG1Anisotropy => {
                out.electrons[0].g_eigs = mean3(out.electrons[0].g_eigs)
            }
            AblationSwitch::ZeroG2Anisotropy | AblationSwitch::RemoveElectron2
                if sys.n_electrons() < 2 =>
            {
                return Err(Error::InvalidArgument(format!(
                    "{} needs a two-electron system",
                    switch.name()
                )));
            }
            AblationSwitch::ZeroG2Anisotropy => {
                out.electrons[1].g_eigs = mean3(out.electrons[1].g_eigs)
            }
            AblationSwitch::ZeroCsa => out.shift_eigs_ppm = mean3(out.shift_eigs_ppm),
            AblationSwitch::ZeroExchange => out.exchange_hz = 0.0,
            AblationSwitch::ZeroIsotropicHf => out
                .electrons
                .iter_mut()
                .for_each(|e| e.iso_hyperfine_hz = 0.0),
            // applied last: the set is ordered so this follows ZeroG2Anisotropy
            AblationSwitch::RemoveElectron2 => {
                out.electrons.truncate(1);
                out.exchange_hz = 0.0;
            }
        }
    }
    out.validate()?;
    Ok(out)
}

/// Value of `op` in a steady state. Operators free of electron coherence are
/// projected with their sign (`Nz` gives the polarisation `2 <Nz>`); coherent
/// ones are reported as amplitudes.
pub fn observable_value(
    state: &SteadyState,
    op: &ProductOperator,
    n_electrons: usize,
) -> Result<f64> {
    let n = state.n_spins();
    let o = op.operator(n)?;
    let coherent = frobenius_norm(&(&o - zero_coherence_part(&o, n, n_electrons))) > 0.0;
    if coherent {
        return state.amplitude(op);
    }
    let norm = frobenius_norm(&o);
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((o.nrows() as f64).sqrt() * trace(&(&state.rho * &o)).re / norm)
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    pub values1: Vec<f64>,
    pub values2: Vec<f64>,
    pub observables: Vec<String>,
    /// Row-major over `(values1, values2)`; one entry per observable, or the
    /// error message of a failed solve.
    pub grid: Vec<std::result::Result<Vec<f64>, String>>,
}

impl SweepResult {
    pub fn get(&self, i: usize, j: usize) -> &std::result::Result<Vec<f64>, String> {
        &self.grid[i * self.values2.len() + j]
    }

    pub fn failures(&self) -> usize {
        self.grid.iter().filter(|p| p.is_err()).count()
    }

    fn observable_index(&self, name: &str) -> Result<usize> {
        self.observables
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| Error::InvalidArgument(format!("observable '{name}' not in sweep")))
    }

    /// Values of one observable with their axis coordinates, skipping failed points.
    pub fn points(&self, name: &str) -> Result<Vec<(f64, f64, f64)>> {
        let k = self.observable_index(name)?;
        let mut out = Vec::new();
        for (i, &x) in self.values1.iter().enumerate() {
            for (j, &y) in self.values2.iter().enumerate() {
                if let Ok(v) = self.get(i, j) {
                    out.push((x, y, v[k]));
                }
            }
        }
        Ok(out)
    }

    /// Largest `|value - reference|` of an observable over points accepted by `keep`.
    pub fn max_deviation(
        &self,
        name: &str,
        reference: f64,
        keep: impl Fn(f64, f64) -> bool,
    ) -> Result<f64> {
        Ok(self
            .points(name)?
            .into_iter()
            .filter(|&(x, y, _)| keep(x, y))
            .map(|(_, _, v)| (v - reference).abs())
            .fold(0.0, f64::max))
    }

    /// CSV with one row per grid point, axes in display units and values in
    /// 9-significant-digit scientific notation. Failed points read `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header = vec![
            self.axis1.label().to_string(),
            self.axis2.label().to_string(),
        ];
        header.extend(self.observables.iter().cloned());
        out.push_str(&header.join(","));
        out.push('\n');
        for (i, &x) in self.values1.iter().enumerate() {
            for (j, &y) in self.values2.iter().enumerate() {
                let mut row = vec![
                    sci(self.axis1.display_value(x)),
                    sci(self.axis2.display_value(y)),
                ];
                match self.get(i, j) {
                    Ok(v) => row.extend(v.iter().map(|&x| sci(x))),
                    Err(_) => row.extend(self.observables.iter().map(|_| "nan".to_string())),
                }
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        out
    }

    /// Self-contained SVG heatmap of one observable with a linear colour
    /// scale; `axis1` runs vertically and `axis2` horizontally.
    pub fn to_svg(&self, name: &str, title: &str) -> Result<String> {
        let k = self.observable_index(name)?;
        let (rows, cols) = (self.values1.len(), self.values2.len());
        let finite: Vec<f64> = self
            .grid
            .iter()
            .filter_map(|p| p.as_ref().ok().map(|v| v[k]))
            .collect();
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (cell, left, top) = (16.0, 90.0, 40.0);
        let (w, h) = (cols as f64 * cell, rows as f64 * cell);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
            left + w + 110.0,
            top + h + 60.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" font-size="13">{}</text>"#,
            left,
            escape(title)
        );
        for i in 0..rows {
            for j in 0..cols {
                let fill = match self.get(i, j) {
                    Ok(v) => colour(normalise(v[k], lo, hi)),
                    Err(_) => "#808080".to_string(),
                };
                // first axis value at the bottom
                let y = top + (rows - 1 - i) as f64 * cell;
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{:.1}" width="{cell}" height="{cell}" fill="{fill}"/>"#,
                    left + j as f64 * cell,
                    y
                );
            }
        }
        let (x_axis, y_axis) = (self.axis2, self.axis1);
        let tick = |axis: SweepAxis, v: f64| format!("{:.4}", axis.display_value(v));
        let _ = writeln!(
            s,
            r#"<text x="{left}" y="{}">{}</text>"#,
            top + h + 15.0,
            tick(x_axis, self.values2[0])
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left + w,
            top + h + 15.0,
            tick(x_axis, self.values2[cols - 1])
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            left + w / 2.0,
            top + h + 35.0,
            x_axis.label()
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 5.0,
            top + h,
            tick(y_axis, self.values1[0])
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 5.0,
            top + 10.0,
            tick(y_axis, self.values1[rows - 1])
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">{}</text>"#,
            top + h / 2.0,
            top + h / 2.0,
            y_axis.label()
        );
        let bar_x = left + w + 20.0;
        for b in 0..50 {
            let t = 1.0 - b as f64 / 49.0;
            let _ = writeln!(
                s,
                r#"<rect x="{bar_x}" y="{:.2}" width="15" height="{:.2}" fill="{}"/>"#,
                top + b as f64 * h / 50.0,
                h / 50.0 + 0.5,
                colour(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            bar_x + 20.0,
            top + 10.0,
            sci(hi)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            bar_x + 20.0,
            top + h,
            sci(lo)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            bar_x,
            top + h + 35.0,
            escape(name)
        );
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn normalise(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

/// Linear blue-white-red ramp for `t` in `[0, 1]`.
fn colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (u, u, 1.0)
    } else {
        let u = (1.0 - t) / 0.5;
        (1.0, u, u)
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8
    )
}

/// Scientific notation with 9 significant digits and a signed two-digit
/// exponent, e.g. `-6.20000000e-01`.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}").to_lowercase();
    }
    let s = format!("{x:.8e}");
    let (mantissa, exponent) = s.split_once('e').expect("exponent present");
    let e: i32 = exponent.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn solve_point(ctx: &FieldContext, offset_hz: f64, frame: Frame) -> Result<SteadyState> {
    match frame {
        Frame::Rotating => ctx.rotating(offset_hz),
        Frame::Laboratory => ctx.laboratory(offset_hz, &LabSolverOptions::default()),
    }
}

fn evaluate(
    ctx: &FieldContext,
    offset_hz: f64,
    spec: &SweepSpec,
    ops: &[ProductOperator],
) -> std::result::Result<Vec<f64>, String> {
    let state = solve_point(ctx, offset_hz, spec.frame).map_err(|e| e.to_string())?;
    let scale = match spec.normalization {
        Normalization::None => 1.0,
        Normalization::ThermalNuclear => ctx.thermal_nuclear_polarization(),
    };
    ops.iter()
        .map(|op| observable_value(&state, op, ctx.sys.n_electrons()).map(|v| v / scale))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.to_string())
}

/// Solves every grid point of `spec` for the ablated system. Points run in
/// parallel; the result order is fixed by the grid, and a failed solve is
/// recorded at its point without stopping the sweep.
pub fn run_sweep(sys: &SpinSystem, spec: &SweepSpec, ablation: &Ablation) -> Result<SweepResult> {
    spec.validate()?;
    let sys = apply_ablation(sys, ablation)?;
    let ops = spec
        .observables
        .iter()
        .map(|name| ProductOperator::parse(name, sys.n_electrons()))
        .collect::<Result<Vec<_>>>()?;
    let (values1, values2) = (spec.axis1.values(), spec.axis2.values());
    let coordinates = |x: f64, y: f64| {
        let (mut b0, mut offset, mut tau) = (spec.b0, spec.mw_offset_hz, sys.tau_c);
        for (axis, v) in [(spec.axis1.axis, x), (spec.axis2.axis, y)] {
            match axis {
                SweepAxis::B0 => b0 = v,
                SweepAxis::MwOffset => offset = v,
                SweepAxis::TauC => tau = v,
            }
        }
        (b0, offset, tau)
    };

    // one relaxation superoperator per (field, correlation time); the
    // offset axis, when present, reuses it
    let offset_is_axis2 = spec.axis2.axis == SweepAxis::MwOffset;
    let offset_is_axis1 = spec.axis1.axis == SweepAxis::MwOffset;
    let keys: Vec<(usize, usize)> = if offset_is_axis2 {
        (0..values1.len()).map(|i| (i, 0)).collect()
    } else if offset_is_axis1 {
        (0..values2.len()).map(|j| (0, j)).collect()
    } else {
        (0..values1.len())
            .flat_map(|i| (0..values2.len()).map(move |j| (i, j)))
            .collect()
    };
    let contexts: Vec<std::result::Result<FieldContext, String>> = keys
        .par_iter()
        .map(|&(i, j)| {
            let (b0, _, tau) = coordinates(values1[i], values2[j]);
            let mut s = sys.clone();
            s.tau_c = tau;
            FieldContext::new(&s, b0).map_err(|e| e.to_string())
        })
        .collect();
    let context_for = |i: usize, j: usize| {
        let index = if offset_is_axis2 {
            i
        } else if offset_is_axis1 {
            j
        } else {
            i * values2.len() + j
        };
        &contexts[index]
    };

    let n2 = values2.len();
    let grid = (0..values1.len() * n2)
        .into_par_iter()
        .map(|p| {
            let (i, j) = (p / n2, p % n2);
            let (_, offset, _) = coordinates(values1[i], values2[j]);
            match context_for(i, j) {
                Ok(ctx) => evaluate(ctx, offset, spec, &ops),
                Err(e) => Err(e.clone()),
            }
        })
        .collect();
    Ok(SweepResult {
        axis1: spec.axis1.axis,
        axis2: spec.axis2.axis,
        values1,
        values2,
        observables: spec.observables.clone(),
        grid,
    })
}

/// Steady-state amplitudes of product operators as a function of correlation time.
#[derive(Debug, Clone)]
pub struct AmplitudeTrace {
    pub tau_c: Vec<f64>,
    pub operators: Vec<String>,
    /// `values[i][k]`: amplitude of operator `k` at `tau_c[i]`.
    pub values: Vec<std::result::Result<Vec<f64>, String>>,
}

impl AmplitudeTrace {
    pub fn to_csv(&self) -> String {
        let mut out = format!("tau_c_ps,{}\n", self.operators.join(","));
        for (tau, row) in self.tau_c.iter().zip(&self.values) {
            let mut cells = vec![sci(tau * 1e12)];
            match row {
                Ok(v) => cells.extend(v.iter().map(|&x| sci(x))),
                Err(_) => cells.extend(self.operators.iter().map(|_| "nan".to_string())),
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Rotating-frame amplitudes of `ops` at each correlation time in `tau_c`.
pub fn operator_amplitude_trace(
    sys: &SpinSystem,
    b0: f64,
    offset_hz: f64,
    tau_c: &[f64],
    ops: &[&str],
) -> Result<AmplitudeTrace> {
    let parsed = ops
        .iter()
        .map(|name| ProductOperator::parse(name, sys.n_electrons()))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = tau_c.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "correlation time must be positive, got {bad}"
        )));
    }
    let values = tau_c
        .par_iter()
        .map(|&tau| {
            let mut s = sys.clone();
            s.tau_c = tau;
            let state = FieldContext::new(&s, b0)
                .and_then(|ctx| ctx.rotating(offset_hz))
                .map_err(|e| e.to_string())?;
            parsed
                .iter()
                .map(|op| state.amplitude(op))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.to_string())
        })
        .collect();
    Ok(AmplitudeTrace {
        tau_c: tau_c.to_vec(),
        operators: ops.iter().map(|s| s.to_string()).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hamiltonian::static_hamiltonian;
    use crate::spin::{spin_vector, Operator};

    fn small(points: usize) -> SweepSpec {
        let mut spec = SweepSpec::field_offset(points);
        spec.axis1 = AxisRange::linear(SweepAxis::B0, 5.0, 14.1, points);
        spec
    }

    #[test]
    fn axis_values() {
        let lin = AxisRange::linear(SweepAxis::B0, 1.0, 3.0, 3).values();
        assert_eq!(lin, vec![1.0, 2.0, 3.0]);
        let log = AxisRange::logarithmic(SweepAxis::TauC, 1e-11, 1e-9, 3).values();
        assert!((log[1] - 1e-10).abs() < 1e-22);
        assert!(AxisRange::linear(SweepAxis::B0, 3.0, 1.0, 3)
            .validate()
            .is_err());
        assert!(AxisRange::linear(SweepAxis::B0, 1.0, 3.0, 1)
            .validate()
            .is_err());
    }

    #[test]
    fn sci_format() {
        assert_eq!(sci(-0.62), "-6.20000000e-01");
        assert_eq!(sci(7.5), "7.50000000e+00");
        assert_eq!(sci(4.83e-5), "4.83000000e-05");
        assert_eq!(sci(1.0e123), "1.00000000e+123");
        assert_eq!(sci(f64::NAN), "nan");
    }

    #[test]
    fn zero_g1_gives_mean() {
        let sys = apply_ablation(
            &fixtures::table1(),
            &Ablation::single(AblationSwitch::ZeroG1Anisotropy),
        )
        .unwrap();
        for g in sys.electrons[0].g_eigs {
            assert!((g - 2.0036666666666667).abs() < 1e-12);
        }
    }

    #[test]
    fn ablation_preserves_isotropic_zeeman() {
        let base = fixtures::table1();
        for switch in [
            AblationSwitch::ZeroG1Anisotropy,
            AblationSwitch::ZeroG2Anisotropy,
            AblationSwitch::ZeroCsa,
        ] {
            let ablated = apply_ablation(&base, &Ablation::single(switch)).unwrap();
            for k in 0..2 {
                let (a, b) = (
                    base.electron_zeeman_tensor(k).trace(),
                    ablated.electron_zeeman_tensor(k).trace(),
                );
                assert!((a - b).abs() <= 1e-14 * a.abs());
            }
            let (a, b) = (
                base.nuclear_zeeman_tensor().trace(),
                ablated.nuclear_zeeman_tensor().trace(),
            );
            assert!((a - b).abs() <= 1e-14 * a.abs());
        }
    }

    #[test]
    fn ablation_is_idempotent() {
        let base = fixtures::figure1();
        for switch in [
            AblationSwitch::ZeroG1Anisotropy,
            AblationSwitch::ZeroCsa,
            AblationSwitch::ZeroExchange,
            AblationSwitch::ZeroIsotropicHf,
        ] {
            let a = Ablation::single(switch);
            let once = apply_ablation(&base, &a).unwrap();
            assert_eq!(apply_ablation(&once, &a).unwrap(), once);
        }
        let all = Ablation {
            switches: AblationSwitch::ALL[..5].iter().copied().collect(),
        };
        let once = apply_ablation(&fixtures::table1(), &all).unwrap();
        assert_eq!(apply_ablation(&once, &all).unwrap(), once);
    }

    #[test]
    fn electron2_switches_need_two_electrons() {
        let one = fixtures::figure1();
        assert!(apply_ablation(&one, &Ablation::single(AblationSwitch::RemoveElectron2)).is_err());
        assert!(apply_ablation(&one, &Ablation::single(AblationSwitch::ZeroG2Anisotropy)).is_err());
        let removed = apply_ablation(
            &fixtures::table1(),
            &Ablation::single(AblationSwitch::RemoveElectron2),
        )
        .unwrap();
        assert_eq!(removed.n_electrons(), 1);
        assert_eq!(removed.electrons[0], fixtures::table1().electrons[0]);
    }

    #[test]
    fn zero_exchange_changes_only_the_exchange_term() {
        let base = fixtures::table1();
        let ablated =
            apply_ablation(&base, &Ablation::single(AblationSwitch::ZeroExchange)).unwrap();
        let diff =
            static_hamiltonian(&base, 14.1).unwrap() - static_hamiltonian(&ablated, 14.1).unwrap();
        let (s1, s2) = (spin_vector(3, 0).unwrap(), spin_vector(3, 1).unwrap());
        let dot: Operator = (0..3)
            .map(|a| &s1[a] * &s2[a])
            .fold(Operator::zeros(8, 8), |acc, t| acc + t);
        let expected = dot * crate::spin::c(base.exchange_angular());
        assert!(frobenius_norm(&(diff - &expected)) <= 1e-9 * frobenius_norm(&expected));
    }

    #[test]
    fn zero_drive_normalises_to_one() {
        let mut sys = fixtures::table1();
        sys.mw_nutation_hz = 0.0;
        let result = run_sweep(&sys, &small(3), &Ablation::none()).unwrap();
        assert_eq!(result.failures(), 0);
        for (_, _, v) in result.points("Nz").unwrap() {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn sweep_is_deterministic_and_keeps_mirror_points() {
        let spec = small(3);
        let a = run_sweep(&fixtures::table1(), &spec, &Ablation::none()).unwrap();
        let b = run_sweep(&fixtures::table1(), &spec, &Ablation::none()).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_csv().lines().count(), 1 + 9);
        assert!(a.to_csv().starts_with("B0_tesla,mw_offset_MHz,Nz\n"));
        // offsets -40 and +40 MHz are both solved and differ
        let (lo, hi) = (
            a.get(2, 0).as_ref().unwrap()[0],
            a.get(2, 2).as_ref().unwrap()[0],
        );
        assert!((lo - hi).abs() > 1e-3);
        let svg = a.to_svg("Nz", "table1").unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn failed_points_are_recorded() {
        let mut spec = small(2);
        spec.axis1 = AxisRange::linear(SweepAxis::B0, -1.0, 14.1, 2);
        // a non-positive field fails validation up front
        assert!(run_sweep(&fixtures::table1(), &spec, &Ablation::none()).is_err());
        let result = SweepResult {
            axis1: SweepAxis::B0,
            axis2: SweepAxis::MwOffset,
            values1: vec![10.0, 14.1],
            values2: vec![0.0],
            observables: vec!["Nz".into()],
            grid: vec![Ok(vec![2.0]), Err("singular".into())],
        };
        assert_eq!(result.failures(), 1);
        assert_eq!(result.points("Nz").unwrap(), vec![(10.0, 0.0, 2.0)]);
        assert!(result
            .to_csv()
            .ends_with("1.41000000e+01,0.00000000e+00,nan\n"));
        assert!(result.to_svg("Nz", "partial").unwrap().contains("#808080"));
    }

    #[test]
    fn trace_reaches_thermal_values_without_drive() {
        let mut sys = fixtures::table1();
        sys.mw_nutation_hz = 0.0;
        let taus = [30e-12, 100e-12, 300e-12];
        let trace = operator_amplitude_trace(&sys, 14.1, -0.62e6, &taus, &["Nz", "E+1"]).unwrap();
        let thermal = FieldContext::new(&sys, 14.1)
            .unwrap()
            .thermal_nuclear_polarization();
        for row in &trace.values {
            let v = row.as_ref().unwrap();
            assert!((v[0] - thermal).abs() < 1e-6 * thermal);
            assert!(v[1] < 1e-12);
        }
        assert_eq!(trace.to_csv().lines().next().unwrap(), "tau_c_ps,Nz,E+1");
    }
}
