//! TOML configuration with unit-suffixed keys.
//!
//! A document holds the values exactly as written, so that parse, serialize
//! and parse again gives an identical document. Conversion into SI units
//! happens in the `resolve_*` methods.
//!
//! ```toml
//! [system]
//! fixture = "table1"          # optional starting point
//! tau_c_ps = 50.0             # any field may override it
//!
//! [conditions]
//! B0_tesla = 14.1
//! mw_offset_MHz = -0.62
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::search::{Bound, ObjectiveGrid, Parameter, SearchOptions, SearchSpace};
use crate::steady::Frame;
use crate::sweeps::{Ablation, AblationSwitch, AxisRange, Normalization, SweepAxis, SweepSpec};
use crate::system::{proton_gamma, Electron, EulerConvention, SpinSystem};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectronSection {
    pub g_eigs: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_zyz_rad: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_xyz_rad: Option<[f64; 3]>,
    pub coords_angstrom: [f64; 3],
    #[serde(default, rename = "iso_hyperfine_MHz")]
    pub iso_hyperfine_mhz: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_c_ps: Option<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        rename = "exchange_J_MHz"
    )]
    pub exchange_j_mhz: Option<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        rename = "mw_nutation_MHz"
    )]
    pub mw_nutation_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nucleus_gamma_rad_per_s_per_tesla: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_eigs_ppm: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_euler_zyz_rad: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_euler_xyz_rad: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nucleus_coords_angstrom: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrons: Option<Vec<ElectronSection>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsSection {
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "B0_tesla")]
    pub b0_tesla: Option<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        rename = "temperature_K"
    )]
    pub temperature_k: Option<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        rename = "mw_offset_MHz"
    )]
    pub mw_offset_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    /// One of `B0_tesla`, `mw_offset_MHz`, `tau_c_ps`; start and stop are in this unit.
    pub quantity: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `field_offset` or `tau_offset`; explicit axes replace the preset's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis1: Option<AxisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis2: Option<AxisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<String>>,
    /// `thermal_nuclear` or `none`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
    /// `rotating` or `laboratory`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<String>,
    #[serde(default = "default_true")]
    pub svg: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SweepSection {
    /// The field/offset preset at desk-scale resolution, with SVG output.
    fn default() -> Self {
        Self {
            preset: None,
            points: None,
            axis1: None,
            axis2: None,
            observables: None,
            normalization: None,
            frame: None,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSection {
    #[serde(default)]
    pub switches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub tau_c_ps: [f64; 2],
    pub points: usize,
    #[serde(default = "default_true")]
    pub log: bool,
    pub operators: Vec<String>,
}

impl TraceSection {
    /// 21 correlation times from 10 ps to 1 ns and the operators of the
    /// polarisation-transfer pathway.
    pub fn default_for(n_electrons: usize) -> Self {
        let operators: &[&str] = if n_electrons == 1 {
            &["Ez", "E+", "2E+Nz", "2EzNz", "Nz"]
        } else {
            &[
                "E+1",
                "2E+1Ez2",
                "2E+1Nz",
                "4E+1Ez2Nz",
                "2Ez1Nz",
                "2Ez2Nz",
                "4Ez1Ez2Nz",
                "Nz",
            ]
        };
        Self {
            tau_c_ps: [10.0, 1000.0],
            points: crate::sweeps::DEFAULT_POINTS,
            log: true,
            operators: operators.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_fraction: Option<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        rename = "offset_range_MHz"
    )]
    pub offset_range_mhz: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_points: Option<usize>,
    /// Parameter name (e.g. `e1_x_angstrom`) to `[lower, upper]`. When absent
    /// the default space around the base system is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BTreeMap<String, [f64; 2]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub system: SystemSection,
    #[serde(default)]
    pub conditions: ConditionsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
}

/// Default field when the conditions section gives none, tesla.
pub const DEFAULT_B0: f64 = 14.1;

fn config_error(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ConfigDocument> {
    let doc: ConfigDocument = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        config_error(line, e.message().trim().to_string())
    })?;
    doc.validate(Some(text))?;
    Ok(doc)
}

impl ConfigDocument {
    /// Document describing a built-in fixture with every field written out.
    pub fn for_fixture(name: &str) -> Result<Self> {
        let sys = fixtures::by_name(name)?;
        let mut doc = Self::from_system(&sys);
        doc.conditions.mw_offset_mhz = fixtures::recommended_offset_hz(name).map(|f| f * 1e-6);
        Ok(doc)
    }

    pub fn from_system(sys: &SpinSystem) -> Self {
        let xyz = sys.euler_convention == EulerConvention::Xyz;
        let split = |angles: [f64; 3]| {
            if xyz {
                (None, Some(angles))
            } else {
                (Some(angles), None)
            }
        };
        let (shift_zyz, shift_xyz) = split(sys.shift_euler);
        let electrons = sys
            .electrons
            .iter()
            .map(|e| {
                let (zyz, xyz) = split(e.g_euler);
                ElectronSection {
                    g_eigs: e.g_eigs,
                    euler_zyz_rad: zyz,
                    euler_xyz_rad: xyz,
                    coords_angstrom: e.coords,
                    iso_hyperfine_mhz: e.iso_hyperfine_hz * 1e-6,
                }
            })
            .collect();
        ConfigDocument {
            system: SystemSection {
                fixture: None,
                tau_c_ps: Some(sys.tau_c * 1e12),
                exchange_j_mhz: Some(sys.exchange_hz * 1e-6),
                mw_nutation_mhz: Some(sys.mw_nutation_hz * 1e-6),
                nucleus_gamma_rad_per_s_per_tesla: Some(sys.nucleus_gamma),
                shift_eigs_ppm: Some(sys.shift_eigs_ppm),
                shift_euler_zyz_rad: shift_zyz,
                shift_euler_xyz_rad: shift_xyz,
                nucleus_coords_angstrom: Some(sys.nucleus_coords),
                electrons: Some(electrons),
            },
            conditions: ConditionsSection {
                b0_tesla: None,
                temperature_k: Some(sys.temperature),
                mw_offset_mhz: None,
            },
            ..Default::default()
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error(None, e.to_string()))
    }

    fn validate(&self, text: Option<&str>) -> Result<()> {
        let at = |key: &str| text.and_then(|t| find_key_line(t, key));
        let sys = self.resolve_system().map_err(|e| match e {
            Error::Config {
                line: None,
                message,
            } => {
                let line = message.split('`').nth(1).and_then(|k| at(k));
                config_error(line, message)
            }
            other => config_error(None, other.to_string()),
        })?;
        let c = &self.conditions;
        if c.b0_tesla.is_some_and(|b| !(b > 0.0)) {
            return Err(config_error(at("B0_tesla"), "`B0_tesla` must be positive"));
        }
        if self.sweep.is_some() {
            self.resolve_sweep().map_err(|e| relocate(e, at("sweep")))?;
        }
        if self.ablation.is_some() {
            let ablation = self
                .resolve_ablation()
                .map_err(|e| relocate(e, at("switches")))?;
            crate::sweeps::apply_ablation(&sys, &ablation)
                .map_err(|e| config_error(at("switches"), e.to_string()))?;
        }
        if self.trace.is_some() {
            self.resolve_trace().map_err(|e| relocate(e, at("trace")))?;
        }
        if self.optimize.is_some() {
            self.resolve_search()
                .map_err(|e| relocate(e, at("optimize")))?;
        }
        Ok(())
    }

    /// The spin system with `conditions.temperature_K` applied.
    pub fn resolve_system(&self) -> Result<SpinSystem> {
        let s = &self.system;
        let mut sys = match &s.fixture {
            Some(name) => fixtures::by_name(name)
                .map_err(|e| config_error(None, format!("`fixture`: {e}")))?,
            None => {
                let missing: Vec<&str> = [
                    ("tau_c_ps", s.tau_c_ps.is_none()),
                    ("exchange_J_MHz", s.exchange_j_mhz.is_none()),
                    ("mw_nutation_MHz", s.mw_nutation_mhz.is_none()),
                    ("shift_eigs_ppm", s.shift_eigs_ppm.is_none()),
                    ("electrons", s.electrons.is_none()),
                ]
                .into_iter()
                .filter_map(|(k, m)| m.then_some(k))
                .collect();
                if !missing.is_empty() {
                    return Err(config_error(
                        None,
                        format!(
                            "[system] needs `fixture` or these keys: {}",
                            missing.join(", ")
                        ),
                    ));
                }
                SpinSystem {
                    electrons: Vec::new(),
                    shift_eigs_ppm: [0.0; 3],
                    shift_euler: [0.0; 3],
                    nucleus_coords: [0.0; 3],
                    nucleus_gamma: proton_gamma(),
                    euler_convention: EulerConvention::Zyz,
                    tau_c: 0.0,
                    exchange_hz: 0.0,
                    mw_nutation_hz: 0.0,
                    temperature: 298.0,
                }
            }
        };
        if let Some(v) = s.tau_c_ps {
            sys.tau_c = v * 1e-12;
        }
        if let Some(v) = s.exchange_j_mhz {
            sys.exchange_hz = v * 1e6;
        }
        if let Some(v) = s.mw_nutation_mhz {
            sys.mw_nutation_hz = v * 1e6;
        }
        if let Some(v) = s.nucleus_gamma_rad_per_s_per_tesla {
            sys.nucleus_gamma = v;
        }
        if let Some(v) = s.shift_eigs_ppm {
            sys.shift_eigs_ppm = v;
        }
        if let Some(v) = s.nucleus_coords_angstrom {
            sys.nucleus_coords = v;
        }
        let mut conventions = Vec::new();
        match (s.shift_euler_zyz_rad, s.shift_euler_xyz_rad) {
            (Some(_), Some(_)) => {
                return Err(config_error(
                    None,
                    "give only one of `shift_euler_zyz_rad` and `shift_euler_xyz_rad`",
                ));
            }
            (Some(a), None) => {
                sys.shift_euler = a;
                conventions.push(EulerConvention::Zyz);
            }
            (None, Some(a)) => {
                sys.shift_euler = a;
                conventions.push(EulerConvention::Xyz);
            }
            (None, None) => {}
        }
        if let Some(electrons) = &s.electrons {
            if electrons.is_empty() || electrons.len() > 2 {
                return Err(config_error(
                    None,
                    "`electrons` must list one or two electrons",
                ));
            }
            sys.electrons = electrons
                .iter()
                .map(|e| {
                    let g_euler = match (e.euler_zyz_rad, e.euler_xyz_rad) {
                        (Some(_), Some(_)) => {
                            return Err(config_error(
                                None,
                                "give only one of `euler_zyz_rad` and `euler_xyz_rad`",
                            ));
                        }
                        (Some(a), None) => {
                            conventions.push(EulerConvention::Zyz);
                            a
                        }
                        (None, Some(a)) => {
                            conventions.push(EulerConvention::Xyz);
                            a
                        }
                        (None, None) => [0.0; 3],
                    };
                    Ok(Electron {
                        g_eigs: e.g_eigs,
                        g_euler,
                        coords: e.coords_angstrom,
                        iso_hyperfine_hz: e.iso_hyperfine_mhz * 1e6,
                    })
                })
                .collect::<Result<_>>()?;
        }
        if let Some(&first) = conventions.first() {
            if conventions.iter().any(|&c| c != first) {
                return Err(config_error(
                    None,
                    "Euler angles mix the zyz and xyz conventions",
                ));
            }
            sys.euler_convention = first;
        }
        if let Some(t) = self.conditions.temperature_k {
            sys.temperature = t;
        }
        sys.validate()
            .map_err(|e| config_error(None, e.to_string()))?;
        Ok(sys)
    }

    pub fn b0(&self) -> f64 {
        self.conditions.b0_tesla.unwrap_or(DEFAULT_B0)
    }

    /// Microwave offset in Hz: the configured one, else the fixture's
    /// recommended offset, else zero.
    pub fn mw_offset_hz(&self) -> f64 {
        self.conditions
            .mw_offset_mhz
            .map(|v| v * 1e6)
            .or_else(|| {
                self.system
                    .fixture
                    .as_deref()
                    .and_then(fixtures::recommended_offset_hz)
            })
            .unwrap_or(0.0)
    }

    pub fn resolve_sweep(&self) -> Result<SweepSpec> {
        let default = SweepSection::default();
        let section = self.sweep.as_ref().unwrap_or(&default);
        let points = section.points.unwrap_or(crate::sweeps::DEFAULT_POINTS);
        let mut spec = match section.preset.as_deref() {
            None | Some("field_offset") => SweepSpec::field_offset(points),
            Some("tau_offset") => SweepSpec::tau_offset(points),
            Some(other) => {
                return Err(config_error(
                    None,
                    format!("unknown sweep preset '{other}'"),
                ))
            }
        };
        if let Some(a) = &section.axis1 {
            spec.axis1 = axis_range(a)?;
        }
        if let Some(a) = &section.axis2 {
            spec.axis2 = axis_range(a)?;
        }
        if let Some(obs) = &section.observables {
            spec.observables = obs.clone();
        }
        spec.normalization = match section.normalization.as_deref() {
            None | Some("thermal_nuclear") => Normalization::ThermalNuclear,
            Some("none") => Normalization::None,
            Some(other) => {
                return Err(config_error(
                    None,
                    format!("unknown normalization '{other}'"),
                ))
            }
        };
        spec.frame = parse_frame(section.frame.as_deref())?;
        spec.b0 = self.b0();
        spec.mw_offset_hz = self.mw_offset_hz();
        spec.validate()
            .map_err(|e| config_error(None, e.to_string()))?;
        Ok(spec)
    }

    pub fn resolve_ablation(&self) -> Result<Ablation> {
        let Some(section) = &self.ablation else {
            return Ok(Ablation::none());
        };
        let switches = section
            .switches
            .iter()
            .map(|s| AblationSwitch::from_name(s).map_err(|e| config_error(None, e.to_string())))
            .collect::<Result<_>>()?;
        Ok(Ablation { switches })
    }

    /// Correlation times (s) and operator names of the `[trace]` section.
    pub fn resolve_trace(&self) -> Result<(Vec<f64>, Vec<String>)> {
        let n_electrons = self.resolve_system()?.n_electrons();
        let default = TraceSection::default_for(n_electrons);
        let t = self.trace.as_ref().unwrap_or(&default);
        let range = AxisRange {
            axis: SweepAxis::TauC,
            start: t.tau_c_ps[0] * 1e-12,
            stop: t.tau_c_ps[1] * 1e-12,
            points: t.points,
            log: t.log,
        };
        range
            .validate()
            .map_err(|e| config_error(None, e.to_string()))?;
        if t.operators.is_empty() {
            return Err(config_error(None, "[trace] needs at least one operator"));
        }
        for op in &t.operators {
            crate::spin::ProductOperator::parse(op, n_electrons)
                .map_err(|e| config_error(None, e.to_string()))?;
        }
        Ok((range.values(), t.operators.clone()))
    }

    pub fn resolve_search(&self) -> Result<(SearchSpace, ObjectiveGrid, SearchOptions)> {
        let section = self.optimize.clone().unwrap_or_default();
        let base = self.resolve_system()?;
        let space = match &section.bounds {
            None => SearchSpace::default_for(base),
            Some(map) => {
                let bounds = map
                    .iter()
                    .map(|(name, [lower, upper])| {
                        Ok(Bound {
                            parameter: Parameter::parse(name)?,
                            lower: *lower,
                            upper: *upper,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| config_error(None, e.to_string()))?;
                SearchSpace::new(base, bounds)
            }
        }
        .map_err(|e| config_error(None, e.to_string()))?;
        let mut grid = ObjectiveGrid::default_at(self.b0());
        if section.offset_range_mhz.is_some() || section.offset_points.is_some() {
            let [lo, hi] = section.offset_range_mhz.unwrap_or([-40.0, 40.0]);
            let n = section.offset_points.unwrap_or(161);
            if !(lo < hi) || n < 2 {
                return Err(config_error(
                    None,
                    "`offset_range_MHz` must increase and `offset_points` be at least 2",
                ));
            }
            grid.offsets_hz = (0..n)
                .map(|i| 1e6 * (lo + (hi - lo) * i as f64 / (n - 1) as f64))
                .collect();
        }
        let mut options = SearchOptions::default();
        if let Some(b) = section.budget {
            if b == 0 {
                return Err(config_error(None, "`budget` must be at least 1"));
            }
            options.budget = b;
        }
        if let Some(s) = section.seed {
            options.seed = s;
        }
        if let Some(f) = section.sample_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(config_error(None, "`sample_fraction` must lie in [0, 1]"));
            }
            options.sample_fraction = f;
        }
        Ok((space, grid, options))
    }
}

fn relocate(e: Error, line: Option<usize>) -> Error {
    match e {
        Error::Config {
            line: None,
            message,
        } => config_error(line, message),
        other => other,
    }
}

fn parse_frame(frame: Option<&str>) -> Result<Frame> {
    match frame {
        None | Some("rotating") => Ok(Frame::Rotating),
        Some("laboratory") => Ok(Frame::Laboratory),
        Some(other) => Err(config_error(None, format!("unknown frame '{other}'"))),
    }
}

fn axis_range(a: &AxisSection) -> Result<AxisRange> {
    let (axis, scale) = match a.quantity.as_str() {
        "B0_tesla" => (SweepAxis::B0, 1.0),
        "mw_offset_MHz" => (SweepAxis::MwOffset, 1e6),
        "tau_c_ps" => (SweepAxis::TauC, 1e-12),
        other => {
            return Err(config_error(
                None,
                format!("axis quantity '{other}' must be one of B0_tesla, mw_offset_MHz, tau_c_ps"),
            ))
        }
    };
    Ok(AxisRange {
        axis,
        start: a.start * scale,
        stop: a.stop * scale,
        points: a.points,
        log: a.log,
    })
}

/// First line whose key (or section header) matches `key`.
fn find_key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
                || l.trim_start_matches('[').trim_end_matches(']').trim() == key
        })
        .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_round_trip() {
        for name in fixtures::FIXTURE_NAMES {
            let doc = ConfigDocument::for_fixture(name).unwrap();
            let text = doc.to_toml().unwrap();
            let parsed = parse_config(&text).unwrap();
            assert_eq!(parsed, doc, "{name}");
            let again = parse_config(&parsed.to_toml().unwrap()).unwrap();
            assert_eq!(again, parsed);
            let sys = parsed.resolve_system().unwrap();
            let fixture = fixtures::by_name(name).unwrap();
            assert!((sys.tau_c - fixture.tau_c).abs() <= 1e-15 * fixture.tau_c);
            assert_eq!(sys.electrons.len(), fixture.electrons.len());
            assert_eq!(sys.euler_convention, fixture.euler_convention);
        }
    }

    #[test]
    fn fixture_by_name() {
        let doc = parse_config("[system]\nfixture = \"table1\"\n").unwrap();
        let sys = doc.resolve_system().unwrap();
        assert_eq!(sys.tau_c, 100e-12);
        assert_eq!(sys.exchange_hz, 3.0e6);
        assert_eq!(sys.mw_nutation_hz, 1.0e6);
        assert_eq!(sys.electrons[1].coords, [-5.090, 0.061, 1.032]);
        let s1a = parse_config("[system]\nfixture = \"tableS1A\"\n").unwrap();
        let sys = s1a.resolve_system().unwrap();
        assert_eq!(sys.exchange_hz, 6.2e6);
        assert_eq!(sys.electrons[0].coords[0], 7.03);
        assert_eq!(sys.electrons[1].coords[0], -7.03);
        assert_eq!(s1a.mw_offset_hz(), 15.4e6);
    }

    #[test]
    fn overrides_apply_to_fixture() {
        let doc = parse_config("[system]\nfixture = \"table1\"\ntau_c_ps = 50.0\n[conditions]\ntemperature_K = 300.0\n").unwrap();
        let sys = doc.resolve_system().unwrap();
        assert!((sys.tau_c - 50e-12).abs() < 1e-24);
        assert_eq!(sys.temperature, 300.0);
    }

    #[test]
    fn missing_unit_suffix_is_rejected_with_line() {
        let err = parse_config("[system]\nfixture = \"table1\"\ntau_c = 100.0\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, Some(3), "{message}");
                assert!(message.contains("tau_c"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn semantic_errors_carry_lines() {
        let text = "[system]\nfixture = \"table1\"\n\n[conditions]\nB0_tesla = -3.0\n";
        match parse_config(text).unwrap_err() {
            Error::Config { line, .. } => assert_eq!(line, Some(5)),
            other => panic!("unexpected {other}"),
        }
        let text =
            "[system]\nfixture = \"figure1\"\n[ablation]\nswitches = [\"RemoveElectron2\"]\n";
        match parse_config(text).unwrap_err() {
            Error::Config { line, .. } => assert_eq!(line, Some(4)),
            other => panic!("unexpected {other}"),
        }
        assert!(parse_config("[system]\nfixture = \"nope\"\n").is_err());
        assert!(parse_config("[system]\ntau_c_ps = 10.0\n").is_err());
    }

    #[test]
    fn sweep_section() {
        let text = r#"
[system]
fixture = "table1"
[sweep]
preset = "tau_offset"
points = 5
observables = ["Nz", "E+1"]
[sweep.axis2]
quantity = "mw_offset_MHz"
start = -10.0
stop = 10.0
points = 3
"#;
        let spec = parse_config(text).unwrap().resolve_sweep().unwrap();
        assert_eq!(spec.axis1.axis, SweepAxis::TauC);
        assert_eq!(spec.axis1.points, 5);
        assert_eq!(spec.axis2.values(), vec![-10e6, 0.0, 10e6]);
        assert_eq!(spec.observables, vec!["Nz", "E+1"]);
        let bad = text.replace("mw_offset_MHz", "mw_offset");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn optimize_section() {
        let text = r#"
[system]
fixture = "table1"
[optimize]
budget = 5
seed = 11
[optimize.bounds]
exchange_J_MHz = [2.0, 4.0]
e2_z_angstrom = [0.8, 1.2]
"#;
        let (space, grid, options) = parse_config(text).unwrap().resolve_search().unwrap();
        assert_eq!(space.dim(), 2);
        assert_eq!(grid.offsets_hz.len(), 161);
        assert_eq!((options.budget, options.seed), (5, 11));
        assert!(parse_config(&text.replace("[2.0, 4.0]", "[4.0, 5.0]")).is_err());
        assert!(parse_config(&text.replace("exchange_J_MHz", "exchange_J")).is_err());
    }

    #[test]
    fn explicit_system() {
        let text = r#"
[system]
tau_c_ps = 10.0
exchange_J_MHz = 0.0
mw_nutation_MHz = 1.0
shift_eigs_ppm = [15.0, 5.0, -20.0]

[[system.electrons]]
g_eigs = [2.0021, 2.0025, 2.0029]
euler_xyz_rad = [1.0471975511965976, 0.7853981633974483, 0.6283185307179586]
coords_angstrom = [0.0, 0.0, 3.0]
iso_hyperfine_MHz = 20.0
"#;
        let sys = parse_config(text).unwrap().resolve_system().unwrap();
        let fig = fixtures::figure1();
        assert_eq!(sys.euler_convention, EulerConvention::Xyz);
        assert_eq!(sys.electrons[0].iso_hyperfine_hz, 20e6);
        assert_eq!(sys.electrons[0].g_euler, fig.electrons[0].g_euler);
        let mixed = text.replace(
            "[[system.electrons]]",
            "shift_euler_zyz_rad = [0.0, 0.0, 0.0]\n[[system.electrons]]",
        );
        assert!(parse_config(&mixed).is_err());
    }
}
