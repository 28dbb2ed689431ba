//! Closed-form relaxation rates expressed through second-rank tensor norms and
//! scalar products, used as an analytical counterpart of the numerical
//! relaxation superoperator.

use std::fmt;

use nalgebra::Matrix3;

use crate::constants::{GAMMA_ELECTRON, HBAR, MU0_OVER_4PI};
use crate::error::{Error, Result};
use crate::relaxation::{rate_between, spectral_density, RelaxationSuperoperator};
use crate::spin::ProductOperator;
use crate::system::{InteractionKind, SpinSystem};

/// Second-rank norm of a 3x3 tensor, written out element by element.
/// The isotropic part is removed before evaluation.
pub fn delta_squared(a: &Matrix3<f64>) -> f64 {
    let a = a - Matrix3::identity() * (a.trace() / 3.0);
    let (xx, yy, zz) = (a[(0, 0)], a[(1, 1)], a[(2, 2)]);
    let xy = a[(0, 1)] + a[(1, 0)];
    let xz = a[(0, 2)] + a[(2, 0)];
    let yz = a[(1, 2)] + a[(2, 1)];
    xx * xx + yy * yy + zz * zz - xx * yy - xx * zz - yy * zz + 0.75 * (xy * xy + xz * xz + yz * yz)
}

/// Second-rank scalar product obtained by polarising [`delta_squared`].
pub fn scalar_product(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let a = a - Matrix3::identity() * (a.trace() / 3.0);
    let b = b - Matrix3::identity() * (b.trace() / 3.0);
    (delta_squared(&(a + b)) - delta_squared(&(a - b))) / 4.0
}

/// Second-rank norms and scalar products of every interaction of a system at
/// a given field, (rad/s)^2.
#[derive(Debug, Clone)]
pub struct TensorInvariants {
    tensors: Vec<(InteractionKind, Matrix3<f64>)>,
}

impl TensorInvariants {
    pub fn new(sys: &SpinSystem, b0: f64) -> Result<Self> {
        let tensors = sys
            .interactions()?
            .into_iter()
            .map(|i| (i.kind, i.tensor_at_field(b0)))
            .collect();
        Ok(Self { tensors })
    }

    pub fn kinds(&self) -> Vec<InteractionKind> {
        self.tensors.iter().map(|(k, _)| *k).collect()
    }

    pub fn tensor(&self, kind: InteractionKind) -> Result<&Matrix3<f64>> {
        self.tensors
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, t)| t)
            .ok_or_else(|| {
                Error::ProcessNotApplicable(format!("system has no {} interaction", kind.label()))
            })
    }

    pub fn delta_sq(&self, kind: InteractionKind) -> Result<f64> {
        Ok(delta_squared(self.tensor(kind)?))
    }

    pub fn aleph(&self, a: InteractionKind, b: InteractionKind) -> Result<f64> {
        Ok(scalar_product(self.tensor(a)?, self.tensor(b)?))
    }
}

/// Electron-nucleus dipolar cross-relaxation rate of the textbook Overhauser
/// expression for electron `k`, 1/s. Positive in the extreme-narrowing limit.
pub fn overhauser_sigma(sys: &SpinSystem, b0: f64, k: usize) -> Result<f64> {
    if k >= sys.n_electrons() {
        return Err(Error::IndexOutOfRange {
            index: k,
            n_spins: sys.n_electrons(),
        });
    }
    let r = sys.electron_nucleus_distance(k);
    let we = sys.electron_frequency(k, b0);
    let wn = sys.nuclear_frequency(b0);
    let tc = sys.tau_c;
    let prefactor =
        (GAMMA_ELECTRON * sys.nucleus_gamma * HBAR * MU0_OVER_4PI).powi(2) / 10.0 * tc / r.powi(6);
    let lorentz = |w: f64| 1.0 / (1.0 + w * w * tc * tc);
    Ok(prefactor * (6.0 * lorentz(we + wn) - lorentz(we - wn)))
}

/// One printed closed-form rate. Electron indices are 0-based; `j` denotes
/// the other electron of a biradical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessId {
    /// `Ez -> 2EzNz = -(2/15) aleph(HF,G) J(wE)`, one electron.
    SingleLongitudinalHfG,
    /// `2EzNz -> Nz = -(2/15) aleph(HF,CSA) J(wN)`, one electron.
    SingleLongitudinalHfCsa,
    /// `E+ -> 2E+Nz = -(aleph(HF,G)/45) [4J(0) + 3J(wE)]`, one electron.
    SingleTransverseHfG,
    /// `Ez(k) -> Nz = -(Delta^2(HFk)/18) J(wEk)`.
    ElectronToNucleus(usize),
    /// `Ez(k) -> 2Ez(k)Nz = -(2/15) aleph(Gk,HFk) J(wEk)`.
    ElectronToTwoSpinOrder(usize),
    /// `Ez(k) -> 4Ez1Ez2Nz = -(1/15) aleph(DD,HFk) J(wEk)`.
    ElectronToThreeSpinOrder(usize),
    /// `2Ez1Ez2 -> Nz = 0`.
    ElectronOrderToNucleus,
    /// `2Ez1Ez2 -> 2Ez(k)Nz = -(Delta^2(HFj)/18) J(wEj) - (aleph(DD,HFk)/15) J(wEk)`.
    ElectronOrderToTwoSpinOrder(usize),
    /// `2Ez1Ez2 -> 4Ez1Ez2Nz = -(2/15) [aleph(G1,HF1) J(wE1) + aleph(G2,HF2) J(wE2)]`.
    ElectronOrderToThreeSpinOrder,
    /// `Ez1 -> Ez2 = (Delta^2(DD)/90) [J(wE1 - wE2) - 6 J(wE1 + wE2)]`.
    ElectronFlipFlop,
    /// Self-rate of `E+(k) + 2E+(k)Ez(j)` (`positive = true`) or `E+(k) - 2E+(k)Ez(j)`:
    /// `-(Delta^2(DD)/180)[4J(0) + J(wE2 - wE1)] - (Delta^2(Gk)/45) 4J(0)
    ///  - (Delta^2(HFk)/90)[2J(0) + 3J(wN)] -+ (aleph(DD,Gk)/45) 4J(0)`.
    /// With positive electron Zeeman frequencies and `D = d(1 - 3ee^T)` the
    /// cross term enters with the sign opposite to the operator sign.
    MultipletSelfRate { electron: usize, positive: bool },
    /// `E+(k) -> 2E+(k)Nz = -(aleph(Gk,HFk)/45) 4J(0)`.
    TransverseGHf(usize),
    /// `E+(k) -> 4E+(k)Ez(j)Nz = -(aleph(DD,HFk)/90) 4J(0)`.
    TransverseDdHf(usize),
    /// `2E+(k)Ez(j) -> 4E+(k)Ez(j)Nz = -(aleph(Gk,HFk)/45) 4J(0)`.
    TransverseOrderGHf(usize),
    /// `2Ez(k)Nz -> Nz = -(2/15) aleph(CSA,HFk) J(wN)`.
    TwoSpinOrderToNucleus(usize),
    /// `4Ez1Ez2Nz -> Nz = -(1/15) aleph(HF1,HF2) J(wN)`.
    ThreeSpinOrderToNucleus,
}

use InteractionKind::{ElectronZeeman as G, Hyperfine as HF};
const DD: InteractionKind = InteractionKind::InterElectronDipolar;
const CSA: InteractionKind = InteractionKind::NuclearZeeman;

fn e(k: usize) -> usize {
    k + 1
}

impl ProcessId {
    /// Every process applicable to a system with `n_electrons` electrons.
    pub fn all(n_electrons: usize) -> Vec<ProcessId> {
        use ProcessId::*;
        match n_electrons {
            1 => vec![
                SingleLongitudinalHfG,
                SingleLongitudinalHfCsa,
                SingleTransverseHfG,
            ],
            2 => {
                let mut list = Vec::new();
                for k in 0..2 {
                    list.extend([
                        ElectronToNucleus(k),
                        ElectronToTwoSpinOrder(k),
                        ElectronToThreeSpinOrder(k),
                    ]);
                }
                list.push(ElectronOrderToNucleus);
                list.extend([
                    ElectronOrderToTwoSpinOrder(0),
                    ElectronOrderToTwoSpinOrder(1),
                ]);
                list.extend([ElectronOrderToThreeSpinOrder, ElectronFlipFlop]);
                for k in 0..2 {
                    list.extend([
                        MultipletSelfRate {
                            electron: k,
                            positive: true,
                        },
                        MultipletSelfRate {
                            electron: k,
                            positive: false,
                        },
                    ]);
                }
                for k in 0..2 {
                    list.extend([TransverseGHf(k), TransverseDdHf(k), TransverseOrderGHf(k)]);
                }
                list.extend([
                    TwoSpinOrderToNucleus(0),
                    TwoSpinOrderToNucleus(1),
                    ThreeSpinOrderToNucleus,
                ]);
                list
            }
            _ => Vec::new(),
        }
    }

    pub fn n_electrons(&self) -> usize {
        use ProcessId::*;
        match self {
            SingleLongitudinalHfG | SingleLongitudinalHfCsa | SingleTransverseHfG => 1,
            _ => 2,
        }
    }

    fn electron(&self) -> Option<usize> {
        use ProcessId::*;
        match *self {
            ElectronToNucleus(k)
            | ElectronToTwoSpinOrder(k)
            | ElectronToThreeSpinOrder(k)
            | ElectronOrderToTwoSpinOrder(k)
            | TransverseGHf(k)
            | TransverseDdHf(k)
            | TransverseOrderGHf(k)
            | TwoSpinOrderToNucleus(k) => Some(k),
            MultipletSelfRate { electron, .. } => Some(electron),
            _ => None,
        }
    }

    /// Source and destination product operators.
    pub fn operators(&self) -> (String, String) {
        use ProcessId::*;
        // transverse operator on electron k multiplied by Ez of the other electron
        let with_other = |k: usize, prefix: &str, tail: &str| {
            if k == 0 {
                format!("{prefix}E+1Ez2{tail}")
            } else {
                format!("{prefix}Ez1E+2{tail}")
            }
        };
        match *self {
            SingleLongitudinalHfG => ("Ez".into(), "2EzNz".into()),
            SingleLongitudinalHfCsa => ("2EzNz".into(), "Nz".into()),
            SingleTransverseHfG => ("E+".into(), "2E+Nz".into()),
            ElectronToNucleus(k) => (format!("Ez{}", e(k)), "Nz".into()),
            ElectronToTwoSpinOrder(k) => (format!("Ez{}", e(k)), format!("2Ez{}Nz", e(k))),
            ElectronToThreeSpinOrder(k) => (format!("Ez{}", e(k)), "4Ez1Ez2Nz".into()),
            ElectronOrderToNucleus => ("2Ez1Ez2".into(), "Nz".into()),
            ElectronOrderToTwoSpinOrder(k) => ("2Ez1Ez2".into(), format!("2Ez{}Nz", e(k))),
            ElectronOrderToThreeSpinOrder => ("2Ez1Ez2".into(), "4Ez1Ez2Nz".into()),
            ElectronFlipFlop => ("Ez1".into(), "Ez2".into()),
            MultipletSelfRate {
                electron: k,
                positive,
            } => {
                let sign = if positive { "+" } else { "-" };
                let op = format!("E+{}{}{}", e(k), sign, with_other(k, "2", ""));
                (op.clone(), op)
            }
            TransverseGHf(k) => (format!("E+{}", e(k)), format!("2E+{}Nz", e(k))),
            TransverseDdHf(k) => (format!("E+{}", e(k)), with_other(k, "4", "Nz")),
            TransverseOrderGHf(k) => (with_other(k, "2", ""), with_other(k, "4", "Nz")),
            TwoSpinOrderToNucleus(k) => (format!("2Ez{}Nz", e(k)), "Nz".into()),
            ThreeSpinOrderToNucleus => ("4Ez1Ez2Nz".into(), "Nz".into()),
        }
    }

    /// Short identifier such as `Ez1->Nz`.
    pub fn label(&self) -> String {
        let (from, to) = self.operators();
        if from == to {
            format!("R[{from}]")
        } else {
            format!("{from}->{to}")
        }
    }

    /// Whether the printed expression omits terms that are small at common
    /// NMR fields.
    pub fn is_truncated(&self) -> bool {
        use ProcessId::*;
        matches!(
            self,
            MultipletSelfRate { .. } | TransverseGHf(_) | TransverseDdHf(_) | TransverseOrderGHf(_)
        )
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Evaluates the closed-form expression of `process`, 1/s.
pub fn closed_form_rate(process: ProcessId, sys: &SpinSystem, b0: f64) -> Result<f64> {
    use ProcessId::*;
    if process.n_electrons() != sys.n_electrons() {
        return Err(Error::ProcessNotApplicable(format!(
            "{process} needs {} electron(s), system has {}",
            process.n_electrons(),
            sys.n_electrons()
        )));
    }
    if let Some(k) = process.electron() {
        if k >= sys.n_electrons() {
            return Err(Error::ProcessNotApplicable(format!(
                "{process}: no electron {}",
                k + 1
            )));
        }
    }
    let inv = TensorInvariants::new(sys, b0)?;
    let tc = sys.tau_c;
    let j = |w: f64| spectral_density(w, tc);
    let we = |k: usize| sys.electron_frequency(k, b0);
    let wn = sys.nuclear_frequency(b0);
    let other = |k: usize| 1 - k;

    Ok(match process {
        SingleLongitudinalHfG => -2.0 / 15.0 * inv.aleph(HF(0), G(0))? * j(we(0)),
        SingleLongitudinalHfCsa => -2.0 / 15.0 * inv.aleph(HF(0), CSA)? * j(wn),
        SingleTransverseHfG => -inv.aleph(HF(0), G(0))? / 45.0 * (4.0 * j(0.0) + 3.0 * j(we(0))),
        ElectronToNucleus(k) => -inv.delta_sq(HF(k))? / 18.0 * j(we(k)),
        ElectronToTwoSpinOrder(k) => -2.0 / 15.0 * inv.aleph(G(k), HF(k))? * j(we(k)),
        ElectronToThreeSpinOrder(k) => -inv.aleph(DD, HF(k))? / 15.0 * j(we(k)),
        ElectronOrderToNucleus => 0.0,
        ElectronOrderToTwoSpinOrder(k) => {
            let jj = other(k);
            -inv.delta_sq(HF(jj))? / 18.0 * j(we(jj)) - inv.aleph(DD, HF(k))? / 15.0 * j(we(k))
        }
        ElectronOrderToThreeSpinOrder => {
            -2.0 / 15.0 * (inv.aleph(G(0), HF(0))? * j(we(0)) + inv.aleph(G(1), HF(1))? * j(we(1)))
        }
        ElectronFlipFlop => inv.delta_sq(DD)? / 90.0 * (j(we(0) - we(1)) - 6.0 * j(we(0) + we(1))),
        MultipletSelfRate {
            electron: k,
            positive,
        } => {
            let sign = if positive { -1.0 } else { 1.0 };
            -inv.delta_sq(DD)? / 180.0 * (4.0 * j(0.0) + j(we(1) - we(0)))
                - inv.delta_sq(G(k))? / 45.0 * 4.0 * j(0.0)
                - inv.delta_sq(HF(k))? / 90.0 * (2.0 * j(0.0) + 3.0 * j(wn))
                + sign * inv.aleph(DD, G(k))? / 45.0 * 4.0 * j(0.0)
        }
        TransverseGHf(k) => -inv.aleph(G(k), HF(k))? / 45.0 * 4.0 * j(0.0),
        TransverseDdHf(k) => -inv.aleph(DD, HF(k))? / 90.0 * 4.0 * j(0.0),
        TransverseOrderGHf(k) => -inv.aleph(G(k), HF(k))? / 45.0 * 4.0 * j(0.0),
        TwoSpinOrderToNucleus(k) => -2.0 / 15.0 * inv.aleph(CSA, HF(k))? * j(wn),
        ThreeSpinOrderToNucleus => -inv.aleph(HF(0), HF(1))? / 15.0 * j(wn),
    })
}

/// The matching element of the numerical relaxation superoperator, 1/s.
pub fn numerical_rate(
    process: ProcessId,
    r: &RelaxationSuperoperator,
    n_electrons: usize,
) -> Result<f64> {
    let n_spins = n_electrons + 1;
    let (from, to) = process.operators();
    let from = ProductOperator::parse(&from, n_electrons)?.operator(n_spins)?;
    let to = ProductOperator::parse(&to, n_electrons)?.operator(n_spins)?;
    rate_between(r, &from, &to)
}

/// One row of the rate catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct RateComparison {
    pub process: ProcessId,
    pub analytical: f64,
    pub numerical: f64,
}

impl RateComparison {
    /// `|analytical - numerical| / |numerical|`; zero when both vanish.
    pub fn relative_deviation(&self) -> f64 {
        let diff = (self.analytical - self.numerical).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.numerical.abs()
        }
    }
}

/// Analytical and numerical values of every applicable process.
pub fn rate_catalogue(
    sys: &SpinSystem,
    r: &RelaxationSuperoperator,
) -> Result<Vec<RateComparison>> {
    ProcessId::all(sys.n_electrons())
        .into_iter()
        .map(|process| {
            Ok(RateComparison {
                process,
                analytical: closed_form_rate(process, sys, r.b0)?,
                numerical: numerical_rate(process, r, sys.n_electrons())?,
            })
        })
        .collect()
}
