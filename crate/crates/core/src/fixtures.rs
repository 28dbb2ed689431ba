//! Built-in spin systems.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::system::{proton_gamma, Electron, EulerConvention, SpinSystem};

pub const FIXTURE_NAMES: [&str; 4] = ["table1", "tableS1A", "tableS1B", "figure1"];

fn electron(g_eigs: [f64; 3], g_euler: [f64; 3], coords: [f64; 3]) -> Electron {
    Electron {
        g_eigs,
        g_euler,
        coords,
        iso_hyperfine_hz: 0.0,
    }
}

fn biradical(e1: Electron, e2: Electron, exchange_hz: f64) -> SpinSystem {
    SpinSystem {
        electrons: vec![e1, e2],
        shift_eigs_ppm: [0.0, 10.0, 20.0],
        shift_euler: [0.0; 3],
        nucleus_coords: [0.0; 3],
        nucleus_gamma: proton_gamma(),
        euler_convention: EulerConvention::Zyz,
        tau_c: 100e-12,
        exchange_hz,
        mw_nutation_hz: 1.0e6,
        temperature: 298.0,
    }
}

/// Biradical with purely dipolar electron-proton couplings used for the
/// in-depth mechanism analysis.
pub fn table1() -> SpinSystem {
    biradical(
        electron(
            [2.0034, 2.0038, 2.0038],
            [-0.872, -0.013, 0.868],
            [5.090, 0.010, 0.958],
        ),
        electron(
            [2.0057, 2.0030, 2.0030],
            [-1.145, 0.061, 1.143],
            [-5.090, 0.061, 1.032],
        ),
        3.0e6,
    )
}

/// Second optimised biradical; its recommended microwave offset is 15.4 MHz.
pub fn table_s1_a() -> SpinSystem {
    biradical(
        electron(
            [1.977873, 1.977798, 1.977792],
            [0.0; 3],
            [7.0300, 0.0187, 0.9820],
        ),
        electron(
            [1.977919, 1.978000, 1.979000],
            [-0.590, 0.100, 0.490],
            [-7.0300, 0.2015, 1.0001],
        ),
        6.2e6,
    )
}

/// Third optimised biradical; its recommended microwave offset is 3.2 MHz.
pub fn table_s1_b() -> SpinSystem {
    biradical(
        electron(
            [1.977800, 1.977600, 1.977600],
            [-0.180, 0.017, 0.194],
            [6.000, 0.030, 0.317],
        ),
        electron(
            [2.006800, 2.003800, 2.003800],
            [0.632, 0.783, 1.086],
            [-6.000, -0.038, 0.535],
        ),
        5.0e6,
    )
}

/// Electron-proton pair with g, shielding and isotropic hyperfine couplings
/// all present. The g-tensor orientation is given as XYZ Euler angles
/// relative to the shielding tensor frame.
pub fn figure1() -> SpinSystem {
    SpinSystem {
        electrons: vec![Electron {
            g_eigs: [2.00210, 2.00250, 2.00290],
            g_euler: [PI / 3.0, PI / 4.0, PI / 5.0],
            coords: [0.0, 0.0, 3.0],
            iso_hyperfine_hz: 20.0e6,
        }],
        shift_eigs_ppm: [15.0, 5.0, -20.0],
        shift_euler: [0.0; 3],
        nucleus_coords: [0.0; 3],
        nucleus_gamma: proton_gamma(),
        euler_convention: EulerConvention::Xyz,
        tau_c: 10e-12,
        exchange_hz: 0.0,
        mw_nutation_hz: 1.0e6,
        temperature: 298.0,
    }
}

/// Recommended microwave offset from electron 1, Hz, for fixtures that have one.
pub fn recommended_offset_hz(name: &str) -> Option<f64> {
    match name {
        "table1" => Some(-0.62e6),
        "tableS1A" => Some(15.4e6),
        "tableS1B" => Some(3.2e6),
        _ => None,
    }
}

pub fn by_name(name: &str) -> Result<SpinSystem> {
    match name {
        "table1" => Ok(table1()),
        "tableS1A" => Ok(table_s1_a()),
        "tableS1B" => Ok(table_s1_b()),
        "figure1" => Ok(figure1()),
        other => Err(Error::InvalidArgument(format!(
            "unknown fixture '{other}'; available: {}",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}
