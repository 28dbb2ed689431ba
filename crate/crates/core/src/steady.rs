//! Steady states under continuous microwave irradiation, in the rotating
//! frame (one dense linear solve) and in the laboratory frame (Fokker-Planck
//! phase grid solved with preconditioned GMRES).

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::constants::TWO_PI;
use crate::error::{Error, Result};
use crate::fourier::PhaseGrid;
use crate::hamiltonian::{
    mw_hamiltonian, rotating_frame_hamiltonian, static_hamiltonian, ElectronCoupling,
};
use crate::relaxation::{brw_superoperator, rotating_frame_relaxation, zero_coherence_part};
use crate::sparse::{gmres, CsrMatrix, GmresOptions, Ilu0, Preconditioner};
use crate::spin::{
    c, commutation_superoperator, frobenius_norm, hermiticity_defect, identity,
    single_spin_operator, thermal_state, trace, unvectorize, vectorize, Axis, Operator,
    ProductOperator, SpinLabel, Superoperator, C64,
};
use crate::system::SpinSystem;

/// Default number of phase points before automatic refinement.
pub const DEFAULT_GRID_POINTS: usize = 32;
/// Largest phase grid tried by the refinement loop.
pub const MAX_GRID_POINTS: usize = 256;
/// Relative change of the averaged nuclear polarisation that stops grid refinement.
pub const GRID_TOLERANCE: f64 = 1e-3;
/// Relative residual demanded from every steady-state solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Rotating,
    Laboratory,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Steady-state density matrix; the phase average in the laboratory frame.
    pub rho: Operator,
    /// Density matrices at the phase grid points (laboratory frame only).
    pub orbit: Vec<Operator>,
    pub frame: Frame,
    /// Relative residual of the linear solve.
    pub residual: f64,
    /// Krylov iterations (zero for direct solves).
    pub iterations: usize,
    n_spins: usize,
    n_electrons: usize,
}

impl SteadyState {
    fn new(
        rho: Operator,
        orbit: Vec<Operator>,
        frame: Frame,
        residual: f64,
        iterations: usize,
        n_electrons: usize,
    ) -> Self {
        let n_spins = rho.nrows().trailing_zeros() as usize;
        Self {
            rho,
            orbit,
            frame,
            residual,
            iterations,
            n_spins,
            n_electrons,
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Grid size of a laboratory-frame solution, zero in the rotating frame.
    pub fn grid_points(&self) -> usize {
        self.orbit.len()
    }

    /// Signed nuclear polarisation `2 <Nz>`.
    pub fn nuclear_polarization(&self) -> f64 {
        let nz = single_spin_operator(self.n_spins, SpinLabel::nucleus(self.n_spins - 1), Axis::Z)
            .expect("nucleus is the last spin");
        2.0 * trace(&(&self.rho * nz)).re
    }

    /// Signed polarisation `2 <Sz>` of electron `k`.
    pub fn electron_polarization(&self, k: usize) -> Result<f64> {
        let sz = single_spin_operator(self.n_spins, SpinLabel::electron(k), Axis::Z)?;
        Ok(2.0 * trace(&(&self.rho * sz)).re)
    }

    /// Amplitude `sqrt(dim) |Tr[rho O]| / ||O||` of a product operator.
    ///
    /// In the laboratory frame, operators without electron coherence are
    /// read from the phase-averaged state. Coherences rotate with the
    /// microwave phase, so their modulus is averaged over the orbit instead.
    pub fn amplitude(&self, op: &ProductOperator) -> Result<f64> {
        let o = op.operator(self.n_spins)?;
        let norm = frobenius_norm(&o);
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let scale = (self.rho.nrows() as f64).sqrt() / norm;
        let coherent =
            frobenius_norm(&(&o - zero_coherence_part(&o, self.n_spins, self.n_electrons))) > 0.0;
        if self.frame == Frame::Laboratory && coherent {
            let sum: f64 = self.orbit.iter().map(|rho| trace(&(rho * &o)).norm()).sum();
            return Ok(scale * sum / self.orbit.len() as f64);
        }
        Ok(scale * trace(&(&self.rho * &o)).norm())
    }

    /// Amplitudes of named product operators, e.g. `"Nz"` or `"E+1-2E+1Ez2"`.
    pub fn observables(&self, names: &[&str]) -> Result<BTreeMap<String, f64>> {
        names
            .iter()
            .map(|name| {
                let op = ProductOperator::parse(name, self.n_electrons)?;
                Ok((name.to_string(), self.amplitude(&op)?))
            })
            .collect()
    }

    pub fn trace_defect(&self) -> f64 {
        (trace(&self.rho) - c(1.0)).norm()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.rho)
    }
}

/// Microwave angular frequency at `offset_hz` from the isotropic Zeeman
/// frequency of electron 1.
pub fn microwave_frequency(sys: &SpinSystem, b0: f64, offset_hz: f64) -> f64 {
    sys.electron_frequency(0, b0) + TWO_PI * offset_hz
}

/// Field-dependent ingredients shared by all steady-state solves of one
/// system at one magnetic field: only the microwave offset varies.
#[derive(Debug, Clone)]
pub struct FieldContext {
    pub sys: SpinSystem,
    pub b0: f64,
    /// Isotropic laboratory-frame Hamiltonian, rad/s.
    pub h0: Operator,
    pub r_lab: Superoperator,
    pub r_rot: Superoperator,
    /// Thermal equilibrium of `h0`.
    pub rho_eq: Operator,
    /// `rho_eq` without electron coherences, for the rotating frame.
    pub rho_eq_rot: Operator,
}

impl FieldContext {
    pub fn new(sys: &SpinSystem, b0: f64) -> Result<Self> {
        sys.validate()?;
        if !(b0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "magnetic field must be positive, got {b0}"
            )));
        }
        let (n, ne) = (sys.n_spins(), sys.n_electrons());
        let h0 = static_hamiltonian(sys, b0)?;
        let r_lab = brw_superoperator(sys, b0)?.matrix;
        let r_rot = rotating_frame_relaxation(&r_lab, n, ne);
        let rho_eq = thermal_state(&h0, sys.temperature)?;
        let rho_eq_rot = zero_coherence_part(&rho_eq, n, ne);
        Ok(Self {
            sys: sys.clone(),
            b0,
            h0,
            r_lab,
            r_rot,
            rho_eq,
            rho_eq_rot,
        })
    }

    /// Thermal nuclear polarisation `2 <Nz>` at this field.
    pub fn thermal_nuclear_polarization(&self) -> f64 {
        let n = self.sys.n_spins();
        let nz = single_spin_operator(n, SpinLabel::nucleus(n - 1), Axis::Z)
            .expect("nucleus is the last spin");
        2.0 * trace(&(&self.rho_eq * nz)).re
    }

    pub fn rotating(&self, offset_hz: f64) -> Result<SteadyState> {
        self.rotating_with(offset_hz, ElectronCoupling::default())
    }

    pub fn rotating_with(&self, offset_hz: f64, coupling: ElectronCoupling) -> Result<SteadyState> {
        let omega_mw = microwave_frequency(&self.sys, self.b0, offset_hz);
        let h = rotating_frame_hamiltonian(&self.sys, self.b0, omega_mw, coupling)?;
        solve_rotating_frame(&h, &self.r_rot, &self.rho_eq_rot, self.sys.n_electrons())
    }

    /// Laboratory-frame steady state on a phase grid doubled from
    /// [`DEFAULT_GRID_POINTS`] until the averaged nuclear polarisation
    /// changes by less than [`GRID_TOLERANCE`].
    pub fn laboratory(&self, offset_hz: f64, options: &LabSolverOptions) -> Result<SteadyState> {
        let omega_mw = microwave_frequency(&self.sys, self.b0, offset_hz);
        let mut n = options.initial_grid_points;
        let mut previous = self.laboratory_on_grid(omega_mw, n, options)?;
        loop {
            if n >= MAX_GRID_POINTS {
                warn!("phase grid refinement stopped at {n} points without meeting the tolerance");
                return Ok(previous);
            }
            n *= 2;
            let next = self.laboratory_on_grid(omega_mw, n, options)?;
            let (a, b) = (previous.nuclear_polarization(), next.nuclear_polarization());
            if (a - b).abs() <= GRID_TOLERANCE * b.abs().max(f64::MIN_POSITIVE) {
                return Ok(next);
            }
            previous = next;
        }
    }

    pub fn laboratory_on_grid(
        &self,
        omega_mw: f64,
        n_points: usize,
        options: &LabSolverOptions,
    ) -> Result<SteadyState> {
        let grid = PhaseGrid::new(n_points)?;
        let system = assemble_fokker_planck(
            &self.sys,
            self.b0,
            omega_mw,
            &grid,
            &self.r_lab,
            &self.rho_eq,
        )?;
        solve_lab_frame(&system, options)
    }
}

/// Projector-like rank-one term `kappa |I><I| / dim` that removes the
/// trace null space. Both the coherent and the relaxation generators
/// annihilate the identity and conserve trace, so a traceless right-hand
/// side keeps the solution traceless and the shift changes nothing else.
fn trace_shift(dim: usize, kappa: f64) -> Vec<(usize, usize, C64)> {
    let diag: Vec<usize> = (0..dim).map(|i| i * dim + i).collect();
    let w = c(kappa / dim as f64);
    diag.iter()
        .flat_map(|&i| diag.iter().map(move |&j| (i, j, w)))
        .collect()
}

fn shift_scale(r: &Superoperator) -> f64 {
    let scale = (0..r.nrows()).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        scale
    } else {
        1.0
    }
}

/// Solves `(R - iH) rho = R rho_eq` for the rotating-frame steady state,
/// returning `rho = I/dim + sigma` with traceless `sigma`.
pub fn solve_rotating_frame(
    h_rot: &Operator,
    r: &Superoperator,
    rho_eq: &Operator,
    n_electrons: usize,
) -> Result<SteadyState> {
    let dim = h_rot.nrows();
    let ldim = dim * dim;
    if r.nrows() != ldim || rho_eq.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: ldim,
            found: r.nrows(),
        });
    }
    let generator = r - commutation_superoperator(h_rot)? * C64::new(0.0, 1.0);
    let mut shifted = generator.clone();
    for (i, j, w) in trace_shift(dim, shift_scale(r)) {
        shifted[(i, j)] += w;
    }
    let rhs = r * vectorize(rho_eq);
    let sigma = shifted
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("rotating-frame steady-state generator".into()))?;
    let residual = relative_residual(&(&generator * &sigma - &rhs), &rhs);
    let rho = unvectorize(&sigma)? + identity(dim) * c(1.0 / dim as f64);
    Ok(SteadyState::new(
        rho,
        Vec::new(),
        Frame::Rotating,
        residual,
        0,
        n_electrons,
    ))
}

fn relative_residual(residual: &DVector<C64>, rhs: &DVector<C64>) -> f64 {
    let scale = rhs.norm();
    if scale == 0.0 {
        residual.norm()
    } else {
        residual.norm() / scale
    }
}

/// Fokker-Planck block system on a phase grid. Block `k` holds the state at
/// phase `phi_k`; the unknown is the traceless part of each block.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: CsrMatrix,
    pub rhs: DVector<C64>,
    pub grid: PhaseGrid,
    /// Liouville-space dimension of one block.
    pub block_dim: usize,
    pub omega_mw: f64,
    /// `-i [H0, .] + R + shift`, common to every block.
    static_block: Superoperator,
    /// `-i [H1, .]` for the drive at phase zero, `H(phi) = H0 + cos(phi) H1`.
    drive_block: Superoperator,
    n_electrons: usize,
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Assembles `-i H(phi_k) rho_k + R (rho_k - rho_eq) + omega_mw (D (x) 1) rho = 0`
/// with the laboratory-frame cosine drive.
pub fn assemble_fokker_planck(
    sys: &SpinSystem,
    b0: f64,
    omega_mw: f64,
    grid: &PhaseGrid,
    r: &Superoperator,
    rho_eq: &Operator,
) -> Result<BlockSystem> {
    let h0 = static_hamiltonian(sys, b0)?;
    let dim = h0.nrows();
    let b = dim * dim;
    if r.nrows() != b || rho_eq.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: b,
            found: r.nrows(),
        });
    }
    let minus_i = C64::new(0.0, -1.0);
    let mut static_block = commutation_superoperator(&h0)? * minus_i + r;
    for (i, j, w) in trace_shift(dim, shift_scale(r)) {
        static_block[(i, j)] += w;
    }
    let drive_block = commutation_superoperator(&mw_hamiltonian(sys, 0.0)?)? * minus_i;
    let n = grid.len();

    let mut triplets = Vec::new();
    for (k, phi) in grid.phases.iter().enumerate() {
        let block = &static_block + &drive_block * c(phi.cos());
        for j in 0..b {
            for i in 0..b {
                let v = block[(i, j)];
                if v != c(0.0) {
                    triplets.push((k * b + i, k * b + j, v));
                }
            }
        }
        for l in 0..n {
            let d = omega_mw * grid.diff_matrix[(k, l)];
            if d != 0.0 {
                triplets.extend((0..b).map(|i| (k * b + i, l * b + i, c(d))));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(n * b, triplets)?;
    let source = r * vectorize(rho_eq);
    let rhs = DVector::from_fn(n * b, |i, _| source[i % b]);
    Ok(BlockSystem {
        matrix,
        rhs,
        grid: grid.clone(),
        block_dim: b,
        omega_mw,
        static_block,
        drive_block,
        n_electrons: sys.n_electrons(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PreconditionerKind {
    /// Incomplete LU of the block-diagonal part.
    BlockDiagonalIlu,
    /// Incomplete LU of the whole block system.
    Ilu,
    /// Exact inverse assembled in the Fourier-harmonic basis of the phase grid.
    #[default]
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabSolverOptions {
    pub gmres: GmresOptions,
    pub preconditioner: PreconditionerKind,
    pub initial_grid_points: usize,
}

impl Default for LabSolverOptions {
    fn default() -> Self {
        Self {
            gmres: GmresOptions {
                restart: 60,
                max_iterations: 2000,
                tolerance: 1e-10,
            },
            preconditioner: PreconditionerKind::default(),
            initial_grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Relative residual that rounding alone produces when evaluating `A x`.
///
/// The commutator with the electron Zeeman Hamiltonian and the phase
/// derivative are both of order `omega_mw` and cancel on resonant
/// coherences, while the source `R rho_eq` scales with the much slower
/// relaxation rates, so this floor can exceed [`RESIDUAL_TOLERANCE`].
pub fn rounding_floor(a: &CsrMatrix, x: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let scale = b.norm();
    if scale == 0.0 {
        return 0.0;
    }
    16.0 * f64::EPSILON * (a.abs_mul_vec(x).norm() + scale) / scale
}

fn acceptable(a: &CsrMatrix, x: &DVector<C64>, b: &DVector<C64>) -> (f64, bool) {
    let residual = relative_residual(&(a.mul_vec(x) - b), b);
    (
        residual,
        residual <= RESIDUAL_TOLERANCE.max(rounding_floor(a, x, b)),
    )
}

/// Solves the block system and averages the orbit over the phase grid.
///
/// A solution is accepted when its relative residual is below
/// [`RESIDUAL_TOLERANCE`] or at the [`rounding_floor`]. If GMRES misses
/// both within its budget the system is solved by dense LU instead and a
/// warning is logged.
pub fn solve_lab_frame(system: &BlockSystem, options: &LabSolverOptions) -> Result<SteadyState> {
    let pre: Box<dyn Preconditioner> = match options.preconditioner {
        PreconditionerKind::BlockDiagonalIlu => Box::new(Ilu0::new(&block_diagonal(system)?)?),
        PreconditionerKind::Ilu => Box::new(Ilu0::new(&system.matrix)?),
        PreconditionerKind::Harmonic => Box::new(HarmonicPreconditioner::new(system)?),
    };
    let outcome = gmres(
        &system.matrix,
        &system.rhs,
        None,
        pre.as_ref(),
        &options.gmres,
    );
    let (residual, ok) = acceptable(&system.matrix, &outcome.x, &system.rhs);
    let (x, residual, iterations) = if ok {
        (outcome.x, residual, outcome.iterations)
    } else {
        warn!(
            "GMRES reached relative residual {:e} after {} iterations; falling back to a direct solve",
            outcome.relative_residual, outcome.iterations
        );
        let x = system
            .matrix
            .to_dense()
            .lu()
            .solve(&system.rhs)
            .ok_or_else(|| Error::Singular("Fokker-Planck block system".into()))?;
        let (residual, ok) = acceptable(&system.matrix, &x, &system.rhs);
        if !ok {
            return Err(Error::NotConverged {
                residual,
                iterations: outcome.iterations,
            });
        }
        (x, residual, outcome.iterations)
    };

    let b = system.block_dim;
    let dim = (b as f64).sqrt().round() as usize;
    let mixed = identity(dim) * c(1.0 / dim as f64);
    let orbit: Vec<Operator> = (0..system.grid.len())
        .map(|k| Ok(unvectorize(&x.rows(k * b, b).into_owned())? + &mixed))
        .collect::<Result<_>>()?;
    let mut average = Operator::zeros(dim, dim);
    for rho in &orbit {
        average += rho;
    }
    average /= c(orbit.len() as f64);
    Ok(SteadyState::new(
        average,
        orbit,
        Frame::Laboratory,
        residual,
        iterations,
        system.n_electrons,
    ))
}

fn block_diagonal(system: &BlockSystem) -> Result<CsrMatrix> {
    let b = system.block_dim;
    let triplets = (0..system.dim())
        .flat_map(|i| {
            system
                .matrix
                .row(i)
                .filter(move |&(j, _)| j / b == i / b)
                .map(move |(j, v)| (i, j, v))
        })
        .collect();
    CsrMatrix::from_triplets(system.dim(), triplets)
}

/// Direct inverse of the block system in the discrete Fourier basis of the
/// phase grid, where the differentiation matrix is diagonal and the cosine
/// drive couples neighbouring harmonics only. Harmonic `m` obeys
/// `(A + i m w) x_m + C (x_{m-1} + x_{m+1}) = r_m` with `C` half the drive
/// generator, cyclic in `m`. The open chain of non-Nyquist harmonics is
/// factorised by block elimination and the Nyquist harmonic, which closes
/// the cycle, is eliminated through its Schur complement.
struct HarmonicPreconditioner {
    n: usize,
    b: usize,
    /// Harmonic indices along the open chain, `-n/2+1 ..= n/2-1` in DFT slots.
    chain: Vec<usize>,
    coupling: DMatrix<C64>,
    /// LU of the eliminated chain pivots.
    pivots: Vec<nalgebra::linalg::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// Chain solution for the unit coupling to the Nyquist block.
    chain_response: Vec<DMatrix<C64>>,
    schur: nalgebra::linalg::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    twiddle: Vec<C64>,
}

impl HarmonicPreconditioner {
    fn new(system: &BlockSystem) -> Result<Self> {
        let n = system.grid.len();
        let b = system.block_dim;
        let coupling = &system.drive_block * c(0.5);
        let harmonic = |slot: usize| -> f64 {
            let m = if slot == n / 2 {
                0
            } else if slot > n / 2 {
                slot as i64 - n as i64
            } else {
                slot as i64
            };
            m as f64
        };
        let block = |slot: usize| -> DMatrix<C64> {
            let mut a = system.static_block.clone();
            let shift = C64::new(0.0, harmonic(slot) * system.omega_mw);
            for i in 0..b {
                a[(i, i)] += shift;
            }
            a
        };
        let chain: Vec<usize> = (1..n).map(|s| (n / 2 + s) % n).collect();

        // forward elimination of the chain with the Nyquist coupling carried
        // as extra right-hand sides at both ends
        let len = chain.len();
        let mut pivots = Vec::with_capacity(len);
        let mut reduced_pivot = block(chain[0]);
        for idx in 0..len {
            if idx > 0 {
                let prev: &nalgebra::linalg::LU<C64, nalgebra::Dyn, nalgebra::Dyn> =
                    &pivots[idx - 1];
                let update = &coupling * prev.solve(&coupling).ok_or_else(singular)?;
                reduced_pivot = block(chain[idx]) - update;
            }
            pivots.push(reduced_pivot.clone().lu());
        }
        let mut this = Self {
            n,
            b,
            chain,
            coupling,
            pivots,
            chain_response: Vec::new(),
            schur: DMatrix::<C64>::identity(1, 1).lu(),
            twiddle: (0..n)
                .map(|j| C64::from_polar(1.0, -TWO_PI * j as f64 / n as f64))
                .collect(),
        };
        // chain response to the Nyquist block: T^-1 E with E nonzero at both ends
        let mut e = vec![DMatrix::<C64>::zeros(b, b); len];
        e[0] = this.coupling.clone();
        e[len - 1] = this.coupling.clone();
        this.chain_response = this.chain_solve(e)?;
        let schur = block(n / 2)
            - &this.coupling * (&this.chain_response[0] + &this.chain_response[len - 1]);
        this.schur = schur.lu();
        Ok(this)
    }

    fn chain_solve(&self, mut rhs: Vec<DMatrix<C64>>) -> Result<Vec<DMatrix<C64>>> {
        let len = rhs.len();
        for idx in 1..len {
            let carried = &self.coupling
                * self.pivots[idx - 1]
                    .solve(&rhs[idx - 1])
                    .ok_or_else(singular)?;
            rhs[idx] -= carried;
        }
        let mut x = vec![DMatrix::<C64>::zeros(0, 0); len];
        for idx in (0..len).rev() {
            let mut y = rhs[idx].clone();
            if idx + 1 < len {
                y -= &self.coupling * &x[idx + 1];
            }
            x[idx] = self.pivots[idx].solve(&y).ok_or_else(singular)?;
        }
        Ok(x)
    }

    fn solve_harmonics(&self, r: Vec<DMatrix<C64>>) -> Result<Vec<DMatrix<C64>>> {
        let nyquist = self.n / 2;
        let chain_rhs: Vec<DMatrix<C64>> = self.chain.iter().map(|&s| r[s].clone()).collect();
        let free = self.chain_solve(chain_rhs)?;
        let len = free.len();
        let s_rhs = &r[nyquist] - &self.coupling * (&free[0] + &free[len - 1]);
        let y = self.schur.solve(&s_rhs).ok_or_else(singular)?;
        let mut out = vec![DMatrix::<C64>::zeros(0, 0); self.n];
        for (idx, &slot) in self.chain.iter().enumerate() {
            out[slot] = &free[idx] - &self.chain_response[idx] * &y;
        }
        out[nyquist] = y;
        Ok(out)
    }
}

fn singular() -> Error {
    Error::Singular("harmonic block of the Fokker-Planck system".into())
}

impl Preconditioner for HarmonicPreconditioner {
    fn apply(&self, r: &DVector<C64>) -> DVector<C64> {
        let (n, b) = (self.n, self.b);
        // forward DFT over the grid index: r_m = (1/n) sum_k r_k e^{-i m phi_k}
        let harmonics: Vec<DMatrix<C64>> = (0..n)
            .map(|m| {
                let mut acc = DMatrix::<C64>::zeros(b, 1);
                for k in 0..n {
                    acc += r.rows(k * b, b) * self.twiddle[(m * k) % n];
                }
                acc / c(n as f64)
            })
            .collect();
        let x = match self.solve_harmonics(harmonics) {
            Ok(x) => x,
            Err(_) => return r.clone(),
        };
        let mut out = DVector::zeros(n * b);
        for k in 0..n {
            let mut acc = DVector::<C64>::zeros(b);
            for (m, xm) in x.iter().enumerate() {
                acc += xm.column(0) * self.twiddle[(m * k) % n].conj();
            }
            out.rows_mut(k * b, b).copy_from(&acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn zero_drive(mut sys: SpinSystem) -> SpinSystem {
        sys.mw_nutation_hz = 0.0;
        sys
    }

    #[test]
    fn rotating_frame_thermal_fixed_point() {
        for sys in [fixtures::table1(), fixtures::figure1()] {
            let ctx = FieldContext::new(&zero_drive(sys), 14.1).unwrap();
            let ss = ctx.rotating(-0.62e6).unwrap();
            let dev =
                frobenius_norm(&(&ss.rho - &ctx.rho_eq_rot)) / frobenius_norm(&ctx.rho_eq_rot);
            assert!(dev < 1e-10, "deviation {dev}");
        }
    }

    #[test]
    fn lab_frame_thermal_fixed_point() {
        let ctx = FieldContext::new(&zero_drive(fixtures::table1()), 14.1).unwrap();
        let ss = ctx
            .laboratory_on_grid(
                microwave_frequency(&ctx.sys, 14.1, 0.0),
                8,
                &LabSolverOptions::default(),
            )
            .unwrap();
        for rho in &ss.orbit {
            let dev = frobenius_norm(&(rho - &ctx.rho_eq)) / frobenius_norm(&ctx.rho_eq);
            assert!(dev < 1e-8, "deviation {dev}");
        }
    }

    #[test]
    fn static_limit_decouples() {
        let sys = fixtures::figure1();
        let ctx = FieldContext::new(&sys, 14.1).unwrap();
        let grid = PhaseGrid::new(8).unwrap();
        let system =
            assemble_fokker_planck(&sys, 14.1, 0.0, &grid, &ctx.r_lab, &ctx.rho_eq).unwrap();
        assert_eq!(system.dim(), 8 * 16);
        let b = system.block_dim;
        for i in 0..system.dim() {
            assert!(system
                .matrix
                .row(i)
                .all(|(j, v)| j / b == i / b || v == c(0.0)));
        }
    }

    #[test]
    fn block_dimension_for_biradical() {
        let sys = fixtures::table1();
        let ctx = FieldContext::new(&sys, 14.1).unwrap();
        let grid = PhaseGrid::new(32).unwrap();
        let system =
            assemble_fokker_planck(&sys, 14.1, 1e12, &grid, &ctx.r_lab, &ctx.rho_eq).unwrap();
        assert_eq!(system.dim(), 2048);
    }

    #[test]
    fn harmonic_preconditioner_is_exact() {
        let sys = fixtures::figure1();
        let ctx = FieldContext::new(&sys, 14.1).unwrap();
        let grid = PhaseGrid::new(16).unwrap();
        let omega = microwave_frequency(&sys, 14.1, 1e6);
        let system =
            assemble_fokker_planck(&sys, 14.1, omega, &grid, &ctx.r_lab, &ctx.rho_eq).unwrap();
        let pre = HarmonicPreconditioner::new(&system).unwrap();
        let x = pre.apply(&system.rhs);
        let res = (system.matrix.mul_vec(&x) - &system.rhs).norm() / system.rhs.norm();
        let floor = rounding_floor(&system.matrix, &x, &system.rhs);
        assert!(res < 1e-8_f64.max(floor), "residual {res} floor {floor}");
    }

    #[test]
    fn steady_states_are_physical() {
        let ctx = FieldContext::new(&fixtures::table1(), 14.1).unwrap();
        let ss = ctx.rotating(-0.62e6).unwrap();
        assert!(ss.trace_defect() < 1e-8);
        assert!(ss.hermiticity_defect() < 1e-8);
        assert!(ss.residual < RESIDUAL_TOLERANCE);
    }
}
