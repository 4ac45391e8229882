//! Pure states on a uniform position lattice, weighted branch ensembles, and
//! distance metrics computed on the low-rank span of the branch vectors.
//!
//! Internal unit system: `ħ = 1`. Masses stay explicit so that kinetic
//! phases and momentum kicks keep their physical scaling.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::Spectral;

/// Reduced Planck constant in internal units.
pub const HBAR: f64 = 1.0;

/// Relative amplitude allowed at the grid edges before a state is rejected.
pub const BOUNDARY_GUARD: f64 = 1e-8;

/// Allowed deviation of the L2 norm from unity.
pub const NORM_TOL: f64 = 1e-10;

/// Allowed deviation of ensemble weights from a unit sum.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Uniform 1-D position lattice with periodic spectral transforms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n_points: usize,
    x_min: f64,
    x_max: f64,
}

impl Grid {
    /// `n_points` must be a power of two and the extent strictly positive.
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 2, got {n_points}"
            )));
        }
        if !(x_max - x_min).is_finite() || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self {
            n_points,
            x_min,
            x_max,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Lattice spacing `(x_max - x_min)/n_points`.
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    /// Momentum lattice spacing `2π/(n_points·dx)`.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.n_points as f64 * self.dx())
    }

    /// Position of lattice site `i`.
    pub fn position(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    /// All lattice positions.
    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.position(i))
    }
}

/// First and second moments of a state: `(⟨x⟩, ⟨p⟩, Vxx, Vxp, Vpp)`.
///
/// `Vxp` is the symmetrized covariance `½⟨{x̂−⟨x⟩, p̂−⟨p⟩}⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub vxx: f64,
    pub vxp: f64,
    pub vpp: f64,
}

/// Normalized complex wavefunction sampled on a [`Grid`].
#[derive(Clone, Debug)]
pub struct GridState {
    grid: Grid,
    mass: f64,
    amplitudes: Vec<Complex64>,
}

impl GridState {
    /// Wraps raw amplitudes, enforcing the norm and boundary invariants.
    pub fn new(grid: Grid, mass: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "amplitude array length {} does not match grid size {}",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidHamiltonian(format!(
                "mass must be positive, got {mass}"
            )));
        }
        let state = Self {
            grid,
            mass,
            amplitudes,
        };
        state.check_invariants()?;
        Ok(state)
    }

    /// Normalized Gaussian wavepacket with position variance `sigma²`:
    /// `ψ(x) ∝ exp(−(x−x0)²/(4σ²) + i p0 x/ħ)`.
    pub fn make_gaussian(grid: Grid, x0: f64, p0: f64, sigma: f64, mass: f64) -> Result<Self> {
        Self::gaussian_with_moments(grid, mass, x0, p0, sigma * sigma, 0.0)
    }

    /// Pure Gaussian with prescribed first moments and position-sector
    /// covariances; the momentum variance follows from purity,
    /// `Vpp = (ħ²/4 + Vxp²)/Vxx`.
    pub fn gaussian_with_moments(
        grid: Grid,
        mass: f64,
        mean_x: f64,
        mean_p: f64,
        vxx: f64,
        vxp: f64,
    ) -> Result<Self> {
        if !(vxx > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "position variance must be positive, got {vxx}"
            )));
        }
        let sigma = vxx.sqrt();
        let dx = grid.dx();
        if sigma < 4.0 * dx {
            return Err(Error::GridTooCoarse {
                sigma,
                min_sigma: 4.0 * dx,
            });
        }
        if mean_x - 8.0 * sigma < grid.x_min() || mean_x + 8.0 * sigma > grid.x_max() {
            return Err(Error::BoundaryClipping(format!(
                "wavepacket support [{:.3}, {:.3}] exceeds grid [{:.3}, {:.3}]",
                mean_x - 8.0 * sigma,
                mean_x + 8.0 * sigma,
                grid.x_min(),
                grid.x_max()
            )));
        }
        // exp(-(β_r + i β_i)(x − x̄)² + i p̄ x/ħ) has Vxx = 1/(4β_r) and
        // Vxp = −ħ β_i/(2 β_r).
        let beta_r = 1.0 / (4.0 * vxx);
        let beta_i = -vxp / (2.0 * HBAR * vxx);
        let mut amplitudes: Vec<Complex64> = grid
            .positions()
            .map(|x| {
                let d = x - mean_x;
                let arg = Complex64::new(-beta_r * d * d, -beta_i * d * d + mean_p * x / HBAR);
                arg.exp()
            })
            .collect();
        normalize(&mut amplitudes, grid.dx());
        Self::new(grid, mass, amplitudes)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// L2 norm `√(Σ|ψᵢ|²·dx)`.
    pub fn norm(&self) -> f64 {
        (self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// Norm and boundary-amplitude invariants; called after construction and
    /// after every propagation step.
    pub fn check_invariants(&self) -> Result<()> {
        check_amplitude_invariants(&self.grid, &self.amplitudes)
    }

    /// `⟨a|b⟩ = Σ conj(aᵢ) bᵢ dx`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx())
    }

    /// `|⟨a|b⟩|²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

fn normalize(amplitudes: &mut [Complex64], dx: f64) {
    let norm = (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx).sqrt();
    for a in amplitudes.iter_mut() {
        *a /= norm;
    }
}

/// Norm and wrap-around guards on a raw amplitude buffer; used by the
/// propagators after every step without building an intermediate state.
pub(crate) fn check_amplitude_invariants(grid: &Grid, amplitudes: &[Complex64]) -> Result<()> {
    let mut norm_sqr = 0.0;
    let mut max_abs_sqr = 0.0_f64;
    for a in amplitudes {
        let m = a.norm_sqr();
        norm_sqr += m;
        if m > max_abs_sqr {
            max_abs_sqr = m;
        }
    }
    norm_sqr *= grid.dx();
    let drift = (norm_sqr.sqrt() - 1.0).abs();
    if !(drift <= NORM_TOL) {
        return Err(Error::NormViolation(drift));
    }
    let max_abs = max_abs_sqr.sqrt();
    let left = amplitudes[0].norm();
    let right = amplitudes[amplitudes.len() - 1].norm();
    if left >= BOUNDARY_GUARD * max_abs || right >= BOUNDARY_GUARD * max_abs {
        return Err(Error::BoundaryClipping(format!(
            "edge amplitudes ({:.3e}, {:.3e}) exceed {:.0e} of peak {:.3e}",
            left, right, BOUNDARY_GUARD, max_abs
        )));
    }
    Ok(())
}

/// `⟨x⟩ = Σ xᵢ|ψᵢ|² dx`.
pub fn expectation_x(psi: &GridState) -> f64 {
    let dx = psi.grid().dx();
    psi.grid()
        .positions()
        .zip(psi.amplitudes().iter())
        .map(|(x, a)| x * a.norm_sqr())
        .sum::<f64>()
        * dx
}

/// `⟨p⟩` via the spectral derivative, `ħ Σ Im[conj(ψᵢ) ψ′ᵢ] dx`.
pub fn expectation_p(psi: &GridState) -> f64 {
    let mut sp = Spectral::new(&psi.grid());
    let dpsi = sp.derivative(psi.amplitudes());
    HBAR * psi
        .amplitudes()
        .iter()
        .zip(dpsi.iter())
        .map(|(a, d)| (a.conj() * d).im)
        .sum::<f64>()
        * psi.grid().dx()
}

/// `Vxx = ⟨x²⟩ − ⟨x⟩²`.
pub fn variance_x(psi: &GridState) -> f64 {
    let dx = psi.grid().dx();
    let mean = expectation_x(psi);
    psi.grid()
        .positions()
        .zip(psi.amplitudes().iter())
        .map(|(x, a)| (x - mean) * (x - mean) * a.norm_sqr())
        .sum::<f64>()
        * dx
}

/// All five moments in one pass (single spectral derivative).
pub fn measure_moments(psi: &GridState) -> Moments {
    let dx = psi.grid().dx();
    let mut sp = Spectral::new(&psi.grid());
    let dpsi = sp.derivative(psi.amplitudes());

    let mean_x = expectation_x(psi);
    let mut mean_p = 0.0;
    let mut p_sqr = 0.0;
    let mut vxx = 0.0;
    let mut cross = 0.0;
    for ((x, a), d) in psi
        .grid()
        .positions()
        .zip(psi.amplitudes().iter())
        .zip(dpsi.iter())
    {
        let im = (a.conj() * d).im;
        mean_p += im;
        p_sqr += d.norm_sqr();
        let dev = x - mean_x;
        vxx += dev * dev * a.norm_sqr();
        cross += dev * im;
    }
    mean_p *= HBAR * dx;
    p_sqr *= HBAR * HBAR * dx;
    vxx *= dx;
    cross *= HBAR * dx;
    Moments {
        mean_x,
        mean_p,
        vxx,
        vxp: cross,
        vpp: p_sqr - mean_p * mean_p,
    }
}

/// How an ensemble's branches respond to the self-attraction term.
///
/// `Coupled`: all branches share the ensemble mean position (undetected
/// entangled evolution). `Independent`: each branch is driven by its own mean
/// (post-detection conditional evolution).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolutionMode {
    Coupled,
    Independent,
}

/// One weighted branch of an ensemble.
#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: f64,
    pub state: GridState,
}

/// Weighted list of pure states sharing one grid and mass.
///
/// Represents both an entangled state (one branch per orthonormal pointer
/// state, `mode = Coupled`) and a proper mixture `ρ = Σₙ pₙ|ψₙ⟩⟨ψₙ|`
/// (`mode = Independent`).
#[derive(Clone, Debug)]
pub struct BranchEnsemble {
    branches: Vec<Branch>,
    mode: EvolutionMode,
}

impl BranchEnsemble {
    pub fn new(branches: Vec<Branch>, mode: EvolutionMode) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::WeightSumViolation("ensemble has no branches".into()));
        }
        let mut sum = 0.0;
        for b in &branches {
            if !(b.weight >= 0.0) {
                return Err(Error::WeightSumViolation(format!(
                    "negative weight {}",
                    b.weight
                )));
            }
            sum += b.weight;
        }
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::WeightSumViolation(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        let grid = branches[0].state.grid();
        let mass = branches[0].state.mass();
        for b in &branches[1..] {
            if b.state.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if b.state.mass() != mass {
                return Err(Error::MassMismatch);
            }
        }
        Ok(Self { branches, mode })
    }

    /// Single-branch ensemble with unit weight.
    pub fn single(state: GridState, mode: EvolutionMode) -> Self {
        Self {
            branches: vec![Branch { weight: 1.0, state }],
            mode,
        }
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn mode(&self) -> EvolutionMode {
        self.mode
    }

    /// Same branches under different evolution semantics.
    pub fn with_mode(mut self, mode: EvolutionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn grid(&self) -> Grid {
        self.branches[0].state.grid()
    }

    pub fn mass(&self) -> f64 {
        self.branches[0].state.mass()
    }

    /// `⟨x̂⟩ = Σₙ pₙ ⟨x⟩ₙ` — exact for branches tagged by orthonormal
    /// pointer states. Summed in branch order for reproducibility.
    pub fn ensemble_mean_x(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.weight * expectation_x(&b.state))
            .sum()
    }

    /// Purity `Tr ρ² = Σₙₘ pₙ pₘ |⟨ψₙ|ψₘ⟩|²` of the reduced state.
    pub fn purity(&self) -> f64 {
        let k = self.branches.len();
        let mut total = 0.0;
        for i in 0..k {
            for j in 0..k {
                let overlap = self.branches[i]
                    .state
                    .inner(&self.branches[j].state)
                    .expect("branches share a grid by construction");
                total += self.branches[i].weight * self.branches[j].weight * overlap.norm_sqr();
            }
        }
        total
    }
}

/// Trace distance `½‖ρ_a − ρ_b‖₁` between two low-rank ensembles.
///
/// Works on the joint span of all branch vectors: the Gram matrix is
/// eigendecomposed to an orthonormal basis, both density operators are
/// projected onto it, and the Hermitian difference (dimension ≤ total branch
/// count) is diagonalized. Exact up to roundoff because the difference is
/// supported on that span.
pub fn trace_distance(a: &BranchEnsemble, b: &BranchEnsemble) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let states: Vec<&GridState> = a
        .branches()
        .iter()
        .chain(b.branches().iter())
        .map(|br| &br.state)
        .collect();
    let signed: Vec<f64> = a
        .branches()
        .iter()
        .map(|br| br.weight)
        .chain(b.branches().iter().map(|br| -br.weight))
        .collect();
    let m = states.len();

    let mut gram = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = states[i].inner(states[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v.conj();
        }
    }

    let eig = SymmetricEigen::new(gram);
    let lam_max = eig.eigenvalues.iter().fold(0.0_f64, |acc, &l| acc.max(l));
    if lam_max <= 0.0 {
        return Ok(0.0);
    }
    let tol = lam_max * 1e-12;
    let kept: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > tol).collect();
    let r = kept.len();

    // Coefficients of state l in the orthonormal basis: D[α, l] = √λ_α · conj(U[l, α]).
    let mut coeff = DMatrix::<Complex64>::zeros(r, m);
    for (row, &alpha) in kept.iter().enumerate() {
        let s = eig.eigenvalues[alpha].sqrt();
        for l in 0..m {
            coeff[(row, l)] = eig.eigenvectors[(l, alpha)].conj() * s;
        }
    }

    // Projected difference Δ = Σ_l w_l |c_l⟩⟨c_l|.
    let mut delta = DMatrix::<Complex64>::zeros(r, r);
    for l in 0..m {
        let w = signed[l];
        for i in 0..r {
            for j in 0..r {
                delta[(i, j)] += w * coeff[(i, l)] * coeff[(j, l)].conj();
            }
        }
    }

    let spectrum = SymmetricEigen::new(delta);
    let sum_abs: f64 = spectrum.eigenvalues.iter().map(|l| l.abs()).sum();
    Ok((0.5 * sum_abs).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> Grid {
        Grid::new(1024, -20.0, 20.0).unwrap()
    }

    fn gaussian(x0: f64, p0: f64, sigma: f64) -> GridState {
        GridState::make_gaussian(grid(), x0, p0, sigma, 1.0).unwrap()
    }

    #[test]
    fn grid_rejects_non_power_of_two() {
        assert!(matches!(
            Grid::new(1000, -10.0, 10.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            Grid::new(256, 5.0, -5.0),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn centered_gaussian_is_normalized_with_zero_mean() {
        let psi = gaussian(0.0, 0.0, 1.0);
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(expectation_x(&psi), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn displaced_gaussian_has_requested_mean() {
        let psi = gaussian(2.0, 0.0, 1.0);
        assert_abs_diff_eq!(expectation_x(&psi), 2.0, epsilon = 1e-10);
        let psi = gaussian(1.5, 0.0, 1.0);
        assert_abs_diff_eq!(expectation_x(&psi), 1.5, epsilon = 1e-10);
    }

    #[test]
    fn boosted_gaussian_has_requested_momentum() {
        let psi = gaussian(0.0, 3.0, 1.0);
        assert_abs_diff_eq!(expectation_p(&psi), 3.0, epsilon = 1e-8);
    }

    #[test]
    fn gaussian_variance_matches_width() {
        let psi = gaussian(0.0, 0.0, 1.0);
        assert_abs_diff_eq!(variance_x(&psi), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn real_state_has_zero_momentum() {
        let psi = gaussian(0.5, 0.0, 1.2);
        assert_abs_diff_eq!(expectation_p(&psi), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn momentum_kick_shifts_mean_p_exactly() {
        let psi = gaussian(0.0, 0.0, 1.0);
        let lambda = 2.3;
        let kicked: Vec<Complex64> = psi
            .grid()
            .positions()
            .zip(psi.amplitudes().iter())
            .map(|(x, a)| a * Complex64::new(0.0, lambda * x / HBAR).exp())
            .collect();
        let kicked = GridState::new(psi.grid(), psi.mass(), kicked).unwrap();
        assert_abs_diff_eq!(
            expectation_p(&kicked) - expectation_p(&psi),
            lambda,
            epsilon = 1e-10
        );
    }

    #[test]
    fn symmetric_superposition_has_zero_mean() {
        let a = 3.0;
        let plus = gaussian(a, 0.0, 1.0);
        let minus = gaussian(-a, 0.0, 1.0);
        let mut amps: Vec<Complex64> = plus
            .amplitudes()
            .iter()
            .zip(minus.amplitudes().iter())
            .map(|(p, m)| p + m)
            .collect();
        normalize(&mut amps, plus.grid().dx());
        let sup = GridState::new(plus.grid(), 1.0, amps).unwrap();
        assert_abs_diff_eq!(expectation_x(&sup), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn unnormalized_amplitudes_are_rejected() {
        let g = grid();
        let amps = vec![Complex64::new(1.0, 0.0); g.n_points()];
        assert!(matches!(
            GridState::new(g, 1.0, amps),
            // A flat array violates the boundary guard too; norm is checked
            // first.
            Err(Error::NormViolation(_))
        ));
    }

    #[test]
    fn wrap_around_support_is_rejected() {
        let g = grid();
        let dx = g.dx();
        // Normalized but flat: the edges carry the peak amplitude.
        let v = 1.0 / (g.n_points() as f64 * dx).sqrt();
        let amps = vec![Complex64::new(v, 0.0); g.n_points()];
        assert!(matches!(
            GridState::new(g, 1.0, amps),
            Err(Error::BoundaryClipping(_))
        ));
    }

    #[test]
    fn too_narrow_gaussian_is_rejected() {
        let g = Grid::new(256, -20.0, 20.0).unwrap();
        let err = GridState::make_gaussian(g, 0.0, 0.0, 0.1, 1.0);
        assert!(matches!(err, Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn gaussian_near_edge_is_rejected() {
        let err = GridState::make_gaussian(grid(), 15.0, 0.0, 1.0, 1.0);
        assert!(matches!(err, Err(Error::BoundaryClipping(_))));
    }

    #[test]
    fn gaussian_with_covariance_reproduces_moments() {
        let m = Moments {
            mean_x: 0.7,
            mean_p: -1.1,
            vxx: 1.3,
            vxp: 0.4,
            vpp: (HBAR * HBAR / 4.0 + 0.4 * 0.4) / 1.3,
        };
        let psi = GridState::gaussian_with_moments(grid(), 1.0, m.mean_x, m.mean_p, m.vxx, m.vxp)
            .unwrap();
        let got = measure_moments(&psi);
        assert_abs_diff_eq!(got.mean_x, m.mean_x, epsilon = 1e-9);
        assert_abs_diff_eq!(got.mean_p, m.mean_p, epsilon = 1e-9);
        assert_abs_diff_eq!(got.vxx, m.vxx, epsilon = 1e-9);
        assert_abs_diff_eq!(got.vxp, m.vxp, epsilon = 1e-9);
        assert_abs_diff_eq!(got.vpp, m.vpp, epsilon = 1e-9);
    }

    #[test]
    fn pure_gaussian_saturates_uncertainty() {
        let psi = gaussian(0.0, 1.0, 0.8);
        let m = measure_moments(&psi);
        assert_abs_diff_eq!(
            m.vxx * m.vpp - m.vxp * m.vxp,
            HBAR * HBAR / 4.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn ensemble_weights_must_sum_to_one() {
        let psi = gaussian(0.0, 0.0, 1.0);
        let err = BranchEnsemble::new(
            vec![
                Branch {
                    weight: 0.5,
                    state: psi.clone(),
                },
                Branch {
                    weight: 0.6,
                    state: psi,
                },
            ],
            EvolutionMode::Independent,
        );
        assert!(matches!(err, Err(Error::WeightSumViolation(_))));
    }

    #[test]
    fn single_branch_mean_equals_state_mean() {
        let psi = gaussian(1.2, 0.0, 1.0);
        let e = BranchEnsemble::single(psi.clone(), EvolutionMode::Independent);
        assert_abs_diff_eq!(e.ensemble_mean_x(), expectation_x(&psi), epsilon = 1e-14);
    }

    #[test]
    fn ensemble_mean_is_weighted_average() {
        let e = BranchEnsemble::new(
            vec![
                Branch {
                    weight: 0.3,
                    state: gaussian(1.0, 0.0, 1.0),
                },
                Branch {
                    weight: 0.7,
                    state: gaussian(2.0, 0.0, 1.0),
                },
            ],
            EvolutionMode::Independent,
        )
        .unwrap();
        assert_abs_diff_eq!(e.ensemble_mean_x(), 1.7, epsilon = 1e-9);

        let symmetric = BranchEnsemble::new(
            vec![
                Branch {
                    weight: 0.5,
                    state: gaussian(2.0, 0.0, 1.0),
                },
                Branch {
                    weight: 0.5,
                    state: gaussian(-2.0, 0.0, 1.0),
                },
            ],
            EvolutionMode::Independent,
        )
        .unwrap();
        assert_abs_diff_eq!(symmetric.ensemble_mean_x(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn trace_distance_of_identical_ensembles_vanishes() {
        let e = BranchEnsemble::new(
            vec![
                Branch {
                    weight: 0.4,
                    state: gaussian(1.0, 0.5, 1.0),
                },
                Branch {
                    weight: 0.6,
                    state: gaussian(-1.0, 0.0, 1.2),
                },
            ],
            EvolutionMode::Independent,
        )
        .unwrap();
        assert!(trace_distance(&e, &e).unwrap() <= 1e-12);
    }

    #[test]
    fn orthogonal_pure_states_have_unit_distance() {
        let a = BranchEnsemble::single(gaussian(-6.0, 0.0, 1.0), EvolutionMode::Independent);
        let b = BranchEnsemble::single(gaussian(6.0, 0.0, 1.0), EvolutionMode::Independent);
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn pure_state_distance_matches_overlap_formula() {
        // Momentum-boosted copy: |⟨ψ|φ⟩|² = exp(−λ²σ²/ħ²); pick λ so the
        // fidelity is exactly 0.5 and check √(1−F) against the Gram route.
        let sigma = 1.0_f64;
        let lambda = (0.5_f64.ln().abs()).sqrt() * HBAR / sigma;
        let a = gaussian(0.0, 0.0, sigma);
        let b = gaussian(0.0, lambda, sigma);
        let fid = a.fidelity(&b).unwrap();
        assert_abs_diff_eq!(fid, 0.5, epsilon = 1e-9);
        let d = trace_distance(
            &BranchEnsemble::single(a, EvolutionMode::Independent),
            &BranchEnsemble::single(b, EvolutionMode::Independent),
        )
        .unwrap();
        assert_abs_diff_eq!(d, (1.0 - fid).sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(d, 0.5_f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn trace_distance_rejects_grid_mismatch() {
        let other = Grid::new(512, -20.0, 20.0).unwrap();
        let a = BranchEnsemble::single(gaussian(0.0, 0.0, 1.0), EvolutionMode::Independent);
        let b = BranchEnsemble::single(
            GridState::make_gaussian(other, 0.0, 0.0, 1.0, 1.0).unwrap(),
            EvolutionMode::Independent,
        );
        assert!(matches!(trace_distance(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn purity_is_one_for_identical_branches() {
        let psi = gaussian(0.0, 0.0, 1.0);
        let e = BranchEnsemble::new(
            vec![
                Branch {
                    weight: 0.5,
                    state: psi.clone(),
                },
                Branch {
                    weight: 0.5,
                    state: psi,
                },
            ],
            EvolutionMode::Independent,
        )
        .unwrap();
        assert_abs_diff_eq!(e.purity(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn purity_of_orthogonal_equal_mixture_is_half() {
        let e = BranchEnsemble::new(
            vec![
                Branch {
                    weight: 0.5,
                    state: gaussian(-6.0, 0.0, 1.0),
                },
                Branch {
                    weight: 0.5,
                    state: gaussian(6.0, 0.0, 1.0),
                },
            ],
            EvolutionMode::Independent,
        )
        .unwrap();
        assert_abs_diff_eq!(e.purity(), 0.5, epsilon = 1e-10);
    }
}
