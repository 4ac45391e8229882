//! Time propagation: Strang-split spectral steps for the linear and
//! self-attracting Schrödinger equations, branch-ensemble propagation in
//! coupled or independent mode, and a closed-form Gaussian moment integrator
//! used as an oracle for the grid propagators.
//!
//! One Strang step is half-kinetic (momentum space) · full potential
//! (position space) · half-kinetic. The potential is
//! `V(x) = ½ m ω₀² x² + ½ m ω_G² (x − x̄)²`, where `x̄` is the state's own
//! mean (independent branches) or the ensemble mean (coupled branches), held
//! frozen within the potential sub-step.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{
    check_amplitude_invariants, Branch, BranchEnsemble, EvolutionMode, Grid, GridState, Moments,
    HBAR,
};
use crate::spectral::Spectral;

/// Harmonic trap plus self-attraction strength. `Ĥ = p̂²/2m + ½ m ω₀² x̂²`
/// with the nonlinear `½ m ω_G² (x̂ − x̄)²` term added by the SNE stepper.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub mass: f64,
    pub trap_omega0: f64,
    pub omega_g: f64,
}

impl HamiltonianSpec {
    pub fn new(mass: f64, trap_omega0: f64, omega_g: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidHamiltonian(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if !(trap_omega0 >= 0.0) || !(omega_g >= 0.0) {
            return Err(Error::InvalidHamiltonian(format!(
                "frequencies must be non-negative, got omega0 = {trap_omega0}, omega_g = {omega_g}"
            )));
        }
        Ok(Self {
            mass,
            trap_omega0,
            omega_g,
        })
    }

    /// Combined frequency `Ω = √(ω₀² + ω_G²)` governing covariance breathing.
    pub fn big_omega(&self) -> f64 {
        (self.trap_omega0 * self.trap_omega0 + self.omega_g * self.omega_g).sqrt()
    }
}

/// Policy for evaluating the self-consistent mean inside one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeanUpdate {
    /// Mean frozen at its value at the start of the step.
    Frozen,
    /// Mean read off after the first half-kinetic sub-step, which carries
    /// the state to the temporal midpoint at second order.
    Midpoint,
    /// Implicit midpoint: iterate the completed step until successive mean
    /// estimates differ by less than `tol`.
    FixedPoint { tol: f64, max_iter: usize },
}

/// Fixed step size plus the mean-update policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub dt: f64,
    pub mean_update: MeanUpdate,
}

impl StepControl {
    /// Resolution guard: `dt · max(ω₀, Ω) ≤ 0.05`.
    pub fn validate(&self, h: &HamiltonianSpec) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidStepControl(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        let fastest = h.trap_omega0.max(h.big_omega());
        if self.dt * fastest > 0.05 {
            return Err(Error::InvalidStepControl(format!(
                "dt * max(omega0, Omega) = {:.3e} exceeds the resolution guard 0.05",
                self.dt * fastest
            )));
        }
        if let MeanUpdate::FixedPoint { tol, max_iter } = self.mean_update {
            if !(tol >= 0.0) || max_iter == 0 {
                return Err(Error::InvalidStepControl(format!(
                    "fixed-point policy needs tol >= 0 and max_iter >= 1, got ({tol}, {max_iter})"
                )));
            }
        }
        Ok(())
    }
}

/// Mean position of a raw amplitude buffer, normalized by its own norm so
/// mid-step roundoff cannot bias it.
fn mean_x_raw(grid: &Grid, amps: &[Complex64]) -> f64 {
    let mut weighted = 0.0;
    let mut norm = 0.0;
    for (i, a) in amps.iter().enumerate() {
        let w = a.norm_sqr();
        weighted += grid.position(i) * w;
        norm += w;
    }
    weighted / norm
}

/// Per-branch stepping engine: FFT plans, kinetic phases, position lattice.
struct Propagator {
    grid: Grid,
    h: HamiltonianSpec,
    dt: f64,
    spectral: Spectral,
    kinetic_half: Vec<Complex64>,
    positions: Vec<f64>,
}

impl Propagator {
    fn new(grid: Grid, h: HamiltonianSpec, dt: f64) -> Self {
        let spectral = Spectral::new(&grid);
        let kinetic_half = spectral
            .wavenumbers()
            .iter()
            .map(|&k| Complex64::new(0.0, -HBAR * k * k * dt / (4.0 * h.mass)).exp())
            .collect();
        let positions = grid.positions().collect();
        Self {
            grid,
            h,
            dt,
            spectral,
            kinetic_half,
            positions,
        }
    }

    /// Half-kinetic sub-step, position space in and out.
    fn half_kinetic(&mut self, amps: &mut [Complex64]) {
        self.spectral.forward(amps);
        for (a, k) in amps.iter_mut().zip(self.kinetic_half.iter()) {
            *a *= k;
        }
        self.spectral.inverse(amps);
    }

    /// Full potential sub-step with the self-attraction centered on `x_bar`.
    fn apply_potential(&self, amps: &mut [Complex64], x_bar: f64) {
        let m = self.h.mass;
        let w0_sq = self.h.trap_omega0 * self.h.trap_omega0;
        let wg_sq = self.h.omega_g * self.h.omega_g;
        for (a, &x) in amps.iter_mut().zip(self.positions.iter()) {
            let dev = x - x_bar;
            let v = 0.5 * m * w0_sq * x * x + 0.5 * m * wg_sq * dev * dev;
            *a *= Complex64::new(0.0, -v * self.dt / HBAR).exp();
        }
    }

    /// One step driven by the branch's own mean.
    fn step_own_mean(&mut self, amps: &mut [Complex64], policy: MeanUpdate) -> Result<()> {
        let x_start = mean_x_raw(&self.grid, amps);
        self.half_kinetic(amps);
        match policy {
            MeanUpdate::Frozen => {
                self.apply_potential(amps, x_start);
                self.half_kinetic(amps);
            }
            MeanUpdate::Midpoint => {
                let x_mid = mean_x_raw(&self.grid, amps);
                self.apply_potential(amps, x_mid);
                self.half_kinetic(amps);
            }
            MeanUpdate::FixedPoint { tol, max_iter } => {
                let saved = amps.to_vec();
                let mut x_guess = mean_x_raw(&self.grid, amps);
                let mut converged = false;
                for _ in 0..max_iter {
                    amps.copy_from_slice(&saved);
                    self.apply_potential(amps, x_guess);
                    self.half_kinetic(amps);
                    let x_end = mean_x_raw(&self.grid, amps);
                    let x_next = 0.5 * (x_start + x_end);
                    if (x_next - x_guess).abs() < tol {
                        converged = true;
                        break;
                    }
                    x_guess = x_next;
                }
                if !converged {
                    return Err(Error::FixedPointDiverged { max_iter });
                }
            }
        }
        check_amplitude_invariants(&self.grid, amps)
    }

    /// The remainder of a step once the shared mean is published.
    fn finish_with_mean(&mut self, amps: &mut [Complex64], x_bar: f64) -> Result<()> {
        self.apply_potential(amps, x_bar);
        self.half_kinetic(amps);
        check_amplitude_invariants(&self.grid, amps)
    }
}

struct BranchWorker {
    weight: f64,
    prop: Propagator,
    amps: Vec<Complex64>,
}

impl BranchWorker {
    fn mean_x(&self) -> f64 {
        mean_x_raw(&self.prop.grid, &self.amps)
    }
}

fn branch_error(index: usize) -> impl Fn(Error) -> Error {
    move |e| Error::BranchFailure {
        index,
        source: Box::new(e),
    }
}

/// Ensemble stepping loop shared by all propagation entry points.
struct Runner {
    workers: Vec<BranchWorker>,
    mode: EvolutionMode,
    policy: MeanUpdate,
    grid: Grid,
    mass: f64,
}

impl Runner {
    fn new(e: &BranchEnsemble, h: &HamiltonianSpec, dt: f64, policy: MeanUpdate) -> Self {
        let workers = e
            .branches()
            .iter()
            .map(|b| BranchWorker {
                weight: b.weight,
                prop: Propagator::new(e.grid(), *h, dt),
                amps: b.state.amplitudes().to_vec(),
            })
            .collect();
        Self {
            workers,
            mode: e.mode(),
            policy,
            grid: e.grid(),
            mass: e.mass(),
        }
    }

    /// Weighted mean over branches, summed in branch order so results do not
    /// depend on the thread count.
    fn shared_mean(&self) -> f64 {
        self.workers.iter().map(|w| w.weight * w.mean_x()).sum()
    }

    fn step(&mut self) -> Result<()> {
        match self.mode {
            EvolutionMode::Independent => {
                let policy = self.policy;
                self.workers
                    .par_iter_mut()
                    .enumerate()
                    .try_for_each(|(index, w)| {
                        w.prop
                            .step_own_mean(&mut w.amps, policy)
                            .map_err(branch_error(index))
                    })
            }
            EvolutionMode::Coupled => self.step_coupled(),
        }
    }

    /// Coupled step: no branch starts the potential sub-step until every
    /// branch has finished the first half-kinetic and the shared mean is
    /// published.
    fn step_coupled(&mut self) -> Result<()> {
        let x_start = self.shared_mean();
        self.workers
            .par_iter_mut()
            .for_each(|w| w.prop.half_kinetic(&mut w.amps));

        match self.policy {
            MeanUpdate::Frozen => self.finish_all(x_start),
            MeanUpdate::Midpoint => {
                let x_mid = self.shared_mean();
                self.finish_all(x_mid)
            }
            MeanUpdate::FixedPoint { tol, max_iter } => {
                let saved: Vec<Vec<Complex64>> =
                    self.workers.iter().map(|w| w.amps.clone()).collect();
                let mut x_guess = self.shared_mean();
                for _ in 0..max_iter {
                    for (w, s) in self.workers.iter_mut().zip(saved.iter()) {
                        w.amps.copy_from_slice(s);
                    }
                    self.finish_all(x_guess)?;
                    let x_end = self.shared_mean();
                    let x_next = 0.5 * (x_start + x_end);
                    if (x_next - x_guess).abs() < tol {
                        return Ok(());
                    }
                    x_guess = x_next;
                }
                Err(Error::FixedPointDiverged { max_iter })
            }
        }
    }

    fn finish_all(&mut self, x_bar: f64) -> Result<()> {
        self.workers
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(index, w)| {
                w.prop
                    .finish_with_mean(&mut w.amps, x_bar)
                    .map_err(branch_error(index))
            })
    }

    fn ensemble(&self) -> Result<BranchEnsemble> {
        let branches = self
            .workers
            .iter()
            .map(|w| {
                Ok(Branch {
                    weight: w.weight,
                    state: GridState::new(self.grid, self.mass, w.amps.clone())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        BranchEnsemble::new(branches, self.mode)
    }
}

/// Number of fixed steps and the adjusted step landing exactly on `t_final`.
fn step_plan(dt: f64, t_final: f64) -> (usize, f64) {
    if t_final <= 0.0 {
        return (0, dt);
    }
    let n = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    (n, t_final / n as f64)
}

/// One Strang step of the linear Schrödinger equation (trap only).
pub fn step_linear(psi: &GridState, h: &HamiltonianSpec, c: &StepControl) -> Result<GridState> {
    let linear = HamiltonianSpec { omega_g: 0.0, ..*h };
    step_sne(psi, &linear, c)
}

/// One Strang step of the self-attracting equation, the mean handled per the
/// control's policy.
pub fn step_sne(psi: &GridState, h: &HamiltonianSpec, c: &StepControl) -> Result<GridState> {
    c.validate(h)?;
    let mut prop = Propagator::new(psi.grid(), *h, c.dt);
    let mut amps = psi.amplitudes().to_vec();
    prop.step_own_mean(&mut amps, c.mean_update)?;
    GridState::new(psi.grid(), psi.mass(), amps)
}

/// Ensemble state at one snapshot time.
#[derive(Clone, Debug)]
pub struct EnsembleSnapshot {
    pub t: f64,
    pub ensemble: BranchEnsemble,
}

/// Propagates every branch for `t_final`, honoring the ensemble's mode:
/// coupled branches share the ensemble mean recomputed every step,
/// independent branches follow their own means. Weights never change.
/// Snapshots (including `t = 0` and the final time) are emitted every
/// `snapshot_interval`.
pub fn evolve_ensemble(
    e: &BranchEnsemble,
    h: &HamiltonianSpec,
    c: &StepControl,
    t_final: f64,
    snapshot_interval: f64,
) -> Result<Vec<EnsembleSnapshot>> {
    c.validate(h)?;
    if e.mass() != h.mass {
        return Err(Error::MassMismatch);
    }
    let (n_steps, dt) = step_plan(c.dt, t_final);
    let every = if snapshot_interval > 0.0 {
        ((snapshot_interval / dt).round() as usize).max(1)
    } else {
        1
    };

    let mut runner = Runner::new(e, h, dt, c.mean_update);
    let mut snapshots = vec![EnsembleSnapshot {
        t: 0.0,
        ensemble: runner.ensemble()?,
    }];
    for step in 1..=n_steps {
        runner.step()?;
        if step % every == 0 || step == n_steps {
            snapshots.push(EnsembleSnapshot {
                t: step as f64 * dt,
                ensemble: runner.ensemble()?,
            });
        }
    }
    Ok(snapshots)
}

/// Single-state convenience: propagate `psi` under its own mean for
/// `t_final` and return the final state.
pub fn propagate(
    psi: &GridState,
    h: &HamiltonianSpec,
    c: &StepControl,
    t_final: f64,
) -> Result<GridState> {
    let e = BranchEnsemble::single(psi.clone(), EvolutionMode::Independent);
    let snapshots = evolve_ensemble(&e, h, c, t_final, t_final)?;
    Ok(snapshots
        .last()
        .expect("at least the initial snapshot exists")
        .ensemble
        .branches()[0]
        .state
        .clone())
}

/// Mean and variance recorded at every step, for frequency extraction.
#[derive(Clone, Debug, Default)]
pub struct MomentTrace {
    pub ts: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub variance_x: Vec<f64>,
}

/// Like [`propagate`] but records `⟨x⟩(t)` and `Vxx(t)` at every step.
pub fn propagate_tracked(
    psi: &GridState,
    h: &HamiltonianSpec,
    c: &StepControl,
    t_final: f64,
) -> Result<(GridState, MomentTrace)> {
    c.validate(h)?;
    let (n_steps, dt) = step_plan(c.dt, t_final);
    let e = BranchEnsemble::single(psi.clone(), EvolutionMode::Independent);
    let mut runner = Runner::new(&e, h, dt, c.mean_update);
    let mut trace = MomentTrace::default();

    fn record(trace: &mut MomentTrace, t: f64, grid: &Grid, amps: &[Complex64]) {
        let mean = mean_x_raw(grid, amps);
        let var = amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let d = grid.position(i) - mean;
                d * d * a.norm_sqr()
            })
            .sum::<f64>()
            * grid.dx();
        trace.ts.push(t);
        trace.mean_x.push(mean);
        trace.variance_x.push(var);
    }

    record(&mut trace, 0.0, &runner.grid, &runner.workers[0].amps);
    for step in 1..=n_steps {
        runner.step()?;
        record(
            &mut trace,
            step as f64 * dt,
            &runner.grid,
            &runner.workers[0].amps,
        );
    }
    let state = GridState::new(runner.grid, runner.mass, runner.workers[0].amps.clone())?;
    Ok((state, trace))
}

/// One weighted branch of the moment oracle.
#[derive(Clone, Copy, Debug)]
pub struct MomentBranch {
    pub weight: f64,
    pub moments: Moments,
}

/// Gaussian-branch moments with the same mode semantics as a grid ensemble.
/// The oracle is exact for Gaussian branches because both the trap and the
/// self-attraction term are quadratic.
#[derive(Clone, Debug)]
pub struct GaussianMomentState {
    branches: Vec<MomentBranch>,
    mode: EvolutionMode,
}

impl GaussianMomentState {
    pub fn new(branches: Vec<MomentBranch>, mode: EvolutionMode) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::WeightSumViolation("no moment branches".into()));
        }
        let sum: f64 = branches.iter().map(|b| b.weight).sum();
        if branches.iter().any(|b| !(b.weight >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::WeightSumViolation(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        for b in &branches {
            let m = &b.moments;
            if !(m.vxx > 0.0) || !(m.vpp > 0.0) {
                return Err(Error::InvalidHamiltonian(format!(
                    "covariances must be positive, got vxx = {}, vpp = {}",
                    m.vxx, m.vpp
                )));
            }
            if m.vxx * m.vpp - m.vxp * m.vxp < HBAR * HBAR / 4.0 - 1e-9 {
                return Err(Error::InvalidHamiltonian(format!(
                    "uncertainty relation violated: vxx*vpp - vxp^2 = {:.12}",
                    m.vxx * m.vpp - m.vxp * m.vxp
                )));
            }
        }
        Ok(Self { branches, mode })
    }

    /// Measures the moments of every branch of a grid ensemble.
    pub fn from_ensemble(e: &BranchEnsemble) -> Result<Self> {
        let branches = e
            .branches()
            .iter()
            .map(|b| MomentBranch {
                weight: b.weight,
                moments: crate::hilbert::measure_moments(&b.state),
            })
            .collect();
        Self::new(branches, e.mode())
    }

    pub fn branches(&self) -> &[MomentBranch] {
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

    /// Weighted mean position across branches.
    pub fn mean_x(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.weight * b.moments.mean_x)
            .sum()
    }
}

/// Moment equations of motion. Means:
/// `d⟨x⟩/dt = ⟨p⟩/m`, `d⟨p⟩/dt = −mω₀²⟨x⟩ − mω_G²(⟨x⟩ − x̄)` with `x̄` per
/// mode; covariances breathe with `Ω² = ω₀² + ω_G²` in both modes:
/// `dVxx/dt = 2Vxp/m`, `dVxp/dt = Vpp/m − mΩ²Vxx`, `dVpp/dt = −2mΩ²Vxp`.
fn moment_derivative(
    branches: &[MomentBranch],
    mode: EvolutionMode,
    h: &HamiltonianSpec,
) -> Vec<Moments> {
    let m = h.mass;
    let w0_sq = h.trap_omega0 * h.trap_omega0;
    let wg_sq = h.omega_g * h.omega_g;
    let omega_sq = w0_sq + wg_sq;
    let shared: f64 = branches.iter().map(|b| b.weight * b.moments.mean_x).sum();
    branches
        .iter()
        .map(|b| {
            let s = &b.moments;
            let x_bar = match mode {
                EvolutionMode::Independent => s.mean_x,
                EvolutionMode::Coupled => shared,
            };
            Moments {
                mean_x: s.mean_p / m,
                mean_p: -m * w0_sq * s.mean_x - m * wg_sq * (s.mean_x - x_bar),
                vxx: 2.0 * s.vxp / m,
                vxp: s.vpp / m - m * omega_sq * s.vxx,
                vpp: -2.0 * m * omega_sq * s.vxp,
            }
        })
        .collect()
}

fn moments_axpy(base: &[MomentBranch], deriv: &[Moments], factor: f64) -> Vec<MomentBranch> {
    base.iter()
        .zip(deriv.iter())
        .map(|(b, d)| MomentBranch {
            weight: b.weight,
            moments: Moments {
                mean_x: b.moments.mean_x + factor * d.mean_x,
                mean_p: b.moments.mean_p + factor * d.mean_p,
                vxx: b.moments.vxx + factor * d.vxx,
                vxp: b.moments.vxp + factor * d.vxp,
                vpp: b.moments.vpp + factor * d.vpp,
            },
        })
        .collect()
}

/// Integrates the moment equations with the classical 4th-order one-step
/// method at fixed `dt`, emitting every step including `t = 0`.
pub fn gaussian_moment_evolve(
    g: &GaussianMomentState,
    h: &HamiltonianSpec,
    dt: f64,
    t_final: f64,
) -> Result<Vec<(f64, GaussianMomentState)>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidStepControl(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let (n_steps, dt) = step_plan(dt, t_final);
    let mode = g.mode;

    let mut current = g.branches.clone();
    let mut series = vec![(0.0, g.clone())];
    for step in 1..=n_steps {
        let k1 = moment_derivative(&current, mode, h);
        let s2 = moments_axpy(&current, &k1, dt / 2.0);
        let k2 = moment_derivative(&s2, mode, h);
        let s3 = moments_axpy(&current, &k2, dt / 2.0);
        let k3 = moment_derivative(&s3, mode, h);
        let s4 = moments_axpy(&current, &k3, dt);
        let k4 = moment_derivative(&s4, mode, h);

        current = current
            .iter()
            .enumerate()
            .map(|(i, b)| MomentBranch {
                weight: b.weight,
                moments: Moments {
                    mean_x: b.moments.mean_x
                        + dt / 6.0
                            * (k1[i].mean_x
                                + 2.0 * k2[i].mean_x
                                + 2.0 * k3[i].mean_x
                                + k4[i].mean_x),
                    mean_p: b.moments.mean_p
                        + dt / 6.0
                            * (k1[i].mean_p
                                + 2.0 * k2[i].mean_p
                                + 2.0 * k3[i].mean_p
                                + k4[i].mean_p),
                    vxx: b.moments.vxx
                        + dt / 6.0 * (k1[i].vxx + 2.0 * k2[i].vxx + 2.0 * k3[i].vxx + k4[i].vxx),
                    vxp: b.moments.vxp
                        + dt / 6.0 * (k1[i].vxp + 2.0 * k2[i].vxp + 2.0 * k3[i].vxp + k4[i].vxp),
                    vpp: b.moments.vpp
                        + dt / 6.0 * (k1[i].vpp + 2.0 * k2[i].vpp + 2.0 * k3[i].vpp + k4[i].vpp),
                },
            })
            .collect();
        series.push((
            step as f64 * dt,
            GaussianMomentState::new(current.clone(), mode)?,
        ));
    }
    Ok(series)
}

/// Dominant angular frequency from the spacing of local maxima, refined by
/// parabolic interpolation through each peak triple. Returns `None` with
/// fewer than two interior peaks.
pub fn peak_frequency(ts: &[f64], ys: &[f64]) -> Option<f64> {
    if ts.len() != ys.len() || ts.len() < 3 {
        return None;
    }
    let mut peaks = Vec::new();
    for i in 1..ys.len() - 1 {
        if ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] {
            let denom = ys[i - 1] - 2.0 * ys[i] + ys[i + 1];
            let offset = if denom != 0.0 {
                0.5 * (ys[i - 1] - ys[i + 1]) / denom
            } else {
                0.0
            };
            let dt_local = 0.5 * (ts[i + 1] - ts[i - 1]);
            peaks.push(ts[i] + offset * dt_local);
        }
    }
    if peaks.len() < 2 {
        return None;
    }
    let period = (peaks.last().unwrap() - peaks[0]) / (peaks.len() - 1) as f64;
    Some(2.0 * std::f64::consts::PI / period)
}
