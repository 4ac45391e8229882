//! The linearity gate (does mixing commute with an operation?) and the
//! detected-vs-undetected divergence experiment.
//!
//! Mixing and a norm-conserving operation must interchange for any dynamics
//! compatible with the statistical interpretation of states:
//! `w₁𝓜ρ₁ + w₂𝓜ρ₂ = 𝓜(w₁ρ₁ + w₂ρ₂)`. The linear propagator satisfies this
//! identically; the self-attracting propagator does not, and the defect is
//! quantified as a trace distance. The same mechanism shows up dynamically:
//! after a probe entangles with light, the unconditional probe state evolves
//! differently depending on whether the light is detected, even though the
//! two descriptions coincide at the moment of detection.

use rayon::join;

use crate::dynamics::{
    evolve_ensemble, gaussian_moment_evolve, EnsembleSnapshot, GaussianMomentState,
    HamiltonianSpec, MomentBranch, StepControl,
};
use crate::error::{Error, Result};
use crate::hilbert::{
    measure_moments, trace_distance, Branch, BranchEnsemble, EvolutionMode, Grid, GridState,
    Moments, HBAR,
};
use crate::optomeasure::{measure_light, scatter, unconditional_mix, LightSpec};

/// Which propagator a dynamical map applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    /// Trap only; the self-attraction term is dropped regardless of `omega_g`.
    Linear,
    /// Self-attracting propagation per the ensemble's mode semantics.
    Sne,
}

/// A norm-conserving operation: propagate for `duration` under `kind`.
#[derive(Clone, Copy, Debug)]
pub struct DynamicalMap {
    pub kind: MapKind,
    pub h: HamiltonianSpec,
    pub c: StepControl,
    pub duration: f64,
}

impl DynamicalMap {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0) {
            return Err(Error::InvalidStepControl(format!(
                "map duration must be non-negative, got {}",
                self.duration
            )));
        }
        self.c.validate(&self.h)
    }
}

/// Statistical mixing: concatenates the branch lists with weights scaled by
/// `w1`, `w2`, pruning exact-zero weights. The result is a proper mixture,
/// so it is tagged `Independent`.
pub fn mix(e1: &BranchEnsemble, e2: &BranchEnsemble, w1: f64, w2: f64) -> Result<BranchEnsemble> {
    if !(w1 >= 0.0) || !(w2 >= 0.0) || (w1 + w2 - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSumViolation(format!(
            "mixing weights ({w1}, {w2}) must be non-negative and sum to 1"
        )));
    }
    if e1.grid() != e2.grid() {
        return Err(Error::GridMismatch);
    }
    if e1.mass() != e2.mass() {
        return Err(Error::MassMismatch);
    }
    let branches: Vec<Branch> = e1
        .branches()
        .iter()
        .map(|b| Branch {
            weight: w1 * b.weight,
            state: b.state.clone(),
        })
        .chain(e2.branches().iter().map(|b| Branch {
            weight: w2 * b.weight,
            state: b.state.clone(),
        }))
        .filter(|b| b.weight > 0.0)
        .collect();
    BranchEnsemble::new(branches, EvolutionMode::Independent)
}

/// Applies the map to every branch for its full duration. The linear kind
/// ignores the self-attraction entirely; the SNE kind follows the ensemble's
/// mode semantics (each urn element its own mean when `Independent`, the
/// shared ensemble mean when `Coupled`).
pub fn apply_map(m: &DynamicalMap, e: &BranchEnsemble) -> Result<BranchEnsemble> {
    m.validate()?;
    if m.duration == 0.0 {
        return Ok(e.clone());
    }
    let h = match m.kind {
        MapKind::Linear => HamiltonianSpec {
            omega_g: 0.0,
            ..m.h
        },
        MapKind::Sne => m.h,
    };
    let snapshots = evolve_ensemble(e, &h, &m.c, m.duration, m.duration)?;
    Ok(snapshots
        .into_iter()
        .last()
        .expect("final snapshot always present")
        .ensemble)
}

/// Commutation defect of mixing and operation:
/// `D( w₁𝓜ψ₁ + w₂𝓜ψ₂ , 𝓜(w₁ψ₁ + w₂ψ₂) )`.
///
/// The first route operates on each urn element separately and then mixes;
/// the second treats the mixture as one state, which for the SNE means the
/// branches evolve under the shared ensemble mean (the mixed-state master
/// equation). A linear map makes the two routes identical.
pub fn linearity_defect(
    m: &DynamicalMap,
    psi1: &GridState,
    psi2: &GridState,
    w1: f64,
    w2: f64,
) -> Result<f64> {
    if psi1.fidelity(psi2)? > 1.0 - 1e-12 {
        log::warn!("linearity defect of two identical states is trivially zero");
    }
    let mapped1 = apply_map(
        m,
        &BranchEnsemble::single(psi1.clone(), EvolutionMode::Independent),
    )?;
    let mapped2 = apply_map(
        m,
        &BranchEnsemble::single(psi2.clone(), EvolutionMode::Independent),
    )?;
    let mix_after = mix(&mapped1, &mapped2, w1, w2)?;

    let mixed = mix(
        &BranchEnsemble::single(psi1.clone(), EvolutionMode::Independent),
        &BranchEnsemble::single(psi2.clone(), EvolutionMode::Independent),
        w1,
        w2,
    )?
    .with_mode(EvolutionMode::Coupled);
    let map_after = apply_map(m, &mixed)?;

    trace_distance(&mix_after, &map_after)
}

/// Builds the grid ensemble whose branches are the pure Gaussians with the
/// oracle's moments; branch phases are irrelevant to the density operator.
fn ensemble_from_moments(g: &GaussianMomentState, grid: Grid, mass: f64) -> Result<BranchEnsemble> {
    let branches = g
        .branches()
        .iter()
        .map(|b| {
            Ok(Branch {
                weight: b.weight,
                state: GridState::gaussian_with_moments(
                    grid,
                    mass,
                    b.moments.mean_x,
                    b.moments.mean_p,
                    b.moments.vxx,
                    b.moments.vxp,
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BranchEnsemble::new(branches, g.mode())
}

/// Moment-oracle prediction of [`linearity_defect`] for Gaussian inputs:
/// both routes are integrated in moment space and the final trace distance
/// is evaluated between the reconstructed Gaussian mixtures.
pub fn linearity_defect_oracle(
    m: &DynamicalMap,
    psi1: &GridState,
    psi2: &GridState,
    w1: f64,
    w2: f64,
) -> Result<f64> {
    m.validate()?;
    let h = match m.kind {
        MapKind::Linear => HamiltonianSpec {
            omega_g: 0.0,
            ..m.h
        },
        MapKind::Sne => m.h,
    };
    let grid = psi1.grid();
    let mass = psi1.mass();
    let m1 = measure_moments(psi1);
    let m2 = measure_moments(psi2);

    let final_state = |g: &GaussianMomentState| -> Result<GaussianMomentState> {
        let series = gaussian_moment_evolve(g, &h, m.c.dt, m.duration)?;
        Ok(series
            .into_iter()
            .last()
            .expect("series includes the initial point")
            .1)
    };

    let single = |moments: Moments| {
        GaussianMomentState::new(
            vec![MomentBranch {
                weight: 1.0,
                moments,
            }],
            EvolutionMode::Independent,
        )
    };
    let evolved1 = final_state(&single(m1)?)?;
    let evolved2 = final_state(&single(m2)?)?;
    let mix_after = mix(
        &ensemble_from_moments(&evolved1, grid, mass)?,
        &ensemble_from_moments(&evolved2, grid, mass)?,
        w1,
        w2,
    )?;

    let mixed = GaussianMomentState::new(
        vec![
            MomentBranch {
                weight: w1,
                moments: m1,
            },
            MomentBranch {
                weight: w2,
                moments: m2,
            },
        ],
        EvolutionMode::Coupled,
    )?;
    let map_after = ensemble_from_moments(&final_state(&mixed)?, grid, mass)?;

    trace_distance(&mix_after, &map_after)
}

/// Initial probe wavepacket parameters.
#[derive(Clone, Copy, Debug)]
pub struct ProbeSpec {
    pub mass: f64,
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
}

/// Full description of one detected-vs-undetected experiment.
#[derive(Clone, Debug)]
pub struct AcausalityScenario {
    pub grid: Grid,
    pub probe: ProbeSpec,
    pub light: LightSpec,
    pub h: HamiltonianSpec,
    pub c: StepControl,
    pub t_final: f64,
    pub snapshot_interval: f64,
}

impl AcausalityScenario {
    pub fn initial_probe(&self) -> Result<GridState> {
        GridState::make_gaussian(
            self.grid,
            self.probe.x0,
            self.probe.p0,
            self.probe.sigma,
            self.probe.mass,
        )
    }
}

/// Which evolution arm a record belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arm {
    /// Light never detected: coupled, shared-mean evolution.
    Undetected,
    /// Light projectively measured at t = 0⁺: independent branch evolution.
    Detected,
}

impl Arm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arm::Undetected => "undetected",
            Arm::Detected => "detected",
        }
    }
}

/// Per-branch diagnostics at one snapshot.
#[derive(Clone, Copy, Debug)]
pub struct BranchStats {
    pub weight: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub variance_x: f64,
    pub norm_drift: f64,
}

/// One arm's diagnostics at one snapshot.
#[derive(Clone, Debug)]
pub struct ArmSnapshot {
    pub arm: Arm,
    pub ensemble_mean_x: f64,
    pub branches: Vec<BranchStats>,
}

/// Both arms plus their distinguishability at one snapshot time.
#[derive(Clone, Debug)]
pub struct AcausalitySnapshot {
    pub t: f64,
    pub trace_distance: f64,
    pub undetected: ArmSnapshot,
    pub detected: ArmSnapshot,
}

fn arm_snapshot(arm: Arm, e: &BranchEnsemble) -> ArmSnapshot {
    let branches = e
        .branches()
        .iter()
        .map(|b| {
            let m = measure_moments(&b.state);
            BranchStats {
                weight: b.weight,
                mean_x: m.mean_x,
                mean_p: m.mean_p,
                variance_x: m.vxx,
                norm_drift: (b.state.norm() - 1.0).abs(),
            }
        })
        .collect();
    ArmSnapshot {
        arm,
        ensemble_mean_x: e.ensemble_mean_x(),
        branches,
    }
}

fn bitwise_equal(a: &BranchEnsemble, b: &BranchEnsemble) -> bool {
    a.branches().len() == b.branches().len()
        && a.branches().iter().zip(b.branches().iter()).all(|(x, y)| {
            x.weight == y.weight
                && x.state
                    .amplitudes()
                    .iter()
                    .zip(y.state.amplitudes().iter())
                    .all(|(p, q)| p == q)
        })
}

/// Runs both arms of the experiment from the identical post-scattering
/// state: the undetected arm evolves the entangled ensemble with the shared
/// mean, the detected arm measures the light, reassembles the unconditional
/// mixture, and evolves each conditional state under its own mean. Records
/// the trace distance between the two unconditional states at every
/// snapshot.
pub fn acausality_signal(s: &AcausalityScenario) -> Result<Vec<AcausalitySnapshot>> {
    let psi0 = s.initial_probe()?;
    let entangled = scatter(&psi0, &s.light)?;
    let detected0 = unconditional_mix(&measure_light(&entangled))?;
    assert!(
        bitwise_equal(&entangled, &detected0),
        "arms must start from bit-identical ensembles"
    );

    let (undetected_run, detected_run) = join(
        || evolve_ensemble(&entangled, &s.h, &s.c, s.t_final, s.snapshot_interval),
        || evolve_ensemble(&detected0, &s.h, &s.c, s.t_final, s.snapshot_interval),
    );
    let undetected_run = undetected_run?;
    let detected_run = detected_run?;
    assert_eq!(undetected_run.len(), detected_run.len());

    undetected_run
        .iter()
        .zip(detected_run.iter())
        .map(|(u, d): (&EnsembleSnapshot, &EnsembleSnapshot)| {
            Ok(AcausalitySnapshot {
                t: u.t,
                trace_distance: trace_distance(&u.ensemble, &d.ensemble)?,
                undetected: arm_snapshot(Arm::Undetected, &u.ensemble),
                detected: arm_snapshot(Arm::Detected, &d.ensemble),
            })
        })
        .collect()
}

/// Moment-oracle prediction of the acausality trace-distance curve at the
/// same snapshot times. Exact for the Gaussian branches this scenario
/// produces, up to integrator tolerance.
pub fn acausality_oracle(s: &AcausalityScenario) -> Result<Vec<(f64, f64)>> {
    let sigma_sq = s.probe.sigma * s.probe.sigma;
    let branches: Vec<MomentBranch> = s
        .light
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, c)| MomentBranch {
            weight: c.norm_sqr(),
            moments: Moments {
                mean_x: s.probe.x0,
                mean_p: s.probe.p0 + s.light.coupling_lambda() * n as f64,
                vxx: sigma_sq,
                vxp: 0.0,
                vpp: HBAR * HBAR / (4.0 * sigma_sq),
            },
        })
        .collect();
    let coupled = GaussianMomentState::new(branches.clone(), EvolutionMode::Coupled)?;
    let detected = GaussianMomentState::new(branches, EvolutionMode::Independent)?;

    let run_c = gaussian_moment_evolve(&coupled, &s.h, s.c.dt, s.t_final)?;
    let run_d = gaussian_moment_evolve(&detected, &s.h, s.c.dt, s.t_final)?;

    // Match the grid run's snapshot cadence exactly.
    let n_steps = run_c.len() - 1;
    let dt = if n_steps > 0 {
        s.t_final / n_steps as f64
    } else {
        s.c.dt
    };
    let every = if s.snapshot_interval > 0.0 {
        ((s.snapshot_interval / dt).round() as usize).max(1)
    } else {
        1
    };

    let mut curve = Vec::new();
    for step in 0..=n_steps {
        if step == 0 || step % every == 0 || step == n_steps {
            let (t, gc) = &run_c[step];
            let (_, gd) = &run_d[step];
            let eu = ensemble_from_moments(gc, s.grid, s.probe.mass)?;
            let ed = ensemble_from_moments(gd, s.grid, s.probe.mass)?;
            curve.push((*t, trace_distance(&eu, &ed)?));
        }
    }
    Ok(curve)
}
