//! Impulsive probe–light scattering, projective measurement of the light,
//! and reassembly of the unconditional probe mixture.
//!
//! The scattering unitary is a controlled momentum kick `e^{iλ n̂ x̂/ħ}`:
//! light basis state `|n⟩` imprints the phase `e^{iλ n x/ħ}` on the probe,
//! which shifts `⟨p⟩` by `λ·n`. Measurement is projective in that same
//! basis, immediately after the scattering, so the light Hamiltonian never
//! acts.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Branch, BranchEnsemble, EvolutionMode, GridState, HBAR};

/// Incoming light pulse: `dim` orthonormal basis states with amplitudes
/// `cₙ`, and the momentum impulse per light quantum.
#[derive(Clone, Debug)]
pub struct LightSpec {
    dim: usize,
    amplitudes: Vec<Complex64>,
    coupling_lambda: f64,
}

impl LightSpec {
    pub fn new(amplitudes: Vec<Complex64>, coupling_lambda: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidLightSpec(
                "need at least one basis amplitude".into(),
            ));
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLightSpec(format!(
                "amplitudes must be normalized, got sum of squares {norm}"
            )));
        }
        Ok(Self {
            dim: amplitudes.len(),
            amplitudes,
            coupling_lambda,
        })
    }

    /// Uniform real amplitudes `1/√dim`.
    pub fn uniform(dim: usize, coupling_lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidLightSpec("dim must be at least 1".into()));
        }
        let c = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self::new(vec![c; dim], coupling_lambda)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn coupling_lambda(&self) -> f64 {
        self.coupling_lambda
    }
}

/// Entangles the probe with the light: branch `n` carries weight `|cₙ|²`
/// and the kicked state `e^{iλ n x/ħ} ψ₀`. The result is tagged `Coupled`
/// because the branches still form one entangled pure state.
pub fn scatter(psi0: &GridState, light: &LightSpec) -> Result<BranchEnsemble> {
    let grid = psi0.grid();
    let branches = light
        .amplitudes
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let kick = light.coupling_lambda * n as f64 / HBAR;
            let amps: Vec<Complex64> = grid
                .positions()
                .zip(psi0.amplitudes().iter())
                .map(|(x, a)| a * Complex64::new(0.0, kick * x).exp())
                .collect();
            Ok(Branch {
                weight: c.norm_sqr(),
                state: GridState::new(grid, psi0.mass(), amps)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BranchEnsemble::new(branches, EvolutionMode::Coupled)
}

/// One projective outcome: the light was found in `|n⟩`, leaving the probe
/// in the normalized conditional state with Born probability `pₙ`.
#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub outcome_index: usize,
    pub probability: f64,
    pub conditional_state: GridState,
}

/// Projective measurement of the light in its orthonormal basis, performed
/// right after the scattering. Expects an ensemble produced by [`scatter`]
/// (mode `Coupled`, branch states normalized), whose weights are already the
/// Born probabilities.
pub fn measure_light(e: &BranchEnsemble) -> Vec<MeasurementRecord> {
    debug_assert_eq!(e.mode(), EvolutionMode::Coupled);
    e.branches()
        .iter()
        .enumerate()
        .map(|(n, b)| MeasurementRecord {
            outcome_index: n,
            probability: b.weight,
            conditional_state: b.state.clone(),
        })
        .collect()
}

/// Outcome-averaged mixture `Σₙ pₙ|ψₙ⟩⟨ψₙ|`. Tagged `Independent`: after
/// detection each conditional state evolves under its own mean.
pub fn unconditional_mix(records: &[MeasurementRecord]) -> Result<BranchEnsemble> {
    let total: f64 = records.iter().map(|r| r.probability).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSumViolation(format!(
            "outcome probabilities sum to {total}, expected 1"
        )));
    }
    let branches = records
        .iter()
        .map(|r| Branch {
            weight: r.probability,
            state: r.conditional_state.clone(),
        })
        .collect();
    BranchEnsemble::new(branches, EvolutionMode::Independent)
}
