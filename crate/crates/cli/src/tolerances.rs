//! Verdict thresholds used by the run commands and the acceptance suite.
//!
//! Grouped by origin: machine-precision identities, switch-off residuals
//! that only accumulate roundoff, and oracle/physical tolerances tied to the
//! integrators' convergence order.

/// Detection at t = 0 must not change the unconditional state: the mixture
/// reassembled from the measurement records is the same rank-k operator,
/// so only Gram-matrix roundoff survives.
pub const T0_IDENTITY_TD: f64 = 1e-12;

/// With the self-attraction, the coupling, or the branching switched off,
/// both arms run the identical linear dynamics; the trace distance is pure
/// accumulated roundoff over ~10⁴ steps.
pub const SWITCH_OFF_TD: f64 = 1e-9;

/// The divergence signal must be resolvable above the trace-distance noise
/// floor (~1e-14) from the first snapshot on.
pub const SIGNAL_FLOOR_TD: f64 = 1e-10;

/// Grid-vs-moment-oracle agreement for trace-distance curves and defect
/// values. Both sides are exact for Gaussian branches up to integrator
/// error (split-step O(dt²), moment integrator O(dt⁴)), far below this.
pub const ORACLE_REL: f64 = 0.05;

/// Early-time detected-vs-undetected branch-mean gap against the quadratic
/// small-time law ½·a·ω_G²·t²; the t⁴ series correction stays under a few
/// percent for ω₀t ≤ 0.3.
pub const GAP_LAW_REL: f64 = 0.10;

/// Window (in units of 1/ω₀) over which the quadratic gap law is asserted.
pub const GAP_LAW_WINDOW: f64 = 0.3;

/// A linear propagator makes mix-then-map and map-then-mix identical code
/// paths; the defect is Gram roundoff only.
pub const LINEAR_DEFECT_MAX: f64 = 1e-9;

/// The self-attracting map must fail the linearity gate visibly at the
/// pinned parameters (coupling 0.3·ω₀, half a trap period, unit separation).
pub const SNE_DEFECT_MIN: f64 = 1e-3;

/// Grid moments vs the closed-form moment oracle, relative to each series'
/// peak magnitude (means cross zero, so pointwise relative error is
/// ill-defined there).
pub const MOMENT_SERIES_REL: f64 = 1e-3;

/// Series whose oracle peak magnitude sits below this floor are compared
/// absolutely against it instead.
pub const MOMENT_SERIES_FLOOR: f64 = 1e-10;

/// Coherent-state return infidelity after one trap period. The split-step
/// error for a quadratic potential is a tiny frequency renormalization
/// O(ω³dt²/24), orders below this bound at dt = 0.002.
pub const COHERENT_RETURN_INFIDELITY: f64 = 1e-6;

/// Free-packet variance growth against σ²(1 + (ħt/2mσ²)²).
pub const FREE_SPREAD_REL: f64 = 1e-3;

/// Richardson self-convergence ratio bracket for a second-order stepper.
pub const CONVERGENCE_RATIO_MIN: f64 = 3.6;
pub const CONVERGENCE_RATIO_MAX: f64 = 4.4;

/// Extracted oscillation frequencies (peak spacing with parabolic
/// refinement on per-step series) against ω₀ and the breathing rate.
pub const FREQUENCY_REL: f64 = 1e-3;

/// Exterior/interior potential of a uniform sphere against the closed-form
/// solution; limited by the trapezoid mesh, not the method.
pub const POTENTIAL_REL: f64 = 1e-3;

/// Geometric factor of the uniform sphere (4π/3 relative to its own
/// density) and the Gaussian-profile curvature against the brute-force
/// double-quadrature oracle.
pub const OMEGA_G_FACTOR_REL: f64 = 5e-3;

/// Fitted squared frequency must be stable when the displacement sampling
/// range is halved (quadratic-regime consistency).
pub const FIT_STABILITY_REL: f64 = 1e-2;

/// Evenness of the self-energy curve relative to |U(0)|.
pub const ENERGY_EVENNESS_REL: f64 = 1e-9;

/// Norm drift allowed per branch over a full run.
pub const NORM_DRIFT_MAX: f64 = 1e-10;
