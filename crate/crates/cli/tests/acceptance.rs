//! Acceptance suite: every release criterion as one test, each printing a
//! single PASS line (failures panic with the offending numbers). Defaults
//! throughout: 2048-point grid on [−20, 20], ħ = m = ω₀ = 1, dt = 0.002.
//!
//! Run with `cargo test -p snlab --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use std::f64::consts::PI;
use std::path::Path;

use snlab::config::{resolve, ExperimentConfig, RawConfig};
use snlab::runs::{run_acausality, run_linearity, run_omega_g, run_oracle_check};
use snlab::tolerances as tol;
use snlab_core::dynamics::{
    peak_frequency, propagate, propagate_tracked, HamiltonianSpec, MeanUpdate, StepControl,
};
use snlab_core::hilbert::{trace_distance, Grid, GridState, HBAR};
use snlab_core::meanfield::{newton_potential, omega_g, self_energy_curve, MassDensityProfile};
use snlab_core::optomeasure::{measure_light, scatter, unconditional_mix, LightSpec};

fn pass(n: u32, name: &str, detail: &str) {
    println!("ACCEPTANCE {n} {name}: PASS ({detail})");
}

fn grid() -> Grid {
    Grid::new(2048, -20.0, 20.0).unwrap()
}

fn control() -> StepControl {
    StepControl {
        dt: 0.002,
        mean_update: MeanUpdate::Midpoint,
    }
}

fn config_toml(omega_g: f64, lambda: f64, dim: usize, t_final: f64, out: &Path) -> String {
    format!(
        r#"
[grid]
n_points = 2048
x_min = -20.0
x_max = 20.0

[probe]
mass = 1.0
x0 = 0.0
p0 = 0.0
sigma = 1.0

[hamiltonian]
omega0 = 1.0
omega_g = {omega_g}

[light]
dim = {dim}
lambda = {lambda}

[run]
dt = 0.002
t_final = {t_final}
snapshot_interval = 0.1
seed = 0

[output]
directory = "{}"
"#,
        out.display()
    )
}

fn load(text: &str) -> ExperimentConfig {
    let raw: RawConfig = toml::from_str(text).unwrap();
    resolve(raw, Path::new("."), None).unwrap_or_else(|e| panic!("config invalid: {e}"))
}

#[test]
fn criterion_1_detection_identity_at_t0() {
    let psi0 = GridState::make_gaussian(grid(), 0.0, 0.0, 1.0, 1.0).unwrap();
    let light = LightSpec::uniform(2, 1.0).unwrap();
    let entangled = scatter(&psi0, &light).unwrap();
    let mixed = unconditional_mix(&measure_light(&entangled)).unwrap();
    let td = trace_distance(&mixed, &entangled).unwrap();
    assert!(
        td <= tol::T0_IDENTITY_TD,
        "ACCEPTANCE 1 detection_identity: FAIL (trace distance {td:.3e} > 1e-12)"
    );
    pass(1, "detection_identity", &format!("trace distance {td:.3e}"));
}

#[test]
fn criterion_2_switch_off_causality() {
    let t_final = 5.0 * 2.0 * PI;
    let cases = [
        ("omega_g_zero", 0.0, 1.0, 2),
        ("lambda_zero", 0.2, 0.0, 2),
        ("single_mode", 0.2, 1.0, 1),
    ];
    for (label, wg, lambda, dim) in cases {
        let dir = tempfile::tempdir().unwrap();
        let cfg = load(&config_toml(wg, lambda, dim, t_final, dir.path()));
        let verdict = run_acausality(&cfg).unwrap();
        let check = verdict
            .checks
            .iter()
            .find(|c| c.name == "switch_off_causality")
            .unwrap_or_else(|| panic!("switch-off check missing for {label}"));
        assert!(
            verdict.passed() && check.passed,
            "ACCEPTANCE 2 switch_off_causality: FAIL ({label}: max trace distance {:.3e} > 1e-9)",
            check.value
        );
    }
    pass(
        2,
        "switch_off_causality",
        "omega_g=0, lambda=0, dim=1 all below 1e-9",
    );
}

#[test]
fn criterion_3_acausality_onset_matches_the_oracle() {
    // Branch momentum means separated by 2a = λ = 1; run to Ωt = π.
    let h = HamiltonianSpec::new(1.0, 1.0, 0.2).unwrap();
    let t_final = PI / h.big_omega();
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(&config_toml(0.2, 1.0, 2, t_final, dir.path()));
    let verdict = run_acausality(&cfg).unwrap();

    let get = |name: &str| {
        verdict
            .checks
            .iter()
            .find(|c| c.name == name)
            .unwrap_or_else(|| panic!("check {name} missing"))
    };
    let positive = get("signal_positive");
    let oracle = get("oracle_agreement");
    let gap = get("early_time_gap_law");
    assert!(
        positive.passed && oracle.passed && gap.passed,
        "ACCEPTANCE 3 acausality_onset: FAIL (positive: {}, oracle rel {:.3e}, gap rel {:.3e})",
        positive.passed,
        oracle.value,
        gap.value
    );
    pass(
        3,
        "acausality_onset",
        &format!(
            "min td {:.3e}, oracle rel err {:.2e} <= 5%, gap law rel err {:.2e} <= 10%",
            positive.value, oracle.value, gap.value
        ),
    );
}

#[test]
fn criterion_4_linearity_gate() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
[grid]
n_points = 2048
x_min = -20.0
x_max = 20.0

[probe]
mass = 1.0
x0 = 0.0
p0 = 0.0
sigma = 1.0

[hamiltonian]
omega0 = 1.0
omega_g = 0.3

[run]
dt = 0.002
t_final = 1.0
snapshot_interval = 0.1
seed = 0

[linearity]
random_trials = 100
center = 1.0
w1 = 0.5

[output]
directory = "{}"
"#,
        dir.path().display()
    );
    let cfg = load(&text);
    let verdict = run_linearity(&cfg).unwrap();
    let get = |name: &str| verdict.checks.iter().find(|c| c.name == name).unwrap();
    let linear = get("linear_commutes_over_random_inputs");
    let floor = get("sne_defect_exceeds_floor");
    let oracle = get("sne_defect_matches_oracle");
    assert!(
        verdict.passed(),
        "ACCEPTANCE 4 linearity_gate: FAIL (linear max {:.3e}, sne defect {:.3e}, oracle rel {:.3e})",
        linear.value,
        floor.value,
        oracle.value
    );
    pass(
        4,
        "linearity_gate",
        &format!(
            "100 random linear defects <= {:.1e}, sne defect {:.3e} > 1e-3 within {:.2e} of oracle",
            linear.value, floor.value, oracle.value
        ),
    );
}

#[test]
fn criterion_5_propagator_correctness() {
    let c = control();

    // Coherent-state return after one trap period.
    let h = HamiltonianSpec::new(1.0, 1.0, 0.0).unwrap();
    let sigma_g = (HBAR / (2.0 * h.mass * h.trap_omega0)).sqrt();
    let psi0 = GridState::make_gaussian(grid(), 1.0, 0.0, sigma_g, h.mass).unwrap();
    let returned = propagate(&psi0, &h, &c, 2.0 * PI / h.trap_omega0).unwrap();
    let fidelity = psi0.fidelity(&returned).unwrap();
    assert!(
        fidelity >= 1.0 - tol::COHERENT_RETURN_INFIDELITY,
        "ACCEPTANCE 5 propagator_correctness: FAIL (return fidelity {fidelity})"
    );

    // Free-packet spreading law.
    let free = HamiltonianSpec::new(1.0, 0.0, 0.0).unwrap();
    let psi0 = GridState::make_gaussian(grid(), 0.0, 0.0, 1.0, free.mass).unwrap();
    let t = 1.5;
    let (_, trace) = propagate_tracked(&psi0, &free, &c, t).unwrap();
    let var = *trace.variance_x.last().unwrap();
    let expected = 1.0 + (HBAR * t / (2.0 * free.mass)).powi(2);
    let spread_err = (var - expected).abs() / expected;
    assert!(
        spread_err <= tol::FREE_SPREAD_REL,
        "ACCEPTANCE 5 propagator_correctness: FAIL (spreading error {spread_err:.3e})"
    );

    // Second-order self-convergence under dt halving.
    let h = HamiltonianSpec::new(1.0, 1.0, 0.3).unwrap();
    let psi0 = GridState::make_gaussian(grid(), 1.0, 0.0, 1.0, h.mass).unwrap();
    let t_final = 0.64;
    let run = |dt: f64| {
        propagate(
            &psi0,
            &h,
            &StepControl {
                dt,
                mean_update: MeanUpdate::Midpoint,
            },
            t_final,
        )
        .unwrap()
    };
    let l2 = |a: &GridState, b: &GridState| {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes().iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let (a, b, c3) = (run(0.01), run(0.005), run(0.0025));
    let ratio = l2(&a, &b) / l2(&b, &c3);
    assert!(
        (tol::CONVERGENCE_RATIO_MIN..=tol::CONVERGENCE_RATIO_MAX).contains(&ratio),
        "ACCEPTANCE 5 propagator_correctness: FAIL (convergence ratio {ratio})"
    );

    pass(
        5,
        "propagator_correctness",
        &format!(
            "return fidelity {:.9}, spreading err {:.2e}, convergence ratio {:.3}",
            fidelity, spread_err, ratio
        ),
    );
}

#[test]
fn criterion_6_frequency_split() {
    let h = HamiltonianSpec::new(1.0, 1.0, 0.3).unwrap();
    let psi0 = GridState::make_gaussian(grid(), 1.0, 0.0, 1.0, h.mass).unwrap();
    let (_, trace) = propagate_tracked(&psi0, &h, &control(), 5.0 * 2.0 * PI).unwrap();

    let f_mean = peak_frequency(&trace.ts, &trace.mean_x).unwrap();
    let mean_err = (f_mean - h.trap_omega0).abs() / h.trap_omega0;

    // The variance series oscillates at twice the breathing frequency Ω.
    let f_var = peak_frequency(&trace.ts, &trace.variance_x).unwrap();
    let breathing = f_var / 2.0;
    let split_err = (breathing - h.big_omega()).abs() / h.big_omega();

    assert!(
        mean_err <= tol::FREQUENCY_REL && split_err <= tol::FREQUENCY_REL,
        "ACCEPTANCE 6 frequency_split: FAIL (mean err {mean_err:.3e}, breathing err {split_err:.3e})"
    );
    pass(
        6,
        "frequency_split",
        &format!(
            "mean at {:.6} (err {:.2e}), breathing at {:.6} vs Omega {:.6} (err {:.2e})",
            f_mean,
            mean_err,
            breathing,
            h.big_omega(),
            split_err
        ),
    );
}

/// Uniform sphere sampled up to its edge with a hair-thin ramp to zero.
fn uniform_sphere(rho: f64, radius: f64, n: usize) -> MassDensityProfile {
    let mut radii: Vec<f64> = (0..n).map(|i| radius * i as f64 / (n - 1) as f64).collect();
    let mut density = vec![rho; n];
    radii.push(radius * (1.0 + 1e-9));
    density.push(0.0);
    MassDensityProfile::new(radii, density).unwrap()
}

fn gaussian_profile(mass: f64, sigma: f64, n: usize) -> MassDensityProfile {
    let r_max = 8.0 * sigma;
    let norm = mass / ((2.0 * PI * sigma * sigma).powf(1.5));
    let radii: Vec<f64> = (0..n).map(|i| r_max * i as f64 / (n - 1) as f64).collect();
    let density: Vec<f64> = radii
        .iter()
        .map(|&r| norm * (-r * r / (2.0 * sigma * sigma)).exp())
        .collect();
    MassDensityProfile::new(radii, density).unwrap()
}

/// Mean of 1/max(s, r') over a displaced shell; kernel of the brute-force
/// double quadrature.
fn shell_pair_kernel(d: f64, r: f64, rp: f64) -> f64 {
    if d <= 0.0 {
        return 1.0 / r.max(rp);
    }
    if r <= 0.0 {
        return 1.0 / d.max(rp);
    }
    let a = (d - r).abs();
    let b = d + r;
    if b <= rp {
        1.0 / rp
    } else if a >= rp {
        (b - a) / (2.0 * r * d)
    } else {
        ((rp * rp - a * a) / (2.0 * rp) + (b - rp)) / (2.0 * r * d)
    }
}

fn mutual_energy_oracle(profile: &MassDensityProfile, g: f64, d: f64) -> f64 {
    let d = d.abs();
    let radii = profile.radii();
    let density = profile.density();
    let n = radii.len();
    let mut dm = vec![0.0; n];
    for i in 0..n {
        let w = match i {
            0 => 0.5 * (radii[1] - radii[0]),
            _ if i == n - 1 => 0.5 * (radii[n - 1] - radii[n - 2]),
            _ => 0.5 * (radii[i + 1] - radii[i - 1]),
        };
        dm[i] = 4.0 * PI * radii[i] * radii[i] * density[i] * w;
    }
    let mut u = 0.0;
    for i in 0..n {
        if dm[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            u += dm[i] * dm[j] * shell_pair_kernel(d, radii[i], radii[j]);
        }
    }
    -g * u
}

#[test]
fn criterion_7_mean_field_module() {
    let g = 1.0;
    let (rho, radius) = (1.0, 1.0);
    let sphere = uniform_sphere(rho, radius, 2001);
    let mass = 4.0 / 3.0 * PI * rho * radius.powi(3);

    let exterior = newton_potential(&sphere, g, &[2.0 * radius]).unwrap()[0];
    let exterior_err = (exterior - g * mass / (2.0 * radius)).abs() / (g * mass / (2.0 * radius));
    assert!(
        exterior_err <= tol::POTENTIAL_REL,
        "ACCEPTANCE 7 mean_field: FAIL (exterior err {exterior_err:.3e})"
    );

    let mut interior_err = 0.0_f64;
    for r in [0.0, 0.4, 0.9, 1.6] {
        let phi = newton_potential(&sphere, g, &[r]).unwrap()[0];
        let expected = g * mass * (3.0 * radius * radius - r * r) / (2.0 * radius.powi(3));
        let expected = if r <= radius { expected } else { g * mass / r };
        interior_err = interior_err.max((phi - expected).abs() / expected);
    }
    assert!(
        interior_err <= tol::POTENTIAL_REL,
        "ACCEPTANCE 7 mean_field: FAIL (interior err {interior_err:.3e})"
    );

    let w = omega_g(&sphere, g).unwrap();
    let factor = w * w / (g * rho);
    let factor_err = (factor - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0);
    assert!(
        factor_err <= tol::OMEGA_G_FACTOR_REL,
        "ACCEPTANCE 7 mean_field: FAIL (geometric factor err {factor_err:.3e})"
    );

    // Gaussian profile against the brute-force double quadrature.
    let profile = gaussian_profile(2.0, 1.0, 6001);
    let delta = 0.01 * profile.support_radius();
    let u0 = mutual_energy_oracle(&profile, g, 0.0);
    let up = mutual_energy_oracle(&profile, g, delta);
    let um = mutual_energy_oracle(&profile, g, -delta);
    let oracle_w2 = (up - 2.0 * u0 + um) / (delta * delta) / profile.total_mass();
    let curve = self_energy_curve(&profile, g, 0.05 * profile.support_radius(), 21).unwrap();
    let gauss_err = (curve.fitted_omega_g_sq - oracle_w2).abs() / oracle_w2;
    assert!(
        gauss_err <= tol::OMEGA_G_FACTOR_REL,
        "ACCEPTANCE 7 mean_field: FAIL (gaussian curvature err {gauss_err:.3e})"
    );

    pass(
        7,
        "mean_field",
        &format!(
            "exterior {:.2e}, interior {:.2e}, factor {:.2e}, gaussian-vs-oracle {:.2e}",
            exterior_err, interior_err, factor_err, gauss_err
        ),
    );
}

#[test]
fn criterion_8_byte_identical_reruns() {
    let run_once = |dir: &Path| {
        let cfg = load(&config_toml(0.2, 1.0, 2, 1.0, dir));
        run_acausality(&cfg).unwrap();
        (
            std::fs::read(dir.join("acausality.csv")).unwrap(),
            std::fs::read(dir.join("oracle_trace_distance.csv")).unwrap(),
        )
    };
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let (a1, o1) = run_once(dir1.path());
    let (a2, o2) = run_once(dir2.path());
    assert!(
        a1 == a2 && o1 == o2,
        "ACCEPTANCE 8 determinism: FAIL (CSV bodies differ between identical runs)"
    );
    pass(
        8,
        "determinism",
        &format!(
            "{} + {} identical CSV bytes across reruns",
            a1.len(),
            o1.len()
        ),
    );
}

#[test]
fn omega_g_command_on_the_bundled_profile() {
    // Harness-level form of criterion 7's geometric-factor check.
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let config_path = root.join("configs/omega_g.toml");
    let dir = tempfile::tempdir().unwrap();
    let cfg = snlab::config::load_config(&config_path, Some(dir.path())).unwrap();
    let verdict = run_omega_g(&cfg).unwrap();
    assert!(verdict.passed(), "omega-g verdict: {verdict:?}");
    assert!(dir.path().join("self_energy.csv").exists());
}

#[test]
fn oracle_check_command_passes_on_defaults() {
    // Harness-level form of the grid-vs-oracle gate (shorter horizon; the
    // full five-period gate runs in the library tests and criterion 6).
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
[grid]
n_points = 2048
x_min = -20.0
x_max = 20.0

[probe]
mass = 1.0
x0 = 1.0
p0 = 0.0
sigma = 1.0

[hamiltonian]
omega0 = 1.0
omega_g = 0.3

[light]
dim = 2
lambda = 1.0

[run]
dt = 0.002
t_final = 12.566370614359172
snapshot_interval = 0.5

[output]
directory = "{}"
"#,
        dir.path().display()
    );
    let cfg = load(&text);
    let verdict = run_oracle_check(&cfg).unwrap();
    assert!(verdict.passed(), "oracle-check verdict: {verdict:?}");
    for name in ["moments_single", "moments_coupled", "moments_detected"] {
        assert!(verdict.checks.iter().any(|c| c.name == name && c.passed));
    }
}
