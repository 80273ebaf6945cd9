//! Self-contained verification suite: every comparison between the
//! interferometric readout, the two-point-measurement definition and the
//! closed forms, with a measured deviation and a threshold per check.
//!
//! Randomized instances come from a `ChaCha8Rng` seeded by the caller, so a
//! given seed always produces the same report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersive::{protocol_equivalence, DispersiveQuench};
use crate::error::Result;
use crate::interferometer::{
    compose, gate_commuting, gate_commuting_sequence, gate_general, gate_sequence, run_protocol,
    run_protocol_state, verify_generalized_gate,
};
use crate::linalg::{kron, ComplexMatrix};
use crate::open::{
    char_fn_open_kraus, char_fn_open_trace, joint_prob_open_kraus, kraus_from_use,
    run_protocol_open_with, u_se, OpenSetup,
};
use crate::quench::{
    chi_closed, chi_re_im_closed, chi_series, hyp2f1_special, partial_inversion_formula,
    partial_inversion_quadrature, peak_weights, Hyp2F1Params, QuenchParams,
};
use crate::random::{random_hermitian, random_unitary, uniform};
use crate::real::{cplx, cre};
use crate::states::{
    beta_from_nbar, oscillator_hamiltonian, oscillator_thermal, partition_function,
    qubit_constants, thermal_state, truncation_dim, SpectralHamiltonian,
};
use crate::tpm::{
    average_work, average_work_from_chi, char_fn_direct, default_du, jarzynski_check,
    joint_probabilities, work_distribution,
};
use crate::Config;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub deviation: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub version: String,
    pub seed: u64,
    pub eps_tail: f64,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub config: Config,
    /// Replaces every threshold when set.
    pub force_tol: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            config: Config::default(),
            force_tol: None,
        }
    }
}

struct Suite {
    force_tol: Option<f64>,
    checks: Vec<CheckResult>,
}

impl Suite {
    fn record(&mut self, name: &str, deviation: f64, threshold: f64) {
        let threshold = self.force_tol.unwrap_or(threshold);
        self.checks.push(CheckResult {
            name: name.to_string(),
            deviation,
            threshold,
            passed: deviation.is_finite() && deviation < threshold,
        });
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) })
}

/// Sudden-quench oscillator: (H_i, H_f, thermal ρ) on the truncated space.
pub fn sudden_oscillator(
    lambda0: f64,
    delta_lambda: f64,
    nbar: f64,
    config: &Config,
) -> Result<(SpectralHamiltonian<f64>, SpectralHamiltonian<f64>, crate::DensityMatrix64)> {
    let (h_i, rho) = oscillator_thermal(lambda0, nbar, config)?;
    let h_f = oscillator_hamiltonian(lambda0 + delta_lambda, h_i.dim() - 1)?;
    Ok((h_i, h_f, rho))
}

/// (H_i, H_f, U_τ, ρ)
pub type ClosedInstance = (
    SpectralHamiltonian<f64>,
    SpectralHamiltonian<f64>,
    ComplexMatrix<f64>,
    crate::DensityMatrix64,
);

/// Random (H_i, H_f, U_τ, thermal ρ) with generically non-commuting pieces.
pub fn random_closed_instance(rng: &mut ChaCha8Rng, dim: usize) -> Result<ClosedInstance> {
    let h_i = SpectralHamiltonian::new(random_hermitian(rng, dim))?;
    let h_f = SpectralHamiltonian::new(random_hermitian(rng, dim))?;
    let u_tau = random_unitary(rng, dim);
    let beta: f64 = uniform(rng, 0.2, 2.0);
    let rho = thermal_state(&h_i, beta)?;
    Ok((h_i, h_f, u_tau, rho))
}

/// Random open setup with ‖H_SE − I⊗H_E‖_F = `coupling`·‖H_S‖_F.
pub fn random_open_instance(
    rng: &mut ChaCha8Rng,
    ds: usize,
    de: usize,
    coupling: f64,
    tau: f64,
) -> Result<OpenSetup<f64>> {
    let h_i = SpectralHamiltonian::new(random_hermitian(rng, ds))?;
    let h_f = SpectralHamiltonian::new(random_hermitian(rng, ds))?;
    let h_e = random_hermitian::<f64, _>(rng, de);
    let v = random_hermitian::<f64, _>(rng, ds * de);
    let scale = coupling * h_f.matrix().frobenius_norm() / v.frobenius_norm();
    let h_se = &kron(&ComplexMatrix::identity(ds), &h_e) + &v.scale(cre(scale));
    let beta_s: f64 = uniform(rng, 0.3, 1.5);
    let beta_e: f64 = uniform(rng, 0.3, 1.5);
    let rho_s = thermal_state(&h_i, beta_s)?;
    let rho_e = thermal_state(&SpectralHamiltonian::new(h_e)?, beta_e)?;
    OpenSetup::sudden(h_i, h_f, h_se, rho_s, rho_e, tau)
}

/// Runs the suite. Errors from the library are reported as failed checks
/// with infinite deviation rather than aborting the run.
pub fn run_suite(opts: &VerifyOptions) -> VerifyReport {
    let mut suite = Suite {
        force_tol: opts.force_tol,
        checks: Vec::new(),
    };
    let cfg = opts.config;
    let tail = cfg.eps_tail;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let push = |suite: &mut Suite, name: &str, r: Result<f64>, thr: f64| {
        suite.record(name, r.unwrap_or(f64::INFINITY), thr)
    };

    let fig_params = [(0.3, 0.0), (0.3, 1.5), (0.3, 5.0), (0.5, 1.5), (2.0, 1.5), (0.0, 1.5)];
    let u40 = grid(0.0, 40.0, 400);

    push(
        &mut suite,
        "closed_form_re_im_consistency",
        Ok(max_of(fig_params.iter().flat_map(|&(dl, n)| {
            let p = QuenchParams { delta_lambda: dl, nbar: n };
            u40.iter().map(move |&u| {
                let (re, im) = chi_re_im_closed(u, &p);
                (cplx(re, im) - chi_closed(u, &p)).norm()
            })
        }))),
        1e-13,
    );

    push(
        &mut suite,
        "closed_form_vs_series",
        (|| {
            let mut worst = 0.0f64;
            for &(dl, n) in &fig_params {
                let p = QuenchParams { delta_lambda: dl, nbar: n };
                let nmax = truncation_dim(n, tail, cfg.nmax_cap)?;
                for &u in &u40 {
                    worst = worst.max((chi_series(u, &p, nmax) - chi_closed(u, &p)).norm());
                }
            }
            Ok(worst)
        })(),
        10.0 * tail,
    );

    push(
        &mut suite,
        "protocol_vs_closed_form_sudden_quench",
        (|| {
            let mut worst = 0.0f64;
            for &(dl, n) in &fig_params {
                let (h_i, h_f, rho) = sudden_oscillator(1.0, dl, n, &cfg)?;
                let p = QuenchParams::new(dl, n)?;
                let devs: Vec<f64> = grid(0.0, 40.0, 41)
                    .par_iter()
                    .map(|&u| -> Result<f64> {
                        let r = run_protocol(&gate_commuting(u, &h_i, &h_f)?, &rho)?;
                        Ok((r.chi() - chi_closed(u, &p)).norm())
                    })
                    .collect::<Result<_>>()?;
                worst = worst.max(max_of(devs));
            }
            Ok(worst)
        })(),
        1e-9,
    );

    let mut tpm_vs_peaks = 0.0f64;
    let mut mean_atoms = 0.0f64;
    let mut mean_fd = 0.0f64;
    let r: Result<()> = (|| {
        for &n in &[1.0, 10.0] {
            let (h_i, h_f, rho) = sudden_oscillator(1.0, 1.0, n, &cfg)?;
            let dist = work_distribution(&joint_probabilities(
                &rho,
                &ComplexMatrix::identity(h_i.dim()),
                &h_i,
                &h_f,
            )?);
            let peaks = peak_weights(&QuenchParams::new(1.0, n)?, h_i.dim());
            if dist.atoms.len() != peaks.atoms.len() {
                tpm_vs_peaks = f64::INFINITY;
            }
            for (a, b) in dist.atoms.iter().zip(&peaks.atoms) {
                tpm_vs_peaks = tpm_vs_peaks.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
            }
            tpm_vs_peaks = tpm_vs_peaks.max((dist.total() - 1.0).abs() - tail);
            let want = n + 0.5;
            mean_atoms = mean_atoms.max((average_work(&dist) - want).abs());
            let fd = average_work_from_chi(
                |u| char_fn_direct(&rho, &ComplexMatrix::identity(h_i.dim()), &h_i, &h_f, u)
                    .expect("dimensions checked"),
                default_du(&h_i, &h_f),
            )?;
            mean_fd = mean_fd.max((fd - want).abs());
        }
        Ok(())
    })();
    let wrap = |x: f64| r.as_ref().map(|_| x).map_err(|e| e.clone());
    push(&mut suite, "tpm_atoms_vs_peak_weights", wrap(tpm_vs_peaks), 1e-10);
    push(&mut suite, "average_work_from_atoms", wrap(mean_atoms), 1e-8);
    push(&mut suite, "average_work_from_chi_derivative", wrap(mean_fd), 1e-8);

    // Randomized non-commuting instances: protocol vs definition, decompositions.
    let closed: Vec<_> = (0..20)
        .map(|k| random_closed_instance(&mut rng, 2 + k % 5))
        .collect::<Result<_>>()
        .unwrap_or_default();
    let u_pts: Vec<f64> = (0..10).map(|_| uniform(&mut rng, -10.0, 10.0)).collect();
    push(
        &mut suite,
        "protocol_vs_direct_random",
        (|| {
            if closed.is_empty() {
                return Ok(f64::INFINITY);
            }
            let devs: Vec<f64> = closed
                .par_iter()
                .map(|(h_i, h_f, u_tau, rho)| -> Result<f64> {
                    let mut worst = 0.0f64;
                    for &u in &u_pts {
                        let r = run_protocol(&gate_general(u, u_tau, h_i, h_f)?, rho)?;
                        let d = char_fn_direct(rho, u_tau, h_i, h_f, u)?;
                        let t = joint_probabilities(rho, u_tau, h_i, h_f)?.fourier_sum(u);
                        worst = worst.max((r.chi() - d).norm()).max((d - t).norm());
                    }
                    Ok(worst)
                })
                .collect::<Result<_>>()?;
            Ok(max_of(devs))
        })(),
        1e-10,
    );
    push(
        &mut suite,
        "gate_decomposition_general",
        (|| {
            let mut worst = 0.0f64;
            for (h_i, h_f, u_tau, _) in &closed {
                let u = u_pts[0];
                let seq = compose(&gate_sequence(u, u_tau, h_i, h_f)?);
                worst = worst.max(seq.distance(&gate_general(u, u_tau, h_i, h_f)?));
            }
            Ok(worst)
        })(),
        1e-12,
    );
    push(
        &mut suite,
        "gate_decomposition_commuting",
        (|| {
            let mut worst = 0.0f64;
            for (h_i, _, _, _) in &closed {
                let d = h_i.dim();
                let h_f = SpectralHamiltonian::new(h_i.matrix().scale(cre(1.7)))?;
                let u = u_pts[1];
                let seq = compose(&gate_commuting_sequence(u, h_i, &h_f)?);
                worst = worst.max(seq.distance(&gate_commuting(u, h_i, &h_f)?));
                debug_assert_eq!(seq.dim(), 2 * d);
            }
            Ok(worst)
        })(),
        1e-12,
    );
    push(
        &mut suite,
        "generalized_gate_local_unitaries",
        (|| {
            let q = qubit_constants::<f64>();
            let mut worst = 0.0f64;
            for (h_i, h_f, u_tau, rho) in closed.iter().take(5) {
                let u = u_pts[2];
                let gate = gate_general(u, u_tau, h_i, h_f)?;
                // K_S commuting with ρ, L_A an x rotation fixing |+⟩
                let k_s = h_i.evolution(0.37);
                let l_a = crate::linalg::expm_hermitian(&q.pauli_x, cplx(0.0, -0.81))?;
                worst = worst.max(verify_generalized_gate(&gate, &k_s, &l_a, rho)?);
            }
            Ok(worst)
        })(),
        1e-10,
    );

    let disp = DispersiveQuench {
        omega: 1.0,
        delta: 20.0,
        lambda0: 0.2,
        lambda_tau: 0.5,
        nmax: 1,
    };
    let eq = protocol_equivalence(&grid(0.0, 40.0, 25), &disp, 1.5, &cfg);
    push(
        &mut suite,
        "dispersive_simple_gate_relation",
        eq.as_ref().map(|r| r.identity).map_err(|e| e.clone()),
        1e-12,
    );
    push(
        &mut suite,
        "dispersive_ancilla_state_up_to_sigma_z",
        eq.as_ref().map(|r| r.rho_conjugated).map_err(|e| e.clone()),
        1e-10,
    );
    push(
        &mut suite,
        "dispersive_chi_vs_closed_form",
        eq.as_ref().map(|r| r.chi_simple_vs_closed).map_err(|e| e.clone()),
        1e-10 + tail,
    );

    let pairs: Vec<(f64, f64)> = (0..10)
        .map(|_| {
            let k = (uniform::<f64, _>(&mut rng, 0.0, 4.0)).floor();
            let w = k + uniform::<f64, _>(&mut rng, 0.1, 0.4) + if k as i64 % 2 == 0 { 0.0 } else { 0.5 };
            (w, uniform(&mut rng, 0.5, 12.0))
        })
        .collect();
    push(
        &mut suite,
        "inversion_formula_vs_quadrature",
        (|| {
            let mut worst = 0.0f64;
            for &n in &[0.0, 1.0] {
                let p = QuenchParams::new(1.0, n)?;
                for &(w, eps) in &pairs {
                    let f = partial_inversion_formula(eps, w, &p)?;
                    let q = partial_inversion_quadrature(eps, w, |u| chi_closed(u, &p))?;
                    worst = worst.max((f - q).norm());
                }
            }
            Ok(worst)
        })(),
        1e-6,
    );
    push(
        &mut suite,
        "inversion_zero_temperature_sinc",
        (|| {
            let p = QuenchParams::new(1.0, 0.0)?;
            let mut worst = 0.0f64;
            for &(w, eps) in &pairs {
                let q = partial_inversion_quadrature(eps, w, |u| chi_closed(u, &p))?;
                let sinc = 2.0 * (eps * (w - 0.5)).sin() / (std::f64::consts::PI * (2.0 * w - 1.0));
                worst = worst.max((q - cre(sinc)).norm());
            }
            Ok(worst)
        })(),
        1e-8,
    );
    push(
        &mut suite,
        "hypergeometric_log_identity",
        (|| {
            let mut worst = 0.0f64;
            for x in [0.1, 0.5, 0.9] {
                let (v, _) = hyp2f1_special(&Hyp2F1Params { a: 1.0, z: cre(x) }, 1e-15)?;
                worst = worst.max((v - cre(-(1.0f64 - x).ln() / x)).norm());
            }
            Ok(worst)
        })(),
        1e-12,
    );

    let open: Vec<OpenSetup<f64>> = (0..10)
        .map(|_| random_open_instance(&mut rng, 3, 4, 0.3, 2.0))
        .collect::<Result<_>>()
        .unwrap_or_default();
    let open_u = grid(0.0, 20.0, 15);
    let open_res: Result<Vec<(f64, f64)>> = open
        .par_iter()
        .map(|s| -> Result<(f64, f64)> {
            let use_ = u_se(s, 1)?;
            let kraus = kraus_from_use(&use_, &s.rho_e)?;
            let table = joint_prob_open_kraus(s, &kraus)?;
            let mut worst = 0.0f64;
            for &u in &open_u {
                let k = char_fn_open_kraus(s, &kraus, u)?;
                let t = char_fn_open_trace(s, &use_, u);
                let f = table.fourier_sum(u);
                let p = run_protocol_open_with(s, &use_, u)?.chi();
                for (a, b) in [(k, t), (k, f), (k, p), (f, p)] {
                    worst = worst.max((a - b).norm());
                }
            }
            Ok((worst, kraus.completeness_deviation()))
        })
        .collect();
    let open_res = open_res.and_then(|v| {
        if v.is_empty() {
            Err(crate::Error::InvalidParameter("no open instances".into()))
        } else {
            Ok(v)
        }
    });
    push(
        &mut suite,
        "open_system_three_way_equality",
        open_res.as_ref().map(|v| max_of(v.iter().map(|x| x.0))).map_err(|e| e.clone()),
        1e-10,
    );
    push(
        &mut suite,
        "kraus_completeness",
        open_res.as_ref().map(|v| max_of(v.iter().map(|x| x.1))).map_err(|e| e.clone()),
        1e-11,
    );

    push(
        &mut suite,
        "jarzynski_sudden_quench",
        (|| {
            let mut worst = 0.0f64;
            for &n in &[0.5, 1.0, 5.0] {
                let (h_i, h_f, rho) = sudden_oscillator(1.0, 0.7, n, &cfg)?;
                let dist = work_distribution(&joint_probabilities(
                    &rho,
                    &ComplexMatrix::identity(h_i.dim()),
                    &h_i,
                    &h_f,
                )?);
                let beta = beta_from_nbar(n, 1.0);
                let j = jarzynski_check(
                    &dist,
                    beta,
                    partition_function(&h_i, beta),
                    partition_function(&h_f, beta),
                )?;
                worst = worst.max(j.deviation);
            }
            Ok(worst)
        })(),
        1e-10 + tail,
    );

    push(
        &mut suite,
        "property_violations",
        (|| {
            let mut violations = 0usize;
            for &(dl, n) in &fig_params {
                let p = QuenchParams { delta_lambda: dl, nbar: n };
                if (chi_closed(0.0, &p) - cre(1.0)).norm() > 1e-15 {
                    violations += 1;
                }
                for &u in u40.iter().step_by(7) {
                    let c = chi_closed(u, &p);
                    if c.norm() > 1.0 + 1e-12 {
                        violations += 1;
                    }
                    if (chi_closed(-u, &p) - c.conj()).norm() > 1e-12 {
                        violations += 1;
                    }
                    if dl != 0.0 {
                        let period = std::f64::consts::TAU / dl;
                        if (chi_closed(u + period, &p) + c).norm() > 1e-12 {
                            violations += 1;
                        }
                    }
                }
            }
            for (h_i, h_f, u_tau, rho) in closed.iter().take(5) {
                let out = run_protocol_state(&gate_general(u_pts[3], u_tau, h_i, h_f)?, rho)?;
                if out.ancilla.check().is_err() || out.sx.abs() > 1e-10 {
                    violations += 1;
                }
            }
            Ok(violations as f64)
        })(),
        0.5,
    );

    let all_passed = suite.checks.iter().all(|c| c.passed);
    VerifyReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        eps_tail: tail,
        checks: suite.checks,
        all_passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes_and_is_deterministic() {
        let a = run_suite(&VerifyOptions::default());
        for c in &a.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(a.checks.len() >= 12);
        let b = run_suite(&VerifyOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn forced_tolerance_fails() {
        let r = run_suite(&VerifyOptions {
            force_tol: Some(1e-30),
            ..Default::default()
        });
        assert!(!r.all_passed);
    }

    #[test]
    fn small_helpers() {
        assert_eq!(grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert!(max_of([1.0, f64::NAN]).is_nan());
    }
}
