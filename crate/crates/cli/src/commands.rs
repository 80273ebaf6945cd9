use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use workchar::dispersive::{gate_cal, gate_simple, protocol_equivalence, DispersiveQuench};
use workchar::interferometer::{gate_commuting, run_protocol, sweep_char_fn};
use workchar::linalg::ComplexMatrix;
use workchar::open::{char_fn_open_kraus, kraus_from_use, run_protocol_open_with, u_se};
use workchar::quench::{chi_closed, partial_inversion_formula, partial_inversion_quadrature, peak_weights};
use workchar::states::oscillator_thermal;
use workchar::tpm::{char_fn_direct, joint_probabilities, work_distribution};
use workchar::verify::{random_open_instance, run_suite, sudden_oscillator, VerifyOptions, DEFAULT_SEED};
use workchar::{Config, Error, QuenchParams64};

use crate::config::Resolver;
use crate::output::{render, render_json, Cell, Format, Meta, Table};
use crate::{CliError, DispersiveArgs, GridArgs, InversionArgs, OpenArgs, SweepChiArgs, SweepMode, VerifyArgs, WorkDistArgs};

/// Rendered output plus an optional verification failure message. The output
/// is written even when a check fails so the offending rows can be inspected.
pub struct Outcome {
    pub text: String,
    pub failure: Option<String>,
}

fn meta(command: &str, res: &Resolver, config: &Config, seed: Option<u64>) -> Meta {
    Meta {
        program: "workchar".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        seed,
        eps_tail: config.eps_tail,
        params: res.resolved.clone(),
    }
}

fn grid(res: &mut Resolver, g: &GridArgs, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    let lo = res.finite("u-min", g.u_min, Some(lo))?;
    let hi = res.finite("u-max", g.u_max, Some(hi))?;
    let n = res.get("u-points", g.u_points, Some(n))?;
    linspace(lo, hi, n, "u")
}

fn linspace(lo: f64, hi: f64, n: usize, name: &str) -> Result<Vec<f64>, CliError> {
    if n == 0 {
        return Err(CliError::Usage(format!("{name}-points must be ≥ 1")));
    }
    if hi < lo {
        return Err(CliError::Usage(format!("{name}-max must be ≥ {name}-min")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

fn check_tol(res: &mut Resolver, flag: Option<f64>) -> Result<Option<f64>, CliError> {
    let t = res.optional("check-tol", flag)?;
    if let Some(t) = t {
        if !(t > 0.0) {
            return Err(CliError::Usage("--check-tol must be positive".into()));
        }
    }
    Ok(t)
}

fn failure(tol: Option<f64>, worst: f64, what: &str) -> Option<String> {
    let tol = tol?;
    (!(worst <= tol)).then(|| format!("max {what} {worst:e} exceeds {tol:e}"))
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) })
}

fn nonneg(v: f64, key: &str) -> Result<f64, CliError> {
    if !(v >= 0.0) {
        return Err(CliError::Usage(format!("--{key} must be ≥ 0")));
    }
    Ok(v)
}

pub fn sweep_chi(a: &SweepChiArgs, res: &mut Resolver, config: &Config, format: Format) -> Result<Outcome, CliError> {
    let dl = res.finite("delta-lambda", a.delta_lambda, None)?;
    let nbar = nonneg(res.finite("nbar", a.nbar, None)?, "nbar")?;
    let lambda0 = res.finite("lambda0", a.lambda0, Some(1.0))?;
    let us = grid(res, &a.grid, 0.0, 40.0, 400)?;
    let mode = res.get("mode", a.mode, Some(SweepMode::Protocol))?;
    let tol = check_tol(res, a.check_tol)?;
    let p = QuenchParams64::new(dl, nbar)?;

    let computed: Vec<(f64, f64)> = match mode {
        SweepMode::Closed => us.iter().map(|&u| chi_closed(u, &p)).map(|c| (c.re, c.im)).collect(),
        SweepMode::Protocol => {
            let (h_i, h_f, rho) = sudden_oscillator(lambda0, dl, nbar, config)?;
            sweep_char_fn(|u| gate_commuting(u, &h_i, &h_f), &rho, &us)?
                .into_iter()
                .map(|s| (s.re, s.im))
                .collect()
        }
        SweepMode::Direct => {
            let (h_i, h_f, rho) = sudden_oscillator(lambda0, dl, nbar, config)?;
            let id = ComplexMatrix::identity(h_i.dim());
            us.par_iter()
                .map(|&u| char_fn_direct(&rho, &id, &h_i, &h_f, u).map(|c| (c.re, c.im)))
                .collect::<Result<_, Error>>()?
        }
    };

    let mut t = Table::new(&["u", "re", "im", "deviation"]);
    let mut devs = Vec::with_capacity(us.len());
    for (&u, &(re, im)) in us.iter().zip(&computed) {
        let c = chi_closed(u, &p);
        let d = (c.re - re).hypot(c.im - im);
        devs.push(d);
        t.push_f64(&[u, re, im, d]);
    }
    Ok(Outcome {
        text: render(&meta("sweep-chi", res, config, None), &t, format),
        failure: failure(tol, max_of(devs), "deviation from the closed form"),
    })
}

pub fn work_dist(a: &WorkDistArgs, res: &mut Resolver, config: &Config, format: Format) -> Result<Outcome, CliError> {
    let dl = res.finite("delta-lambda", a.delta_lambda, None)?;
    let nbar = nonneg(res.finite("nbar", a.nbar, None)?, "nbar")?;
    let lambda0 = res.finite("lambda0", a.lambda0, Some(1.0))?;
    let (h_i, _, _) = sudden_oscillator(lambda0, dl, nbar, config)?;
    let count = res.get("count", a.count, Some(h_i.dim()))?;
    if count == 0 {
        return Err(CliError::Usage("--count must be ≥ 1".into()));
    }
    let tol = check_tol(res, a.check_tol)?.unwrap_or(1e-10 + config.eps_tail);
    let p = QuenchParams64::new(dl, nbar)?;
    let peaks = peak_weights(&p, count);

    // Two-point measurement on a cutoff wide enough to hold every listed peak.
    let nmax = (h_i.dim() - 1).max(count - 1).max(1);
    let h_i = workchar::states::oscillator_hamiltonian(lambda0, nmax)?;
    let h_f = workchar::states::oscillator_hamiltonian(lambda0 + dl, nmax)?;
    let rho = workchar::states::oscillator_thermal_on(&h_i, nbar)?;
    let table = joint_probabilities(&rho, &ComplexMatrix::identity(nmax + 1), &h_i, &h_f)?;
    let tpm = work_distribution(&table);

    let mut t = Table::new(&["w", "p", "p_tpm", "deviation"]);
    let mut worst: f64 = 0.0;
    for &(w, pw) in &peaks.atoms {
        let matched = tpm
            .atoms
            .iter()
            .min_by(|x, y| (x.0 - w).abs().total_cmp(&(y.0 - w).abs()))
            .filter(|x| (x.0 - w).abs() <= 1e-9 * (1.0 + w.abs()))
            .map_or(0.0, |x| x.1);
        let d = (pw - matched).abs();
        worst = worst.max(d);
        t.push_f64(&[w, pw, matched, d]);
    }
    Ok(Outcome {
        text: render(&meta("work-dist", res, config, None), &t, format),
        failure: failure(Some(tol), worst, "peak-weight deviation from two-point measurement"),
    })
}

pub fn inversion(a: &InversionArgs, res: &mut Resolver, config: &Config, format: Format) -> Result<Outcome, CliError> {
    let dl = res.finite("delta-lambda", a.delta_lambda, None)?;
    let nbar = nonneg(res.finite("nbar", a.nbar, None)?, "nbar")?;
    let eps = res.finite("eps", a.eps, Some(5.0))?;
    if !(eps > 0.0) {
        return Err(CliError::Usage("--eps must be positive".into()));
    }
    let w_min = res.finite("w-min", a.w_min, Some(0.0))?;
    let w_max = res.finite("w-max", a.w_max, Some(3.0))?;
    let w_points = res.get("w-points", a.w_points, Some(61))?;
    let tol = check_tol(res, a.check_tol)?;
    let ws = linspace(w_min, w_max, w_points, "w")?;
    let p = QuenchParams64::new(dl, nbar)?;

    let rows: Vec<Option<[f64; 5]>> = ws
        .par_iter()
        .map(|&w| match partial_inversion_formula(eps, w, &p) {
            Err(Error::OnPeak { n }) => {
                log::warn!("skipping W = {w}: on peak n = {n}");
                Ok(None)
            }
            Err(e) => Err(e),
            Ok(f) => {
                let q = partial_inversion_quadrature(eps, w, |u| chi_closed(u, &p))?;
                Ok(Some([eps, w, f.re, q.re, (f - q).norm()]))
            }
        })
        .collect::<Result<_, Error>>()?;

    let mut t = Table::new(&["eps", "w", "re_formula", "re_quad", "deviation"]);
    let mut worst: f64 = 0.0;
    for r in rows.into_iter().flatten() {
        worst = worst.max(r[4]);
        t.push_f64(&r);
    }
    Ok(Outcome {
        text: render(&meta("inversion", res, config, None), &t, format),
        failure: failure(tol, worst, "formula/quadrature deviation"),
    })
}

pub fn dispersive(a: &DispersiveArgs, res: &mut Resolver, config: &Config, format: Format) -> Result<Outcome, CliError> {
    let omega = res.finite("omega", a.omega, Some(1.0))?;
    let delta = res.finite("delta", a.delta, Some(20.0))?;
    let lambda0 = res.finite("lambda0", a.lambda0, Some(0.2))?;
    let lambda_tau = res.finite("lambda-tau", a.lambda_tau, Some(0.5))?;
    let nbar = nonneg(res.finite("nbar", a.nbar, Some(1.5))?, "nbar")?;
    let us = grid(res, &a.grid, 0.0, 40.0, 25)?;
    let tol = check_tol(res, a.check_tol)?;

    let (_, rho) = oscillator_thermal(omega + lambda0, nbar, config)?;
    let q = DispersiveQuench {
        omega,
        delta,
        lambda0,
        lambda_tau,
        nmax: rho.dim() - 1,
    };

    let rows: Vec<[f64; 9]> = us
        .par_iter()
        .map(|&u| {
            let rep = protocol_equivalence(&[u], &q, nbar, config)?;
            let cal = run_protocol(&gate_cal(u, &q)?.composed, &rho)?;
            let simple = run_protocol(&gate_simple(u, &q)?, &rho)?;
            Ok([
                u,
                simple.sz,
                simple.sy,
                cal.sz,
                cal.sy,
                rep.rho_conjugated,
                rep.rho_raw,
                rep.identity,
                rep.identity_with_ha,
            ])
        })
        .collect::<Result<_, Error>>()?;

    let mut t = Table::new(&[
        "u",
        "re_simple",
        "im_simple",
        "re_cal",
        "im_cal",
        "deviation",
        "deviation_raw",
        "identity_deviation",
        "identity_deviation_with_ha",
    ]);
    let mut worst: f64 = 0.0;
    for r in &rows {
        worst = worst.max(r[5]);
        t.push_f64(r);
    }
    Ok(Outcome {
        text: render(&meta("dispersive", res, config, None), &t, format),
        failure: failure(tol, worst, "ancilla-state deviation"),
    })
}

pub fn open(a: &OpenArgs, res: &mut Resolver, config: &Config, format: Format) -> Result<Outcome, CliError> {
    let ds = res.get("ds", a.ds, Some(3))?;
    let de = res.get("de", a.de, Some(4))?;
    if ds == 0 || de == 0 {
        return Err(CliError::Usage("--ds and --de must be ≥ 1".into()));
    }
    let scale = nonneg(res.finite("hse-scale", a.hse_scale, Some(0.3))?, "hse-scale")?;
    let tau = nonneg(res.finite("tau", a.tau, Some(2.0))?, "tau")?;
    let seed = res.get("seed", a.seed, Some(DEFAULT_SEED))?;
    let us = grid(res, &a.grid, 0.0, 20.0, 15)?;
    let tol = check_tol(res, a.check_tol)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let setup = random_open_instance(&mut rng, ds, de, scale, tau)?;
    let use_ = u_se(&setup, 1)?;
    let kraus = kraus_from_use(&use_, &setup.rho_e)?;
    // Closed-system reference: the same quench with the environment removed.
    let u_closed = setup.h_f.evolution(tau);

    let rows: Vec<[f64; 6]> = us
        .par_iter()
        .map(|&u| {
            let r = run_protocol_open_with(&setup, &use_, u)?;
            let k = char_fn_open_kraus(&setup, &kraus, u)?;
            let c = char_fn_direct(&setup.rho_s, &u_closed, &setup.h_i, &setup.h_f, u)?;
            Ok([u, r.sz, r.sy, (k.re - r.sz).hypot(k.im - r.sy), c.re, c.im])
        })
        .collect::<Result<_, Error>>()?;

    let mut t = Table::new(&["u", "re", "im", "deviation", "re_closed", "im_closed"]);
    let mut worst: f64 = 0.0;
    for r in &rows {
        worst = worst.max(r[3]);
        t.push_f64(r);
    }
    Ok(Outcome {
        text: render(&meta("open", res, config, Some(seed)), &t, format),
        failure: failure(tol, worst, "protocol/Kraus deviation"),
    })
}

pub fn verify(a: &VerifyArgs, res: &mut Resolver, config: &Config, format: Format) -> Result<Outcome, CliError> {
    let seed = res.get("seed", a.seed, Some(DEFAULT_SEED))?;
    let force_tol = res.optional("force-tol", a.force_tol)?;
    if let Some(t) = force_tol {
        if !(t > 0.0) {
            return Err(CliError::Usage("--force-tol must be positive".into()));
        }
    }
    let report = run_suite(&VerifyOptions {
        seed,
        config: *config,
        force_tol,
    });

    let mut t = Table::new(&["name", "deviation", "threshold", "passed"]);
    for c in &report.checks {
        t.push(vec![Cell::S(c.name.clone()), Cell::F(c.deviation), Cell::F(c.threshold), Cell::B(c.passed)]);
    }
    let m = meta("verify", res, config, Some(seed));
    let text = match format {
        Format::Csv => render(&m, &t, format),
        Format::Json => render_json(
            &m,
            &t,
            Some(("all_passed", serde_json::Value::Bool(report.all_passed))),
        ),
    };
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    Ok(Outcome {
        text,
        failure: (!report.all_passed).then(|| format!("{} check(s) failed: {}", failed.len(), failed.join(", "))),
    })
}
