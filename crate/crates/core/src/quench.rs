//! Closed-form results for a sudden frequency quench λ₀ → λ_τ of a thermal
//! harmonic oscillator: χ(u), the ancilla state, the partial inverse Fourier
//! integral ℐ(ε) and the peak weights of P(W).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::real::{cis, cplx, cre, Real, C};
use crate::states::thermal_occupations;
use crate::tpm::WorkDistribution;

/// Quench amplitude Δλ = λ_τ − λ₀ and initial mean occupation n̄.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuenchParams<T: Real> {
    pub delta_lambda: T,
    pub nbar: T,
}

impl<T: Real> QuenchParams<T> {
    pub fn new(delta_lambda: T, nbar: T) -> Result<Self> {
        if !delta_lambda.is_finite() {
            return Err(Error::InvalidParameter("delta_lambda must be finite".into()));
        }
        if !(nbar >= T::zero()) || !nbar.is_finite() {
            return Err(Error::InvalidParameter("nbar must be finite and ≥ 0".into()));
        }
        Ok(Self { delta_lambda, nbar })
    }

    /// ⟨W⟩ = Δλ(n̄ + ½)
    pub fn average_work(&self) -> T {
        self.delta_lambda * (self.nbar + T::lit(0.5))
    }
}

/// χ(u) = e^{iuΔλ/2} / (1 + n̄(1 − e^{iuΔλ}))
pub fn chi_closed<T: Real>(u: T, p: &QuenchParams<T>) -> C<T> {
    let x = u * p.delta_lambda;
    let den = cre(T::one()) + (cre(T::one()) - cis(x)) * p.nbar;
    cis(x / T::lit(2.0)) / den
}

/// Σ_{n ≤ nmax} n̄ⁿ/(1+n̄)^{n+1} e^{iuΔλ(n+½)}
pub fn chi_series<T: Real>(u: T, p: &QuenchParams<T>, nmax: usize) -> C<T> {
    let x = u * p.delta_lambda;
    thermal_occupations(p.nbar, nmax)
        .into_iter()
        .enumerate()
        .fold(C::zero(), |acc, (n, w)| {
            acc + cis(x * (T::from_usize_lossy(n) + T::lit(0.5))) * w
        })
}

/// Re χ = cos(uΔλ/2)/D and Im χ = (1+2n̄) sin(uΔλ/2)/D with
/// D = 1 + 2n̄(1+n̄)(1 − cos uΔλ).
pub fn chi_re_im_closed<T: Real>(u: T, p: &QuenchParams<T>) -> (T, T) {
    let x = u * p.delta_lambda;
    let two = T::lit(2.0);
    let n = p.nbar;
    let d = T::one() + two * n * (T::one() + n) * (T::one() - x.cos());
    let half = x / two;
    (half.cos() / d, (T::one() + two * n) * half.sin() / d)
}

/// Final ancilla state ½(I + Re χ σ_z + Im χ σ_y).
pub fn ancilla_state_closed<T: Real>(u: T, p: &QuenchParams<T>) -> ComplexMatrix<T> {
    let (re, im) = chi_re_im_closed(u, p);
    let h = T::lit(0.5);
    ComplexMatrix::new(
        2,
        vec![
            cre(h * (T::one() + re)),
            cplx(T::zero(), -h * im),
            cplx(T::zero(), h * im),
            cre(h * (T::one() - re)),
        ],
    )
    .expect("2×2 by construction")
}

/// Atoms ((n+½)Δλ, n̄ⁿ/(1+n̄)^{n+1}) for n < count. Zero weights are dropped
/// and coincident positions (Δλ = 0) collapse into one atom.
pub fn peak_weights<T: Real>(p: &QuenchParams<T>, count: usize) -> WorkDistribution<T> {
    let count = count.max(1);
    let raw: Vec<(T, T)> = thermal_occupations(p.nbar, count - 1)
        .into_iter()
        .enumerate()
        .map(|(n, w)| ((T::from_usize_lossy(n) + T::lit(0.5)) * p.delta_lambda, w))
        .collect();
    let span = p.delta_lambda.abs() * T::from_usize_lossy(count);
    WorkDistribution::from_atoms(raw, (T::tol(1e-9) * span).max(T::min_positive_value()))
}

/// Arguments of ₂F₁(1, a; 1+a; z).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyp2F1Params<T: Real> {
    pub a: T,
    pub z: C<T>,
}

/// Hard cap on the number of series terms.
pub const HYP2F1_MAX_TERMS: usize = 1_000_000;

/// ₂F₁(1, a; 1+a; z) = Σ a/(a+n) zⁿ for |z| < 1.
///
/// Sums until |term| < tol·|partial sum|. Returns the value and a bound on
/// the truncated tail, |a| |z|^{N} / (|a+N| (1 − |z|)) evaluated at the first
/// omitted index N (valid once a + n keeps its sign).
pub fn hyp2f1_special<T: Real>(params: &Hyp2F1Params<T>, tol: T) -> Result<(C<T>, T)> {
    let Hyp2F1Params { a, z } = *params;
    let r = z.norm();
    if !(r < T::one()) {
        return Err(Error::InvalidParameter(format!("|z| = {r} outside the unit disc")));
    }
    if !a.is_finite() {
        return Err(Error::InvalidParameter("a must be finite".into()));
    }
    if a <= T::zero() && a.fract() == T::zero() {
        let n = (-a).to_usize().unwrap_or(usize::MAX);
        return Err(Error::PoleHit { n });
    }
    if a == T::zero() {
        return Err(Error::PoleHit { n: 0 });
    }
    let mut sum = C::<T>::zero();
    let mut zn = cre(T::one());
    for n in 0..HYP2F1_MAX_TERMS {
        let an = a + T::from_usize_lossy(n);
        let term = zn * (a / an);
        sum += term;
        zn *= z;
        if zn.is_zero() {
            return Ok((sum, T::zero()));
        }
        let past_poles = an > T::zero();
        if past_poles && term.norm() < tol * sum.norm() {
            let next = a + T::from_usize_lossy(n + 1);
            let bound = (a / next).abs() * zn.norm() / (T::one() - r);
            return Ok((sum, bound));
        }
    }
    Err(Error::NoConvergence {
        terms: HYP2F1_MAX_TERMS,
    })
}

/// Half width of the excluded band around each peak, relative to |Δλ|.
pub const PEAK_GUARD: f64 = 1e-9;

/// Index of the peak (n+½)Δλ within the guard band of W, if any.
fn peak_near<T: Real>(w: T, dl: T) -> Option<usize> {
    let x = w / dl - T::lit(0.5);
    let n = x.round();
    let on = n >= T::zero() && ((x - n) * dl).abs() <= T::lit(PEAK_GUARD) * dl.abs();
    on.then(|| n.to_usize().unwrap_or(usize::MAX))
}

/// ℐ(ε) = (1/2π)∫_{−ε}^{ε} χ(u) e^{−iWu} du for the sudden quench, in closed
/// form through ₂F₁(1, a; 1+a; z) with a = ½ − W/Δλ and z = e^{−iεΔλ} n̄/(1+n̄):
///
/// ℐ(ε) = −i e^{−iWε} / (π(1+n̄)(2W−Δλ)) · [e^{iε(4W−Δλ)/2} ₂F₁(z) − e^{iεΔλ/2} ₂F₁(z*)].
///
/// At n̄ = 0 this reduces to 2 sin[ε(W−Δλ/2)] / (π(2W−Δλ)).
pub fn partial_inversion_formula<T: Real>(eps: T, w: T, p: &QuenchParams<T>) -> Result<C<T>> {
    let dl = p.delta_lambda;
    if dl == T::zero() {
        return Err(Error::InvalidParameter(
            "closed-form inversion needs delta_lambda ≠ 0".into(),
        ));
    }
    if !eps.is_finite() || !w.is_finite() {
        return Err(Error::InvalidParameter("eps and W must be finite".into()));
    }
    if let Some(n) = peak_near(w, dl) {
        return Err(Error::OnPeak { n });
    }
    let two = T::lit(2.0);
    let a = T::lit(0.5) - w / dl;
    let z = cis(-eps * dl) * (p.nbar / (T::one() + p.nbar));
    let tol = T::tol(1e-14);
    let (f, _) = hyp2f1_special(&Hyp2F1Params { a, z }, tol)?;
    let (fc, _) = hyp2f1_special(&Hyp2F1Params { a, z: z.conj() }, tol)?;
    let bracket = cis(eps * (two * two * w - dl) / two) * f - cis(eps * dl / two) * fc;
    let pref = cplx(T::zero(), -T::one()) * cis(-w * eps)
        / (T::PI() * (T::one() + p.nbar) * (two * w - dl));
    Ok(pref * bracket)
}

/// ℐ(ε) = (1/2π)∫_{−ε}^{ε} χ(u) e^{−iWu} du by adaptive Gauss–Kronrod
/// quadrature to absolute tolerance 1e-9 on ℐ.
pub fn partial_inversion_quadrature<T, F>(eps: T, w: T, chi: F) -> Result<C<T>>
where
    T: Real,
    F: Fn(T) -> C<T>,
{
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::InvalidParameter("eps must be positive and finite".into()));
    }
    let two_pi = T::TAU();
    let tol = T::tol(1e-9) * two_pi;
    let pieces = (eps * (w.abs() + T::one()) / T::PI())
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .clamp(4, 4096);
    let q = integrate_adaptive(|u| chi(u) * cis(-w * u), -eps, eps, tol, pieces, 200_000)?;
    Ok(q / two_pi)
}

// Gauss–Kronrod 7/15 nodes on [−1, 1] (non-negative half) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<T: Real> {
    a: T,
    b: T,
    value: C<T>,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn gk15<T: Real, F: Fn(T) -> C<T>>(f: &F, a: T, b: T) -> Segment<T> {
    let half = (b - a) / T::lit(2.0);
    let mid = a + half;
    let centre = f(mid);
    let mut kronrod = centre * T::lit(WGK[7]);
    let mut gauss = centre * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss += pair * T::lit(WG[j / 2]);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    Segment { a, b, value, error }
}

/// Adaptive G7–K15 integration of a complex integrand over [a, b], starting
/// from `pieces` equal segments and bisecting the worst one until the summed
/// error estimate falls below `abs_tol`.
pub fn integrate_adaptive<T, F>(
    f: F,
    a: T,
    b: T,
    abs_tol: T,
    pieces: usize,
    max_segments: usize,
) -> Result<C<T>>
where
    T: Real,
    F: Fn(T) -> C<T>,
{
    let pieces = pieces.max(1);
    let width = (b - a) / T::from_usize_lossy(pieces);
    let mut heap = BinaryHeap::with_capacity(pieces * 2);
    for k in 0..pieces {
        let lo = a + width * T::from_usize_lossy(k);
        let hi = if k + 1 == pieces { b } else { lo + width };
        heap.push(gk15(&f, lo, hi));
    }
    loop {
        let total_err: T = heap.iter().map(|s| s.error).sum();
        let total: C<T> = heap.iter().fold(C::zero(), |acc, s| acc + s.value);
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::QuadratureFailure {
                estimate: f64::NAN,
            });
        }
        if total_err <= abs_tol {
            return Ok(total);
        }
        if heap.len() >= max_segments {
            return Err(Error::QuadratureFailure {
                estimate: total_err.as_f64(),
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = (worst.a + worst.b) / T::lit(2.0);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::QuadratureFailure {
                estimate: total_err.as_f64(),
            });
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::truncation_dim;

    fn qp(dl: f64, nbar: f64) -> QuenchParams<f64> {
        QuenchParams::new(dl, nbar).unwrap()
    }

    /// Direct Fourier sum of the peak series, used as an independent ℐ oracle.
    fn inversion_by_peaks(eps: f64, w: f64, p: &QuenchParams<f64>) -> f64 {
        let nmax = truncation_dim(p.nbar, 1e-16, 100_000).unwrap();
        thermal_occupations(p.nbar, nmax)
            .iter()
            .enumerate()
            .map(|(n, &pn)| {
                let d = (n as f64 + 0.5) * p.delta_lambda - w;
                pn * (eps * d).sin() / (std::f64::consts::PI * d)
            })
            .sum()
    }

    #[test]
    fn closed_form_special_cases() {
        assert_eq!(chi_closed(0.0, &qp(0.3, 1.5)), C::new(1.0, 0.0));
        for u in [0.0, 1.0, 7.5, -3.0] {
            assert!((chi_closed(u, &qp(0.0, 2.0)) - C::new(1.0, 0.0)).norm() < 1e-15);
            let pure = chi_closed(u, &qp(0.5, 0.0));
            assert!((pure - cis(u * 0.25)).norm() < 1e-15);
            let (re, im) = chi_re_im_closed(u, &qp(0.5, 0.0));
            assert!((re - (u * 0.25).cos()).abs() < 1e-15 && (im - (u * 0.25).sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn series_matches_closed_form() {
        for &nbar in &[0.5, 1.5, 5.0] {
            let nmax = truncation_dim(nbar, 1e-12, 4096).unwrap();
            for &dl in &[0.3, 0.5, 2.0] {
                let p = qp(dl, nbar);
                for k in 0..=200 {
                    let u = 40.0 * k as f64 / 200.0;
                    let d = (chi_series(u, &p, nmax) - chi_closed(u, &p)).norm();
                    assert!(d < 1e-11, "nbar {nbar} dl {dl} u {u}: {d:e}");
                }
            }
        }
        let s = chi_series(3.0, &qp(0.7, 0.0), 10);
        assert!((s - cis(1.05)).norm() < 1e-15);
        let nmax = 20;
        let tail = (1.5f64 / 2.5).powi(nmax as i32 + 1);
        let norm = chi_series(0.0, &qp(0.3, 1.5), nmax).re;
        assert!((norm - (1.0 - tail)).abs() < 1e-14);
    }

    #[test]
    fn re_im_display_matches_closed_form() {
        for &(dl, nbar) in &[(0.3, 0.0), (0.3, 1.5), (0.3, 5.0), (0.5, 1.5), (2.0, 1.5), (0.0, 1.5)] {
            let p = qp(dl, nbar);
            for k in 0..1000 {
                let u = 40.0 * k as f64 / 999.0;
                let (re, im) = chi_re_im_closed(u, &p);
                let c = chi_closed(u, &p);
                assert!((re - c.re).abs() < 1e-13 && (im - c.im).abs() < 1e-13);
            }
        }
        assert_eq!(chi_re_im_closed(0.0, &qp(0.3, 1.5)), (1.0, 0.0));
    }

    #[test]
    fn ancilla_state_is_density_matrix() {
        let m = ancilla_state_closed(0.0, &qp(0.3, 1.5));
        assert_eq!(m[(0, 0)], C::new(1.0, 0.0));
        assert_eq!(m[(1, 1)], C::new(0.0, 0.0));
        for u in [0.3, 2.0, 11.0] {
            let m = ancilla_state_closed(u, &qp(0.3, 1.5));
            crate::linalg::DensityMatrix::new(m).unwrap();
            let flat = ancilla_state_closed(u, &qp(0.0, 1.5));
            assert!(flat.distance(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0])) < 1e-15);
        }
    }

    #[test]
    fn half_period_flips_sign() {
        for &(dl, nbar) in &[(0.3, 1.5), (2.0, 0.5), (-0.7, 3.0)] {
            let p = qp(dl, nbar);
            let period = std::f64::consts::TAU / dl;
            for u in [0.0, 0.4, 5.0, 17.0] {
                assert!((chi_closed(u + period, &p) + chi_closed(u, &p)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn peak_weight_examples() {
        let d = peak_weights(&qp(1.0, 1.0), 5);
        let expect = [(0.5, 0.5), (1.5, 0.25), (2.5, 0.125), (3.5, 0.0625), (4.5, 0.03125)];
        for (got, want) in d.atoms.iter().zip(expect) {
            assert!((got.0 - want.0).abs() < 1e-15 && (got.1 - want.1).abs() < 1e-15);
        }
        let cold = peak_weights(&qp(0.8, 0.0), 10);
        assert_eq!(cold.atoms, vec![(0.4, 1.0)]);
        let hot = peak_weights(&qp(1.0, 10.0), 300);
        for (n, &(_, w)) in hot.atoms.iter().enumerate() {
            let want = (n as f64 * (10f64 / 11.0).ln()).exp() / 11.0;
            assert!((w - want).abs() <= 1e-12 * want);
        }
        let none = peak_weights(&qp(0.0, 1.0), 50);
        assert_eq!(none.atoms.len(), 1);
    }

    #[test]
    fn peak_fourier_sum_reproduces_chi() {
        let p = qp(0.5, 1.5);
        let nmax = truncation_dim(1.5, 1e-12, 4096).unwrap();
        let d = peak_weights(&p, nmax + 1);
        for u in [0.0, 1.0, 13.0, 39.0] {
            assert!((d.char_fn(u) - chi_closed(u, &p)).norm() < 1e-11);
        }
    }

    #[test]
    fn hyp2f1_special_values() {
        let (v, e) = hyp2f1_special(&Hyp2F1Params { a: 0.7, z: C::new(0.0, 0.0) }, 1e-14).unwrap();
        assert_eq!(v, C::new(1.0, 0.0));
        assert_eq!(e, 0.0);
        for x in [0.1, 0.5, 0.9, 0.99] {
            let (v, _) = hyp2f1_special(&Hyp2F1Params { a: 1.0, z: C::new(x, 0.0) }, 1e-15).unwrap();
            let want = -(1.0f64 - x).ln() / x;
            assert!((v.re - want).abs() < 1e-12 * want && v.im.abs() < 1e-15, "x {x}");
        }
    }

    #[test]
    fn hyp2f1_long_partial_sum() {
        let (w, dl, nbar, eps) = (0.1, 1.0, 1.0, 3.0);
        let a = 0.5 - w / dl;
        let z = cis(-eps * dl) * (nbar / (1.0 + nbar));
        let mut direct = C::new(0.0, 0.0);
        let mut zn = C::new(1.0, 0.0);
        for n in 0..10_000 {
            direct += zn * (a / (a + n as f64));
            zn *= z;
        }
        let (v, err) = hyp2f1_special(&Hyp2F1Params { a, z }, 1e-14).unwrap();
        assert!((v - direct).norm() < 1e-12);
        assert!(err < 1e-12);
    }

    #[test]
    fn hyp2f1_rejects_poles_and_domain() {
        for a in [0.0, -1.0, -4.0] {
            let r = hyp2f1_special(&Hyp2F1Params { a, z: C::new(0.5, 0.0) }, 1e-14);
            assert!(matches!(r, Err(Error::PoleHit { .. })), "{a}");
        }
        let r = hyp2f1_special(&Hyp2F1Params { a: 0.5, z: C::new(1.0, 0.0) }, 1e-14);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
        // negative non-integer a passes through the sign change of a + n
        let (v, _) = hyp2f1_special(&Hyp2F1Params { a: -2.5, z: C::new(0.3, 0.2) }, 1e-14).unwrap();
        let mut direct = C::new(0.0, 0.0);
        let mut zn = C::new(1.0, 0.0);
        for n in 0..200 {
            direct += zn * (-2.5 / (-2.5 + n as f64));
            zn *= C::new(0.3, 0.2);
        }
        assert!((v - direct).norm() < 1e-13);
    }

    #[test]
    fn zero_temperature_inversion_is_sinc_over_two_w_minus_dl() {
        let p = qp(1.0, 0.0);
        for &(w, eps) in &[(0.2, 5.0), (1.3, 2.0), (-0.4, 7.0), (2.9, 11.0)] {
            let formula = partial_inversion_formula(eps, w, &p).unwrap();
            let sinc = 2.0 * (eps * (w - 0.5)).sin() / (std::f64::consts::PI * (2.0 * w - 1.0));
            assert!((formula - C::new(sinc, 0.0)).norm() < 1e-13);
            let quad = partial_inversion_quadrature(eps, w, |u| chi_closed(u, &p)).unwrap();
            assert!((quad - C::new(sinc, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn inversion_formula_matches_peak_sum_and_quadrature() {
        let p = qp(1.0, 1.0);
        let formula = partial_inversion_formula(5.0, 0.2, &p).unwrap();
        let quad = partial_inversion_quadrature(5.0, 0.2, |u| chi_closed(u, &p)).unwrap();
        assert!((formula - quad).norm() < 1e-6);
        assert!(formula.im.abs() < 1e-12);
        assert!((formula.re - inversion_by_peaks(5.0, 0.2, &p)).abs() < 1e-11);
        for &(w, eps) in &[(0.9, 3.0), (2.2, 8.0), (-1.0, 4.0), (3.7, 1.5)] {
            let f = partial_inversion_formula(eps, w, &p).unwrap();
            assert!((f.re - inversion_by_peaks(eps, w, &p)).abs() < 1e-11);
        }
    }

    #[test]
    fn inversion_stays_inside_envelope_between_peaks() {
        let p = qp(1.0, 1.0);
        let vals: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&eps| partial_inversion_formula(eps, 1.0, &p).unwrap().norm())
            .collect();
        // Between peaks ℐ(ε) oscillates inside the envelope Σ p_n / (π|W − W_n|)
        // rather than vanishing pointwise; it tends to zero only weakly in W.
        let envelope: f64 = (0..200)
            .map(|n| 0.5f64.powi(n + 1) / (std::f64::consts::PI * ((n as f64 + 0.5) - 1.0).abs()))
            .sum();
        assert!(vals.iter().all(|&v| v <= envelope + 1e-12));
    }

    #[test]
    fn inversion_rejects_peaks() {
        let p = qp(1.0, 1.0);
        assert!(matches!(
            partial_inversion_formula(3.0, 2.5, &p),
            Err(Error::OnPeak { n: 2 })
        ));
        assert!(matches!(
            partial_inversion_formula(3.0, 0.5 + 1e-12, &p),
            Err(Error::OnPeak { n: 0 })
        ));
        assert!(partial_inversion_formula(3.0, 0.5 + 1e-6, &p).is_ok());
        assert!(partial_inversion_formula(3.0, 0.3, &qp(0.0, 1.0)).is_err());
    }

    #[test]
    fn quadrature_trivial_integrands() {
        let one = |_: f64| C::new(1.0, 0.0);
        let q = partial_inversion_quadrature(2.0, 0.0, one).unwrap();
        assert!((q.re - 2.0 / std::f64::consts::PI).abs() < 1e-12 && q.im.abs() < 1e-12);
        let q = partial_inversion_quadrature(3.0, 0.7, one).unwrap();
        let want = (3.0f64 * 0.7).sin() / (std::f64::consts::PI * 0.7);
        assert!((q.re - want).abs() < 1e-10);
        assert!(partial_inversion_quadrature(0.0, 0.7, one).is_err());
    }
}
