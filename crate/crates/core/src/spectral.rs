//! Spectral statistics of a single orbit: the uniform modulated-average sup,
//! finite correlation estimates, the order-2 and order-3 self-correlation
//! seminorms, the explicit van der Corput inequality, and the bilinear
//! uniformity quantity.
//!
//! Conventions fixed here once:
//!
//! * Correlations conjugate the shifted factor, `(1/N) sum a_n conj(a_{n+h})`,
//!   which restores the real-valued case as a special case.
//! * Seminorm lag sums run over `h = 1..=H`. The degenerate lag `h = 0`
//!   contributes a pure `(1/H)^{1/4}` floor at finite `H` (0.25 at `H = 256`)
//!   that swamps the quantity the estimator is after; dropping it changes
//!   nothing in the `H -> infinity` limit and removes the bias.
//! * Suprema over the circle are grid maxima on `oversample * next_pow2(N)`
//!   points; nested power-of-two grids make the estimate monotone in
//!   `oversample`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{Orbit, OrbitMeta};
use crate::error::{Error, Result};
use crate::fft::GridMaxPlan;
use crate::numeric::{pairwise_sum, pairwise_sum_f64};

/// Explicit constant in the correlation bound of the modulated-average sup:
/// worst case of the van der Corput estimate with `(N+H)/N <= 2` and the
/// triangular weights bounded by 1.
pub const LEMMA2_CONSTANT: f64 = 4.0;

/// The uniform Wiener-Wintner statistic
/// `max_t |(1/N) sum_{n<N} a_n e^{2 pi i n t}|` over the frequency grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WWStatistic {
    pub value: f64,
    pub n: usize,
    pub oversample: usize,
    /// Grid location of the maximum, in [0, 1).
    pub argmax_t: f64,
}

/// A finite-(N, H) approximation of an order-2 or order-3 seminorm, with
/// the truncation parameters it was computed at.
#[derive(Clone, Debug, PartialEq)]
pub struct SeminormEstimate {
    pub order: u8,
    pub value: f64,
    /// Outer averaging length H.
    pub h: usize,
    /// Inner averaging length (order 3 only).
    pub h_inner: Option<usize>,
    /// Birkhoff window for the correlation estimates.
    pub n: usize,
    pub orbit: OrbitMeta,
}

fn require_len(role: &'static str, available: usize, needed: usize) -> Result<()> {
    if available < needed {
        Err(Error::OrbitTooShort {
            role,
            needed,
            available,
        })
    } else {
        Ok(())
    }
}

fn check_oversample(oversample: usize) -> Result<()> {
    if oversample >= 2 && oversample.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "oversample must be a power of two >= 2, got {oversample}"
        )))
    }
}

/// Grid maximum of the modulated average of the first `n` samples, one
/// zero-padded transform of size `oversample * next_pow2(n)`.
pub fn ww_sup(a: &Orbit, n: usize, oversample: usize) -> Result<WWStatistic> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    check_oversample(oversample)?;
    require_len("a", a.len(), n)?;
    let plan = GridMaxPlan::new(n, oversample);
    let mut scratch = plan.scratch();
    let (value, bin) = plan.sup(&mut scratch, &a.samples()[..n]);
    Ok(WWStatistic {
        value,
        n,
        oversample,
        argmax_t: bin as f64 / plan.grid() as f64,
    })
}

/// Birkhoff correlation estimate `(1/N) sum_{n<N} a_n conj(a_{n+h})`.
pub fn correlation(a: &Orbit, h: usize, n: usize) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    require_len("a", a.len(), n + h)?;
    let s = a.samples();
    let mut buf = Vec::with_capacity(n);
    corr_terms(s, h, n, &mut buf);
    Ok(pairwise_sum(&buf) / n as f64)
}

fn corr_terms(s: &[Complex64], h: usize, n: usize, buf: &mut Vec<Complex64>) {
    buf.clear();
    buf.extend((0..n).map(|i| s[i] * s[i + h].conj()));
}

/// Fourth power of the order-2 seminorm estimate:
/// `(1/H) sum_{h=1}^{H} |(1/N) sum_{n<N} s_n conj(s_{n+h})|^2`.
fn seminorm2_pow4(s: &[Complex64], n: usize, h: usize) -> f64 {
    let weights: Vec<f64> = (1..=h)
        .into_par_iter()
        .map_init(Vec::new, |buf, lag| {
            corr_terms(s, lag, n, buf);
            (pairwise_sum(buf) / n as f64).norm_sqr()
        })
        .collect();
    pairwise_sum_f64(&weights) / h as f64
}

/// Order-2 seminorm estimate at Birkhoff window `N` and `H` lags.
pub fn seminorm2(a: &Orbit, n: usize, h: usize) -> Result<SeminormEstimate> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    if h == 0 {
        return Err(Error::Parameter("H must be at least 1".into()));
    }
    require_len("a", a.len(), n + h)?;
    let value = seminorm2_pow4(a.samples(), n, h).sqrt().sqrt();
    Ok(SeminormEstimate {
        order: 2,
        value,
        h,
        h_inner: None,
        n,
        orbit: a.meta().clone(),
    })
}

/// Order-3 seminorm estimate: the outer lag average of the order-2 estimate
/// of the shifted self-products,
/// `[(1/H_out) sum_{h=1}^{H_out} s2^4(a . conj(a o T^h); N, H_in)]^{1/8}`.
pub fn seminorm3(
    a: &Orbit,
    n: usize,
    h_outer: usize,
    h_inner: usize,
) -> Result<SeminormEstimate> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    if h_outer == 0 || h_inner == 0 {
        return Err(Error::Parameter("H must be at least 1".into()));
    }
    require_len("a", a.len(), n + h_inner + h_outer)?;
    let s = a.samples();
    let prod_len = n + h_inner;

    let fourths: Vec<f64> = (1..=h_outer)
        .into_par_iter()
        .map_init(
            || vec![Complex64::new(0.0, 0.0); prod_len],
            |prod, h| {
                for (i, p) in prod.iter_mut().enumerate() {
                    *p = s[i] * s[i + h].conj();
                }
                seminorm2_pow4(prod, n, h_inner)
            },
        )
        .collect();

    let value = (pairwise_sum_f64(&fourths) / h_outer as f64)
        .sqrt()
        .sqrt()
        .sqrt();
    Ok(SeminormEstimate {
        order: 3,
        value,
        h: h_outer,
        h_inner: Some(h_inner),
        n,
        orbit: a.meta().clone(),
    })
}

/// The van der Corput inequality with explicit constants:
///
/// `lhs = |(1/N) sum_{n<N} u_n|^2`
/// `rhs = (N+H)/(N^2 (H+1)) sum_{n<N} |u_n|^2`
/// `    + 2 (N+H)/(N^2 (H+1)) sum_{h=1}^{H} (1 - h/(H+1))
///        |sum_{n=0}^{N-1-h} u_n conj(u_{n+h})|`
///
/// and `lhs <= rhs` holds for every complex sequence.
pub fn vdc_bound(u: &[Complex64], n: usize, h: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    if h == 0 || h >= n {
        return Err(Error::Parameter(format!(
            "need 1 <= H < N, got H={h}, N={n}"
        )));
    }
    require_len("u", u.len(), n)?;

    let mean = pairwise_sum(&u[..n]) / n as f64;
    let lhs = mean.norm_sqr();

    let front = (n + h) as f64 / (n as f64 * n as f64 * (h + 1) as f64);
    let sq: Vec<f64> = u[..n].iter().map(|z| z.norm_sqr()).collect();
    let mut rhs = front * pairwise_sum_f64(&sq);

    let mut buf = Vec::with_capacity(n);
    let mut lag_terms = Vec::with_capacity(h);
    for lag in 1..=h {
        buf.clear();
        buf.extend((0..n - lag).map(|i| u[i] * u[i + lag].conj()));
        let weight = 1.0 - lag as f64 / (h + 1) as f64;
        lag_terms.push(weight * pairwise_sum(&buf).norm());
    }
    rhs += 2.0 * front * pairwise_sum_f64(&lag_terms);

    Ok((lhs, rhs))
}

/// Finite-N diagnostic pair for the correlation bound on the modulated sup:
/// `lhs = ww_sup(a, N, 8)^2`, `rhs = C (1/H + (1/H) sum_{h=1}^{H}
/// |correlation(a, h, N)|)` with `C =` [`LEMMA2_CONSTANT`]. The inequality
/// is a limsup statement; at finite `N` the pair is reported and callers
/// flag `lhs > rhs`.
pub fn lemma2_check(a: &Orbit, n: usize, h: usize) -> Result<(f64, f64)> {
    if h == 0 {
        return Err(Error::Parameter("H must be at least 1".into()));
    }
    if h >= n {
        return Err(Error::Parameter(format!(
            "need H < N, got H={h}, N={n}"
        )));
    }
    require_len("a", a.len(), n + h)?;
    let ww = ww_sup(a, n, 8)?;
    let lhs = ww.value * ww.value;

    let mags: Vec<f64> = (1..=h)
        .into_par_iter()
        .map_init(Vec::new, |buf, lag| {
            corr_terms(a.samples(), lag, n, buf);
            (pairwise_sum(buf) / n as f64).norm()
        })
        .collect();
    let rhs = LEMMA2_CONSTANT * (1.0 + pairwise_sum_f64(&mags)) / h as f64;
    Ok((lhs, rhs))
}

/// The bilinear uniformity quantity
/// `(1/N) sum_{n<N} sup_t |(1/N) sum_{m<N} a_m b_{n+m} e^{2 pi i m t}|^2`,
/// one grid transform per `n`.
pub fn lemma3_quantity(a: &Orbit, b: &Orbit, n: usize, oversample: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    check_oversample(oversample)?;
    require_len("a", a.len(), n)?;
    require_len("b", b.len(), 2 * n - 1)?;
    let (sa, sb) = (a.samples(), b.samples());
    let plan = GridMaxPlan::new(n, oversample);

    let sups: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (plan.scratch(), vec![Complex64::new(0.0, 0.0); n]),
            |(scratch, seq), shift| {
                for (m, z) in seq.iter_mut().enumerate() {
                    *z = sa[m] * sb[shift + m];
                }
                let (sup, _) = plan.sup(scratch, seq);
                sup * sup
            },
        )
        .collect();

    Ok(pairwise_sum_f64(&sups) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{generate_orbit, Observable, Point, SystemSpec};

    const SQRT2M1: f64 = std::f64::consts::SQRT_2 - 1.0;

    fn ones(l: usize) -> Orbit {
        Orbit::from_samples("ones", vec![Complex64::new(1.0, 0.0); l]).unwrap()
    }

    fn constant(c: Complex64, l: usize) -> Orbit {
        Orbit::from_samples("const", vec![c; l]).unwrap()
    }

    #[test]
    fn ww_sup_of_ones_peaks_at_zero() {
        let a = ones(64);
        let w = ww_sup(&a, 50, 4).unwrap();
        assert!((w.value - 1.0).abs() < 1e-12);
        assert_eq!(w.argmax_t, 0.0);
    }

    #[test]
    fn ww_sup_of_grid_character_is_one() {
        // a_n = e^{2 pi i n beta} with beta on the grid: full cancellation
        // at t = 1 - beta
        let n = 48usize;
        let oversample = 4usize;
        let grid = oversample * 64; // next_pow2(48) = 64
        let beta = 37.0 / grid as f64;
        let samples: Vec<Complex64> = (0..n)
            .map(|i| crate::numeric::unit_phase(i as f64 * beta))
            .collect();
        let a = Orbit::from_samples("char", samples).unwrap();
        let w = ww_sup(&a, n, oversample).unwrap();
        assert!((w.value - 1.0).abs() < 1e-9, "value {}", w.value);
        assert!((w.argmax_t - (1.0 - beta)).abs() < 1e-12);
    }

    #[test]
    fn ww_sup_brackets() {
        let sys = SystemSpec::doubling(3);
        let obs = Observable::cosine(1).with_mean_zero(true);
        let a = generate_orbit(&sys, &obs, Point::OneD(0.0), 256).unwrap();
        let n = 200;
        let w = ww_sup(&a, n, 4).unwrap();
        let mean = (a.samples()[..n].iter().sum::<Complex64>() / n as f64).norm();
        let l1 = a.samples()[..n].iter().map(|z| z.norm()).sum::<f64>() / n as f64;
        assert!(w.value >= mean - 1e-12);
        assert!(w.value <= l1 + 1e-12);
    }

    #[test]
    fn ww_sup_nested_grids_are_monotone() {
        let sys = SystemSpec::doubling(17);
        let obs = Observable::cosine(1).with_mean_zero(true);
        let a = generate_orbit(&sys, &obs, Point::OneD(0.0), 300).unwrap();
        let mut prev = 0.0;
        for oversample in [2usize, 4, 8, 16] {
            let w = ww_sup(&a, 300, oversample).unwrap();
            assert!(w.value >= prev - 1e-12);
            prev = w.value;
        }
    }

    #[test]
    fn correlation_of_constant() {
        let c = Complex64::new(-1.5, 2.0);
        let a = constant(c, 40);
        for h in [0usize, 1, 7] {
            let v = correlation(&a, h, 30).unwrap();
            assert!((v - Complex64::new(c.norm_sqr(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn correlation_of_rotation_character_telescopes() {
        // a_n = e^{2 pi i x_n}: a_n conj(a_{n+h}) = e^{-2 pi i h alpha}
        let sys = SystemSpec::rotation(SQRT2M1);
        let a =
            generate_orbit(&sys, &Observable::character(1), Point::OneD(0.37), 600).unwrap();
        for h in [1usize, 5, 11] {
            let v = correlation(&a, h, 512).unwrap();
            let want = crate::numeric::unit_phase(-(h as f64) * SQRT2M1);
            assert!((v - want).norm() < 1e-12, "h={h}: {v} vs {want}");
        }
    }

    #[test]
    fn correlation_length_error() {
        let a = ones(10);
        assert!(matches!(
            correlation(&a, 5, 8),
            Err(Error::OrbitTooShort { .. })
        ));
    }

    #[test]
    fn seminorm2_of_ones_is_one() {
        let a = ones(40);
        let e = seminorm2(&a, 20, 10).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seminorm2_of_constant_is_modulus() {
        for c in [
            Complex64::new(0.5, 0.0),
            Complex64::new(-0.3, 1.1),
            Complex64::new(0.0, -2.0),
        ] {
            let a = constant(c, 64);
            let e = seminorm2(&a, 32, 16).unwrap();
            assert!((e.value - c.norm()).abs() < 1e-9, "{c}: {}", e.value);
        }
    }

    #[test]
    fn seminorm2_shift_invariance() {
        let sys = SystemSpec::doubling(9);
        let obs = Observable::cosine(1).with_mean_zero(true);
        let (n, h) = (2048usize, 64usize);
        let a = generate_orbit(&sys, &obs, Point::OneD(0.0), n + h + 1).unwrap();
        let shifted =
            Orbit::from_samples("shifted", a.samples()[1..].to_vec()).unwrap();
        let e0 = seminorm2(&a, n, h).unwrap().value;
        let e1 = seminorm2(&shifted, n, h).unwrap().value;
        assert!((e0 - e1).abs() <= 5.0 / n as f64, "{e0} vs {e1}");
    }

    #[test]
    fn seminorm3_of_ones_is_one() {
        let a = ones(80);
        let e = seminorm3(&a, 40, 16, 16).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert_eq!(e.h_inner, Some(16));
    }

    #[test]
    fn vdc_hand_computed_example() {
        // u = 1, N = 4, H = 1: rhs = 17.5/16
        let u = vec![Complex64::new(1.0, 0.0); 4];
        let (lhs, rhs) = vdc_bound(&u, 4, 1).unwrap();
        assert!((lhs - 1.0).abs() < 1e-15);
        assert!((rhs - 17.5 / 16.0).abs() < 1e-15);
        assert!(lhs <= rhs);
    }

    #[test]
    fn vdc_zero_sequence() {
        let u = vec![Complex64::new(0.0, 0.0); 8];
        let (lhs, rhs) = vdc_bound(&u, 8, 3).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));
    }

    #[test]
    fn vdc_parameter_errors() {
        let u = vec![Complex64::new(1.0, 0.0); 8];
        assert!(vdc_bound(&u, 8, 8).is_err());
        assert!(vdc_bound(&u, 8, 0).is_err());
        assert!(vdc_bound(&u, 9, 2).is_err());
    }

    #[test]
    fn lemma2_zero_orbit() {
        let a = Orbit::from_samples("z", vec![Complex64::new(0.0, 0.0); 40]).unwrap();
        let (lhs, rhs) = lemma2_check(&a, 32, 8).unwrap();
        assert_eq!(lhs, 0.0);
        assert!((rhs - 4.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn lemma2_rotation_character() {
        // all correlations have modulus 1: rhs = 4 (1 + H)/H, lhs close to 1
        let sys = SystemSpec::rotation(SQRT2M1);
        let a = generate_orbit(
            &sys,
            &Observable::character(1),
            Point::OneD(0.1),
            2048 + 128,
        )
        .unwrap();
        let (lhs, rhs) = lemma2_check(&a, 2048, 128).unwrap();
        assert!(lhs > 0.9 && lhs <= 1.0 + 1e-9);
        assert!((rhs - 4.0 * 129.0 / 128.0).abs() < 1e-6);
        assert!(lhs < rhs);
    }

    #[test]
    fn lemma3_trivial_inputs() {
        let n = 16usize;
        let a = ones(n);
        let b = ones(2 * n - 1);
        let v = lemma3_quantity(&a, &b, n, 4).unwrap();
        assert!((v - 1.0).abs() < 1e-9);

        let z = Orbit::from_samples("z", vec![Complex64::new(0.0, 0.0); n]).unwrap();
        assert_eq!(lemma3_quantity(&z, &b, n, 4).unwrap(), 0.0);
    }

    #[test]
    fn lemma3_within_sup_bound() {
        let sys = SystemSpec::doubling(13);
        let obs = Observable::cosine(1).with_mean_zero(true);
        let n = 32usize;
        let a = generate_orbit(&sys, &obs, Point::OneD(0.0), n).unwrap();
        let b = generate_orbit(&sys, &obs, Point::OneD(0.0), 2 * n - 1).unwrap();
        let v = lemma3_quantity(&a, &b, n, 4).unwrap();
        let bound = (a.sup_norm() * b.sup_norm()).powi(2);
        assert!(v >= 0.0 && v <= bound + 1e-12);
    }

    #[test]
    fn lemma3_dense_grid_refinement_is_small_and_monotone() {
        let sys = SystemSpec::doubling(29);
        let obs = Observable::cosine(1).with_mean_zero(true);
        let n = 64usize;
        let a = generate_orbit(&sys, &obs, Point::OneD(0.0), n).unwrap();
        let b = generate_orbit(&sys, &obs, Point::OneD(0.0), 2 * n - 1).unwrap();
        let coarse = lemma3_quantity(&a, &b, n, 8).unwrap();
        let dense = lemma3_quantity(&a, &b, n, 64).unwrap();
        assert!(dense >= coarse - 1e-12);
        assert!(dense - coarse < 0.05 * dense + 1e-3);
    }
}
