//! The 3-function and 7-function averages along cubes, each with a paired
//! naive and FFT-convolution evaluator, plus the windowed variant and
//! horizon traces.
//!
//! The naive evaluators enumerate the defining multi-sum directly but
//! canonicalize the floating-point work (value-sorted factor products,
//! sort-then-tree summation), so every algebraic symmetry of the sum —
//! swapping the two free indices, permuting index roles, restricting a
//! window — holds bit-for-bit, not just approximately. The fast evaluators
//! collapse the free double index through one zero-padded linear
//! convolution per remaining index tuple.

use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;

use crate::cube_general::{cubek_fast, cubek_naive, CubeSpec};
use crate::dynamics::Orbit;
use crate::error::{Error, Result};
use crate::fft::ConvPlan;
use crate::numeric::{canonical_product, canonical_sum, pairwise_sum, rel_err};

/// Primitive-term ceiling for the naive evaluators (tuples times factors).
pub const NAIVE_TERM_BUDGET: u64 = 1_000_000_000;

/// Horizon at or below which `trace` cross-checks the fast evaluator
/// against the naive one.
pub const TRACE_SELF_CHECK_MAX: usize = 32;

/// Agreement thresholds between the paired evaluators (relative to the
/// product of sup norms).
pub const CUBE3_ORACLE_TOL: f64 = 1e-9;
pub const CUBE7_ORACLE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Naive,
    Fast,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Fast => "fast",
        })
    }
}

fn require_len(role: &'static str, orbit: &Orbit, needed: usize) -> Result<()> {
    if orbit.len() < needed {
        Err(Error::OrbitTooShort {
            role,
            needed,
            available: orbit.len(),
        })
    } else {
        Ok(())
    }
}

fn require_horizon(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::ZeroHorizon)
    } else {
        Ok(())
    }
}

/// Order-canonical evaluation of
/// `sum_{i_1..i_k in [lo, hi]} prod_j f_j[ sum_{l in eps_j} i_l ]`
/// where bit `l-1` of `j` decides whether `i_l` enters the exponent of
/// `f_j`. Shared by the naive cube evaluators of this module and of
/// `cube_general`; the canonicalization is what makes their exact-equality
/// invariants hold at the bit level.
pub(crate) fn canonical_cube_sum(
    funcs: &[&[Complex64]],
    k: u32,
    lo: usize,
    hi: usize,
    budget: u64,
) -> Result<Complex64> {
    let width = (hi - lo + 1) as u128;
    let tuples = width.pow(k);
    let primitive = tuples * funcs.len() as u128;
    if primitive > budget as u128 {
        return Err(Error::CostGuard {
            required: primitive,
            budget,
        });
    }

    let kk = k as usize;
    let mut terms = Vec::with_capacity(tuples as usize);
    let mut idx = vec![lo; kk];
    let mut factors = vec![Complex64::new(0.0, 0.0); funcs.len()];
    loop {
        for (j0, f) in funcs.iter().enumerate() {
            let mut e = 0usize;
            let mut bits = j0 + 1;
            let mut l = 0usize;
            while bits != 0 {
                if bits & 1 == 1 {
                    e += idx[l];
                }
                bits >>= 1;
                l += 1;
            }
            factors[j0] = f[e];
        }
        terms.push(canonical_product(&mut factors));

        // odometer over [lo, hi]^k
        let mut l = 0;
        loop {
            if l == kk {
                let total = canonical_sum(&mut terms);
                return Ok(total);
            }
            idx[l] += 1;
            if idx[l] <= hi {
                break;
            }
            idx[l] = lo;
            l += 1;
        }
    }
}

/// `(1/N^2) sum_{n,m=0}^{N-1} a_n b_m c_{n+m}` by direct enumeration.
pub fn cube3_naive(a: &Orbit, b: &Orbit, c: &Orbit, n: usize) -> Result<Complex64> {
    require_horizon(n)?;
    require_len("a", a, n)?;
    require_len("b", b, n)?;
    require_len("c", c, 2 * n - 1)?;
    let total = canonical_cube_sum(&[a.samples(), b.samples(), c.samples()], 2, 0, n - 1, NAIVE_TERM_BUDGET)?;
    Ok(total / (n as f64 * n as f64))
}

/// Same value as [`cube3_naive`] through the convolution identity
/// `sum_{n,m} a_n b_m c_{n+m} = sum_s (a * b)_s c_s`, in O(N log N).
pub fn cube3_fast(a: &Orbit, b: &Orbit, c: &Orbit, n: usize) -> Result<Complex64> {
    require_horizon(n)?;
    require_len("a", a, n)?;
    require_len("b", b, n)?;
    require_len("c", c, 2 * n - 1)?;
    let plan = ConvPlan::new(2 * n - 1);
    let mut scratch = plan.scratch();
    let total = plan.conv_dot(
        &mut scratch,
        &a.samples()[..n],
        &b.samples()[..n],
        &c.samples()[..2 * n - 1],
    );
    Ok(total / (n as f64 * n as f64))
}

/// `(1/N^3) sum_{m,n,p} f1_m f2_n f3_{m+n} f4_p f5_{m+p} f6_{n+p} f7_{m+n+p}`
/// by direct enumeration.
pub fn cube7_naive(f: &[&Orbit; 7], n: usize) -> Result<Complex64> {
    require_horizon(n)?;
    check_cube7_lengths(f, n)?;
    let samples: Vec<&[Complex64]> = f.iter().map(|o| o.samples()).collect();
    let total = canonical_cube_sum(&samples, 3, 0, n - 1, NAIVE_TERM_BUDGET)?;
    Ok(total / (n as f64).powi(3))
}

/// Same value as [`cube7_naive`] in O(N^2 log N): for each `p`, the pair
/// sequences `u_p(m) = f1_m f5_{m+p}`, `v_p(n) = f2_n f6_{n+p}`,
/// `w_p(s) = f3_s f7_{s+p}` reduce the inner double sum to the 3-function
/// convolution, weighted by `f4_p`.
pub fn cube7_fast(f: &[&Orbit; 7], n: usize) -> Result<Complex64> {
    require_horizon(n)?;
    check_cube7_lengths(f, n)?;
    let plan = ConvPlan::new(2 * n - 1);
    let (f1, f2, f3, f4, f5, f6, f7) = (
        f[0].samples(),
        f[1].samples(),
        f[2].samples(),
        f[3].samples(),
        f[4].samples(),
        f[5].samples(),
        f[6].samples(),
    );

    // the p-loop is embarrassingly parallel; collection stays ordered so the
    // final reduction (and therefore the result) is independent of the
    // thread count
    let per_p: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map_init(
            || {
                (
                    plan.scratch(),
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![Complex64::new(0.0, 0.0); 2 * n - 1],
                )
            },
            |(scratch, u, v, w), p| {
                for m in 0..n {
                    u[m] = f1[m] * f5[m + p];
                    v[m] = f2[m] * f6[m + p];
                }
                for s in 0..2 * n - 1 {
                    w[s] = f3[s] * f7[s + p];
                }
                f4[p] * plan.conv_dot(scratch, u, v, w)
            },
        )
        .collect();

    Ok(pairwise_sum(&per_p) / (n as f64).powi(3))
}

fn check_cube7_lengths(f: &[&Orbit; 7], n: usize) -> Result<()> {
    const ROLES: [&str; 7] = ["f1", "f2", "f3", "f4", "f5", "f6", "f7"];
    // index subsets {m}, {n}, {m,n}, {p}, {m,p}, {n,p}, {m,n,p}
    const WEIGHT: [usize; 7] = [1, 1, 2, 1, 2, 2, 3];
    for i in 0..7 {
        require_len(ROLES[i], f[i], WEIGHT[i] * (n - 1) + 1)?;
    }
    Ok(())
}

/// Windowed average `(1/(N-M+1)^2) sum_{n,m=M}^{N} a_n b_m c_{n+m}`.
///
/// The sum over `n, m in [M, N]` has `(N-M+1)^2` terms and is normalized by
/// that count, so the all-ones input averages to exactly 1. With `M = 0`
/// the computation coincides bit-for-bit with [`cube3_naive`] at horizon
/// `N + 1`.
pub fn windowed_cube3(
    a: &Orbit,
    b: &Orbit,
    c: &Orbit,
    m: usize,
    n: usize,
) -> Result<Complex64> {
    if m >= n {
        return Err(Error::EmptyWindow { m, n });
    }
    require_len("a", a, n + 1)?;
    require_len("b", b, n + 1)?;
    require_len("c", c, 2 * n + 1)?;
    let total = canonical_cube_sum(&[a.samples(), b.samples(), c.samples()], 2, m, n, NAIVE_TERM_BUDGET)?;
    let w = (n - m + 1) as f64;
    Ok(total / (w * w))
}

/// A cube average sampled along growing horizons.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageTrace {
    pub horizons: Vec<usize>,
    pub values: Vec<Complex64>,
    pub method: Method,
    /// Labels of the orbits that produced the trace.
    pub inputs: Vec<String>,
}

impl AverageTrace {
    /// Magnitudes at the first and last horizon.
    pub fn endpoints(&self) -> (f64, f64) {
        (
            self.values.first().map(|z| z.norm()).unwrap_or(0.0),
            self.values.last().map(|z| z.norm()).unwrap_or(0.0),
        )
    }

    /// Decay flag: the final magnitude is below the initial one.
    pub fn has_decayed(&self) -> bool {
        let (first, last) = self.endpoints();
        last < first
    }
}

/// Evaluates a cube average at each horizon with the fast evaluator. The
/// number of orbits picks the average: 3, 7, or 15 functions. At horizons
/// up to [`TRACE_SELF_CHECK_MAX`] the naive evaluator runs alongside as a
/// built-in regression check; disagreement is an error, not a value.
pub fn trace(orbits: &[&Orbit], horizons: &[usize]) -> Result<AverageTrace> {
    let k = match orbits.len() {
        3 => 2,
        7 => 3,
        15 => 4,
        other => {
            return Err(Error::Parameter(format!(
                "trace needs 3, 7, or 15 orbits (2^k - 1), got {other}"
            )))
        }
    };
    if horizons.is_empty() {
        return Err(Error::Parameter("no horizons given".into()));
    }
    for w in horizons.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Parameter(format!(
                "horizons must be strictly increasing, got {} after {}",
                w[1], w[0]
            )));
        }
    }

    let scale: f64 = orbits.iter().map(|o| o.sup_norm()).product::<f64>().max(1.0);
    let tol = if k == 2 { CUBE3_ORACLE_TOL } else { CUBE7_ORACLE_TOL };

    let mut values = Vec::with_capacity(horizons.len());
    for &n in horizons {
        let fast = eval_fast(orbits, k, n)?;
        if n <= TRACE_SELF_CHECK_MAX {
            let naive = eval_naive(orbits, k, n)?;
            if rel_err(fast, naive, scale) > tol {
                return Err(Error::SelfCheck { n, naive, fast });
            }
        }
        values.push(fast);
    }

    Ok(AverageTrace {
        horizons: horizons.to_vec(),
        values,
        method: Method::Fast,
        inputs: orbits.iter().map(|o| o.meta().label.clone()).collect(),
    })
}

fn eval_fast(orbits: &[&Orbit], k: u32, n: usize) -> Result<Complex64> {
    match k {
        2 => cube3_fast(orbits[0], orbits[1], orbits[2], n),
        3 => cube7_fast(
            &[
                orbits[0], orbits[1], orbits[2], orbits[3], orbits[4], orbits[5], orbits[6],
            ],
            n,
        ),
        _ => cubek_fast(&CubeSpec::new(k, orbits.to_vec())?, n),
    }
}

fn eval_naive(orbits: &[&Orbit], k: u32, n: usize) -> Result<Complex64> {
    match k {
        2 => cube3_naive(orbits[0], orbits[1], orbits[2], n),
        3 => cube7_naive(
            &[
                orbits[0], orbits[1], orbits[2], orbits[3], orbits[4], orbits[5], orbits[6],
            ],
            n,
        ),
        _ => cubek_naive(&CubeSpec::new(k, orbits.to_vec())?, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{generate_orbit, Observable, Point, SystemSpec};

    fn orbit_of(vals: &[(f64, f64)]) -> Orbit {
        Orbit::from_samples(
            "test",
            vals.iter().map(|&(r, i)| Complex64::new(r, i)).collect(),
        )
        .unwrap()
    }

    fn ones(l: usize) -> Orbit {
        Orbit::from_samples("ones", vec![Complex64::new(1.0, 0.0); l]).unwrap()
    }

    fn zeros(l: usize) -> Orbit {
        Orbit::from_samples("zeros", vec![Complex64::new(0.0, 0.0); l]).unwrap()
    }

    #[test]
    fn cube3_all_ones_is_one() {
        for n in [1usize, 2, 5, 17] {
            let a = ones(n);
            let c = ones(2 * n - 1);
            let v = cube3_naive(&a, &a, &c, n).unwrap();
            assert_eq!(v, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn cube3_annihilating_factor() {
        let a = orbit_of(&[(1.0, 2.0), (-0.5, 0.25), (3.0, 0.0)]);
        let c = zeros(5);
        let v = cube3_naive(&a, &a, &c, 3).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cube3_hand_enumerated_example() {
        // N=2, a=(1,2), b=(1,1), c=(1,0,1): (1 + 0 + 0 + 2)/4 = 0.75
        let a = orbit_of(&[(1.0, 0.0), (2.0, 0.0)]);
        let b = orbit_of(&[(1.0, 0.0), (1.0, 0.0)]);
        let c = orbit_of(&[(1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        let v = cube3_naive(&a, &b, &c, 2).unwrap();
        assert_eq!(v, Complex64::new(0.75, 0.0));
        let f = cube3_fast(&a, &b, &c, 2).unwrap();
        assert!((f - v).norm() < 1e-12);
    }

    #[test]
    fn cube3_length_errors() {
        let a = ones(4);
        let c = ones(6); // needs 7 for N=4
        assert!(matches!(
            cube3_naive(&a, &a, &c, 4),
            Err(Error::OrbitTooShort { role: "c", .. })
        ));
        assert!(matches!(cube3_fast(&a, &a, &c, 4), Err(Error::OrbitTooShort { .. })));
        assert!(matches!(cube3_naive(&a, &a, &c, 0), Err(Error::ZeroHorizon)));
    }

    #[test]
    fn cube7_all_ones_and_zero_factor() {
        let n = 3;
        let f1 = ones(n);
        let f3 = ones(2 * n - 1);
        let f7 = ones(3 * n - 2);
        let fs = [&f1, &f1, &f3, &f1, &f3, &f3, &f7];
        assert_eq!(cube7_naive(&fs, n).unwrap(), Complex64::new(1.0, 0.0));

        let z7 = zeros(3 * n - 2);
        let fz = [&f1, &f1, &f3, &f1, &f3, &f3, &z7];
        assert_eq!(cube7_naive(&fz, n).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cube7_factorizing_example() {
        // N=2, f1=(1,2), everything else 1: (1/2) * (1+2) = 1.5
        let n = 2;
        let f1 = orbit_of(&[(1.0, 0.0), (2.0, 0.0)]);
        let o1 = ones(n);
        let o2 = ones(2 * n - 1);
        let o3 = ones(3 * n - 2);
        let fs = [&f1, &o1, &o2, &o1, &o2, &o2, &o3];
        let v = cube7_naive(&fs, n).unwrap();
        assert!((v - Complex64::new(1.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cube7_fast_zero_outer_factor() {
        let n = 5;
        let f1 = ones(n);
        let f3 = ones(2 * n - 1);
        let f7 = ones(3 * n - 2);
        let z = zeros(n);
        let fs = [&f1, &f1, &f3, &z, &f3, &f3, &f7];
        let v = cube7_fast(&fs, n).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn windowed_all_ones_and_reduction() {
        let a = ones(8);
        let c = ones(15);
        let v = windowed_cube3(&a, &a, &c, 3, 7).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));

        // M = 0, N = N0 - 1 reproduces cube3_naive(N0) bit-for-bit
        let sys = SystemSpec::doubling(99);
        let obs = Observable::cosine(1).with_mean_zero(true);
        let long = generate_orbit(&sys, &obs, Point::OneD(0.0), 17).unwrap();
        let n0 = 8usize;
        let w = windowed_cube3(&long, &long, &long, 0, n0 - 1).unwrap();
        let d = cube3_naive(&long, &long, &long, n0).unwrap();
        assert_eq!(w, d);
    }

    #[test]
    fn windowed_brute_force_oracle() {
        let sys = SystemSpec::doubling(5);
        let obs = Observable::cosine(1);
        let (m, n) = (5usize, 12usize);
        let a = generate_orbit(&sys, &obs, Point::OneD(0.0), n + 1).unwrap();
        let b = generate_orbit(&sys, &Observable::character(1), Point::OneD(0.0), n + 1).unwrap();
        let c = generate_orbit(&sys, &Observable::cosine(2), Point::OneD(0.0), 2 * n + 1).unwrap();
        let got = windowed_cube3(&a, &b, &c, m, n).unwrap();
        // plain accumulation, no canonicalization: an independent route
        let mut acc = Complex64::new(0.0, 0.0);
        for i in m..=n {
            for j in m..=n {
                acc += a[i] * b[j] * c[i + j];
            }
        }
        let w = (n - m + 1) as f64;
        let want = acc / (w * w);
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn windowed_rejects_empty_window() {
        let a = ones(20);
        let c = ones(40);
        assert!(matches!(
            windowed_cube3(&a, &a, &c, 7, 7),
            Err(Error::EmptyWindow { m: 7, n: 7 })
        ));
    }

    #[test]
    fn trace_all_ones() {
        let a = ones(8);
        let c = ones(15);
        let t = trace(&[&a, &a, &c], &[2, 4, 8]).unwrap();
        assert_eq!(t.values.len(), 3);
        for v in &t.values {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(!t.has_decayed());
    }

    #[test]
    fn trace_rejects_non_increasing_horizons() {
        let a = ones(8);
        let c = ones(15);
        assert!(trace(&[&a, &a, &c], &[4, 4]).is_err());
        assert!(trace(&[&a, &a, &c], &[]).is_err());
        assert!(trace(&[&a, &a], &[2]).is_err());
    }

    #[test]
    fn cost_guard_refuses_absurd_requests() {
        let l = 40_000usize;
        let a = ones(l);
        let c = ones(2 * l);
        assert!(matches!(
            cube3_naive(&a, &a, &c, 33_000),
            Err(Error::CostGuard { .. })
        ));
    }
}
