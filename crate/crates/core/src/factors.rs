//! Kronecker and Conze-Lesigne projections for the catalog systems, the
//! eigenfunction factorization identity behind the 3-function average, and
//! finite-horizon two-sided comparisons of the raw vs projected bilinear
//! and quadrilinear quantities.
//!
//! The projection table is hand-curated from the factor structure of each
//! catalog system:
//!
//! | system           | Kronecker        | CL        |
//! |------------------|------------------|-----------|
//! | rotation         | identity         | identity  |
//! | doubling         | integral         | integral  |
//! | skew product     | average over y   | identity  |
//! | product rotation | identity         | identity  |
//!
//! Rotations have pure discrete spectrum; the doubling map is mixing, so
//! both factors are trivial; the skew product's Kronecker factor is the
//! base rotation while the whole system is already of order-3 type.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cube_averages::cube3_naive;
use crate::dynamics::{generate_orbit, Observable, Orbit, Point, SystemKind, SystemSpec};
use crate::error::{Error, Result};
use crate::fft::ConvPlan;
use crate::numeric::{frac_affine, pairwise_sum, pairwise_sum_f64, unit_phase};

/// The two factors with curated projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Kronecker,
    ConzeLesigne,
}

impl std::fmt::Display for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Factor::Kronecker => "kronecker",
            Factor::ConzeLesigne => "cl",
        })
    }
}

/// Symbolic projection of an observable onto a factor of a catalog system.
/// Idempotent, and preserves the symbolic integral exactly.
pub fn project(system: &SystemSpec, obs: &Observable, factor: Factor) -> Result<Observable> {
    match (system.kind, factor) {
        (SystemKind::Rotation | SystemKind::ProductRotation, _) => Ok(obs.clone()),
        (SystemKind::Doubling, _) => Ok(Observable::constant(obs.integral())),
        (SystemKind::SkewProduct, Factor::Kronecker) => {
            // conditional expectation on the base circle: average over y
            // kills every mode with l != 0; the indicator depends on x only
            Ok(Observable {
                terms: obs.terms.iter().copied().filter(|t| t.l == 0).collect(),
                indicator: obs.indicator,
                mean_zero: obs.mean_zero,
            })
        }
        (SystemKind::SkewProduct, Factor::ConzeLesigne) => Ok(obs.clone()),
        (SystemKind::ExternalSequence, _) => {
            Err(Error::NoFactorData(system.kind.to_string()))
        }
    }
}

/// Both sides of the eigenfunction factorization: when the third function
/// satisfies `f3(T^n x) = f3(x) e^{2 pi i n theta}`,
///
/// `M_N(f1, f2, f3) = f3(x) . (1/N sum_n f1(T^n x) e^{2 pi i n theta})
///                           . (1/N sum_m f2(T^m x) e^{2 pi i m theta})`
///
/// holds identically. Returns `(lhs, rhs)`; the left side runs the full
/// naive cube average over the synthesized eigenfunction orbit, the right
/// side the factored product, with bit-identical modulation phases on both
/// sides so the comparison isolates summation error only.
pub fn eigenfunction_identity_check(
    f1: &Orbit,
    f2: &Orbit,
    theta: f64,
    f3_value: Complex64,
    n: usize,
) -> Result<(Complex64, Complex64)> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    for (role, orbit) in [("f1", f1), ("f2", f2)] {
        if orbit.len() < n {
            return Err(Error::OrbitTooShort {
                role,
                needed: n,
                available: orbit.len(),
            });
        }
    }

    let phases: Vec<Complex64> = (0..2 * n - 1)
        .map(|j| unit_phase(frac_affine(0.0, j as u64, theta)))
        .collect();

    let eigen_orbit = Orbit::from_samples(
        format!("eigenfunction(theta={theta})"),
        phases.iter().map(|p| f3_value * p).collect(),
    )?;
    let lhs = cube3_naive(f1, f2, &eigen_orbit, n)?;

    let modulated =
        |o: &Orbit| -> Complex64 {
            let terms: Vec<Complex64> = (0..n).map(|j| o[j] * phases[j]).collect();
            pairwise_sum(&terms) / n as f64
        };
    let rhs = f3_value * modulated(f1) * modulated(f2);
    Ok((lhs, rhs))
}

/// `(1/N) sum_{n<N} |(1/N) sum_{m<N} a_m b_{n+m}|^2` through one linear
/// convolution of the reversed first factor.
fn bilinear_box_quantity(a: &[Complex64], b: &[Complex64], n: usize) -> f64 {
    let plan = ConvPlan::new(3 * n - 2);
    let mut scratch = plan.scratch();
    let rev: Vec<Complex64> = a[..n].iter().rev().copied().collect();
    let mut out = Vec::new();
    plan.conv_into(&mut scratch, &rev, &b[..2 * n - 1], &mut out, 2 * n - 1);
    // out[n-1+j] = sum_m a_m b_{j+m}
    let sq: Vec<f64> = (0..n)
        .map(|j| (out[n - 1 + j] / n as f64).norm_sqr())
        .collect();
    pairwise_sum_f64(&sq) / n as f64
}

/// Raw vs Kronecker-projected value of the bilinear box quantity, both at
/// finite horizon `N`, orbits started at `x0`.
pub fn eq1_compare(
    system: &SystemSpec,
    x0: Point,
    obs1: &Observable,
    obs2: &Observable,
    n: usize,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    let l = 2 * n - 1;
    let side = |o1: &Observable, o2: &Observable| -> Result<f64> {
        let a = generate_orbit(system, o1, x0, l)?;
        let b = generate_orbit(system, o2, x0, l)?;
        Ok(bilinear_box_quantity(a.samples(), b.samples(), n))
    };
    let raw = side(obs1, obs2)?;
    let p1 = project(system, obs1, Factor::Kronecker)?;
    let p2 = project(system, obs2, Factor::Kronecker)?;
    let projected = side(&p1, &p2)?;
    Ok((raw, projected))
}

/// `(1/N^2) sum_{n,p} |(1/N) sum_m f4_m f5_{n+m} f6_{p+m} f7_{p+n+m}|^2`;
/// per `p`, pairing `(f4 f6)` and `(f5 f7)` reduces the inner sums to one
/// reversed convolution, so the whole quantity costs O(N^2 log N).
fn quadrilinear_box_quantity(
    f4: &[Complex64],
    f5: &[Complex64],
    f6: &[Complex64],
    f7: &[Complex64],
    n: usize,
) -> f64 {
    let plan = ConvPlan::new(3 * n - 2);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || {
                (
                    plan.scratch(),
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![Complex64::new(0.0, 0.0); 2 * n - 1],
                    Vec::new(),
                )
            },
            |(scratch, u, w, out), p| {
                // u_p(m) = f4_m f6_{p+m}, reversed for the correlation
                for m in 0..n {
                    u[m] = f4[n - 1 - m] * f6[p + n - 1 - m];
                }
                for s in 0..2 * n - 1 {
                    w[s] = f5[s] * f7[p + s];
                }
                plan.conv_into(scratch, u, w, out, 2 * n - 1);
                let sq: Vec<f64> = (0..n)
                    .map(|j| (out[n - 1 + j] / n as f64).norm_sqr())
                    .collect();
                pairwise_sum_f64(&sq)
            },
        )
        .collect();
    pairwise_sum_f64(&rows) / (n as f64 * n as f64)
}

/// Raw vs CL-projected value of the quadrilinear box quantity at finite
/// horizon `N`.
pub fn eq10_compare(
    system: &SystemSpec,
    x0: Point,
    obs: &[&Observable; 4],
    n: usize,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    let l = 3 * n - 2;
    let side = |os: [&Observable; 4]| -> Result<f64> {
        let orbits: Vec<Orbit> = os
            .iter()
            .map(|o| generate_orbit(system, o, x0, l))
            .collect::<Result<_>>()?;
        Ok(quadrilinear_box_quantity(
            orbits[0].samples(),
            orbits[1].samples(),
            orbits[2].samples(),
            orbits[3].samples(),
            n,
        ))
    };
    let raw = side([obs[0], obs[1], obs[2], obs[3]])?;
    let projected_obs: Vec<Observable> = obs
        .iter()
        .map(|o| project(system, o, Factor::ConzeLesigne))
        .collect::<Result<_>>()?;
    let projected = side([
        &projected_obs[0],
        &projected_obs[1],
        &projected_obs[2],
        &projected_obs[3],
    ])?;
    Ok((raw, projected))
}
