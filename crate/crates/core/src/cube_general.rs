//! The general averages of `2^k - 1` functions, their block-structured fast
//! evaluation, and the uniformity quantity over the final index block.
//!
//! Function `j` (1-based, `1 <= j <= 2^k - 1`) is attached to the index
//! subset read off the binary expansion of `j`: bit `l-1` set means index
//! `i_l` enters the power of the shift applied to `f_j`. For `k = 3` this
//! reproduces the 7-function order `{m}, {n}, {m,n}, {p}, {m,p}, {n,p},
//! {m,n,p}` with `(i_1, i_2, i_3) = (m, n, p)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cube_averages::{canonical_cube_sum, NAIVE_TERM_BUDGET};
use crate::dynamics::Orbit;
use crate::error::{Error, Result};
use crate::fft::{ConvPlan, GridMaxPlan};
use crate::numeric::{pairwise_sum, pairwise_sum_f64};

/// Agreement threshold between `cubek_fast` and `cubek_naive`, relative to
/// the product of sup norms.
pub const CUBEK_ORACLE_TOL: f64 = 1e-8;

/// A `2^k - 1`-function average: the order `k` and the orbits in subset
/// order.
#[derive(Clone, Debug)]
pub struct CubeSpec<'a> {
    k: u32,
    functions: Vec<&'a Orbit>,
}

impl<'a> CubeSpec<'a> {
    pub fn new(k: u32, functions: Vec<&'a Orbit>) -> Result<Self> {
        if k < 2 || k > 20 {
            return Err(Error::Parameter(format!("k must lie in 2..=20, got {k}")));
        }
        let expected = (1usize << k) - 1;
        if functions.len() != expected {
            return Err(Error::Parameter(format!(
                "k={k} needs {expected} functions, got {}",
                functions.len()
            )));
        }
        Ok(CubeSpec { k, functions })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn functions(&self) -> &[&'a Orbit] {
        &self.functions
    }

    /// Samples required of function `j` (1-based) at horizon `n`:
    /// `|eps_j| (n-1) + 1`.
    pub fn required_len(j: usize, n: usize) -> usize {
        (j as u32).count_ones() as usize * (n - 1) + 1
    }

    fn check_lengths(&self, n: usize) -> Result<()> {
        for (j0, f) in self.functions.iter().enumerate() {
            let needed = Self::required_len(j0 + 1, n);
            if f.len() < needed {
                return Err(Error::OrbitTooShort {
                    role: "cube function",
                    needed,
                    available: f.len(),
                });
            }
        }
        Ok(())
    }

    /// Product of the sup norms; the natural scale of the average.
    pub fn sup_product(&self) -> f64 {
        self.functions.iter().map(|o| o.sup_norm()).product()
    }
}

/// `(1/N^k) sum_{i_1..i_k} prod_j f_j(T^{sum_{l in eps_j} i_l} x)` by the
/// direct `k`-fold loop. Refuses more than [`NAIVE_TERM_BUDGET`] primitive
/// terms and `k > 4`; see [`cubek_naive_with_budget`] to override.
pub fn cubek_naive(spec: &CubeSpec, n: usize) -> Result<Complex64> {
    if spec.k > 4 {
        return Err(Error::Parameter(format!(
            "cubek_naive is cost-guarded to k <= 4 (got k={}); use cubek_naive_with_budget to force",
            spec.k
        )));
    }
    cubek_naive_with_budget(spec, n, NAIVE_TERM_BUDGET)
}

/// [`cubek_naive`] with an explicit primitive-term budget and no `k` cap.
pub fn cubek_naive_with_budget(spec: &CubeSpec, n: usize, budget: u64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    spec.check_lengths(n)?;
    let samples: Vec<&[Complex64]> = spec.functions.iter().map(|o| o.samples()).collect();
    let total = canonical_cube_sum(&samples, spec.k, 0, n - 1, budget)?;
    Ok(total / (n as f64).powi(spec.k as i32))
}

/// Same value as [`cubek_naive`] within [`CUBEK_ORACLE_TOL`], in
/// O(N^{k-1} log N): for each of the `N^{k-2}` combinations of
/// `i_3, ..., i_k`, the `(i_1, i_2)` double sum collapses to a 3-sequence
/// convolution over
/// `u(i_1) = prod_{eps cap {1,2} = {1}} f_eps`,
/// `v(i_2) = prod_{eps cap {1,2} = {2}} f_eps`,
/// `w(s)   = prod_{eps supseteq {1,2}} f_eps`,
/// weighted by the tail-only factors.
pub fn cubek_fast(spec: &CubeSpec, n: usize) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    spec.check_lengths(n)?;
    let k = spec.k as usize;
    let jmax = (1usize << k) - 1;

    // partition the functions by their intersection with {i1, i2};
    // each entry keeps (tail mask over i3.., samples)
    let mut tail_only: Vec<(usize, &[Complex64])> = Vec::new();
    let mut u_class: Vec<(usize, &[Complex64])> = Vec::new();
    let mut v_class: Vec<(usize, &[Complex64])> = Vec::new();
    let mut w_class: Vec<(usize, &[Complex64])> = Vec::new();
    for j in 1..=jmax {
        let entry = (j >> 2, spec.functions[j - 1].samples());
        match j & 3 {
            0 => tail_only.push(entry),
            1 => u_class.push(entry),
            2 => v_class.push(entry),
            _ => w_class.push(entry),
        }
    }

    let tails = (n as u128).pow(k as u32 - 2) as usize;
    let tail_dims = k - 2;
    let plan = ConvPlan::new(2 * n - 1);

    let per_tail: Vec<Complex64> = (0..tails)
        .into_par_iter()
        .map_init(
            || {
                (
                    plan.scratch(),
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![Complex64::new(0.0, 0.0); 2 * n - 1],
                    vec![0usize; tail_dims],
                )
            },
            |(scratch, u, v, w, tail), rank| {
                // decode the tail multi-index (i3, ..., ik)
                let mut r = rank;
                for t in tail.iter_mut() {
                    *t = r % n;
                    r /= n;
                }
                let shift = |mask: usize| -> usize {
                    let mut s = 0;
                    let mut bits = mask;
                    let mut d = 0;
                    while bits != 0 {
                        if bits & 1 == 1 {
                            s += tail[d];
                        }
                        bits >>= 1;
                        d += 1;
                    }
                    s
                };

                let mut g = Complex64::new(1.0, 0.0);
                for &(mask, f) in &tail_only {
                    g *= f[shift(mask)];
                }
                fill_product(u, n, &u_class, &shift);
                fill_product(v, n, &v_class, &shift);
                fill_product(w, 2 * n - 1, &w_class, &shift);

                g * plan.conv_dot(scratch, u, v, w)
            },
        )
        .collect();

    Ok(pairwise_sum(&per_tail) / (n as f64).powi(spec.k as i32))
}

fn fill_product(
    buf: &mut [Complex64],
    len: usize,
    class: &[(usize, &[Complex64])],
    shift: &impl Fn(usize) -> usize,
) {
    buf[..len].fill(Complex64::new(1.0, 0.0));
    for &(mask, f) in class {
        let off = shift(mask);
        for (i, b) in buf[..len].iter_mut().enumerate() {
            *b *= f[off + i];
        }
    }
}

/// The finite-horizon uniformity quantity over the last index block:
///
/// `(1/N^{k-2}) sum_{i_1..i_{k-2}} sup_t |(1/N) sum_{i_k} A(i_1..i_{k-2},
/// i_k) e^{2 pi i i_k t}|^2`
///
/// where `A` is the product of the `2^{k-2}` block functions, function `j`
/// (0-based) shifted by the subset of `(i_1..i_{k-2})` selected by the bits
/// of `j`, all on top of the inner index `i_k`. The sup is a grid maximum
/// over `oversample * next_pow2(N)` points, the same grid the
/// Wiener-Wintner statistic uses. Block sizes 2 and 4 (`k` = 3, 4).
pub fn lemma4_quantity(block: &[&Orbit], n: usize, oversample: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroHorizon);
    }
    let outer_dims = match block.len() {
        2 => 1usize,
        4 => 2usize,
        other => {
            return Err(Error::Parameter(format!(
                "block must hold 2^(k-2) functions for k in {{3, 4}} (2 or 4), got {other}"
            )))
        }
    };
    if !(oversample >= 2 && oversample.is_power_of_two()) {
        return Err(Error::Parameter(format!(
            "oversample must be a power of two >= 2, got {oversample}"
        )));
    }
    for (j, f) in block.iter().enumerate() {
        let needed = ((j as u32).count_ones() as usize + 1) * (n - 1) + 1;
        if f.len() < needed {
            return Err(Error::OrbitTooShort {
                role: "block function",
                needed,
                available: f.len(),
            });
        }
    }

    let samples: Vec<&[Complex64]> = block.iter().map(|o| o.samples()).collect();
    let plan = GridMaxPlan::new(n, oversample);
    let outer = (n as u128).pow(outer_dims as u32) as usize;

    let sups: Vec<f64> = (0..outer)
        .into_par_iter()
        .map_init(
            || {
                (
                    plan.scratch(),
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![0usize; outer_dims],
                )
            },
            |(scratch, seq, idx), rank| {
                let mut r = rank;
                for t in idx.iter_mut() {
                    *t = r % n;
                    r /= n;
                }
                seq.fill(Complex64::new(1.0, 0.0));
                for (j, f) in samples.iter().enumerate() {
                    let mut off = 0usize;
                    let mut bits = j;
                    let mut d = 0;
                    while bits != 0 {
                        if bits & 1 == 1 {
                            off += idx[d];
                        }
                        bits >>= 1;
                        d += 1;
                    }
                    for (m, s) in seq.iter_mut().enumerate() {
                        *s *= f[off + m];
                    }
                }
                let (sup, _) = plan.sup(scratch, seq);
                sup * sup
            },
        )
        .collect();

    Ok(pairwise_sum_f64(&sups) / outer as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube_averages::{cube3_naive, cube7_naive};
    use crate::dynamics::{generate_orbit, Observable, Point, SystemSpec};

    fn ones(l: usize) -> Orbit {
        Orbit::from_samples("ones", vec![Complex64::new(1.0, 0.0); l]).unwrap()
    }

    fn doubling_orbit(seed: u64, obs: &Observable, l: usize) -> Orbit {
        generate_orbit(&SystemSpec::doubling(seed), obs, Point::OneD(0.0), l).unwrap()
    }

    fn cube7_slots(n: usize, seed: u64) -> Vec<Orbit> {
        let weights = [1usize, 1, 2, 1, 2, 2, 3];
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                doubling_orbit(
                    seed + i as u64,
                    &Observable::cosine(1).with_mean_zero(true),
                    w * (n - 1) + 1,
                )
            })
            .collect()
    }

    #[test]
    fn all_ones_is_one() {
        for k in [2u32, 3, 4] {
            let n = 4usize;
            let orbits: Vec<Orbit> = (1..(1usize << k))
                .map(|j| ones(CubeSpec::required_len(j, n)))
                .collect();
            let refs: Vec<&Orbit> = orbits.iter().collect();
            let spec = CubeSpec::new(k, refs).unwrap();
            assert_eq!(cubek_naive(&spec, n).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn k2_reduces_to_cube3_bit_for_bit() {
        let n = 9usize;
        let a = doubling_orbit(1, &Observable::cosine(1), n);
        let b = doubling_orbit(2, &Observable::character(1), n);
        let c = doubling_orbit(3, &Observable::cosine(2), 2 * n - 1);
        let spec = CubeSpec::new(2, vec![&a, &b, &c]).unwrap();
        let general = cubek_naive(&spec, n).unwrap();
        let special = cube3_naive(&a, &b, &c, n).unwrap();
        assert_eq!(general, special);
    }

    #[test]
    fn k3_reduces_to_cube7_bit_for_bit() {
        let n = 6usize;
        let orbits = cube7_slots(n, 11);
        let refs: Vec<&Orbit> = orbits.iter().collect();
        let spec = CubeSpec::new(3, refs.clone()).unwrap();
        let general = cubek_naive(&spec, n).unwrap();
        let arr = [refs[0], refs[1], refs[2], refs[3], refs[4], refs[5], refs[6]];
        let special = cube7_naive(&arr, n).unwrap();
        assert_eq!(general, special);
    }

    #[test]
    fn fast_matches_naive_for_k3() {
        let n = 16usize;
        let orbits = cube7_slots(n, 21);
        let refs: Vec<&Orbit> = orbits.iter().collect();
        let spec = CubeSpec::new(3, refs).unwrap();
        let naive = cubek_naive(&spec, n).unwrap();
        let fast = cubek_fast(&spec, n).unwrap();
        let scale = spec.sup_product().max(1.0);
        assert!(
            crate::numeric::rel_err(fast, naive, scale) < CUBEK_ORACLE_TOL,
            "{fast} vs {naive}"
        );
    }

    #[test]
    fn k4_all_ones_fast() {
        let n = 8usize;
        let orbits: Vec<Orbit> = (1..16usize)
            .map(|j| ones(CubeSpec::required_len(j, n)))
            .collect();
        let refs: Vec<&Orbit> = orbits.iter().collect();
        let spec = CubeSpec::new(4, refs).unwrap();
        let v = cubek_fast(&spec, n).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn k4_zero_function_kills_average() {
        let n = 4usize;
        let mut orbits: Vec<Orbit> = (1..16usize)
            .map(|j| ones(CubeSpec::required_len(j, n)))
            .collect();
        orbits[9] = Orbit::from_samples(
            "zero",
            vec![Complex64::new(0.0, 0.0); CubeSpec::required_len(10, n)],
        )
        .unwrap();
        let refs: Vec<&Orbit> = orbits.iter().collect();
        let spec = CubeSpec::new(4, refs).unwrap();
        assert!(cubek_fast(&spec, n).unwrap().norm() < 1e-14);
        assert_eq!(cubek_naive(&spec, n).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn index_permutations_leave_value_unchanged() {
        // permuting the roles of (i1, i2, i3) together with the induced
        // permutation of the subset-indexed functions is invisible, down to
        // the last bit
        let n = 5usize;
        // give every slot the worst-case length so all permutations fit
        let orbits: Vec<Orbit> = (0..7)
            .map(|i| {
                doubling_orbit(
                    31 + i as u64,
                    &Observable::cosine(1).with_mean_zero(true),
                    3 * (n - 1) + 1,
                )
            })
            .collect();
        let refs: Vec<&Orbit> = orbits.iter().collect();
        let base = cubek_naive(&CubeSpec::new(3, refs.clone()).unwrap(), n).unwrap();

        let perms: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for perm in perms {
            // image of subset mask j under the index permutation
            let mapped_mask = |j: usize| -> usize {
                let mut out = 0usize;
                for (l, p) in perm.iter().enumerate() {
                    if j & (1 << l) != 0 {
                        out |= 1 << p;
                    }
                }
                out
            };
            let mut permuted: Vec<&Orbit> = refs.clone();
            for j in 1..=7usize {
                permuted[mapped_mask(j) - 1] = refs[j - 1];
            }
            let v = cubek_naive(&CubeSpec::new(3, permuted).unwrap(), n).unwrap();
            assert_eq!(v, base, "permutation {perm:?} changed the value");
        }
    }

    #[test]
    fn naive_guards_cost() {
        let orbits: Vec<Orbit> = (1..32usize).map(|_| ones(8)).collect();
        let refs: Vec<&Orbit> = orbits.iter().collect();
        let spec = CubeSpec::new(5, refs).unwrap();
        assert!(matches!(
            cubek_naive(&spec, 2),
            Err(Error::Parameter(_))
        ));
        // forcing through the budget variant works
        let v = cubek_naive_with_budget(&spec, 2, NAIVE_TERM_BUDGET).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn lemma4_trivial_cases() {
        let n = 8usize;
        let g0 = ones(n);
        let g1 = ones(2 * n - 1);
        let v = lemma4_quantity(&[&g0, &g1], n, 4).unwrap();
        assert!((v - 1.0).abs() < 1e-9);

        let z0 = Orbit::from_samples("z", vec![Complex64::new(0.0, 0.0); n]).unwrap();
        let v0 = lemma4_quantity(&[&z0, &g1], n, 4).unwrap();
        assert_eq!(v0, 0.0);

        // k = 4 block of four all-ones functions
        let g = [
            ones(n),
            ones(2 * n - 1),
            ones(2 * n - 1),
            ones(3 * n - 2),
        ];
        let v4 = lemma4_quantity(&[&g[0], &g[1], &g[2], &g[3]], n, 4).unwrap();
        assert!((v4 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lemma4_stays_within_sup_bound() {
        let n = 16usize;
        let g0 = doubling_orbit(71, &Observable::cosine(1), n);
        let g1 = doubling_orbit(72, &Observable::cosine(2), 2 * n - 1);
        let v = lemma4_quantity(&[&g0, &g1], n, 4).unwrap();
        let bound = (g0.sup_norm() * g1.sup_norm()).powi(2);
        assert!(v >= 0.0 && v <= bound + 1e-12);
    }

    #[test]
    fn lemma4_rejects_bad_block() {
        let g = ones(8);
        assert!(lemma4_quantity(&[&g], 4, 4).is_err());
        assert!(lemma4_quantity(&[&g, &g, &g], 4, 4).is_err());
        assert!(lemma4_quantity(&[&g, &g], 4, 3).is_err());
        // g1 needs 2n-1 samples
        assert!(matches!(
            lemma4_quantity(&[&g, &g], 8, 4),
            Err(Error::OrbitTooShort { .. })
        ));
    }
}
