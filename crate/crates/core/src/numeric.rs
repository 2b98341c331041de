//! Shared numeric machinery: compensated phase reduction, order-canonical
//! summation, and the splittable 64-bit generator behind bit streams and
//! trial seeds.

use num_complex::Complex64;
use std::cmp::Ordering;

/// Golden-ratio increment of the SplitMix64 stream.
pub const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Steele–Lea–Flood). The full generator is
/// `word(seed, j) = mix(seed + (j + 1) * GAMMA)`, which allows O(1) random
/// access into the stream.
pub fn splitmix64_mix(z: u64) -> u64 {
    let mut z = z;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `j`-th 64-bit word of the stream addressed by `seed`.
pub fn stream_word(seed: u64, j: u64) -> u64 {
    splitmix64_mix(seed.wrapping_add(j.wrapping_add(1).wrapping_mul(SPLITMIX_GAMMA)))
}

/// Per-trial seed derivation: trial `i` of master seed `m` uses
/// `stream_word(m, i)`. Every randomized harness task goes through this one
/// counter scheme so that a single master seed pins the whole run.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    stream_word(master, index)
}

/// Error-free product: returns `(p, e)` with `a * b = p + e` exactly.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = f64::mul_add(a, b, -p);
    (p, e)
}

#[inline]
fn wrap_unit(mut t: f64) -> f64 {
    t -= t.floor();
    // floor() leaves 1.0 unreduced only through rounding at the boundary
    if t >= 1.0 {
        t -= 1.0;
    }
    if t < 0.0 {
        t += 1.0;
    }
    t
}

/// `frac(x0 + n * alpha)` with the product `n * alpha` held in double-double
/// form. The result carries no error growth in `n` (exact for `n < 2^53`),
/// unlike iterated addition which loses one ulp per step.
pub fn frac_affine(x0: f64, n: u64, alpha: f64) -> f64 {
    let (hi, lo) = two_prod(n as f64, alpha);
    // fract() of a finite double is exact
    wrap_unit(x0 + hi.fract() + lo)
}

/// Second coordinate of the skew product after `n` steps:
/// `frac(y0 + n * x0 + n(n-1)/2 * alpha)`, compensated like [`frac_affine`].
pub fn frac_skew(y0: f64, n: u64, x0: f64, alpha: f64) -> f64 {
    let (p1, e1) = two_prod(n as f64, x0);
    let tri = (n as u128).wrapping_mul(n.saturating_sub(1) as u128) / 2;
    let (p2, e2) = two_prod(tri as f64, alpha);
    wrap_unit(y0 + p1.fract() + p2.fract() + (e1 + e2))
}

/// `e^{2 pi i t}`.
#[inline]
pub fn unit_phase(t: f64) -> Complex64 {
    let (s, c) = (std::f64::consts::TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Tree (pairwise) summation; error grows like O(log n) instead of O(n).
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 32 {
        let mut acc = Complex64::new(0.0, 0.0);
        for x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Real-valued tree summation.
pub fn pairwise_sum_f64(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum_f64(&xs[..mid]) + pairwise_sum_f64(&xs[mid..])
    }
}

/// Total order on complex values by (re, im); used to canonicalize
/// floating-point sums and products under input permutations.
#[inline]
pub fn cplx_cmp(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Sort-then-tree summation. The result depends only on the multiset of
/// terms, not on the order they were produced in, so any reorganization of
/// the generating loops yields bit-identical values.
pub fn canonical_sum(terms: &mut [Complex64]) -> Complex64 {
    terms.sort_unstable_by(cplx_cmp);
    pairwise_sum(terms)
}

/// Product of a small factor list in value order. Complex multiplication is
/// bitwise commutative, so sorting makes the product canonical under any
/// permutation of the factors.
pub fn canonical_product(factors: &mut [Complex64]) -> Complex64 {
    factors.sort_unstable_by(cplx_cmp);
    factors
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f)
}

#[inline]
pub fn canonical_product3(a: Complex64, b: Complex64, c: Complex64) -> Complex64 {
    let mut f = [a, b, c];
    if cplx_cmp(&f[0], &f[1]) == Ordering::Greater {
        f.swap(0, 1);
    }
    if cplx_cmp(&f[1], &f[2]) == Ordering::Greater {
        f.swap(1, 2);
    }
    if cplx_cmp(&f[0], &f[1]) == Ordering::Greater {
        f.swap(0, 1);
    }
    (f[0] * f[1]) * f[2]
}

/// Smallest power of two `>= n` (and `>= 1`).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Relative disagreement against a reference magnitude. `scale` should be
/// the natural size of the quantity (for cube averages, the product of the
/// sup norms); it keeps the ratio meaningful when the reference value sits
/// near zero.
pub fn rel_err(candidate: Complex64, reference: Complex64, scale: f64) -> f64 {
    (candidate - reference).norm() / reference.norm().max(scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_random_access_matches_sequential() {
        // sequential SplitMix64 with the same gamma
        let seed = 0xDEAD_BEEF_u64;
        let mut state = seed;
        for j in 0..100 {
            state = state.wrapping_add(SPLITMIX_GAMMA);
            assert_eq!(splitmix64_mix(state), stream_word(seed, j));
        }
    }

    #[test]
    fn frac_affine_exact_small_cases() {
        // alpha = 0.25, x0 = 0: quarter turns
        assert_eq!(frac_affine(0.0, 0, 0.25), 0.0);
        assert_eq!(frac_affine(0.0, 1, 0.25), 0.25);
        assert_eq!(frac_affine(0.0, 5, 0.25), 0.25);
        assert_eq!(frac_affine(0.5, 2, 0.25), 0.0);
    }

    #[test]
    fn frac_affine_matches_exact_rational_arithmetic_at_large_n() {
        // Both x0 and alpha are dyadic rationals once stored as f64, so the
        // exact value of frac(x0 + n*alpha) is computable in u128 integer
        // arithmetic from their bit patterns.
        let alpha = std::f64::consts::SQRT_2 - 1.0;
        let x0 = 0.2_f64;
        for &n in &[1u64, 7, 12_345, 1_000, 999_983, 1_000_000] {
            let got = frac_affine(x0, n, alpha);
            let want = exact_frac_affine(x0, n, alpha);
            assert!(
                (got - want).abs() < 1e-12,
                "n={n}: got {got}, want {want}"
            );
        }
    }

    // Exact frac(x0 + n*alpha) using the dyadic rational representation of
    // the two doubles; all arithmetic in u128/i32.
    fn exact_frac_affine(x0: f64, n: u64, alpha: f64) -> f64 {
        // decompose positive finite f64 as m * 2^e
        fn decode(x: f64) -> (u128, i32) {
            let bits = x.to_bits();
            let exp = ((bits >> 52) & 0x7FF) as i32;
            let frac = bits & 0xF_FFFF_FFFF_FFFF;
            let (m, e) = if exp == 0 {
                (frac as u128, -1074)
            } else {
                ((frac | (1 << 52)) as u128, exp - 1075)
            };
            (m, e)
        }
        let (ma, ea) = decode(alpha);
        let (mx, ex) = decode(x0);
        // common denominator 2^-e with e = min(ea, ex); both exponents are
        // negative for arguments < 1 and n*alpha keeps e >= -1074.
        let e = ea.min(ex);
        let num_alpha = ma << (ea - e) as u32;
        let num_x0 = mx << (ex - e) as u32;
        let denom_log2 = (-e) as u32;
        assert!(denom_log2 < 127, "test helper assumes normal inputs");
        let denom: u128 = 1u128 << denom_log2;
        let total = (num_alpha.wrapping_mul(n as u128)).wrapping_add(num_x0) % denom;
        total as f64 / denom as f64
    }

    #[test]
    fn canonical_sum_is_permutation_invariant() {
        let mut a = vec![
            Complex64::new(0.1, -0.3),
            Complex64::new(1e16, 0.0),
            Complex64::new(-1e16, 2.0),
            Complex64::new(0.7, 0.77),
        ];
        let mut b = vec![a[2], a[0], a[3], a[1]];
        let sa = canonical_sum(&mut a);
        let sb = canonical_sum(&mut b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn canonical_product_matches_sorted_fold() {
        let x = Complex64::new(0.3, 1.2);
        let y = Complex64::new(-2.0, 0.25);
        let z = Complex64::new(0.3, -9.0);
        let p = canonical_product3(x, y, z);
        let q = canonical_product3(z, x, y);
        assert_eq!(p, q);
        let mut arr = [y, z, x];
        assert_eq!(canonical_product(&mut arr), p);
    }

    #[test]
    fn pairwise_sum_accuracy() {
        let xs: Vec<Complex64> = (0..100_000)
            .map(|i| Complex64::new(1.0 / (i as f64 + 1.0), 0.0))
            .collect();
        let got = pairwise_sum(&xs);
        // harmonic number H_100000
        let mut exact = 0.0f64;
        for i in (0..100_000).rev() {
            exact += 1.0 / (i as f64 + 1.0);
        }
        assert!((got.re - exact).abs() < 1e-10);
    }
}
