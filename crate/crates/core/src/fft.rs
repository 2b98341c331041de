//! Thin FFT layer over `rustfft`: zero-padded linear convolution and
//! grid maxima of modulated averages. Plans are built once per operation and
//! shared across (possibly parallel) inner loops; scratch buffers are
//! per-task.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::numeric::{next_pow2, pairwise_sum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Forward/inverse plan pair of a fixed power-of-two size.
pub(crate) struct ConvPlan {
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Per-task buffers for [`ConvPlan`].
pub(crate) struct ConvScratch {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    fft: Vec<Complex64>,
    terms: Vec<Complex64>,
}

impl ConvPlan {
    /// Plan for linear convolutions whose full output has `out_len` entries.
    pub fn new(out_len: usize) -> Self {
        let size = next_pow2(out_len);
        let mut planner = FftPlanner::new();
        ConvPlan {
            size,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
        }
    }

    pub fn scratch(&self) -> ConvScratch {
        let len = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len());
        ConvScratch {
            a: vec![ZERO; self.size],
            b: vec![ZERO; self.size],
            fft: vec![ZERO; len],
            terms: Vec::new(),
        }
    }

    /// Linear convolution of `u` and `v`, written into `out`
    /// (`out.len() <= u.len() + v.len() - 1` entries of the full result).
    pub fn conv_into(&self, s: &mut ConvScratch, u: &[Complex64], v: &[Complex64], out: &mut Vec<Complex64>, out_len: usize) {
        debug_assert!(u.len() + v.len() - 1 <= self.size);
        s.a[..u.len()].copy_from_slice(u);
        s.a[u.len()..].fill(ZERO);
        s.b[..v.len()].copy_from_slice(v);
        s.b[v.len()..].fill(ZERO);
        self.fwd.process_with_scratch(&mut s.a, &mut s.fft);
        self.fwd.process_with_scratch(&mut s.b, &mut s.fft);
        for (x, y) in s.a.iter_mut().zip(s.b.iter()) {
            *x *= *y;
        }
        self.inv.process_with_scratch(&mut s.a, &mut s.fft);
        // fold the inverse-transform scaling once
        let scale = 1.0 / self.size as f64;
        out.clear();
        out.extend(s.a[..out_len].iter().map(|z| z * scale));
    }

    /// `sum_s (u * v)_s w_s` over the full linear convolution support
    /// (`w.len()` terms), which collapses the double sum
    /// `sum_{n,m} u_n v_m w_{n+m}` to one transform pass.
    pub fn conv_dot(&self, s: &mut ConvScratch, u: &[Complex64], v: &[Complex64], w: &[Complex64]) -> Complex64 {
        debug_assert!(w.len() <= self.size);
        s.a[..u.len()].copy_from_slice(u);
        s.a[u.len()..].fill(ZERO);
        s.b[..v.len()].copy_from_slice(v);
        s.b[v.len()..].fill(ZERO);
        self.fwd.process_with_scratch(&mut s.a, &mut s.fft);
        self.fwd.process_with_scratch(&mut s.b, &mut s.fft);
        for (x, y) in s.a.iter_mut().zip(s.b.iter()) {
            *x *= *y;
        }
        self.inv.process_with_scratch(&mut s.a, &mut s.fft);
        s.terms.clear();
        s.terms
            .extend(s.a[..w.len()].iter().zip(w.iter()).map(|(c, z)| c * z));
        pairwise_sum(&s.terms) / self.size as f64
    }
}

/// Evaluates `max_j |(1/N) sum_{n<N} a_n e^{2 pi i n j / G}|` over the grid
/// `t = j / G`, `G = oversample * next_pow2(N)`, with one zero-padded
/// transform. The transform orientation is chosen so bin `j` sits at
/// `t = j / G` with a positive-frequency modulation.
pub(crate) struct GridMaxPlan {
    n: usize,
    grid: usize,
    inv: Arc<dyn Fft<f64>>,
}

pub(crate) struct GridMaxScratch {
    buf: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl GridMaxPlan {
    pub fn new(n: usize, oversample: usize) -> Self {
        let grid = oversample * next_pow2(n);
        let mut planner = FftPlanner::new();
        GridMaxPlan {
            n,
            grid,
            inv: planner.plan_fft_inverse(grid),
        }
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn scratch(&self) -> GridMaxScratch {
        GridMaxScratch {
            buf: vec![ZERO; self.grid],
            fft: vec![ZERO; self.inv.get_inplace_scratch_len()],
        }
    }

    /// Returns `(sup, argmax_bin)`; ties resolve to the lowest bin.
    pub fn sup(&self, s: &mut GridMaxScratch, seq: &[Complex64]) -> (f64, usize) {
        debug_assert_eq!(seq.len(), self.n);
        s.buf[..seq.len()].copy_from_slice(seq);
        s.buf[seq.len()..].fill(ZERO);
        self.inv.process_with_scratch(&mut s.buf, &mut s.fft);
        let mut best = f64::NEG_INFINITY;
        let mut best_j = 0usize;
        for (j, z) in s.buf.iter().enumerate() {
            let m = z.norm_sqr();
            if m > best {
                best = m;
                best_j = j;
            }
        }
        (best.sqrt() / self.n as f64, best_j)
    }
}
