//! FFT-backed discrete convolutions.
//!
//! [`linear_convolution`] is the plain full-length product. [`causal_online`]
//! solves the "history sum" problem of Volterra integrators, where sample `n`
//! of the signal only becomes known after the convolution of the kernel with
//! samples `0..n` has been handed to the stepper. It uses the usual
//! divide-and-conquer split: the left half of every block is finished first,
//! its contribution to the right half is added with one FFT product, and the
//! right half is then solved recursively. Cost is O(N log² N).

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Below this product size the direct double loop is faster than the FFT.
const DIRECT_LIMIT: usize = 64 * 64;

/// Leaf size of the divide-and-conquer recursion.
const LEAF: usize = 64;

/// Full linear convolution, length `a.len() + b.len() - 1` (empty if either
/// input is empty).
pub fn linear_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().saturating_mul(b.len()) <= DIRECT_LIMIT {
        return direct_convolution(a, b);
    }
    // Keep an identically zero operand exact; the packed FFT would leave
    // roundoff-level residue.
    if a.iter().all(|&x| x == 0.0) || b.iter().all(|&x| x == 0.0) {
        return vec![0.0; a.len() + b.len() - 1];
    }
    let mut planner = FftPlanner::new();
    fft_convolution(&mut planner, a, b, a.len() + b.len() - 1)
}

fn direct_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// First `out_len` samples of `a * b` via a zero-padded complex FFT.
fn fft_convolution(
    planner: &mut FftPlanner<f64>,
    a: &[f64],
    b: &[f64],
    out_len: usize,
) -> Vec<f64> {
    let size = (a.len() + b.len() - 1).next_power_of_two();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    // Pack a into the real part and b into the imaginary part: one forward
    // transform serves both.
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (slot, &x) in buf.iter_mut().zip(a) {
        slot.re = x;
    }
    for (slot, &y) in buf.iter_mut().zip(b) {
        slot.im = y;
    }
    fft.process(&mut buf);

    let mut prod = vec![Complex64::new(0.0, 0.0); size];
    for k in 0..size {
        let z = buf[k];
        let zc = buf[(size - k) % size].conj();
        let fa = (z + zc) * 0.5;
        let fb = (z - zc) * Complex64::new(0.0, -0.5);
        prod[k] = fa * fb;
    }
    ifft.process(&mut prod);

    let norm = 1.0 / size as f64;
    prod.iter().take(out_len).map(|z| z.re * norm).collect()
}

/// Online causal convolution.
///
/// For `n = 0..len` the stepper is called as `step(n, history)` with
/// `history = Σ_{j<n} kernel[n - j] · x[j]` and returns `x[n]`. `kernel`
/// must hold at least `len` samples; `kernel[0]` is never used. Returns the
/// produced sequence `x`.
pub fn causal_online<F>(kernel: &[f64], len: usize, mut step: F) -> Vec<f64>
where
    F: FnMut(usize, f64) -> f64,
{
    assert!(
        kernel.len() >= len,
        "kernel shorter than the requested sequence"
    );
    let mut state = Online {
        kernel,
        acc: vec![0.0; len],
        x: vec![0.0; len],
        planner: FftPlanner::new(),
    };
    state.solve(0, len, &mut step);
    state.x
}

struct Online<'k> {
    kernel: &'k [f64],
    acc: Vec<f64>,
    x: Vec<f64>,
    planner: FftPlanner<f64>,
}

impl Online<'_> {
    fn solve<F: FnMut(usize, f64) -> f64>(&mut self, lo: usize, hi: usize, step: &mut F) {
        if hi - lo <= LEAF {
            for i in lo..hi {
                let mut history = self.acc[i];
                for j in lo..i {
                    history += self.kernel[i - j] * self.x[j];
                }
                self.x[i] = step(i, history);
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.solve(lo, mid, step);

        // Contribution of x[lo..mid) to acc[mid..hi).
        let block = &self.x[lo..mid];
        let kern = &self.kernel[..hi - lo];
        let conv = if block.len() * kern.len() <= DIRECT_LIMIT {
            direct_convolution(block, kern)
        } else {
            fft_convolution(&mut self.planner, block, kern, hi - lo)
        };
        for i in mid..hi {
            self.acc[i] += conv[i - lo];
        }

        self.solve(mid, hi, step);
    }
}
