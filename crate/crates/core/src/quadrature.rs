//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The integrands in this crate are oscillatory (`ω cos ωτ` over the bath
//! band, `sin Ωτ/τ` over lag time), so every entry point accepts explicit
//! breakpoints and [`oscillation_breakpoints`] produces the half-period
//! splits that keep each panel free of sign changes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Published 15-point Kronrod nodes and weights, kept at full printed precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Requested accuracy: the run stops once the error estimate is below
/// `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-13, 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

/// One 15-point Kronrod panel with the QUADPACK error rescaling.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for (j, wg) in WG.iter().enumerate().take(3) {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_gauss += wg * (f1 + f2);
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let x = half * XGK[jtwm1];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_kronrod += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = ((res_kronrod - res_gauss) * half).abs();
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    (res_kronrod * half, rescale_error(err, res_abs, res_asc))
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err;
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult> {
    integrate_with_breakpoints(f, &[a, b], tol, 20_000)
}

/// Hard limit on the number of panels of one adaptive integration, whatever
/// budget the caller asks for (bounds memory at a few hundred MB).
pub const MAX_PANELS: usize = 4_000_000;

/// Adaptive integration over the union of the panels delimited by
/// `breakpoints` (sorted, at least two entries). The panel with the largest
/// error estimate is bisected until the global estimate meets `tol` or the
/// panel budget `max_panels` is spent.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    tol: Tolerance,
    max_panels: usize,
) -> Result<QuadResult> {
    if breakpoints.len() < 2 {
        return Err(Error::domain("quadrature needs at least two breakpoints"));
    }
    if breakpoints.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("quadrature breakpoints must be finite"));
    }
    if breakpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("quadrature breakpoints must be sorted"));
    }

    let mut heap = BinaryHeap::with_capacity(breakpoints.len().max(16));
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gauss_kronrod_15(&f, w[0], w[1]);
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    if heap.is_empty() {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }

    let max_panels = max_panels.min(MAX_PANELS).max(heap.len());
    // Running totals keep each bisection O(log n); they are refreshed from
    // the heap once per heap-size worth of steps and before returning.
    let (mut value, mut error) = totals(&heap);
    let mut since_refresh = 0;
    loop {
        if !value.is_finite() || error <= tol.target(value) {
            (value, error) = totals(&heap);
            since_refresh = 0;
            if !value.is_finite() {
                return Err(Error::numeric(
                    "integrand produced a non-finite value",
                    f64::INFINITY,
                ));
            }
            if error <= tol.target(value) {
                return Ok(QuadResult {
                    value,
                    abs_error: error,
                    intervals: heap.len(),
                });
            }
        }
        if heap.len() >= max_panels {
            let (_, error) = totals(&heap);
            return Err(Error::numeric(
                format!("adaptive quadrature exhausted {max_panels} panels"),
                error,
            ));
        }

        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let (_, error) = totals(&heap);
            return Err(Error::numeric(
                "panel width reached floating-point resolution",
                error,
            ));
        }
        let (v1, e1) = gauss_kronrod_15(&f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_15(&f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        since_refresh += 1;
        if since_refresh >= heap.len() {
            (value, error) = totals(&heap);
            since_refresh = 0;
        }
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut value = NeumaierSum::default();
    let mut error = 0.0;
    for p in heap.iter() {
        value.add(p.value);
        error += p.error;
    }
    (value.total(), error)
}

/// Breakpoints `a, a + s, a + 2s, ..., b` for a panel spacing `s`.
///
/// With `s = π/τ` for an integrand `g(ω) cos ωτ` the panels follow the zeros
/// of the oscillatory factor. A non-positive or non-finite spacing yields the
/// bare interval.
pub fn oscillation_breakpoints(a: f64, b: f64, spacing: f64) -> Vec<f64> {
    if !(spacing > 0.0) || !spacing.is_finite() || b <= a {
        return vec![a, b];
    }
    let count = ((b - a) / spacing).floor();
    if count > 5.0e6 {
        return vec![a, b];
    }
    let count = count as usize;
    let mut points = Vec::with_capacity(count + 2);
    for k in 0..=count {
        let x = a + k as f64 * spacing;
        if x < b {
            points.push(x);
        }
    }
    points.push(b);
    points
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let (v, _) = gauss_kronrod_15(&|x: f64| x.powi(6) - 3.0 * x * x, 0.0, 2.0);
        let exact = 2f64.powi(7) / 7.0 - 8.0;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn sine_over_many_periods() {
        let bp = oscillation_breakpoints(0.0, 200.0 * PI, PI);
        let r = integrate_with_breakpoints(
            |x: f64| x.sin() * (-0.01 * x).exp(),
            &bp,
            Tolerance::default(),
            50_000,
        )
        .unwrap();
        let exact = (1.0 - (-0.01f64 * 200.0 * PI).exp()) / (1.0 + 1e-4);
        assert!((r.value - exact).abs() < 1e-12, "{} vs {exact}", r.value);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫₀¹ x^{-1/2} = 2
        let r = integrate(
            |x: f64| if x > 0.0 { x.powf(-0.5) } else { 0.0 },
            0.0,
            1.0,
            Tolerance::new(1e-9, 1e-9),
        )
        .unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn budget_exhaustion_reports_achieved_tolerance() {
        let err = integrate_with_breakpoints(
            |x: f64| (1.0 / x).sin() / x,
            &[1e-6, 1.0],
            Tolerance::new(1e-15, 0.0),
            8,
        )
        .unwrap_err();
        match err {
            Error::Numeric { achieved, .. } => assert!(achieved > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn breakpoints_cover_interval() {
        let bp = oscillation_breakpoints(0.0, 1.0, 0.3);
        assert_eq!(bp, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert_eq!(oscillation_breakpoints(0.0, 1.0, 0.0), vec![0.0, 1.0]);
    }

    #[test]
    fn compensated_sum() {
        let mut s = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.total(), 2.0);
    }
}
