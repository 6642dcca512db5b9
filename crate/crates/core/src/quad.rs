//! Quadrature rules: fixed Gauss–Legendre, adaptive Gauss–Kronrod (7/15) with a
//! global panel queue, and tanh–sinh for integrands with an endpoint singularity.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Real, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton in f64.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

/// Fixed Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_fixed<T: Real, F: FnMut(T) -> T>(rule: &(Vec<T>, Vec<T>), a: T, b: T, mut f: F) -> T {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    rule.0.iter().zip(&rule.1).fold(T::zero(), |acc, (&x, &w)| acc + w * f(mid + half * x)) * half
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Kronrod panel: `(estimate, error)`.
pub fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let fc = f(mid);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        kron = kron + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_panels: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate<T> {
    pub value: T,
    pub error: T,
    pub panels: usize,
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    seq: usize,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Globally adaptive Gauss–Kronrod quadrature over a union of initial panels.
///
/// The panel with the largest error estimate is bisected until the summed
/// error is below `max(abs_tol, rel_tol·|I|)`. Panel order is deterministic.
pub fn adaptive<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    breakpoints: &[T],
    opts: &AdaptiveOptions<T>,
) -> Result<QuadEstimate<T>> {
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let (mut total, mut err) = (T::zero(), T::zero());
    for w in breakpoints.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        total = total + v;
        err = err + e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e, seq });
        seq += 1;
    }
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target {
            return Ok(QuadEstimate { value: total, error: err, panels: heap.len() });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::ToleranceNotMet {
                estimate: total.as_f64(),
                error: err.as_f64(),
                requested: target.as_f64(),
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let m = (worst.a + worst.b) * T::lit(0.5);
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        total = total - worst.value + v1 + v2;
        err = err - worst.error + e1 + e2;
        // Guard against drift of the running error sum.
        if err < T::zero() {
            err = heap.iter().fold(e1 + e2, |acc, p| acc + p.error);
        }
        heap.push(Panel { a: worst.a, b: m, value: v1, error: e1, seq });
        heap.push(Panel { a: m, b: worst.b, value: v2, error: e2, seq: seq + 1 });
        seq += 2;
    }
}

/// Tanh–sinh rule for `∫_0^len f(d) dd` where `f` may have an integrable
/// singularity at `d = 0`. The integrand receives the distance `d` from the
/// singular endpoint so no precision is lost near it.
pub fn tanh_sinh_left<T: Real, F: FnMut(T) -> T>(mut f: F, len: T, step: T) -> T {
    let half_pi = T::FRAC_PI_2();
    let two = T::lit(2.0);
    let u_max = T::lit(4.0);
    let n = (u_max / step).ceil().to_usize().unwrap_or(0);
    let mut acc = T::zero();
    for k in 0..=2 * n {
        let u = step * (T::from_usize(k).unwrap() - T::from_usize(n).unwrap());
        let v = half_pi * u.sinh();
        let e = (-two * v).exp();
        if !e.is_finite() {
            continue;
        }
        let d = len / (T::one() + e);
        if d <= T::zero() {
            continue;
        }
        let cv = v.cosh();
        let w = len * T::lit(0.5) * half_pi * u.cosh() / (cv * cv);
        if w == T::zero() {
            continue;
        }
        acc = acc + w * f(d);
    }
    acc * step
}
