//! Radial functions sampled on a logarithmic grid.
//!
//! A [`RadialFunction`] stores node values on a [`RadialGrid`], a constant
//! `inner_value` that is blended into the first node on `[0, r_min]`, and a
//! typed [`TailModel`] that describes the function beyond `r_max`. Between
//! nodes the function is a clamped cubic spline in `s = ln r`.

use crate::quad::{adaptive, AdaptiveOptions};
use crate::{Error, Real, Result};

/// Radii `r_i = r_min·exp(i·h)`, `i = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    r_min: T,
    r_max: T,
    h: T,
    nodes: Vec<T>,
}

/// Builds a logarithmic grid with `n` nodes between `r_min` and `r_max`.
pub fn make_log_grid<T: Real>(r_min: T, r_max: T, n: usize) -> Result<RadialGrid<T>> {
    RadialGrid::new(r_min, r_max, n)
}

impl<T: Real> RadialGrid<T> {
    pub fn new(r_min: T, r_max: T, n: usize) -> Result<Self> {
        if !(r_min > T::zero() && r_max.is_finite() && r_min < r_max) {
            return Err(Error::Argument(format!("grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if n < 2 {
            return Err(Error::Argument(format!("grid needs at least two nodes, got {n}")));
        }
        let h = (r_max / r_min).ln() / T::from_usize(n - 1).unwrap();
        let mut nodes: Vec<T> = (0..n).map(|i| r_min * (h * T::from_usize(i).unwrap()).exp()).collect();
        nodes[0] = r_min;
        nodes[n - 1] = r_max;
        Ok(Self { r_min, r_max, h, nodes })
    }

    pub fn r_min(&self) -> T {
        self.r_min
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    /// Spacing in `ln r`.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> T {
        self.nodes[i]
    }

    /// Fractional node index of `r`, `(ln r − ln r_min)/h`.
    pub fn position(&self, r: T) -> T {
        (r / self.r_min).ln() / self.h
    }

    /// Radius at fractional node index `x`; may lie outside the grid.
    pub fn radius_at(&self, x: T) -> T {
        self.r_min * (self.h * x).exp()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.len() == other.len() && self.r_min == other.r_min && self.r_max == other.r_max
    }
}

/// Behaviour of a radial function beyond the last grid node.
///
/// The logarithmic forms use `L(r) = ln r + drift·ln(ln r) + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel<T> {
    /// Unknown; evaluates to zero and contributes nothing to integrals.
    None,
    /// Identically zero.
    Zero,
    /// `c·r^(−p)`.
    Power { coefficient: T, exponent: T },
    /// `c/(r·L(r))`.
    InverseLog { coefficient: T, shift: T, drift: T },
    /// `c·r^(−p)·L(r)^(−q)`.
    PowerLog { coefficient: T, exponent: T, shift: T, drift: T, log_exponent: T },
}

fn log_factor<T: Real>(r: T, shift: T, drift: T) -> T {
    let t = r.ln();
    if drift == T::zero() {
        t + shift
    } else {
        t + drift * t.ln() + shift
    }
}

impl<T: Real> TailModel<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            TailModel::None => "none",
            TailModel::Zero => "zero",
            TailModel::Power { .. } => "power",
            TailModel::InverseLog { .. } => "inverse_log",
            TailModel::PowerLog { .. } => "power_log",
        }
    }

    pub fn coefficient(&self) -> T {
        match *self {
            TailModel::None | TailModel::Zero => T::zero(),
            TailModel::Power { coefficient, .. }
            | TailModel::InverseLog { coefficient, .. }
            | TailModel::PowerLog { coefficient, .. } => coefficient,
        }
    }

    pub fn eval(&self, r: T) -> T {
        match *self {
            TailModel::None | TailModel::Zero => T::zero(),
            TailModel::Power { coefficient, exponent } => coefficient * r.powf(-exponent),
            TailModel::InverseLog { coefficient, shift, drift } => coefficient / (r * log_factor(r, shift, drift)),
            TailModel::PowerLog { coefficient, exponent, shift, drift, log_exponent } => {
                coefficient * r.powf(-exponent) * log_factor(r, shift, drift).powf(-log_exponent)
            }
        }
    }

    /// Multiplies the tail by a constant.
    pub fn scaled(&self, a: T) -> Self {
        let mut t = *self;
        match &mut t {
            TailModel::None | TailModel::Zero => {}
            TailModel::Power { coefficient, .. }
            | TailModel::InverseLog { coefficient, .. }
            | TailModel::PowerLog { coefficient, .. } => *coefficient = *coefficient * a,
        }
        t
    }

    /// Sum of two tails when it has the same form, `None` otherwise.
    pub fn sum(&self, other: &Self) -> Self {
        use TailModel::*;
        match (*self, *other) {
            (Zero, t) | (t, Zero) => t,
            (Power { coefficient: a, exponent: p }, Power { coefficient: b, exponent: q }) if p == q => {
                Power { coefficient: a + b, exponent: p }
            }
            (InverseLog { coefficient: a, shift: s, drift: d }, InverseLog { coefficient: b, shift: t, drift: e })
                if s == t && d == e =>
            {
                InverseLog { coefficient: a + b, shift: s, drift: d }
            }
            (
                PowerLog { coefficient: a, exponent: p, shift: s, drift: d, log_exponent: q },
                PowerLog { coefficient: b, exponent: p2, shift: s2, drift: d2, log_exponent: q2 },
            ) if p == p2 && s == s2 && d == d2 && q == q2 => {
                PowerLog { coefficient: a + b, exponent: p, shift: s, drift: d, log_exponent: q }
            }
            _ => None,
        }
    }

    /// `(c, p, b, d, q)` with the tail equal to `c·r^(−p)·L(r)^(−q)`.
    fn parts(&self) -> Option<(T, T, T, T, T)> {
        let z = T::zero();
        match *self {
            TailModel::None => None,
            TailModel::Zero => Some((z, z, z, z, z)),
            TailModel::Power { coefficient, exponent } => Some((coefficient, exponent, z, z, z)),
            TailModel::InverseLog { coefficient, shift, drift } => {
                Some((coefficient, T::one(), shift, drift, T::one()))
            }
            TailModel::PowerLog { coefficient, exponent, shift, drift, log_exponent } => {
                Some((coefficient, exponent, shift, drift, log_exponent))
            }
        }
    }

    fn from_parts(c: T, p: T, b: T, d: T, q: T) -> Self {
        if c == T::zero() {
            TailModel::Zero
        } else if q == T::zero() {
            TailModel::Power { coefficient: c, exponent: p }
        } else {
            TailModel::PowerLog { coefficient: c, exponent: p, shift: b, drift: d, log_exponent: q }
        }
    }

    /// Tail of the pointwise product, `None` when the log factors differ.
    pub fn product(&self, other: &Self) -> Self {
        match (self.parts(), other.parts()) {
            (Some((c1, ..)), _) | (_, Some((c1, ..))) if c1 == T::zero() => TailModel::Zero,
            (Some((c1, p1, b1, d1, q1)), Some((c2, p2, b2, d2, q2))) => {
                if q1 != T::zero() && q2 != T::zero() && (b1 != b2 || d1 != d2) {
                    return TailModel::None;
                }
                let (b, d) = if q1 != T::zero() { (b1, d1) } else { (b2, d2) };
                Self::from_parts(c1 * c2, p1 + p2, b, d, q1 + q2)
            }
            _ => TailModel::None,
        }
    }

    /// Tail of `a·|f|^e` given the tail of `f`.
    pub fn abs_pow(&self, e: T, a: T) -> Self {
        match self.parts() {
            Some((c, p, b, d, q)) => Self::from_parts(a * c.abs().powf(e), p * e, b, d, q * e),
            None => TailModel::None,
        }
    }

    /// Tail of `sgn(f)·|f|^e` given the tail of `f`.
    pub fn signed_pow(&self, e: T) -> Self {
        match self.parts() {
            Some((c, p, b, d, q)) => Self::from_parts(c.signum() * c.abs().powf(e), p * e, b, d, q * e),
            None => TailModel::None,
        }
    }

    /// `∫_R^∞ tail(r)·r^a dr`.
    pub fn integral_moment(&self, big_r: T, a: i32) -> Result<T> {
        let a1 = T::from_i32(a + 1).unwrap();
        match *self {
            TailModel::None | TailModel::Zero => Ok(T::zero()),
            TailModel::Power { coefficient, exponent } => {
                if exponent > a1 {
                    Ok(coefficient * big_r.powf(a1 - exponent) / (exponent - a1))
                } else {
                    Err(Error::NonIntegrableTail("power"))
                }
            }
            TailModel::InverseLog { .. } => Err(Error::NonIntegrableTail("inverse_log")),
            TailModel::PowerLog { coefficient, exponent, shift, drift, log_exponent } => {
                let big_t = big_r.ln();
                let l = log_factor(big_r, shift, drift);
                if l <= T::zero() || (drift != T::zero() && big_t + drift <= T::zero()) {
                    return Err(Error::Argument(format!("log tail evaluated left of its pole at R = {big_r}")));
                }
                let excess = exponent - a1;
                let opts = AdaptiveOptions { abs_tol: T::zero(), rel_tol: T::lit(1e-13), max_panels: 200 };
                if excess.abs() <= T::lit(1e-12) {
                    if log_exponent <= T::one() {
                        return Err(Error::NonIntegrableTail("power_log"));
                    }
                    if drift == T::zero() {
                        return Ok(coefficient * l.powf(T::one() - log_exponent) / (log_exponent - T::one()));
                    }
                    // ∫_T^∞ L^(−q) dt with t = T/y.
                    let est = adaptive(
                        |y: T| {
                            let t = big_t / y;
                            (l / (t + drift * t.ln() + shift)).powf(log_exponent) / (y * y)
                        },
                        &[T::zero(), T::lit(0.5), T::one()],
                        &opts,
                    )?;
                    Ok(coefficient * big_t * l.powf(-log_exponent) * est.value)
                } else if excess > T::zero() {
                    // r = R·e^x turns the moment into a Laplace-type integral in x.
                    let x_max = T::lit(60.0) / excess;
                    let est = adaptive(
                        |x: T| {
                            let lx = l + x + drift * ((big_t + x) / big_t).ln();
                            (-excess * x).exp() * (lx / l).powf(-log_exponent)
                        },
                        &[T::zero(), x_max / T::lit(8.0), x_max],
                        &opts,
                    )?;
                    Ok(coefficient * big_r.powf(-excess) * l.powf(-log_exponent) * est.value)
                } else {
                    Err(Error::NonIntegrableTail("power_log"))
                }
            }
        }
    }
}

/// Node values of a radial function with its inner extension and tail.
#[derive(Debug, Clone)]
pub struct RadialFunction<T> {
    grid: RadialGrid<T>,
    values: Vec<T>,
    tail: TailModel<T>,
    inner_value: T,
    curvature: Vec<T>,
}

impl<T: Real> RadialFunction<T> {
    /// Wraps node values; the inner value defaults to the first node value.
    pub fn new(grid: RadialGrid<T>, values: Vec<T>, tail: TailModel<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite value at node {i}")));
        }
        let curvature = spline_curvature(&values, grid.h());
        Ok(Self { inner_value: values[0], grid, values, tail, curvature })
    }

    /// Samples `f` at the nodes. No tail is attached.
    pub fn from_fn<F: FnMut(T) -> T>(grid: &RadialGrid<T>, mut f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid.clone(), values, TailModel::None)
    }

    pub fn zeros(grid: &RadialGrid<T>) -> Self {
        Self::new(grid.clone(), vec![T::zero(); grid.len()], TailModel::Zero).expect("zeros are finite")
    }

    pub fn with_tail(mut self, tail: TailModel<T>) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_inner_value(mut self, inner: T) -> Self {
        self.inner_value = inner;
        self
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn tail(&self) -> &TailModel<T> {
        &self.tail
    }

    pub fn inner_value(&self) -> T {
        self.inner_value
    }

    /// Power tail `c·r^(−p)` with `c` chosen to match the last node value.
    pub fn power_tail_at_end(&self, exponent: T) -> TailModel<T> {
        let n = self.values.len();
        TailModel::Power { coefficient: self.values[n - 1] * self.grid.r_max().powf(exponent), exponent }
    }

    /// Power tail whose exponent is the log-slope over the last `span` intervals.
    pub fn fitted_power_tail(&self, span: usize) -> Option<TailModel<T>> {
        let n = self.values.len();
        let span = span.clamp(1, n - 1);
        let (a, b) = (self.values[n - 1 - span], self.values[n - 1]);
        if a == T::zero() || b == T::zero() || (a > T::zero()) != (b > T::zero()) {
            return None;
        }
        let p = -(b / a).ln() / (self.grid.h() * T::from_usize(span).unwrap());
        p.is_finite().then(|| self.power_tail_at_end(p))
    }

    /// Applies `g(r, value)` at every node and to the inner value.
    pub fn map<F: FnMut(T, T) -> T>(&self, tail: TailModel<T>, mut g: F) -> Result<Self> {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&r, &v)| g(r, v)).collect();
        let inner = g(T::zero(), self.inner_value);
        Ok(Self::new(self.grid.clone(), values, tail)?.with_inner_value(inner))
    }

    /// `a·self + b·other`, including inner values and tails.
    pub fn linear_combination(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect();
        let tail = self.tail.scaled(a).sum(&other.tail.scaled(b));
        Ok(Self::new(self.grid.clone(), values, tail)?.with_inner_value(a * self.inner_value + b * other.inner_value))
    }

    /// Value at fractional node index `x`, with the inner and tail extensions.
    pub fn eval_position(&self, x: T) -> T {
        let n = self.values.len();
        if x <= T::zero() {
            if x == T::zero() {
                return self.values[0];
            }
            let q = (T::lit(2.0) * self.grid.h() * x).exp();
            return self.inner_value + (self.values[0] - self.inner_value) * q;
        }
        let last = T::from_usize(n - 1).unwrap();
        if x >= last {
            if x == last {
                return self.values[n - 1];
            }
            return self.tail.eval(self.grid.radius_at(x));
        }
        let nearest = x.round();
        if (x - nearest).abs() <= T::epsilon() * T::lit(64.0) * (T::one() + x) {
            return self.values[nearest.to_usize().unwrap()];
        }
        let i = x.floor().to_usize().unwrap().min(n - 2);
        let t = x - T::from_usize(i).unwrap();
        let b = t;
        let a = T::one() - t;
        let h2 = self.grid.h() * self.grid.h() / T::lit(6.0);
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.curvature[i] + (b * b * b - b) * self.curvature[i + 1]) * h2
    }

    pub fn eval(&self, r: T) -> T {
        if r <= T::zero() {
            return self.inner_value;
        }
        if r < self.grid.r_min() {
            let q = r / self.grid.r_min();
            return self.inner_value + (self.values[0] - self.inner_value) * q * q;
        }
        self.eval_position(self.grid.position(r))
    }
}

/// Second derivatives in `s = ln r` of the interpolating cubic spline.
///
/// Clamped ends with slopes from five-point one-sided differences; a natural
/// spline is used on grids too short for that stencil.
fn spline_curvature<T: Real>(y: &[T], h: T) -> Vec<T> {
    let n = y.len();
    if n < 3 {
        return vec![T::zero(); n];
    }
    let six = T::lit(6.0);
    let mut diag = vec![T::lit(4.0); n];
    let mut rhs = vec![T::zero(); n];
    for i in 1..n - 1 {
        rhs[i] = six * (y[i + 1] - y[i] * T::lit(2.0) + y[i - 1]) / (h * h);
    }
    let (mut upper0, mut lower_last) = (T::one(), T::one());
    if n >= 5 {
        let c = [-25.0, 48.0, -36.0, 16.0, -3.0];
        let d0 = c.iter().enumerate().fold(T::zero(), |acc, (k, &ck)| acc + T::lit(ck) * y[k]) / (T::lit(12.0) * h);
        let dn =
            -c.iter().enumerate().fold(T::zero(), |acc, (k, &ck)| acc + T::lit(ck) * y[n - 1 - k]) / (T::lit(12.0) * h);
        diag[0] = T::lit(2.0);
        rhs[0] = six * ((y[1] - y[0]) / h - d0) / h;
        diag[n - 1] = T::lit(2.0);
        rhs[n - 1] = six * (dn - (y[n - 1] - y[n - 2]) / h) / h;
    } else {
        diag[0] = T::one();
        diag[n - 1] = T::one();
        upper0 = T::zero();
        lower_last = T::zero();
    }
    // Thomas algorithm; sub- and super-diagonals are 1 except the end rows.
    let mut c_prime = vec![T::zero(); n];
    let mut d_prime = vec![T::zero(); n];
    c_prime[0] = upper0 / diag[0];
    d_prime[0] = rhs[0] / diag[0];
    for i in 1..n {
        let lower = if i == n - 1 { lower_last } else { T::one() };
        let denom = diag[i] - lower * c_prime[i - 1];
        c_prime[i] = if i < n - 1 { T::one() / denom } else { T::zero() };
        d_prime[i] = (rhs[i] - lower * d_prime[i - 1]) / denom;
    }
    let mut m = vec![T::zero(); n];
    m[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

/// Evaluates `f` at `r > 0`.
pub fn interpolate<T: Real>(f: &RadialFunction<T>, r: T) -> T {
    f.eval(r)
}

/// `2π ∫_0^∞ f(r) r dr`: inner disc, Simpson in `ln r` over the nodes and the
/// closed-form tail beyond `r_max`.
pub fn integrate_radial<T: Real>(f: &RadialFunction<T>) -> Result<T> {
    let two_pi = T::PI() * T::lit(2.0);
    let grid = f.grid();
    let rmin2 = grid.r_min() * grid.r_min();
    let inner = rmin2 * (f.inner_value() + f.values()[0]) / T::lit(4.0);
    let weighted: Vec<T> = grid.nodes().iter().zip(f.values()).map(|(&r, &v)| v * r * r).collect();
    let body = simpson_uniform(&weighted, grid.h());
    let tail = f.tail().integral_moment(grid.r_max(), 1)?;
    Ok(two_pi * (inner + body + tail))
}

/// Composite Simpson rule on uniformly spaced samples; the last three
/// intervals use the 3/8 rule when the interval count is odd.
pub(crate) fn simpson_uniform<T: Real>(y: &[T], h: T) -> T {
    let n = y.len();
    match n {
        0 | 1 => T::zero(),
        2 => (y[0] + y[1]) * h / T::lit(2.0),
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
            let mut acc = T::zero();
            let mut i = 0;
            while i + 2 <= simpson_end {
                acc = acc + (y[i] + T::lit(4.0) * y[i + 1] + y[i + 2]) * h / T::lit(3.0);
                i += 2;
            }
            if simpson_end != n - 1 {
                let j = simpson_end;
                acc = acc + (y[j] + T::lit(3.0) * (y[j + 1] + y[j + 2]) + y[j + 3]) * h * T::lit(3.0) / T::lit(8.0);
            }
            acc
        }
    }
}

/// `d ln f / d ln r` by a centered difference over one grid spacing.
pub fn local_log_slope<T: Real>(f: &RadialFunction<T>, r: T) -> Result<T> {
    let grid = f.grid();
    let h = grid.h();
    let x = grid.position(r);
    let last = T::from_usize(grid.len() - 1).unwrap();
    if !(x >= T::one() && x <= last - T::one()) {
        return Err(Error::Boundary { r: r.as_f64(), r_min: grid.r_min().as_f64(), r_max: grid.r_max().as_f64() });
    }
    let (lo, hi) = (f.eval_position(x - T::one()), f.eval_position(x + T::one()));
    for (rr, v) in [(r / h.exp(), lo), (r * h.exp(), hi)] {
        if v <= T::zero() {
            return Err(Error::Positivity { r: rr.as_f64(), value: v.as_f64() });
        }
    }
    Ok((hi.ln() - lo.ln()) / (T::lit(2.0) * h))
}
