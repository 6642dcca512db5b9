//! Coulomb potential of a radial density in the plane,
//! `U_f(x) = (1/2π) ∫ f(y)/|x−y| d²y = ∫_0^∞ f(r′) w(r, r′) dr′` with
//! `w(r, r′) = (2/π)·r′/(r+r′)·K(2√(rr′)/(r+r′))`.
//!
//! With `r = e^t`, `r′ = e^s` and `g(s) = r′ f(r′)` the potential becomes the
//! convolution `U(e^t) = ∫ g(s) W(s−t) ds`, `W(σ) = (2/π)K(sech(σ/2))/(1+e^{−σ})`.
//! On the uniform `s` grid, `g` is replaced by its piecewise cubic Lagrange
//! interpolant and the products with `W` are integrated exactly up to
//! quadrature round-off. The resulting weights depend only on the node offset,
//! so the operator on the nodes is Toeplitz. The logarithmic singularity of
//! `W` at `σ = 0` is handled by tanh–sinh panels that end on it.
//!
//! Values below `r_min` follow the inner extension of the density; values
//! beyond `r_max` follow its tail model, and the far remainder where `W ≡ 1`
//! to double precision is integrated in closed form.

use rayon::prelude::*;

use crate::quad::{adaptive, gauss_legendre, gauss_legendre_fixed, tanh_sinh_left, AdaptiveOptions};
use crate::radial::{integrate_radial, RadialFunction, RadialGrid, TailModel};
use crate::specfun::elliptic_k_complement;
use crate::{Error, Real, Result};

/// Extent of the ghost regions below `r_min` and above `r_max`, in e-folds.
const LOWER_SPAN: f64 = 38.0;
const UPPER_SPAN: f64 = 30.0;

#[derive(Debug, Clone, Copy)]
pub struct RieszQuadConfig<T> {
    /// Panels closer than this many grid spacings to the kernel singularity
    /// are integrated adaptively.
    pub singular_halfwidth: usize,
    pub abs_tol: T,
    pub rel_tol: T,
}

impl<T: Real> Default for RieszQuadConfig<T> {
    fn default() -> Self {
        Self { singular_halfwidth: 2, abs_tol: T::lit(1e-16), rel_tol: T::lit(1e-13) }
    }
}

/// `w(r, r′)`, the weight multiplying `f(r′) dr′`.
pub fn riesz_kernel_weight<T: Real>(r: T, rp: T) -> Result<T> {
    if !(r > T::zero() && rp > T::zero()) {
        return Err(Error::Domain {
            function: "riesz_kernel_weight", value: r.min(rp).as_f64(), domain: "r, r′ > 0"
        });
    }
    if r == rp {
        return Err(Error::Singularity { function: "riesz_kernel_weight", value: r.as_f64() });
    }
    let kp = (r - rp).abs() / (r + rp);
    Ok(T::FRAC_2_PI() * rp / (r + rp) * elliptic_k_complement(kp)?)
}

/// `W(σ)` for `σ ≠ 0`.
fn log_kernel<T: Real>(sigma: T) -> T {
    let kp = (sigma.abs() * T::lit(0.5)).tanh();
    let k = elliptic_k_complement(kp).unwrap_or_else(|_| T::infinity());
    T::FRAC_2_PI() * k / (T::one() + (-sigma).exp())
}

/// Cardinal function of four-point Lagrange interpolation on unit spacing.
fn lagrange_cardinal<T: Real>(x: T) -> T {
    let a = x.abs();
    let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
    if a <= one {
        (one - a) * (one + a) * (two - a) / two
    } else if a <= two {
        (one - a) * (two - a) * (three - a) / T::lit(6.0)
    } else {
        T::zero()
    }
}

struct WeightRule<T> {
    gl: (Vec<T>, Vec<T>),
    h: T,
    cfg: RieszQuadConfig<T>,
}

impl<T: Real> WeightRule<T> {
    fn new(h: T, cfg: RieszQuadConfig<T>) -> Self {
        Self { gl: gauss_legendre(16), h, cfg }
    }

    /// `h ∫_{−2}^{2} ℓ(x) W((c + x)h) dx`: weight of a node at offset `c`
    /// (in grid spacings) from the evaluation point.
    fn weight(&self, c: T) -> Result<T> {
        let h = self.h;
        let singular = -c;
        let mut cuts = vec![T::lit(-2.0), -T::one(), T::zero(), T::one(), T::lit(2.0)];
        if singular > cuts[0] && singular < cuts[4] && !cuts.contains(&singular) {
            cuts.push(singular);
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let near = T::from_usize(self.cfg.singular_halfwidth).unwrap();
        let step = T::lit(1.0 / 32.0);
        let mut acc = T::zero();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == singular {
                acc = acc + tanh_sinh_left(|d| lagrange_cardinal(a + d) * log_kernel(d * h), b - a, step);
            } else if b == singular {
                acc = acc + tanh_sinh_left(|d| lagrange_cardinal(b - d) * log_kernel(-d * h), b - a, step);
            } else {
                let f = |x: T| lagrange_cardinal(x) * log_kernel((c + x) * h);
                let dist = (singular - a).abs().min((singular - b).abs());
                if dist < near {
                    let opts =
                        AdaptiveOptions { abs_tol: self.cfg.abs_tol, rel_tol: self.cfg.rel_tol, max_panels: 400 };
                    acc = acc + adaptive(f, &[a, b], &opts)?.value;
                } else {
                    acc = acc + gauss_legendre_fixed(&self.gl, a, b, f);
                }
            }
        }
        Ok(acc * h)
    }
}

/// `r·f(r)` at every grid index `j ∈ [lo, hi]`, using the inner extension
/// below the grid and the tail model above it.
fn extended_moments<T: Real>(f: &RadialFunction<T>, lo: isize, hi: isize) -> Vec<T> {
    let grid = f.grid();
    let n = grid.len() as isize;
    let (inner, v0) = (f.inner_value(), f.values()[0]);
    (lo..=hi)
        .map(|j| {
            let x = T::from_isize(j).unwrap();
            let r = grid.radius_at(x);
            let v = if j < 0 {
                inner + (v0 - inner) * (T::lit(2.0) * grid.h() * x).exp()
            } else if j < n {
                f.values()[j as usize]
            } else {
                f.tail().eval(r)
            };
            r * v
        })
        .collect()
}

/// Remainder `∫_{R}^∞ f dr′` beyond the last ghost node, where the kernel is 1.
fn far_remainder<T: Real>(tail: &TailModel<T>, big_r: T) -> Result<T> {
    tail.integral_moment(big_r, 0)
}

/// Coulomb operator on the nodes of a fixed grid, with cached weights.
#[derive(Debug, Clone)]
pub struct RieszOperator<T> {
    grid: RadialGrid<T>,
    lower: usize,
    upper: usize,
    weights: Vec<T>,
    inner_flat: Vec<T>,
    inner_blend: Vec<T>,
    cfg: RieszQuadConfig<T>,
}

impl<T: Real> RieszOperator<T> {
    pub fn new(grid: &RadialGrid<T>, cfg: RieszQuadConfig<T>) -> Result<Self> {
        let n = grid.len();
        let h = grid.h();
        let lower = (T::lit(LOWER_SPAN) / h).ceil().to_usize().unwrap() + 2;
        let upper = (T::lit(UPPER_SPAN) / h).ceil().to_usize().unwrap() + 2;
        let rule = WeightRule::new(h, cfg);
        let m_lo = -((n - 1 + lower) as isize);
        let m_hi = (n - 1 + upper) as isize;
        let weights = (m_lo..=m_hi)
            .into_par_iter()
            .map(|m| rule.weight(T::from_isize(m).unwrap()))
            .collect::<Result<Vec<T>>>()?;
        let mut op = Self { grid: grid.clone(), lower, upper, weights, inner_flat: vec![], inner_blend: vec![], cfg };
        let (flat, blend): (Vec<T>, Vec<T>) = (0..n as isize)
            .map(|i| {
                (1..=lower as isize).fold((T::zero(), T::zero()), |(a, b), k| {
                    let x = T::from_isize(-k).unwrap();
                    let r = grid.radius_at(x);
                    let w = op.weight(-k - i);
                    (a + r * w, b + r * (T::lit(2.0) * h * x).exp() * w)
                })
            })
            .unzip();
        op.inner_flat = flat;
        op.inner_blend = blend;
        Ok(op)
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn config(&self) -> &RieszQuadConfig<T> {
        &self.cfg
    }

    /// Weight of the node at index offset `m` from the evaluation node.
    pub fn weight(&self, m: isize) -> T {
        self.weights[(m + (self.grid.len() - 1 + self.lower) as isize) as usize]
    }

    fn check(&self, f: &RadialFunction<T>) -> Result<()> {
        if self.grid.same_as(f.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Potential at every node. The result carries `U(0)` as its inner
    /// value and a `1/r` tail matched at `r_max`.
    pub fn apply(&self, f: &RadialFunction<T>) -> Result<RadialFunction<T>> {
        self.check(f)?;
        let n = self.grid.len();
        let top = (n - 1 + self.upper) as isize;
        let ghosts = extended_moments(f, n as isize, top);
        let rem = far_remainder(f.tail(), self.grid.radius_at(T::from_isize(top).unwrap()))?;
        let moments: Vec<T> = self.grid.nodes().iter().zip(f.values()).map(|(&r, &v)| r * v).collect();
        let (inner, v0) = (f.inner_value(), f.values()[0]);
        let values: Vec<T> = (0..n)
            .into_par_iter()
            .map(|i| {
                let ii = i as isize;
                let body =
                    moments.iter().enumerate().fold(T::zero(), |acc, (j, &g)| acc + g * self.weight(j as isize - ii));
                let far = ghosts
                    .iter()
                    .enumerate()
                    .fold(T::zero(), |acc, (k, &g)| acc + g * self.weight((n + k) as isize - ii));
                body + far + inner * self.inner_flat[i] + (v0 - inner) * self.inner_blend[i] + rem
            })
            .collect();
        let origin = self.origin(f)?;
        let r_max = self.grid.r_max();
        let tail = TailModel::Power { coefficient: values[n - 1] * r_max, exponent: T::one() };
        Ok(RadialFunction::new(self.grid.clone(), values, tail)?.with_inner_value(origin))
    }

    /// `U(0) = ∫_0^∞ f dr′`.
    pub fn origin(&self, f: &RadialFunction<T>) -> Result<T> {
        self.check(f)?;
        potential_at_origin(f, self.lower, self.upper)
    }

    /// Potential at an arbitrary radius `r ≥ 0`.
    pub fn eval(&self, f: &RadialFunction<T>, r: T) -> Result<T> {
        self.check(f)?;
        let x = self.grid.position(r);
        let nearest = x.round();
        if (x - nearest).abs() <= T::epsilon() * T::lit(16.0) * (T::one() + x.abs())
            && nearest >= T::zero()
            && nearest <= T::from_usize(self.grid.len() - 1).unwrap()
        {
            let i = nearest.to_usize().unwrap();
            let top = (self.grid.len() - 1 + self.upper) as isize;
            let g = extended_moments(f, -(self.lower as isize), top);
            let lo = -(self.lower as isize);
            let sum = g
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (k, &gj)| acc + gj * self.weight(lo + k as isize - i as isize));
            return Ok(sum + far_remainder(f.tail(), self.grid.radius_at(T::from_isize(top).unwrap()))?);
        }
        potential_off_node(f, r, &self.cfg)
    }

    /// Dense node-to-node matrix `M` with `U = M·f + (ghost terms)` when the
    /// inner value of `f` equals its first node value.
    pub fn matrix(&self) -> Vec<T> {
        let n = self.grid.len();
        let mut m = vec![T::zero(); n * n];
        m.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = self.grid.node(j) * self.weight(j as isize - i as isize);
            }
            row[0] = row[0] + self.inner_flat[i];
        });
        m
    }
}

fn potential_at_origin<T: Real>(f: &RadialFunction<T>, lower: usize, upper: usize) -> Result<T> {
    let grid = f.grid();
    let top = (grid.len() - 1 + upper) as isize;
    let g = extended_moments(f, -(lower as isize), top);
    let sum: T = g.iter().copied().sum();
    Ok(sum * grid.h() + far_remainder(f.tail(), grid.radius_at(T::from_isize(top).unwrap()))?)
}

fn potential_off_node<T: Real>(f: &RadialFunction<T>, r: T, cfg: &RieszQuadConfig<T>) -> Result<T> {
    let grid = f.grid();
    let h = grid.h();
    let lower = (T::lit(LOWER_SPAN) / h).ceil().to_usize().unwrap() + 2;
    let upper = (T::lit(UPPER_SPAN) / h).ceil().to_usize().unwrap() + 2;
    if r <= T::zero() {
        return potential_at_origin(f, lower, upper);
    }
    if r < grid.r_min() {
        let u0 = potential_at_origin(f, lower, upper)?;
        let u1 = potential_off_node(f, grid.r_min(), cfg)?;
        let q = r / grid.r_min();
        return Ok(u0 + (u1 - u0) * q * q);
    }
    let x = grid.position(r);
    let last = T::from_usize(grid.len() - 1).unwrap();
    let beyond = (x - last).max(T::zero()).ceil().to_usize().unwrap();
    let lo = -(lower as isize);
    let top = (grid.len() - 1 + upper + beyond) as isize;
    let g = extended_moments(f, lo, top);
    let rule = WeightRule::new(h, *cfg);
    let parts = g
        .par_iter()
        .enumerate()
        .map(|(k, &gj)| {
            if gj == T::zero() {
                return Ok(T::zero());
            }
            let c = T::from_isize(lo + k as isize).unwrap() - x;
            Ok(gj * rule.weight(c)?)
        })
        .collect::<Result<Vec<T>>>()?;
    let sum: T = parts.into_iter().sum();
    Ok(sum + far_remainder(f.tail(), grid.radius_at(T::from_isize(top).unwrap()))?)
}

/// `U_f(r)` at a single radius.
pub fn riesz_potential<T: Real>(f: &RadialFunction<T>, r: T, cfg: &RieszQuadConfig<T>) -> Result<T> {
    potential_off_node(f, r, cfg)
}

/// `2π ∫_0^∞ f(r) r dr`.
pub fn total_charge<T: Real>(f: &RadialFunction<T>) -> Result<T> {
    integrate_radial(f)
}

/// `2πr·U_f(r) − ∫f`, which vanishes as `r → ∞` for admissible densities.
pub fn newton_remainder<T: Real>(f: &RadialFunction<T>, r: T) -> Result<T> {
    let u = riesz_potential(f, r, &RieszQuadConfig::default())?;
    Ok(T::TAU() * r * u - total_charge(f)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::make_log_grid;
    use crate::specfun::elliptic_k;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn dipole_density(grid: &RadialGrid<f64>) -> RadialFunction<f64> {
        let f = RadialFunction::from_fn(grid, |r| (1.0 + r * r).powf(-1.5) / (2.0 * PI)).unwrap();
        let tail = f.power_tail_at_end(3.0);
        f.with_tail(tail)
    }

    fn bump(r: f64) -> f64 {
        if r < 1.0 {
            (1.0 - r * r).powi(4)
        } else {
            0.0
        }
    }

    fn bump_density(grid: &RadialGrid<f64>) -> RadialFunction<f64> {
        RadialFunction::from_fn(grid, bump).unwrap().with_tail(TailModel::Zero)
    }

    /// Potential of the bump by direct 2D quadrature in polar coordinates;
    /// the target lies far outside the support so the integrand is smooth.
    fn bump_potential_direct(x: f64) -> f64 {
        let rule = crate::quad::gauss_legendre::<f64>(48);
        gauss_legendre_fixed(&rule, 0.0, 1.0, |r| {
            let ang = gauss_legendre_fixed(&rule, 0.0, PI, |th| 1.0 / (x * x + r * r - 2.0 * x * r * th.cos()).sqrt());
            bump(r) * r * 2.0 * ang
        }) / (2.0 * PI)
    }

    #[test]
    fn kernel_weight_examples() {
        assert!(matches!(riesz_kernel_weight(2.0, 2.0), Err(Error::Singularity { .. })));
        let w = riesz_kernel_weight(1.0, 1e-9).unwrap();
        assert_relative_eq!(w, 1e-9, max_relative = 1e-8);
        let expected = 2.0 / PI * 0.8 * elliptic_k(0.8).unwrap();
        assert_relative_eq!(riesz_kernel_weight(1.0, 4.0).unwrap(), expected, max_relative = 1e-14);
        // Symmetry: w(r, r′)/r′ = w(r′, r)/r
        let (a, b) = (0.7, 3.1);
        assert_relative_eq!(
            riesz_kernel_weight(a, b).unwrap() / b,
            riesz_kernel_weight(b, a).unwrap() / a,
            max_relative = 1e-14
        );
    }

    #[test]
    fn lagrange_weights_reproduce_constants() {
        // Σ_m ω_m = h ∫ W over the whole line when the kernel is replaced by 1.
        let s: f64 = (-3..=3).map(|m| lagrange_cardinal(0.3 + m as f64)).sum();
        assert_relative_eq!(s, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn potential_of_dipole_density() {
        let g = make_log_grid(1e-3, 1e5, 601).unwrap();
        let f = dipole_density(&g);
        let cfg = RieszQuadConfig::default();
        for r in [0.5f64, 1.0, 10.0] {
            let exact = 1.0 / (2.0 * PI * (1.0 + r * r).sqrt());
            assert_relative_eq!(riesz_potential(&f, r, &cfg).unwrap(), exact, max_relative = 1e-4);
        }
        let op = RieszOperator::new(&g, cfg).unwrap();
        let u = op.apply(&f).unwrap();
        for (&r, &v) in g.nodes().iter().zip(u.values()) {
            let exact = 1.0 / (2.0 * PI * (1.0 + r * r).sqrt());
            assert_relative_eq!(v, exact, max_relative = 1e-6);
        }
        assert_relative_eq!(u.inner_value(), 1.0 / (2.0 * PI), max_relative = 1e-7);
        assert_relative_eq!(op.eval(&f, 0.0).unwrap(), u.inner_value(), max_relative = 1e-14);
        assert_relative_eq!(op.eval(&f, g.node(300)).unwrap(), u.values()[300], max_relative = 1e-14);
    }

    #[test]
    fn zero_density_has_zero_potential() {
        let g = make_log_grid(1e-2, 1e3, 120).unwrap();
        let z = RadialFunction::zeros(&g);
        assert_eq!(riesz_potential(&z, 3.0, &RieszQuadConfig::default()).unwrap(), 0.0);
        assert_eq!(newton_remainder(&z, 3.0).unwrap(), 0.0);
        assert_eq!(total_charge(&z).unwrap(), 0.0);
    }

    #[test]
    fn bump_far_field() {
        let g = make_log_grid(1e-3, 1e4, 801).unwrap();
        let f = bump_density(&g);
        let q = total_charge(&f).unwrap();
        let u = riesz_potential(&f, 100.0, &RieszQuadConfig::default()).unwrap();
        assert_relative_eq!(u, q / (2.0 * PI * 100.0), max_relative = 1e-2);
        assert_relative_eq!(u, bump_potential_direct(100.0), max_relative = 1e-6);
        let near = newton_remainder(&f, 10.0).unwrap().abs();
        let far = newton_remainder(&f, 100.0).unwrap().abs();
        assert!(far < near);
    }

    #[test]
    fn newton_remainder_of_dipole_density() {
        let g = make_log_grid(1e-3, 1e5, 601).unwrap();
        let f = dipole_density(&g);
        let r: f64 = 100.0;
        let expected = r / (1.0 + r * r).sqrt() - 1.0;
        assert!((newton_remainder(&f, r).unwrap() - expected).abs() < 1e-4);
    }

    #[test]
    fn non_integrable_tail_is_rejected() {
        let g = make_log_grid(1e-2, 1e3, 120).unwrap();
        let f = RadialFunction::from_fn(&g, |r| 1.0 / (1.0 + r))
            .unwrap()
            .with_tail(TailModel::Power { coefficient: 1.0, exponent: 1.0 });
        assert_eq!(riesz_potential(&f, 1.0, &RieszQuadConfig::default()), Err(Error::NonIntegrableTail("power")));
    }

    #[test]
    fn grid_mismatch() {
        let g = make_log_grid(1e-2, 1e3, 120).unwrap();
        let op = RieszOperator::new(&g, RieszQuadConfig::default()).unwrap();
        let other = make_log_grid(1e-2, 1e3, 121).unwrap();
        assert_eq!(op.apply(&RadialFunction::zeros(&other)).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn matrix_matches_apply_for_tailless_density() {
        let g = make_log_grid(1e-2, 1e2, 64).unwrap();
        let op = RieszOperator::new(&g, RieszQuadConfig::default()).unwrap();
        let f = bump_density(&g);
        let u = op.apply(&f).unwrap();
        let m = op.matrix();
        let n = g.len();
        for i in 0..n {
            let mv: f64 = (0..n).map(|j| m[i * n + j] * f.values()[j]).sum();
            assert_relative_eq!(mv, u.values()[i], max_relative = 1e-12);
        }
    }

    fn bump_pair(a: f64, b: f64, c: f64) -> impl Fn(f64) -> f64 {
        move |r| {
            let x = r / b;
            if x < 1.0 {
                a * (1.0 - x * x).powi(4) * (1.0 + c * x * x)
            } else {
                0.0
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn duality_positivity_and_energy(
            a in 0.2f64..3.0, b in 0.3f64..3.0, c in 0.0f64..2.0,
            d in 0.2f64..3.0, e in 0.3f64..3.0,
        ) {
            let g = make_log_grid(1e-3, 1e3, 301).unwrap();
            let op = RieszOperator::new(&g, RieszQuadConfig::default()).unwrap();
            let f = RadialFunction::from_fn(&g, bump_pair(a, b, c)).unwrap().with_tail(TailModel::Zero);
            let k = RadialFunction::from_fn(&g, bump_pair(d, e, 0.0)).unwrap().with_tail(TailModel::Zero);
            let uf = op.apply(&f).unwrap();
            let uk = op.apply(&k).unwrap();
            let pair = |u: &RadialFunction<f64>, v: &RadialFunction<f64>| {
                let vals: Vec<f64> = u.values().iter().zip(v.values()).map(|(x, y)| x * y).collect();
                integrate_radial(&RadialFunction::new(g.clone(), vals, TailModel::Zero).unwrap()).unwrap()
            };
            let lhs = pair(&uf, &k);
            let rhs = pair(&uk, &f);
            prop_assert!((lhs - rhs).abs() <= 1e-5 * lhs.abs());
            prop_assert!(uf.values().iter().all(|&v| v > 0.0));
            prop_assert!(pair(&uf, &f) > 0.0);
        }

        #[test]
        fn far_field_matches_total_charge(a in 0.2f64..3.0, b in 0.05f64..1.0, c in 0.0f64..2.0) {
            let g = make_log_grid(1e-3, 1e4, 501).unwrap();
            let f = RadialFunction::from_fn(&g, bump_pair(a, b, c)).unwrap().with_tail(TailModel::Zero);
            let q = total_charge(&f).unwrap();
            for r in [100.0 * b, 300.0 * b] {
                let u = riesz_potential(&f, r, &RieszQuadConfig::default()).unwrap();
                let ratio = 2.0 * PI * r * u / q;
                prop_assert!((0.99..=1.01).contains(&ratio));
            }
        }
    }
}
