//! Half-Laplacian of a radial function in the plane,
//! `(−Δ)^{1/2}u(r) = (1/2πr) ∫_1^∞ Φ_u(r,τ) 𝒦(τ) dτ` with
//! `Φ_u(r,τ) = u(r) − u(rτ) + (u(r) − u(r/τ))/τ`.
//!
//! The integral is split into
//! * a Taylor zone `[1, τ_near]` where `Φ_u ≈ −r²ℒu(r)(τ−1)²` and the
//!   kernel moment `∫(τ−1)²𝒦` is integrated once;
//! * `[τ_near, 2]` in `τ` and `[2, T]` in `ln τ`, adaptively;
//! * `[T, ∞)` through `τ = T/y`, where `u(rτ)` comes from the tail model.

use rayon::prelude::*;

use crate::quad::{adaptive, tanh_sinh_left, AdaptiveOptions};
use crate::radial::{RadialFunction, RadialGrid, TailModel};
use crate::specfun::vf_kernel;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy)]
pub struct FracLapQuadConfig<T> {
    /// Upper end of the Taylor zone, `1 + δ`.
    pub tau_split_near: T,
    /// Start of the tail zone; `None` uses `max(2, r_max/r)` per point.
    pub tau_split_far: Option<T>,
    /// Absolute tolerance in units of `|u(r)|`.
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_panels: usize,
}

impl<T: Real> Default for FracLapQuadConfig<T> {
    fn default() -> Self {
        Self {
            tau_split_near: T::lit(1.0 + 1e-3),
            tau_split_far: None,
            abs_tol: T::lit(1e-11),
            rel_tol: T::lit(1e-9),
            max_panels: 4000,
        }
    }
}

impl<T: Real> FracLapQuadConfig<T> {
    fn validate(&self) -> Result<()> {
        if !(self.tau_split_near > T::one()) {
            return Err(Error::Argument(format!("tau_split_near must exceed 1, got {}", self.tau_split_near)));
        }
        if let Some(t) = self.tau_split_far {
            if !(t > self.tau_split_near) {
                return Err(Error::Argument(format!("tau_split_far {t} must exceed tau_split_near")));
            }
        }
        if !(self.abs_tol > T::zero() && self.rel_tol > T::zero()) {
            return Err(Error::Argument("quadrature tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// `Φ_u(r,τ)`.
pub fn phi_integrand<T: Real>(u: &RadialFunction<T>, r: T, tau: T) -> T {
    let ur = u.eval(r);
    ur - u.eval(r * tau) + (ur - u.eval(r / tau)) / tau
}

fn check_interior<T: Real>(grid: &RadialGrid<T>, r: T) -> Result<T> {
    let x = grid.position(r);
    let last = T::from_usize(grid.len() - 1).unwrap();
    if x >= T::one() - T::lit(1e-9) && x <= last - T::one() + T::lit(1e-9) {
        Ok(x)
    } else {
        Err(Error::Boundary { r: r.as_f64(), r_min: grid.r_min().as_f64(), r_max: grid.r_max().as_f64() })
    }
}

/// `ℒu = u″ + 2u′/r` from centered differences in `ln r` with the grid step.
pub fn radial_laplacian_3d<T: Real>(u: &RadialFunction<T>, r: T) -> Result<T> {
    let x = check_interior(u.grid(), r)?;
    let h = u.grid().h();
    let (lo, mid, hi) = (u.eval_position(x - T::one()), u.eval(r), u.eval_position(x + T::one()));
    let d2 = (hi - mid * T::lit(2.0) + lo) / (h * h);
    let d1 = (hi - lo) / (T::lit(2.0) * h);
    Ok((d2 + d1) / (r * r))
}

fn is_constant<T: Real>(u: &RadialFunction<T>) -> bool {
    let c = u.inner_value();
    if !u.values().iter().all(|&v| v == c) {
        return false;
    }
    match *u.tail() {
        TailModel::Power { coefficient, exponent } => coefficient == c && exponent == T::zero(),
        TailModel::Zero | TailModel::None => c == T::zero(),
        _ => false,
    }
}

/// `∫_1^{1+δ} (τ−1)² 𝒦(τ) dτ`.
fn taylor_moment<T: Real>(delta: T) -> T {
    tanh_sinh_left(
        |d: T| {
            let tau = T::one() + d;
            vf_kernel(tau).map(|k| d * d * k).unwrap_or(T::zero())
        },
        delta,
        T::lit(1.0 / 16.0),
    )
}

/// `(−Δ)^{1/2}u(r)` for `r` at least one grid step inside the grid.
pub fn frac_lap_at<T: Real>(u: &RadialFunction<T>, r: T, cfg: &FracLapQuadConfig<T>) -> Result<T> {
    cfg.validate()?;
    check_interior(u.grid(), r)?;
    if is_constant(u) {
        return Ok(T::zero());
    }
    let moment = taylor_moment(cfg.tau_split_near - T::one());
    frac_lap_with_moment(u, r, cfg, moment)
}

fn frac_lap_with_moment<T: Real>(u: &RadialFunction<T>, r: T, cfg: &FracLapQuadConfig<T>, moment: T) -> Result<T> {
    let grid = u.grid();
    let ur = u.eval(r);
    let scale = ur.abs().max(T::min_positive_value());
    let opts = AdaptiveOptions { abs_tol: cfg.abs_tol * scale, rel_tol: cfg.rel_tol, max_panels: cfg.max_panels };
    let two = T::lit(2.0);

    let lap = radial_laplacian_3d(u, r)?;
    let taylor = -r * r * lap * moment;

    let near = cfg.tau_split_near;
    let far = cfg.tau_split_far.unwrap_or_else(|| two.max(grid.r_max() / r));
    let (mid_end, log_end) = if far > two { (two, far) } else { (far, far) };

    let integrand = |tau: T| -> T {
        let k = vf_kernel(tau).unwrap_or(T::zero());
        (ur - u.eval(r * tau) + (ur - u.eval(r / tau)) / tau) * k
    };
    // Kinks of the extended u: where rτ leaves the grid or r/τ enters the inner disc.
    let kinks = [grid.r_max() / r, r / grid.r_min()];
    let with_kinks = |a: T, b: T, map: &dyn Fn(T) -> T| -> Vec<T> {
        let mut pts = vec![a, b];
        pts.extend(kinks.iter().map(|&k| map(k)).filter(|&x| x > a && x < b));
        pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        pts
    };

    let mut total = taylor;
    if mid_end > near {
        let est = adaptive(integrand, &with_kinks(near, mid_end, &|k| k), &opts)?;
        total = total + est.value;
    }
    if log_end > mid_end {
        let est = adaptive(
            |v: T| {
                let tau = v.exp();
                integrand(tau) * tau
            },
            &with_kinks(mid_end.ln(), log_end.ln(), &|k: T| k.ln()),
            &opts,
        )?;
        total = total + est.value;
    }
    // τ = far/y on (0, 1]
    let tail_pts = {
        let mut pts = vec![T::zero(), T::one()];
        pts.extend(kinks.iter().map(|&k| far / k).filter(|&y| y > T::zero() && y < T::one()));
        pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        pts
    };
    let est = adaptive(
        |y: T| {
            if y <= T::zero() {
                return T::zero();
            }
            let tau = far / y;
            integrand(tau) * far / (y * y)
        },
        &tail_pts,
        &opts,
    )?;
    total = total + est.value;
    Ok(total / (T::TAU() * r))
}

/// Half-Laplacian at the interior nodes `1..n−1`, on the grid they span.
pub fn frac_lap_curve<T: Real>(u: &RadialFunction<T>, cfg: &FracLapQuadConfig<T>) -> Result<RadialFunction<T>> {
    cfg.validate()?;
    let grid = u.grid();
    let n = grid.len();
    if n < 4 {
        return Err(Error::Argument(format!("need at least four nodes, got {n}")));
    }
    let inner = RadialGrid::new(grid.node(1), grid.node(n - 2), n - 2)?;
    if is_constant(u) {
        return Ok(RadialFunction::zeros(&inner).with_tail(TailModel::None));
    }
    let moment = taylor_moment(cfg.tau_split_near - T::one());
    let values = (1..n - 1)
        .into_par_iter()
        .map(|i| frac_lap_with_moment(u, grid.node(i), cfg, moment))
        .collect::<Result<Vec<T>>>()?;
    RadialFunction::new(inner, values, TailModel::None)
}
