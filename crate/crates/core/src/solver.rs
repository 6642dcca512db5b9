//! Self-consistent solutions of the Euler–Lagrange equations
//! `u + U_{N(u)} = V`, with `N(u) = |u|u` at the neutrality point and
//! `N(u) = S(u)` with a uniform background.
//!
//! Two iterations are available. [`IterationScheme::DampedFixedPoint`] mixes
//! the density, `ρ ← (1−ω)ρ + ω·N(V − U_ρ)`, optionally with Anderson
//! acceleration. [`IterationScheme::Newton`] works on `u` with the dense
//! Jacobian `I + M·diag(N′(u))` and a backtracking line search.

use std::str::FromStr;

use crate::linalg::Lu;
use crate::potentials::{sample_potential, PotentialSpec};
use crate::radial::{integrate_radial, RadialFunction, RadialGrid, TailModel};
use crate::riesz::{RieszOperator, RieszQuadConfig};
use crate::tf_core::{
    neutral_nonlinearity, pairing, psi, psi_prime, s_inverse, s_inverse_prime, BackgroundParams, EnergyBreakdown,
};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationScheme {
    DampedFixedPoint,
    Newton,
}

impl FromStr for IterationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "damped_fixed_point" | "picard" => Ok(Self::DampedFixedPoint),
            "newton" => Ok(Self::Newton),
            other => Err(Error::Argument(format!("unknown iteration scheme `{other}`"))),
        }
    }
}

impl IterationScheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DampedFixedPoint => "damped_fixed_point",
            Self::Newton => "newton",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    pub grid: RadialGrid<T>,
    pub damping: T,
    /// Bound on `sup|residual| / (1 + sup V)`.
    pub tol: T,
    pub max_iter: usize,
    pub anderson_depth: usize,
    pub scheme: IterationScheme,
    pub riesz: RieszQuadConfig<T>,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(grid: RadialGrid<T>) -> Self {
        Self {
            grid,
            damping: T::lit(0.3),
            tol: T::lit(1e-8),
            max_iter: 500,
            anderson_depth: 0,
            scheme: IterationScheme::Newton,
            riesz: RieszQuadConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(Error::Argument(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::Argument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.grid.len() < 16 {
            return Err(Error::Argument(format!("solver grid needs at least 16 nodes, got {}", self.grid.len())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub u: RadialFunction<T>,
    /// `|u|u` at the neutrality point, `φ = S(u)` with a background.
    pub rho: RadialFunction<T>,
    pub potential_of_rho: RadialFunction<T>,
    pub residual: RadialFunction<T>,
    pub residual_history: Vec<T>,
    pub energy_history: Vec<T>,
    pub iterations: usize,
    pub total_charge: T,
    pub energy: EnergyBreakdown<T>,
    pub converged: bool,
}

/// Pointwise nonlinearity of one of the two models.
#[derive(Debug, Clone, Copy)]
enum Model<T> {
    Neutral,
    Background(BackgroundParams<T>),
}

impl<T: Real> Model<T> {
    fn density(&self, u: T) -> T {
        match self {
            Model::Neutral => neutral_nonlinearity(u),
            Model::Background(bg) => s_inverse(bg, u),
        }
    }

    fn density_prime(&self, u: T) -> T {
        match self {
            Model::Neutral => T::lit(2.0) * u.abs(),
            Model::Background(bg) => s_inverse_prime(bg, u),
        }
    }

    /// Inverse of [`Model::density`].
    fn potential(&self, rho: T) -> T {
        match self {
            Model::Neutral => rho.signum() * rho.abs().sqrt(),
            Model::Background(bg) => psi_prime(bg, rho),
        }
    }

    fn kinetic(&self, rho: T) -> T {
        match self {
            Model::Neutral => T::lit(2.0 / 3.0) * rho.abs() * rho.abs().sqrt(),
            Model::Background(bg) => psi(bg, rho),
        }
    }

    fn u_tail(&self, u: &[T], grid: &RadialGrid<T>) -> TailModel<T> {
        match self {
            Model::Neutral => fit_neutral_tail(u, grid),
            Model::Background(_) => {
                let n = u.len();
                if u[n - 1] == T::zero() {
                    TailModel::Zero
                } else {
                    let p = T::lit(3.0);
                    TailModel::Power { coefficient: u[n - 1] * grid.r_max().powf(p), exponent: p }
                }
            }
        }
    }

    fn density_tail(&self, u_tail: &TailModel<T>) -> TailModel<T> {
        match self {
            Model::Neutral => u_tail.signed_pow(T::lit(2.0)),
            Model::Background(bg) => u_tail.scaled(T::lit(2.0) * bg.sqrt_rho_bar),
        }
    }

    fn kinetic_tail(&self, rho_tail: &TailModel<T>) -> TailModel<T> {
        match self {
            Model::Neutral => rho_tail.abs_pow(T::lit(1.5), T::lit(2.0 / 3.0)),
            Model::Background(bg) => rho_tail.abs_pow(T::lit(2.0), T::lit(0.25) / bg.sqrt_rho_bar),
        }
    }
}

/// Coefficient of `ln ln r` in `1/(r·u(r)) = ln r + drift·ln ln r + b + o(1)`
/// for positive neutral solutions: `−2∫φ` with `∫φ = 2 ln 2`.
pub const NEUTRAL_LOG_DRIFT: f64 = -4.0 * std::f64::consts::LN_2;

/// Smallest `ln r_max` for which the drifting form is used.
const DRIFT_MIN_LOG: f64 = 5.0;

/// Tail of a neutral-model `u`. A slowly decaying `u` gets `±1/(r·L(r))`
/// with the universal drift and the shift matched at `r_max` (on short grids a
/// two-point fit of `A/(r(ln r + b))` instead); a faster one the power law of
/// its end log-slope. Ends that change sign over the last e-fold get `r⁻³`.
fn fit_neutral_tail<T: Real>(u: &[T], grid: &RadialGrid<T>) -> TailModel<T> {
    let n = u.len();
    let last = u[n - 1];
    if last == T::zero() {
        return TailModel::Zero;
    }
    let back = (T::one() / grid.h()).round().to_usize().unwrap_or(1).clamp(1, n - 1);
    let (r1, r0) = (grid.node(n - 1), grid.node(n - 1 - back));
    let first = u[n - 1 - back];
    let cube = TailModel::Power { coefficient: last * r1.powi(3), exponent: T::lit(3.0) };
    if first == T::zero() || (first > T::zero()) != (last > T::zero()) {
        return cube;
    }
    let sign = last.signum();
    let (last, first) = (last.abs(), first.abs());
    let slope = -(last / first).ln() / (r1 / r0).ln();
    if !slope.is_finite() {
        return cube;
    }
    if slope < T::lit(1.5) {
        let big_t = r1.ln();
        if big_t >= T::lit(DRIFT_MIN_LOG) {
            let drift = T::lit(NEUTRAL_LOG_DRIFT);
            let shift = T::one() / (r1 * last) - big_t - drift * big_t.ln();
            if shift.is_finite() {
                return TailModel::InverseLog { coefficient: sign, shift, drift };
            }
        }
        let (y1, y0) = (T::one() / (r1 * last), T::one() / (r0 * first));
        let inv_a = (y1 - y0) / (r1 / r0).ln();
        if inv_a > T::zero() {
            let a = T::one() / inv_a;
            let b = a * y1 - big_t;
            if (big_t + b) > T::lit(0.5) && a.is_finite() && b.is_finite() {
                return TailModel::InverseLog { coefficient: sign * a, shift: b, drift: T::zero() };
            }
        }
        return cube;
    }
    TailModel::Power { coefficient: sign * last * r1.powf(slope), exponent: slope }
}

/// Everything derived from one `u` iterate.
struct State<T> {
    u: RadialFunction<T>,
    rho: RadialFunction<T>,
    potential: RadialFunction<T>,
    residual: Vec<T>,
    norm: T,
}

struct Problem<'a, T> {
    model: Model<T>,
    v: &'a RadialFunction<T>,
    op: &'a RieszOperator<T>,
    scale: T,
}

impl<'a, T: Real> Problem<'a, T> {
    fn new(model: Model<T>, v: &'a RadialFunction<T>, op: &'a RieszOperator<T>) -> Self {
        let sup = v.values().iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        Self { model, v, op, scale: T::one() + sup }
    }

    fn grid(&self) -> &RadialGrid<T> {
        self.op.grid()
    }

    /// Density with tail and inner value consistent with `u`.
    fn density_of(&self, u: &RadialFunction<T>) -> Result<RadialFunction<T>> {
        let tail = self.model.density_tail(u.tail());
        u.map(tail, |_, x| self.model.density(x))
    }

    fn state_from_u(&self, u_vals: Vec<T>) -> Result<State<T>> {
        let tail = self.model.u_tail(&u_vals, self.grid());
        let u = RadialFunction::new(self.grid().clone(), u_vals, tail)?;
        // The equation at r = 0 fixes the value the nodes are blended into.
        let inner = self.v.inner_value() - self.op.origin(&self.density_of(&u)?)?;
        let u = if inner.is_finite() { u.with_inner_value(inner) } else { u };
        let rho = self.density_of(&u)?;
        self.finish(u, rho)
    }

    /// Fixed-point iterates carry the density; `u` follows from inverting `N`.
    fn state_from_rho(&self, rho_vals: &[T]) -> Result<State<T>> {
        self.state_from_u(rho_vals.iter().map(|&r| self.model.potential(r)).collect())
    }

    fn finish(&self, u: RadialFunction<T>, rho: RadialFunction<T>) -> Result<State<T>> {
        let potential = self.op.apply(&rho)?;
        let residual: Vec<T> =
            u.values().iter().zip(potential.values()).zip(self.v.values()).map(|((&a, &b), &c)| a + b - c).collect();
        let norm = residual.iter().fold(T::zero(), |m, &x| m.max(x.abs())) / self.scale;
        Ok(State { u, rho, potential, residual, norm })
    }

    fn energy(&self, s: &State<T>) -> Result<EnergyBreakdown<T>> {
        let kin = s.rho.map(self.model.kinetic_tail(s.rho.tail()), |_, x| self.model.kinetic(x))?;
        let kinetic = integrate_radial(&kin)?;
        let external = pairing(&s.rho, self.v)?;
        let coulomb = pairing(&s.potential, &s.rho)? * T::lit(0.5);
        Ok(EnergyBreakdown { kinetic, external, coulomb, total: kinetic - external + coulomb })
    }

    fn energy_or_nan(&self, s: &State<T>) -> T {
        self.energy(s).map(|e| e.total).unwrap_or_else(|_| T::nan())
    }
}

/// Anderson mixing over the last `depth` fixed-point steps.
struct Anderson<T> {
    depth: usize,
    xs: Vec<Vec<T>>,
    gs: Vec<Vec<T>>,
}

impl<T: Real> Anderson<T> {
    fn new(depth: usize) -> Self {
        Self { depth, xs: vec![], gs: vec![] }
    }

    /// Next iterate from `x` and the damped map value `g = G(x)`.
    fn step(&mut self, x: &[T], g: Vec<T>) -> Vec<T> {
        self.xs.push(x.to_vec());
        self.gs.push(g.clone());
        if self.xs.len() > self.depth + 1 {
            self.xs.remove(0);
            self.gs.remove(0);
        }
        let m = self.xs.len() - 1;
        if m == 0 {
            return g;
        }
        let f: Vec<Vec<T>> =
            self.xs.iter().zip(&self.gs).map(|(x, g)| g.iter().zip(x).map(|(&a, &b)| a - b).collect()).collect();
        let n = x.len();
        let df: Vec<Vec<T>> = (0..m).map(|k| (0..n).map(|i| f[k + 1][i] - f[k][i]).collect()).collect();
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (&p, &q)| s + p * q);
        let mut normal = vec![T::zero(); m * m];
        let mut rhs = vec![T::zero(); m];
        for a in 0..m {
            for b in 0..m {
                normal[a * m + b] = dot(&df[a], &df[b]);
            }
            rhs[a] = dot(&df[a], &f[m]);
        }
        let trace = (0..m).fold(T::zero(), |s, a| s + normal[a * m + a]);
        for a in 0..m {
            normal[a * m + a] = normal[a * m + a] + trace * T::lit(1e-10) + T::min_positive_value();
        }
        let Ok(lu) = Lu::factor(normal, m) else {
            self.xs.clear();
            self.gs.clear();
            return g;
        };
        let gamma = lu.solve(&rhs);
        let mut next = self.gs[m].clone();
        for (k, &c) in gamma.iter().enumerate() {
            for ((x, &a), &b) in next.iter_mut().zip(&self.gs[k + 1]).zip(&self.gs[k]) {
                *x = *x - c * (a - b);
            }
        }
        next
    }
}

fn check_grid<T: Real>(cfg: &SolverConfig<T>, v: &RadialFunction<T>) -> Result<()> {
    if cfg.grid.same_as(v.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn solve<T: Real>(
    model: Model<T>,
    v: &RadialFunction<T>,
    cfg: &SolverConfig<T>,
    op: &RieszOperator<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    check_grid(cfg, v)?;
    let problem = Problem::new(model, v, op);
    let n = cfg.grid.len();
    let mut residual_history = Vec::new();
    let mut energy_history = Vec::new();
    let mut state = problem.state_from_u(vec![T::zero(); n])?;
    let mut iterations = 0;
    let mut converged = false;
    match cfg.scheme {
        IterationScheme::DampedFixedPoint => {
            let omega = cfg.damping;
            let damped = |rho: &[T], s: &State<T>| -> Vec<T> {
                rho.iter()
                    .zip(s.potential.values())
                    .zip(v.values())
                    .map(|((&r, &pot), &vv)| (T::one() - omega) * r + omega * model.density(vv - pot))
                    .collect()
            };
            let mut rho: Vec<T> = state.rho.values().to_vec();
            let mut anderson = Anderson::new(cfg.anderson_depth);
            let mut best = (state.norm, rho.clone());
            loop {
                residual_history.push(state.norm);
                energy_history.push(problem.energy_or_nan(&state));
                if state.norm <= cfg.tol {
                    converged = true;
                    break;
                }
                if iterations == cfg.max_iter || !state.norm.is_finite() {
                    break;
                }
                let g = damped(&rho, &state);
                let mut next = g.clone();
                let mut trial = None;
                if cfg.anderson_depth > 0 {
                    // Mixing in u = N⁻¹(ρ) avoids the square-root amplification
                    // of small negative densities produced by extrapolation.
                    let xu: Vec<T> = rho.iter().map(|&r| model.potential(r)).collect();
                    let gu: Vec<T> = g.iter().map(|&r| model.potential(r)).collect();
                    let mixed: Vec<T> = anderson.step(&xu, gu).into_iter().map(|x| model.density(x)).collect();
                    match problem.state_from_rho(&mixed) {
                        Ok(t) if t.norm <= T::lit(2.0) * best.0 => {
                            next = mixed;
                            trial = Some(t);
                        }
                        // Extrapolation left the basin: restart from the best iterate.
                        _ => {
                            anderson = Anderson::new(cfg.anderson_depth);
                            let restart = problem.state_from_rho(&best.1)?;
                            next = damped(&best.1, &restart);
                        }
                    }
                }
                let trial = match trial {
                    Some(t) => t,
                    None => match problem.state_from_rho(&next) {
                        Ok(t) if t.norm.is_finite() => t,
                        _ => break,
                    },
                };
                rho = next;
                state = trial;
                iterations += 1;
                if state.norm < best.0 {
                    best = (state.norm, rho.clone());
                }
            }
            if !converged && best.0 < state.norm {
                state = problem.state_from_rho(&best.1)?;
            }
        }
        IterationScheme::Newton => {
            let m = op.matrix();
            loop {
                residual_history.push(state.norm);
                energy_history.push(problem.energy_or_nan(&state));
                if state.norm <= cfg.tol {
                    converged = true;
                    break;
                }
                if iterations == cfg.max_iter {
                    break;
                }
                let u = state.u.values();
                let d: Vec<T> = u.iter().map(|&x| model.density_prime(x)).collect();
                let mut jac = vec![T::zero(); n * n];
                for i in 0..n {
                    for j in 0..n {
                        jac[i * n + j] = m[i * n + j] * d[j];
                    }
                    jac[i * n + i] = jac[i * n + i] + T::one();
                }
                // The tail is fitted to the last node and feeds every row
                // through the far field; that column is differenced.
                let last = n - 1;
                let du = T::epsilon().sqrt() * u[last].abs().max(cfg.tol * problem.scale);
                let mut bumped = u.to_vec();
                bumped[last] = bumped[last] + du;
                let probe = problem.state_from_u(bumped)?;
                for i in 0..n {
                    jac[i * n + last] = (probe.residual[i] - state.residual[i]) / du;
                }
                let step = Lu::factor(jac, n)?.solve(&state.residual);
                let mut alpha = T::one();
                let mut accepted = None;
                while alpha >= T::lit(1.0 / 1024.0) {
                    let trial: Vec<T> = u.iter().zip(&step).map(|(&x, &dx)| x - alpha * dx).collect();
                    let next = problem.state_from_u(trial)?;
                    if next.norm < (T::one() - T::lit(1e-4) * alpha) * state.norm {
                        accepted = Some(next);
                        break;
                    }
                    alpha = alpha * T::lit(0.5);
                }
                match accepted {
                    Some(next) => {
                        state = next;
                        iterations += 1;
                    }
                    None => break,
                }
            }
        }
    }
    let energy = problem.energy(&state);
    let charge = integrate_radial(&state.rho);
    let (energy, total_charge) = if converged {
        (energy?, charge?)
    } else {
        let nan = T::nan();
        (
            energy.unwrap_or(EnergyBreakdown { kinetic: nan, external: nan, coulomb: nan, total: nan }),
            charge.unwrap_or(nan),
        )
    };
    let residual = RadialFunction::new(cfg.grid.clone(), state.residual.clone(), TailModel::None)?;
    Ok(SolveResult {
        u: state.u,
        rho: state.rho,
        potential_of_rho: state.potential,
        residual,
        residual_history,
        energy_history,
        iterations,
        total_charge,
        energy,
        converged,
    })
}

/// `u + U_{|u|u} − V` at the nodes; the density tail follows the tail of `u`.
pub fn residual_neutral<T: Real>(u: &RadialFunction<T>, v: &RadialFunction<T>) -> Result<RadialFunction<T>> {
    if !u.grid().same_as(v.grid()) {
        return Err(Error::GridMismatch);
    }
    let op = RieszOperator::new(u.grid(), RieszQuadConfig::default())?;
    let rho = u.map(u.tail().signed_pow(T::lit(2.0)), |_, x| neutral_nonlinearity(x))?;
    let pot = op.apply(&rho)?;
    let values = u.values().iter().zip(pot.values()).zip(v.values()).map(|((&a, &b), &c)| a + b - c).collect();
    RadialFunction::new(u.grid().clone(), values, TailModel::None)
}

/// Neutral model for a sampled potential, reusing a Coulomb operator.
pub fn solve_neutral_sampled<T: Real>(
    v: &RadialFunction<T>,
    cfg: &SolverConfig<T>,
    op: &RieszOperator<T>,
) -> Result<SolveResult<T>> {
    solve(Model::Neutral, v, cfg, op)
}

/// Background model for a sampled potential, reusing a Coulomb operator.
pub fn solve_background_sampled<T: Real>(
    v: &RadialFunction<T>,
    bg: &BackgroundParams<T>,
    cfg: &SolverConfig<T>,
    op: &RieszOperator<T>,
) -> Result<SolveResult<T>> {
    solve(Model::Background(*bg), v, cfg, op)
}

fn sampled_on_grid<T: Real>(spec: &PotentialSpec<T>, cfg: &SolverConfig<T>) -> Result<RadialFunction<T>> {
    let v = sample_potential(spec, &cfg.grid)?;
    check_grid(cfg, &v)?;
    Ok(v)
}

pub fn solve_neutral<T: Real>(spec: &PotentialSpec<T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let v = sampled_on_grid(spec, cfg)?;
    let op = RieszOperator::new(&cfg.grid, cfg.riesz)?;
    solve_neutral_sampled(&v, cfg, &op)
}

pub fn solve_background<T: Real>(
    spec: &PotentialSpec<T>,
    bg: &BackgroundParams<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let v = sampled_on_grid(spec, cfg)?;
    let op = RieszOperator::new(&cfg.grid, cfg.riesz)?;
    solve_background_sampled(&v, bg, cfg, &op)
}

/// `(t, F(t))` with `t = ln r_i` and `F(t) = e^t u(e^t)` at every node.
pub fn katsnelson_f<T: Real>(u: &RadialFunction<T>) -> Result<Vec<(T, T)>> {
    u.grid()
        .nodes()
        .iter()
        .zip(u.values())
        .map(|(&r, &v)| {
            if v > T::zero() {
                Ok((r.ln(), r * v))
            } else {
                Err(Error::Positivity { r: r.as_f64(), value: v.as_f64() })
            }
        })
        .collect()
}

/// `r·ln(r)·u(r)` at each probe radius.
pub fn universality_probe<T: Real>(u: &RadialFunction<T>, radii: &[T]) -> Result<Vec<T>> {
    let grid = u.grid();
    radii
        .iter()
        .map(|&r| {
            if !(r >= grid.r_min() && r <= grid.r_max()) {
                return Err(Error::Boundary {
                    r: r.as_f64(),
                    r_min: grid.r_min().as_f64(),
                    r_max: grid.r_max().as_f64(),
                });
            }
            let v = u.eval(r);
            if v <= T::zero() {
                return Err(Error::Positivity { r: r.as_f64(), value: v.as_f64() });
            }
            Ok(r * r.ln() * v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::make_log_grid;
    use approx::assert_relative_eq;

    fn config(r_max: f64, n: usize) -> SolverConfig<f64> {
        SolverConfig::new(make_log_grid::<f64>(1e-3, r_max, n).unwrap())
    }

    #[test]
    fn zero_potential_gives_zero_solution() {
        let cfg = config(1e4, 200);
        let v = RadialFunction::zeros(&cfg.grid);
        let op = RieszOperator::new(&cfg.grid, cfg.riesz).unwrap();
        for scheme in [IterationScheme::Newton, IterationScheme::DampedFixedPoint] {
            let res = solve_neutral_sampled(&v, &SolverConfig { scheme, ..cfg.clone() }, &op).unwrap();
            assert!(res.converged);
            assert_eq!(res.iterations, 0);
            assert!(res.u.values().iter().all(|&x| x == 0.0));
            assert_eq!(res.total_charge, 0.0);
        }
        let res = solve_background_sampled(&v, &BackgroundParams::new(1.0).unwrap(), &cfg, &op).unwrap();
        assert!(res.rho.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn residual_of_constructed_potential_vanishes() {
        let g = make_log_grid::<f64>(1e-3, 1e5, 401).unwrap();
        let spec = PotentialSpec::point_charge(1.0, 1.0).unwrap();
        let u = sample_potential(&spec, &g).unwrap();
        let op = RieszOperator::new(&g, RieszQuadConfig::default()).unwrap();
        let rho = u.map(u.tail().signed_pow(2.0), |_, x: f64| x * x.abs()).unwrap();
        let v = u.linear_combination(1.0, &op.apply(&rho).unwrap(), 1.0).unwrap();
        let res = residual_neutral(&u, &v).unwrap();
        assert!(
            res.values().iter().all(|x| x.abs() < 1e-14),
            "{:?}",
            res.values().iter().fold(0.0f64, |m, x| m.max(x.abs()))
        );
        let other = sample_potential(&spec, &make_log_grid::<f64>(1e-3, 1e5, 400).unwrap()).unwrap();
        assert!(matches!(residual_neutral(&u, &other), Err(Error::GridMismatch)));
        let cfg = config(1e5, 400);
        assert!(matches!(solve_neutral_sampled(&v, &cfg, &op), Err(Error::GridMismatch)));
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(1e4, 200);
        cfg.damping = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Argument(_))));
        cfg.damping = 0.3;
        cfg.tol = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Argument(_))));
        assert!(matches!(config(1e4, 8).validate(), Err(Error::Argument(_))));
        assert_eq!("newton".parse::<IterationScheme>().unwrap(), IterationScheme::Newton);
        assert_eq!("damped_fixed_point".parse::<IterationScheme>().unwrap(), IterationScheme::DampedFixedPoint);
        assert!("jacobi".parse::<IterationScheme>().is_err());
    }

    #[test]
    fn neutral_tail_fit_recovers_universal_form() {
        let g = make_log_grid::<f64>(1e-2, 1e8, 600).unwrap();
        let drift = NEUTRAL_LOG_DRIFT;
        let exact = |r: f64| 1.0 / (r * (r.ln() + drift * r.ln().ln() + 3.0));
        let u: Vec<f64> = g.nodes().iter().map(|&r| exact(r.max(20.0))).collect();
        match fit_neutral_tail(&u, &g) {
            TailModel::InverseLog { coefficient, shift, drift: d } => {
                assert_eq!(coefficient, 1.0);
                assert_eq!(d, drift);
                assert_relative_eq!(shift, 3.0, epsilon = 1e-10);
            }
            other => panic!("{other:?}"),
        }
        let cube: Vec<f64> = g.nodes().iter().map(|&r| -2.0 * r.powi(-3)).collect();
        match fit_neutral_tail(&cube, &g) {
            TailModel::Power { coefficient, exponent } => {
                assert_relative_eq!(exponent, 3.0, epsilon = 1e-9);
                assert_relative_eq!(coefficient, -2.0, max_relative = 1e-8);
            }
            other => panic!("{other:?}"),
        }
        let short = make_log_grid::<f64>(1e-2, 100.0, 200).unwrap();
        let u: Vec<f64> = short.nodes().iter().map(|&r| 0.5 / (r * (r.ln() + 2.0))).collect();
        match fit_neutral_tail(&u, &short) {
            TailModel::InverseLog { coefficient, shift, drift } => {
                assert_relative_eq!(coefficient, 0.5, max_relative = 1e-12);
                assert_relative_eq!(shift, 2.0, max_relative = 1e-12);
                assert_eq!(drift, 0.0);
            }
            other => panic!("{other:?}"),
        }
        let mirrored: Vec<f64> = g.nodes().iter().map(|&r| -exact(r.max(20.0))).collect();
        match fit_neutral_tail(&mirrored, &g) {
            TailModel::InverseLog { coefficient, shift, .. } => {
                assert_eq!(coefficient, -1.0);
                assert_relative_eq!(shift, 3.0, epsilon = 1e-10);
            }
            other => panic!("{other:?}"),
        }
        let mut noisy = cube.clone();
        noisy[599] = 1e-30;
        match fit_neutral_tail(&noisy, &g) {
            TailModel::Power { coefficient, exponent } => {
                assert_eq!(exponent, 3.0);
                assert_relative_eq!(coefficient, 1e-6, max_relative = 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn katsnelson_transform_examples() {
        let g = make_log_grid::<f64>(1.0, 1e4, 100).unwrap();
        let inv = RadialFunction::from_fn(&g, |r| 1.0 / r).unwrap();
        for (t, f) in katsnelson_f(&inv).unwrap() {
            assert!(t.is_finite());
            assert_relative_eq!(f, 1.0, max_relative = 1e-14);
        }
        let log = RadialFunction::from_fn(&g, |r| 1.0 / (r * (1.0 + r.ln()))).unwrap();
        for (t, f) in katsnelson_f(&log).unwrap() {
            assert_relative_eq!(f, 1.0 / (1.0 + t), max_relative = 1e-12);
        }
        let neg = RadialFunction::from_fn(&g, |r| 1.0 - r).unwrap();
        assert!(matches!(katsnelson_f(&neg), Err(Error::Positivity { .. })));
    }

    #[test]
    fn universality_probe_examples() {
        let g = make_log_grid::<f64>(2.0, 1e5, 300).unwrap();
        let universal = RadialFunction::from_fn(&g, |r| 1.0 / (r * r.ln())).unwrap();
        let radii = [10.0, 1e3, 1e4];
        for p in universality_probe(&universal, &radii).unwrap() {
            assert_relative_eq!(p, 1.0, max_relative = 1e-6);
        }
        let coulomb = RadialFunction::from_fn(&g, |r| 1.0 / r).unwrap();
        for (p, r) in universality_probe(&coulomb, &radii).unwrap().into_iter().zip(radii) {
            assert_relative_eq!(p, r.ln(), max_relative = 1e-6);
        }
        assert!(matches!(universality_probe(&coulomb, &[1.0]), Err(Error::Boundary { .. })));
        assert!(matches!(universality_probe(&coulomb, &[1e6]), Err(Error::Boundary { .. })));
        let neg = coulomb.linear_combination(-1.0, &coulomb, 0.0).unwrap();
        assert!(matches!(universality_probe(&neg, &[10.0]), Err(Error::Positivity { .. })));
    }

    #[test]
    fn schemes_agree_and_fixed_point_energy_descends() {
        let spec = PotentialSpec::point_charge(1.0, 1.0).unwrap();
        let mut cfg = config(1e8, 561);
        cfg.tol = 1e-10;
        let newton = solve_neutral(&spec, &cfg).unwrap();
        let picard =
            solve_neutral(&spec, &SolverConfig { scheme: IterationScheme::DampedFixedPoint, ..cfg.clone() }).unwrap();
        let anderson = solve_neutral(
            &spec,
            &SolverConfig { scheme: IterationScheme::DampedFixedPoint, anderson_depth: 5, ..cfg.clone() },
        )
        .unwrap();
        assert!(newton.converged && picard.converged && anderson.converged);
        assert!(newton.iterations < 10);
        assert!(anderson.iterations < picard.iterations);
        for other in [&picard, &anderson] {
            for (a, b) in newton.u.values().iter().zip(other.u.values()) {
                assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
        let e = &picard.energy_history;
        assert!(e.windows(2).skip(10).all(|w| w[1] <= w[0] + 1e-15), "{e:?}");
        assert_relative_eq!(newton.energy.total, picard.energy.total, max_relative = 1e-8);
        let h = &newton.residual_history;
        assert!(h.windows(2).all(|w| w[1] < w[0]));
        assert!(*h.last().unwrap() <= cfg.tol);
    }

    #[test]
    fn dipole_density_changes_sign() {
        let spec = PotentialSpec::dipole(2.0 * std::f64::consts::PI).unwrap();
        let cfg = config(1e6, 481);
        let res = solve_neutral(&spec, &cfg).unwrap();
        assert!(res.converged);
        let eps = 10.0 * cfg.tol;
        assert!(res.rho.values().iter().any(|&x| x > eps));
        assert!(res.rho.values().iter().any(|&x| x < -eps));
        // Over-screened: the far field is the mirrored universal tail and the
        // induced charge nearly cancels, as the external charge does.
        assert!(matches!(res.u.tail(), TailModel::InverseLog { coefficient, .. } if *coefficient == -1.0));
        assert!(res.total_charge.abs() < 2e-2, "{}", res.total_charge);
    }

    #[test]
    fn background_solution_is_positive_and_below_potential() {
        let spec = PotentialSpec::point_charge(1.0, 1.0).unwrap();
        let cfg = config(1e5, 481);
        let bg = BackgroundParams::new(1.0).unwrap();
        let res = solve_background(&spec, &bg, &cfg).unwrap();
        assert!(res.converged);
        let v = sample_potential(&spec, &cfg.grid).unwrap();
        for ((&u, &phi), &vv) in res.u.values().iter().zip(res.rho.values()).zip(v.values()) {
            assert!(u >= 0.0 && u <= vv);
            assert!(phi > 0.0);
            assert_relative_eq!(phi, 2.0 * u + u * u, max_relative = 1e-12);
        }
        assert_relative_eq!(res.total_charge, 1.0, max_relative = 1e-3);
    }

    #[test]
    fn divergent_fixed_point_reports_failure() {
        let spec = PotentialSpec::point_charge(10.0, 1.0).unwrap();
        let mut cfg = config(1e6, 361);
        cfg.scheme = IterationScheme::DampedFixedPoint;
        cfg.damping = 0.9;
        cfg.max_iter = 50;
        let res = solve_neutral(&spec, &cfg).unwrap();
        assert!(!res.converged);
        let best = res.residual_history.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(res.u.values().iter().all(|x| x.is_finite()));
        let v = sample_potential(&spec, &cfg.grid).unwrap();
        let scale = 1.0 + v.values().iter().cloned().fold(0.0, f64::max);
        let returned = res.residual.values().iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale;
        assert!(res.residual_history.len() > 2);
        assert_relative_eq!(returned, best, max_relative = 1e-12);
    }
}
