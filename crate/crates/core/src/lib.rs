//! Thomas–Fermi screening of external charges by a free-standing graphene sheet.
//!
//! All functions of the in-plane distance `r` live on a logarithmic grid
//! ([`RadialGrid`]) and are carried around as [`RadialFunction`]s together with
//! an explicit model of their behaviour beyond the last node. On top of that:
//!
//! * [`specfun`]: complete elliptic integral `K(k)`, the hypergeometric kernel
//!   of the radial half-Laplacian and the convolution kernel of the
//!   logarithmic-variable form of the equation.
//! * [`fraclap`]: pointwise `(-Δ)^{1/2}` of a radial function.
//! * [`riesz`]: the Coulomb potential `U_f = (1/2π) ∫ f(y)/|x-y| d²y` of a radial density.
//! * [`potentials`]: point charge, dipole and logarithmic barrier profiles.
//! * [`tf_core`]: pointwise nonlinearities and energy functionals.
//! * [`solver`]: self-consistent solutions of the Euler–Lagrange equations
//!   at the neutrality point and with background doping.
//!
//! The numerics are generic over the floating point type through [`Real`];
//! the aliases at the crate root fix it to `f64`, which is what every
//! accuracy target in this crate is stated for.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod fraclap;
pub mod io;
mod linalg;
pub mod potentials;
pub mod quad;
pub mod radial;
pub mod riesz;
pub mod solver;
pub mod specfun;
pub mod tf_core;

pub use error::{Error, Result};
pub use fraclap::{frac_lap_at, frac_lap_curve, phi_integrand, radial_laplacian_3d, FracLapQuadConfig};
pub use potentials::{eval_fraclap_analytic, eval_potential, sample_potential, PotentialSpec};
pub use radial::{
    integrate_radial, interpolate, local_log_slope, make_log_grid, RadialFunction, RadialGrid, TailModel,
};
pub use riesz::{newton_remainder, riesz_kernel_weight, riesz_potential, total_charge, RieszOperator, RieszQuadConfig};
pub use solver::{
    katsnelson_f, residual_neutral, solve_background, solve_neutral, universality_probe, IterationScheme, SolveResult,
    SolverConfig,
};
pub use tf_core::{BackgroundParams, EnergyBreakdown};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar used throughout the crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + std::iter::Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + std::iter::Sum
        + Send
        + Sync
        + 'static
{
}

/// Double precision grid.
pub type Grid = RadialGrid<f64>;
/// Double precision radial function.
pub type Function = RadialFunction<f64>;
/// Double precision tail model.
pub type Tail = TailModel<f64>;
/// Double precision potential description.
pub type Potential = PotentialSpec<f64>;
/// Double precision solver configuration.
pub type Config = SolverConfig<f64>;
/// Double precision solve result.
pub type Solution = SolveResult<f64>;
/// Double precision background parameters.
pub type Background = BackgroundParams<f64>;
