//! Pointwise nonlinearities and energy functionals of the two models.
//!
//! At the neutrality point the energy of a density `ρ` is
//! `ℰ₀(ρ) = (2/3)∫|ρ|^{3/2} − ∫ρV + (1/2)∫U_ρ ρ`. With a uniform background
//! `ρ̄ > 0` the kinetic term becomes `∫Ψ(φ)` for the excess density `φ`.

use serde::Serialize;

use crate::radial::{integrate_radial, RadialFunction};
use crate::riesz::{RieszOperator, RieszQuadConfig};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundParams<T> {
    pub rho_bar: T,
    pub sqrt_rho_bar: T,
}

impl<T: Real> BackgroundParams<T> {
    pub fn new(rho_bar: T) -> Result<Self> {
        if !(rho_bar > T::zero() && rho_bar.is_finite()) {
            return Err(Error::Argument(format!("background density must be positive, got {rho_bar}")));
        }
        Ok(Self { rho_bar, sqrt_rho_bar: rho_bar.sqrt() })
    }
}

/// `Ψ(φ) = (2/3)|ρ̄+φ|^{3/2} − (2/3)ρ̄^{3/2} − ρ̄^{1/2}φ`.
pub fn psi<T: Real>(bg: &BackgroundParams<T>, phi: T) -> T {
    let two_thirds = T::lit(2.0 / 3.0);
    let s = bg.rho_bar + phi;
    // Small |φ|: Ψ = φ²/(4√ρ̄)·(1 − φ/(6ρ̄) + ...) computed without cancellation.
    if phi.abs() < T::lit(1e-3) * bg.rho_bar {
        let x = phi / bg.rho_bar;
        let series = T::one() - x / T::lit(6.0) + x * x / T::lit(16.0) - x * x * x * T::lit(3.0 / 96.0)
            + x * x * x * x * T::lit(7.0 / 384.0);
        return phi * phi / (T::lit(4.0) * bg.sqrt_rho_bar) * series;
    }
    two_thirds * s.abs() * s.abs().sqrt() - two_thirds * bg.rho_bar * bg.sqrt_rho_bar - bg.sqrt_rho_bar * phi
}

/// `Ψ′(φ) = |ρ̄+φ|^{1/2}·sgn(ρ̄+φ) − ρ̄^{1/2}`.
pub fn psi_prime<T: Real>(bg: &BackgroundParams<T>, phi: T) -> T {
    let s = bg.rho_bar + phi;
    let root = s.abs().sqrt();
    if s >= T::zero() {
        // (√s − √ρ̄) = φ/(√s + √ρ̄)
        phi / (root + bg.sqrt_rho_bar)
    } else {
        -root - bg.sqrt_rho_bar
    }
}

/// `S(u) = |√ρ̄+u|(√ρ̄+u) − ρ̄`, the inverse of `Ψ′`.
pub fn s_inverse<T: Real>(bg: &BackgroundParams<T>, u: T) -> T {
    let a = bg.sqrt_rho_bar + u;
    if a >= T::zero() {
        u * (T::lit(2.0) * bg.sqrt_rho_bar + u)
    } else {
        -a * a - bg.rho_bar
    }
}

/// `S′(u) = 2|√ρ̄+u|`.
pub fn s_inverse_prime<T: Real>(bg: &BackgroundParams<T>, u: T) -> T {
    T::lit(2.0) * (bg.sqrt_rho_bar + u).abs()
}

/// `|u|u`.
pub fn neutral_nonlinearity<T: Real>(u: T) -> T {
    u.abs() * u
}

/// Energy split into its three terms; `total = kinetic − external + coulomb`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown<T> {
    pub kinetic: T,
    pub external: T,
    pub coulomb: T,
    pub total: T,
}

impl<T: Real> EnergyBreakdown<T> {
    fn new(kinetic: T, external: T, coulomb: T) -> Self {
        Self { kinetic, external, coulomb, total: kinetic - external + coulomb }
    }
}

/// `∫f·g d²x` including the tails.
pub(crate) fn pairing<T: Real>(f: &RadialFunction<T>, g: &RadialFunction<T>) -> Result<T> {
    if !f.grid().same_as(g.grid()) {
        return Err(Error::GridMismatch);
    }
    let values = f.values().iter().zip(g.values()).map(|(&a, &b)| a * b).collect();
    let prod = RadialFunction::new(f.grid().clone(), values, f.tail().product(g.tail()))?
        .with_inner_value(f.inner_value() * g.inner_value());
    integrate_radial(&prod)
}

/// `(1/2)∫U_f f` with the potential from `op`.
pub(crate) fn coulomb_energy<T: Real>(f: &RadialFunction<T>, op: &RieszOperator<T>) -> Result<T> {
    let u = op.apply(f)?;
    Ok(pairing(&u, f)? * T::lit(0.5))
}

/// `ℰ₀(ρ)` for the neutral model.
pub fn energy_neutral<T: Real>(rho: &RadialFunction<T>, v: &RadialFunction<T>) -> Result<EnergyBreakdown<T>> {
    let op = RieszOperator::new(rho.grid(), RieszQuadConfig::default())?;
    energy_neutral_with(rho, v, &op)
}

pub fn energy_neutral_with<T: Real>(
    rho: &RadialFunction<T>,
    v: &RadialFunction<T>,
    op: &RieszOperator<T>,
) -> Result<EnergyBreakdown<T>> {
    let two_thirds = T::lit(2.0 / 3.0);
    let kin = rho.map(rho.tail().abs_pow(T::lit(1.5), two_thirds), |_, x| two_thirds * x.abs() * x.abs().sqrt())?;
    Ok(EnergyBreakdown::new(integrate_radial(&kin)?, pairing(rho, v)?, coulomb_energy(rho, op)?))
}

/// `ℰ(φ) = ∫Ψ(φ) − ∫φV + (1/2)∫U_φ φ` for the background model.
pub fn energy_background<T: Real>(
    phi: &RadialFunction<T>,
    bg: &BackgroundParams<T>,
    v: &RadialFunction<T>,
) -> Result<EnergyBreakdown<T>> {
    let op = RieszOperator::new(phi.grid(), RieszQuadConfig::default())?;
    energy_background_with(phi, bg, v, &op)
}

pub fn energy_background_with<T: Real>(
    phi: &RadialFunction<T>,
    bg: &BackgroundParams<T>,
    v: &RadialFunction<T>,
    op: &RieszOperator<T>,
) -> Result<EnergyBreakdown<T>> {
    let quarter = T::lit(0.25) / bg.sqrt_rho_bar;
    let kin = phi.map(phi.tail().abs_pow(T::lit(2.0), quarter), |_, x| psi(bg, x))?;
    Ok(EnergyBreakdown::new(integrate_radial(&kin)?, pairing(phi, v)?, coulomb_energy(phi, op)?))
}
