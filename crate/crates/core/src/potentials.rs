//! External potentials: point charge at height `d`, dipole profile and the
//! logarithmic barrier, with closed-form half-Laplacians where they exist.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::radial::{RadialFunction, RadialGrid, TailModel};
use crate::{io, Error, Real, Result};

#[derive(Debug, Clone)]
pub enum PotentialSpec<T> {
    /// `Z/(2π√(d²+r²))`, `d > 0`.
    PointCharge {
        charge: T,
        height: T,
    },
    /// `Z/(2π(1+r²)^{3/2})`.
    Dipole {
        charge: T,
    },
    /// `λ/(r ln(er))` for `r > 1`, a quintic on `[0, 1]`.
    Barrier {
        lambda: T,
    },
    Tabulated(RadialFunction<T>),
}

impl<T: Real> PotentialSpec<T> {
    pub fn point_charge(charge: T, height: T) -> Result<Self> {
        let spec = Self::PointCharge { charge, height };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dipole(charge: T) -> Result<Self> {
        let spec = Self::Dipole { charge };
        spec.validate()?;
        Ok(spec)
    }

    pub fn barrier(lambda: T) -> Result<Self> {
        let spec = Self::Barrier { lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::PointCharge { charge, height } => {
                if !charge.is_finite() {
                    return Err(Error::InvalidSpec(format!("charge must be finite, got {charge}")));
                }
                if !(height > T::zero() && height.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "point charge height must be positive, got {height}; the energy is unbounded below at d = 0"
                    )));
                }
            }
            Self::Dipole { charge } if !charge.is_finite() => {
                return Err(Error::InvalidSpec(format!("charge must be finite, got {charge}")));
            }
            Self::Barrier { lambda } if !(lambda > T::zero() && lambda.is_finite()) => {
                return Err(Error::InvalidSpec(format!("barrier lambda must be positive, got {lambda}")));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::PointCharge { .. } => "point_charge",
            Self::Dipole { .. } => "dipole",
            Self::Barrier { .. } => "barrier",
            Self::Tabulated(_) => "tabulated",
        }
    }
}

/// `1/(r ln(er))` for `r > 1`; on `[0, 1]` the quintic
/// `2 − r² + 9r³/2 − 9r⁴ + 9r⁵/2`, which matches value and two derivatives at
/// `r = 1`, is flat at the origin and decreases monotonically.
pub fn barrier_profile<T: Real>(r: T) -> T {
    if r > T::one() {
        return T::one() / (r * (T::one() + r.ln()));
    }
    let c = [2.0, 0.0, -1.0, 4.5, -9.0, 4.5];
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * r + T::lit(ci))
}

pub fn eval_potential<T: Real>(spec: &PotentialSpec<T>, r: T) -> T {
    let two_pi = T::TAU();
    match spec {
        PotentialSpec::PointCharge { charge, height } => *charge / (two_pi * (*height * *height + r * r).sqrt()),
        PotentialSpec::Dipole { charge } => *charge / (two_pi * (T::one() + r * r).powf(T::lit(1.5))),
        PotentialSpec::Barrier { lambda } => *lambda * barrier_profile(r),
        PotentialSpec::Tabulated(f) => f.eval(r),
    }
}

/// Closed-form `(−Δ)^{1/2}V` for point charges and dipoles.
pub fn eval_fraclap_analytic<T: Real>(spec: &PotentialSpec<T>, r: T) -> Result<T> {
    match spec {
        PotentialSpec::PointCharge { charge, height } => {
            let v = eval_potential(spec, r);
            let pi = T::PI();
            Ok(T::lit(4.0) * pi * pi * *height / (*charge * *charge) * v * v * v)
        }
        PotentialSpec::Dipole { charge } => {
            let s = T::one() + r * r;
            Ok(*charge * (T::lit(2.0) - r * r) / (T::TAU() * s * s * s.sqrt()))
        }
        PotentialSpec::Barrier { .. } => Err(Error::UnsupportedKind("barrier")),
        PotentialSpec::Tabulated(_) => Err(Error::UnsupportedKind("tabulated")),
    }
}

/// Samples the potential on the grid with a tail model matched at `r_max`.
/// Tabulated potentials are returned unchanged.
pub fn sample_potential<T: Real>(spec: &PotentialSpec<T>, grid: &RadialGrid<T>) -> Result<RadialFunction<T>> {
    spec.validate()?;
    if let PotentialSpec::Tabulated(f) = spec {
        return Ok(f.clone());
    }
    let f =
        RadialFunction::from_fn(grid, |r| eval_potential(spec, r))?.with_inner_value(eval_potential(spec, T::zero()));
    let tail = match spec {
        PotentialSpec::PointCharge { .. } => f.power_tail_at_end(T::one()),
        PotentialSpec::Dipole { .. } => f.power_tail_at_end(T::lit(3.0)),
        PotentialSpec::Barrier { lambda } => {
            TailModel::InverseLog { coefficient: *lambda, shift: T::one(), drift: T::zero() }
        }
        PotentialSpec::Tabulated(_) => unreachable!(),
    };
    Ok(f.with_tail(tail))
}

/// Potential entry of an experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: String,
    #[serde(rename = "Z", alias = "z", default)]
    pub charge: Option<f64>,
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub table: Option<String>,
}

impl PotentialConfig {
    /// Builds the potential; table paths are resolved against `base`.
    pub fn to_spec(&self, base: &Path) -> Result<PotentialSpec<f64>> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidSpec(format!("potential kind `{}` requires `{name}`", self.kind)))
        };
        match self.kind.as_str() {
            "point_charge" => PotentialSpec::point_charge(need(self.charge, "Z")?, need(self.d, "d")?),
            "dipole" => PotentialSpec::dipole(need(self.charge, "Z")?),
            "barrier" => PotentialSpec::barrier(self.lambda.unwrap_or(1.0)),
            "tabulated" => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::InvalidSpec("potential kind `tabulated` requires `table`".into()))?;
                Ok(PotentialSpec::Tabulated(io::read_radial(&base.join(path))?))
            }
            other => Err(Error::InvalidSpec(format!("unknown potential kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::make_log_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn evaluation_examples() {
        let v = PotentialSpec::point_charge(1.0, 1.0).unwrap();
        assert_relative_eq!(eval_potential(&v, 0.0), 1.0 / (2.0 * PI), max_relative = 1e-15);
        let w = PotentialSpec::dipole(2.0 * PI).unwrap();
        assert_relative_eq!(eval_potential(&w, 0.0), 1.0, max_relative = 1e-15);
        let b = PotentialSpec::barrier(1.0).unwrap();
        assert_relative_eq!(eval_potential(&b, E), 1.0 / (2.0 * E), max_relative = 1e-15);
        assert_eq!(eval_potential(&b, 0.0), 2.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(PotentialSpec::point_charge(1.0, 0.0), Err(Error::InvalidSpec(_))));
        assert!(matches!(PotentialSpec::point_charge(1.0, -1.0), Err(Error::InvalidSpec(_))));
        assert!(matches!(PotentialSpec::barrier(0.0), Err(Error::InvalidSpec(_))));
        let raw = PotentialSpec::PointCharge { charge: 1.0, height: 0.0 };
        let g = make_log_grid(0.1, 10.0, 20).unwrap();
        assert!(sample_potential(&raw, &g).is_err());
    }

    #[test]
    fn analytic_half_laplacians() {
        let v = PotentialSpec::point_charge(1.0, 1.0).unwrap();
        assert_relative_eq!(eval_fraclap_analytic(&v, 0.0).unwrap(), 1.0 / (2.0 * PI), max_relative = 1e-14);
        let w = PotentialSpec::dipole(3.0).unwrap();
        assert!(eval_fraclap_analytic(&w, 2f64.sqrt()).unwrap().abs() < 1e-15);
        assert!(eval_fraclap_analytic(&w, 1.0).unwrap() > 0.0);
        assert!(eval_fraclap_analytic(&w, 2.0).unwrap() < 0.0);
        let b = PotentialSpec::barrier(1.0).unwrap();
        assert_eq!(eval_fraclap_analytic(&b, 1.0), Err(Error::UnsupportedKind("barrier")));
    }

    #[test]
    fn barrier_extension_is_c2_and_decreasing() {
        let (a, b): (f64, f64) = (barrier_profile(1.0 - 1e-6), barrier_profile(1.0 + 1e-6));
        assert!((a - b).abs() < 1e-5);
        let d = |r: f64, e: f64| (barrier_profile(r + e) - barrier_profile(r - e)) / (2.0 * e);
        assert_relative_eq!(d(1.0 - 1e-3, 1e-4), d(1.0 + 1e-3, 1e-4), max_relative = 1e-2);
        let dd =
            |r: f64, e: f64| (barrier_profile(r + e) - 2.0 * barrier_profile(r) + barrier_profile(r - e)) / (e * e);
        assert_relative_eq!(dd(1.0 - 1e-5, 1e-5), 7.0, max_relative = 1e-3);
        assert_relative_eq!(dd(1.0 + 1e-5, 1e-5), 7.0, max_relative = 1e-3);
        let mut prev = f64::INFINITY;
        for i in 0..=4000 {
            let v = barrier_profile(i as f64 * 1e-3);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn sampled_tails() {
        let g = make_log_grid(1e-3, 1e3, 100).unwrap();
        let v = sample_potential(&PotentialSpec::point_charge(1.0, 1.0).unwrap(), &g).unwrap();
        assert!(matches!(v.tail(), TailModel::Power { exponent, .. } if *exponent == 1.0));
        let w = sample_potential(&PotentialSpec::dipole(1.0).unwrap(), &g).unwrap();
        assert!(matches!(w.tail(), TailModel::Power { exponent, .. } if *exponent == 3.0));
        let b = sample_potential(&PotentialSpec::barrier(2.0).unwrap(), &g).unwrap();
        assert_eq!(*b.tail(), TailModel::InverseLog { coefficient: 2.0, shift: 1.0, drift: 0.0 });
        for (&r, &x) in g.nodes().iter().zip(v.values()) {
            assert_eq!(x, eval_potential(&PotentialSpec::point_charge(1.0, 1.0).unwrap(), r));
        }
        let t = sample_potential(&PotentialSpec::Tabulated(b.clone()), &g).unwrap();
        assert_eq!(t.values(), b.values());
        assert_eq!(*t.tail(), *b.tail());
    }

    #[test]
    fn config_entries() {
        let base = Path::new(".");
        let c: PotentialConfig = parse_entry(r#"{"kind":"point_charge","Z":10.0,"d":2.0}"#);
        assert!(
            matches!(c.to_spec(base).unwrap(), PotentialSpec::PointCharge { charge, height } if charge == 10.0 && height == 2.0)
        );
        let c: PotentialConfig = parse_entry(r#"{"kind":"point_charge","Z":1.0,"d":0.0}"#);
        assert!(matches!(c.to_spec(base), Err(Error::InvalidSpec(_))));
        let c: PotentialConfig = parse_entry(r#"{"kind":"dipole"}"#);
        assert!(matches!(c.to_spec(base), Err(Error::InvalidSpec(_))));
        let c: PotentialConfig = parse_entry(r#"{"kind":"quadrupole","Z":1.0}"#);
        assert!(matches!(c.to_spec(base), Err(Error::InvalidSpec(_))));
    }

    fn parse_entry(s: &str) -> PotentialConfig {
        serde_json::from_str(s).unwrap()
    }

    proptest! {
        #[test]
        fn point_charge_scaling(z in 0.1f64..50.0, d in 0.1f64..10.0, r in 0.0f64..1e3) {
            let a = eval_potential(&PotentialSpec::point_charge(z, d).unwrap(), r);
            let b = eval_potential(&PotentialSpec::point_charge(z, 1.0).unwrap(), r / d) / d;
            prop_assert!((a - b).abs() <= 1e-14 * a);
        }

        #[test]
        fn monotone_profiles(r in 0.0f64..1e3, dr in 1e-6f64..1.0) {
            for spec in [
                PotentialSpec::point_charge(1.0, 1.0).unwrap(),
                PotentialSpec::dipole(1.0).unwrap(),
                PotentialSpec::barrier(1.0).unwrap(),
            ] {
                prop_assert!(eval_potential(&spec, r + dr) < eval_potential(&spec, r));
            }
            prop_assert!(eval_fraclap_analytic(&PotentialSpec::point_charge(3.0, 0.5).unwrap(), r).unwrap() > 0.0);
        }
    }
}
