//! Special functions behind the radial kernels.
//!
//! * `K(k) = ∫_0^{π/2} dθ / sqrt(1 - k² sin²θ)` (modulus convention, not `m = k²`),
//!   evaluated by the arithmetic–geometric mean.
//! * `₂F₁(3/2, 3/2; 1; z)`, which diverges like `(1-z)^{-2}` at `z = 1`.
//!   Direct series for `z <= 1/2`, the `z -> 1-z` connection formula for the
//!   degenerate case `c - a - b = -2` above that.
//! * The half-Laplacian kernel `𝒦(τ) = 2π τ^{-2} ₂F₁(3/2, 3/2; 1; τ^{-2})`.
//! * The convolution kernel `φ(t) = 2K(sech(t/2)) / (π(1+e^{-t})) - θ(t)`.

use crate::{Error, Real, Result};

/// Complete elliptic integral of the first kind, modulus `k ∈ [0, 1)`.
pub fn elliptic_k<T: Real>(k: T) -> Result<T> {
    if !(k >= T::zero() && k < T::one()) {
        return Err(Error::Domain { function: "elliptic_k", value: k.as_f64(), domain: "[0, 1)" });
    }
    let kp = ((T::one() - k) * (T::one() + k)).sqrt();
    elliptic_k_complement(kp)
}

/// `K` expressed through the complementary modulus `k' = sqrt(1 - k²) ∈ (0, 1]`.
///
/// Near `k = 1` this avoids the cancellation in `1 - k²`.
pub fn elliptic_k_complement<T: Real>(kp: T) -> Result<T> {
    if kp == T::zero() {
        return Err(Error::Singularity { function: "elliptic_k", value: 1.0 });
    }
    if !(kp > T::zero() && kp <= T::one()) {
        return Err(Error::Domain { function: "elliptic_k_complement", value: kp.as_f64(), domain: "(0, 1]" });
    }
    Ok(T::FRAC_PI_2() / agm(T::one(), kp))
}

pub(crate) fn agm<T: Real>(mut a: T, mut b: T) -> T {
    let tol = T::epsilon() * T::lit(4.0);
    for _ in 0..64 {
        if (a - b).abs() <= tol * a {
            break;
        }
        let an = (a + b) * T::lit(0.5);
        b = (a * b).sqrt();
        a = an;
    }
    (a + b) * T::lit(0.5)
}

/// Direct power series of `₂F₁(3/2, 3/2; 1; z)` together with a rigorous bound
/// on the truncated remainder.
///
/// Term ratios `((n + 3/2)/(n + 1))² z` decrease monotonically to `z`, so once a
/// ratio bound `q < 1` holds the geometric tail bounds the remainder.
pub fn hyp2f1_3half_series<T: Real>(z: T) -> Result<(T, T)> {
    if !(z >= T::zero() && z < T::one()) {
        return Err(Error::Domain { function: "hyp2f1_3half_series", value: z.as_f64(), domain: "[0, 1)" });
    }
    let eps = T::epsilon();
    let mut term = T::one();
    let mut sum = T::one();
    let mut n = T::zero();
    let max_terms = 10_000_000usize;
    for _ in 0..max_terms {
        let ratio = ((n + T::lit(1.5)) / (n + T::one())).powi(2) * z;
        term = term * ratio;
        sum = sum + term;
        n = n + T::one();
        let q = ((n + T::lit(1.5)) / (n + T::one())).powi(2) * z;
        if q < T::one() {
            let bound = term * q / (T::one() - q);
            if bound <= eps * sum * T::lit(0.25) {
                return Ok((sum, bound));
            }
        }
    }
    Err(Error::ToleranceNotMet { estimate: sum.as_f64(), error: f64::NAN, requested: eps.as_f64() })
}

/// `₂F₁(3/2, 3/2; 1; z)` on `[0, 1)`.
pub fn hyp2f1_3half<T: Real>(z: T) -> Result<T> {
    if !(z >= T::zero() && z < T::one()) {
        return Err(Error::Domain { function: "hyp2f1_3half", value: z.as_f64(), domain: "[0, 1)" });
    }
    if z <= T::lit(0.5) {
        return hyp2f1_3half_series(z).map(|(v, _)| v);
    }
    hyp2f1_3half_complement(T::one() - z)
}

/// `₂F₁(3/2, 3/2; 1; 1 - w)` for `w ∈ (0, 1]`, accurate for small `w`.
///
/// For `w >= 1/2` this falls back to the direct series in `z = 1 - w`.
pub fn hyp2f1_3half_complement<T: Real>(w: T) -> Result<T> {
    if !(w > T::zero() && w <= T::one()) {
        return Err(Error::Domain { function: "hyp2f1_3half_complement", value: w.as_f64(), domain: "(0, 1]" });
    }
    if w >= T::lit(0.5) {
        return hyp2f1_3half_series(T::one() - w).map(|(v, _)| v);
    }
    let pi = T::PI();
    let ln_w = w.ln();
    let four_ln2 = T::lit(4.0) * T::LN_2();
    // c_n = ((3/2)_n)² / (n! (n+2)!), harmonic sums H_n, H_{n+2}, odd sums O_{n+1}.
    let mut c = T::lit(0.5);
    let mut h_n = T::zero();
    let mut h_n2 = T::lit(1.5);
    let mut odd = T::one();
    let mut wn = T::one();
    let mut log_series = T::zero();
    for n in 0..200usize {
        let nf = T::from_usize(n).unwrap();
        let bracket = ln_w - h_n - h_n2 - four_ln2 + T::lit(4.0) * odd;
        let term = c * wn * bracket;
        log_series = log_series + term;
        if term.abs() <= T::epsilon() * log_series.abs().max(T::min_positive_value()) && n > 2 {
            break;
        }
        // advance n -> n + 1
        let a = nf + T::lit(1.5);
        c = c * a * a / ((nf + T::one()) * (nf + T::lit(3.0)));
        h_n = h_n + T::one() / (nf + T::one());
        h_n2 = h_n2 + T::one() / (nf + T::lit(3.0));
        odd = odd + T::one() / (T::lit(2.0) * nf + T::lit(3.0));
        wn = wn * w;
    }
    let singular = T::lit(4.0) / pi * (T::one() - w * T::lit(0.25)) / (w * w);
    let value = singular - log_series / (T::lit(4.0) * pi);
    if !value.is_finite() {
        return Err(Error::Overflow { function: "hyp2f1_3half", value: (T::one() - w).as_f64() });
    }
    Ok(value)
}

/// Kernel of the radial half-Laplacian, `𝒦(τ) = 2π τ^{-2} ₂F₁(3/2, 3/2; 1; τ^{-2})`, `τ > 1`.
pub fn vf_kernel<T: Real>(tau: T) -> Result<T> {
    if tau == T::one() {
        return Err(Error::Singularity { function: "vf_kernel", value: 1.0 });
    }
    if !(tau > T::one()) || !tau.is_finite() {
        return Err(Error::Domain { function: "vf_kernel", value: tau.as_f64(), domain: "(1, ∞)" });
    }
    let z = (tau * tau).recip();
    // 1 - τ^{-2} without cancellation near τ = 1
    let w = (tau - T::one()) * (tau + T::one()) * z;
    let f = if z <= T::lit(0.5) { hyp2f1_3half_series(z)?.0 } else { hyp2f1_3half_complement(w)? };
    Ok(T::TAU() * z * f)
}

/// `φ(t) = 2K(1/cosh(t/2)) / (π(1 + e^{-t})) - θ(t)` for `t ≠ 0`.
///
/// Positive on both half-lines, exponentially small as `|t| → ∞`
/// (`φ(t) ≈ e^{-2t}/4` for large positive `t`), logarithmic at `t = 0`.
pub fn katsnelson_phi<T: Real>(t: T) -> Result<T> {
    if t == T::zero() {
        return Err(Error::Singularity { function: "katsnelson_phi", value: 0.0 });
    }
    if !t.is_finite() {
        return Err(Error::Domain { function: "katsnelson_phi", value: t.as_f64(), domain: "finite t ≠ 0" });
    }
    let half = T::lit(0.5);
    // sech²(t/2) < 1/2 beyond this point: series in m avoids the cancellation
    let series_from = T::lit(1.762_747_174_039_086);
    if t > series_from {
        let x = (-t).exp();
        let opx = T::one() + x;
        let m = T::lit(4.0) * x / (opx * opx);
        // Σ_{n≥2} ((1/2)_n / n!)² m^n
        let mut a = T::lit(0.25);
        let mut mn = m;
        let mut rest = T::zero();
        for n in 1..400usize {
            let nf = T::from_usize(n).unwrap();
            let next = (nf + half) / (nf + T::one());
            a = a * next * next;
            mn = mn * m;
            let term = a * mn;
            rest = rest + term;
            if term <= T::epsilon() * rest {
                break;
            }
        }
        let lead = -(x * x) * (T::lit(2.0) + x) / (opx * opx);
        return Ok((lead + rest) / opx);
    }
    let kp = (t.abs() * half).tanh();
    let k = elliptic_k_complement(kp)?;
    let base = T::lit(2.0) * k / (T::PI() * (T::one() + (-t).exp()));
    Ok(if t > T::zero() { base - T::one() } else { base })
}
