//! Bessel functions of the first kind for integer and half-integer order,
//! the Gamma function at half-integers, sphere volumes, and the Fourier
//! transform of the unit-sphere surface measure.
//!
//! `J_ν(t)` is evaluated in three regimes:
//!
//! * `t < 8`: ascending power series (largest term stays below ~10², so the
//!   alternating sum loses at most two digits);
//! * `t ≥ max(30, ν²)`: Hankel's large-argument expansion, summed until the
//!   terms drop below 10⁻¹⁷ or start to grow;
//! * otherwise: Miller's backward recurrence, normalized by
//!   `J₀ + 2ΣJ₂ₘ = 1` for integer orders and by the closed forms of
//!   `J_{±1/2}` for half-integer orders.
//!
//! Fourier convention throughout is `μ̂(ξ) = ∫ e^{−2πi x·ξ} dμ(x)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 8.0;
const HANKEL_MIN: f64 = 30.0;
/// Orders above this are rejected; accuracy is characterized up to ν = 25.
const MAX_TWICE_NU: i32 = 100;

/// Order ν of a Bessel function, stored as `2ν` so half-integers are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BesselOrder {
    twice_nu: i32,
}

impl BesselOrder {
    pub fn from_twice(twice_nu: i32) -> Result<Self> {
        if !(-1..=MAX_TWICE_NU).contains(&twice_nu) {
            return Err(Error::Domain(format!(
                "Bessel order 2ν = {twice_nu} outside [-1, {MAX_TWICE_NU}]"
            )));
        }
        Ok(Self { twice_nu })
    }

    pub fn integer(n: u32) -> Self {
        Self::from_twice(2 * n as i32).expect("integer order in range")
    }

    /// Order of the Bessel function in the transform of `S^{n−1} ⊂ ℝⁿ`: `ν = (n−2)/2`.
    pub fn for_sphere(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("sphere transform needs n >= 2, got {n}")));
        }
        Self::from_twice(n as i32 - 2)
    }

    pub fn twice_nu(self) -> i32 {
        self.twice_nu
    }

    pub fn nu(self) -> f64 {
        f64::from(self.twice_nu) / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.twice_nu % 2 == 0
    }
}

/// `Γ(x)` for `x = twice_x / 2 > 0`, by exact recurrence from `Γ(1)` or `Γ(1/2)`.
pub fn gamma_half_integer(twice_x: u32) -> f64 {
    assert!(twice_x > 0, "Gamma pole at 0");
    let (mut g, mut x2) = if twice_x.is_multiple_of(2) {
        (1.0, 2)
    } else {
        (PI.sqrt(), 1)
    };
    while x2 < twice_x {
        g *= f64::from(x2) / 2.0;
        x2 += 2;
    }
    g
}

/// Surface volume of the unit sphere `Sᵐ ⊂ ℝ^{m+1}`: `2π^{(m+1)/2} / Γ((m+1)/2)`.
pub fn sphere_vol(m: usize) -> f64 {
    let half = (m as f64 + 1.0) / 2.0;
    2.0 * PI.powf(half) / gamma_half_integer(m as u32 + 1)
}

/// Bessel function of the first kind `J_ν(t)` for `t ≥ 0`.
pub fn bessel_j(order: BesselOrder, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("bessel_j needs finite t >= 0, got {t}")));
    }
    let nu = order.nu();
    if t == 0.0 {
        return match order.twice_nu {
            0 => Ok(1.0),
            -1 => Err(Error::Domain("J_{-1/2} is singular at 0".into())),
            _ => Ok(0.0),
        };
    }
    if t < SERIES_LIMIT {
        power_series(order, t)
    } else if t >= HANKEL_MIN.max(nu * nu) {
        hankel(order, t)
    } else {
        miller(order, t)
    }
}

fn power_series(order: BesselOrder, t: f64) -> Result<f64> {
    let nu = order.nu();
    let x = 0.5 * t;
    let term0 = x.powf(nu) / gamma_half_integer((order.twice_nu + 2) as u32);
    sum_alternating_series(term0, nu, x * x)
}

/// Sums `Σₘ term₀ · Πⱼ₌₁ᵐ (−x²)/(j(j+ν))`.
fn sum_alternating_series(term0: f64, nu: f64, x2: f64) -> Result<f64> {
    let mut term = term0;
    let mut sum = term0;
    for m in 1..400 {
        let m = f64::from(m);
        term *= -x2 / (m * (m + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && m * m > x2 {
            return Ok(sum);
        }
        if term == 0.0 {
            return Ok(sum);
        }
    }
    Err(Error::Accuracy {
        message: "series did not converge".into(),
        best: sum,
    })
}

fn hankel(order: BesselOrder, t: f64) -> Result<f64> {
    let nu = order.nu();
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    let mut converged = false;
    for k in 1..200u32 {
        let kf = f64::from(k);
        a *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * t);
        let mag = a.abs();
        if a == 0.0 {
            converged = true;
            break;
        }
        if mag > last && k > 10 {
            // Divergent tail: the expansion is only asymptotic.
            converged = last < 1e-15;
            break;
        }
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        last = mag;
        if mag < 1e-17 && k >= 10 {
            converged = true;
            break;
        }
    }
    // ω = t − (2ν+1)π/4, expanded with exact values of the shift so that
    // sin t and cos t carry the only range reduction.
    let shift = (order.twice_nu + 1).rem_euclid(8);
    let (cs, ss) = eighth_turn(shift);
    let (st, ct) = t.sin_cos();
    let cos_w = ct * cs + st * ss;
    let sin_w = st * cs - ct * ss;
    let value = (2.0 / (PI * t)).sqrt() * (p * cos_w - q * sin_w);
    if converged {
        Ok(value)
    } else {
        Err(Error::Accuracy {
            message: format!("Hankel expansion of J_{nu}({t}) did not reach 1e-15"),
            best: value,
        })
    }
}

/// `(cos(mπ/4), sin(mπ/4))` for `m ∈ 0..8`.
fn eighth_turn(m: i32) -> (f64, f64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match m {
        0 => (1.0, 0.0),
        1 => (h, h),
        2 => (0.0, 1.0),
        3 => (-h, h),
        4 => (-1.0, 0.0),
        5 => (-h, -h),
        6 => (0.0, -1.0),
        _ => (h, -h),
    }
}

fn miller(order: BesselOrder, t: f64) -> Result<f64> {
    let half = !order.is_integer();
    let base = if half { 0.5 } else { 0.0 };
    // Index j stands for order j + base; a half-integer order −1/2 is j = −1.
    let target = ((order.nu() - base).round()) as i64;
    let reach = (t.max(target as f64)).ceil();
    let mut start = (reach + 40.0 + 6.0 * reach.sqrt()) as i64;
    if start % 2 == 1 {
        start += 1;
    }
    let stop = if half { -1 } else { 0 };

    let mut f_next = 0.0; // f_{j+1}
    let mut f_cur = 1e-280; // f_j
    let mut at_target = if start == target { f_cur } else { 0.0 };
    let mut even_sum = 0.0; // Σ f_{2m}, m ≥ 1 (integer orders)
    let mut f_half = 0.0; // order +1/2
    let mut j = start;
    while j > stop {
        let order_j = j as f64 + base;
        let f_prev = 2.0 * order_j / t * f_cur - f_next;
        f_next = f_cur;
        f_cur = f_prev;
        j -= 1;
        if j == target {
            at_target = f_cur;
        }
        if !half && j > 0 && j % 2 == 0 {
            even_sum += f_cur;
        }
        if half && j == 0 {
            f_half = f_cur;
        }
        if f_cur.abs() > 1e250 {
            f_cur *= 1e-250;
            f_next *= 1e-250;
            at_target *= 1e-250;
            even_sum *= 1e-250;
            f_half *= 1e-250;
        }
    }
    let value = if half {
        // f_cur is order −1/2 and f_half is order +1/2; both proportional
        // to the true (cos t, sin t) pair up to rounding.
        let (st, ct) = t.sin_cos();
        let r = f_half.hypot(f_cur);
        let proj = (f_half / r) * st + (f_cur / r) * ct;
        (at_target / r) * (2.0 / (PI * t)).sqrt() * proj
    } else {
        at_target / (f_cur + 2.0 * even_sum)
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Accuracy {
            message: format!("backward recurrence for J_{}({t}) overflowed", order.nu()),
            best: f64::NAN,
        })
    }
}

/// `J_m(2πλ)/λ` for integer `m ≥ 1`, finite at `λ = 0`, by its power series.
///
/// Intended for `2πλ < 8`.
pub(crate) fn bessel_j_over_arg(m: u32, lambda: f64) -> f64 {
    let x = PI * lambda;
    // J_m(2x)/λ = π · x^{m−1} Σ (−x²)ʲ / (j!(j+m)!)
    let term0 = PI * x.powi(m as i32 - 1) / gamma_half_integer(2 * m + 2);
    sum_alternating_series(term0, f64::from(m), x * x).unwrap_or(f64::NAN)
}

/// Fourier transform of the surface measure of `S^{n−1} ⊂ ℝⁿ` at radius `r`:
/// `2π r^{−(n−2)/2} J_{(n−2)/2}(2πr)`, continuous at `r = 0` where it equals
/// `Vol(S^{n−1})`.
pub fn sphere_hat(n: usize, r: f64) -> Result<f64> {
    let order = BesselOrder::for_sphere(n)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("sphere_hat needs finite r >= 0, got {r}")));
    }
    let nu = order.nu();
    if 2.0 * PI * r < SERIES_LIMIT {
        // 2π Σ (−1)ᵐ π^{2m+ν} r^{2m} / (m! Γ(m+ν+1))
        let term0 = 2.0 * PI * PI.powf(nu) / gamma_half_integer((order.twice_nu + 2) as u32);
        let x = PI * r;
        sum_alternating_series(term0, nu, x * x)
    } else {
        Ok(2.0 * PI * r.powf(-nu) * bessel_j(order, 2.0 * PI * r)?)
    }
}

/// Leading term `2 cos(2π(r − (n−1)/8)) r^{−(n−1)/2}` of the large-`r`
/// expansion of [`sphere_hat`].
pub fn sphere_hat_leading(n: usize, r: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere transform needs n >= 2, got {n}")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "leading asymptotic term is undefined at r = {r}"
        )));
    }
    let m = (n - 1) as f64;
    Ok(2.0 * (2.0 * PI * (r - m / 8.0)).cos() * r.powf(-m / 2.0))
}
