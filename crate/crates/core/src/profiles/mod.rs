//! One-variable smooth profiles and the Hamiltonians built from them.
//!
//! `μ` is the smooth step `1` on `x <= 0`, `0` on `x >= 1`, decreasing in
//! between with a single inflection at `1/2` and `μ(x) + μ(1 - x) = 1`.

pub mod squeeze;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value and first two derivatives of a one-variable function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet1 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet1 {
    pub const ZERO: Jet1 = Jet1 {
        v: 0.0,
        d1: 0.0,
        d2: 0.0,
    };

    pub fn constant(v: f64) -> Self {
        Jet1 { v, d1: 0.0, d2: 0.0 }
    }
}

/// `μ` with its first two derivatives.
///
/// Written as `μ = 1 / (1 + e^w)` with `w(x) = 1/(1-x) - 1/x`, which is the
/// same as `φ(1-x) / (φ(x) + φ(1-x))` for `φ(x) = e^{-1/x}` but does not
/// underflow in the quotient.
pub fn mu_jet(x: f64) -> Jet1 {
    if x <= 0.0 {
        return Jet1::constant(1.0);
    }
    if x >= 1.0 {
        return Jet1::ZERO;
    }
    let y = 1.0 - x;
    let w = 1.0 / y - 1.0 / x;
    let w1 = 1.0 / (y * y) + 1.0 / (x * x);
    let w2 = 2.0 / (y * y * y) - 2.0 / (x * x * x);
    let (v, vv) = if w > 0.0 {
        let e = (-w).exp();
        (e / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
    } else {
        let e = w.exp();
        (1.0 / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
    };
    // vv = μ(1 - μ)
    Jet1 {
        v,
        d1: -vv * w1,
        d2: vv * (1.0 - 2.0 * v) * w1 * w1 - vv * w2,
    }
}

pub fn mu(x: f64) -> f64 {
    mu_jet(x).v
}

/// Maximum of `|μ'|`, attained at `x = 1/2`.
pub const MU_MAX_SLOPE: f64 = 2.0;

/// `∫_0^u μ(x) dx` for `u ∈ [0, 1]` (clamped outside), by composite
/// Gauss–Legendre quadrature. `M(1) = 1/2` by the symmetry of `μ`.
pub fn mu_integral(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 0.5;
    }
    // symmetry keeps the quadrature on the short side
    if u > 0.5 {
        // ∫_0^u μ = 1/2 - ∫_u^1 μ = 1/2 - ∫_0^{1-u} (1 - μ)
        let s = 1.0 - u;
        return 0.5 - (s - gauss_legendre(mu, 0.0, s));
    }
    gauss_legendre(mu, 0.0, u)
}

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const PANELS: usize = 32;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + i as f64 * h;
        let mid = lo + 0.5 * h;
        let s: f64 = GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(x, w)| w * f(mid + 0.5 * h * x))
            .sum();
        total += 0.5 * h * s;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothProfile {
    Mu,
    /// `g_{m,S,ε}(x) = (S - m) μ(|x|/ε) + m`: `S` at `0`, `m` for `|x| >= ε`.
    G { m: f64, s: f64, eps: f64 },
    /// `f_{m,S,ε} = -g_{-S,-m,ε}`: `m` at `0`, `S` for `|x| >= ε`.
    F { m: f64, s: f64, eps: f64 },
    /// `ν^k(x) = μ(|x| - k)`.
    Nu { k: f64 },
}

impl SmoothProfile {
    pub fn mu() -> Self {
        SmoothProfile::Mu
    }

    pub fn g(m: f64, s: f64, eps: f64) -> Result<Self> {
        check_params(m, s, eps)?;
        Ok(SmoothProfile::G { m, s, eps })
    }

    pub fn f(m: f64, s: f64, eps: f64) -> Result<Self> {
        check_params(m, s, eps)?;
        Ok(SmoothProfile::F { m, s, eps })
    }

    pub fn nu(k: f64) -> Self {
        SmoothProfile::Nu { k }
    }

    pub fn jet(&self, x: f64) -> Jet1 {
        match *self {
            SmoothProfile::Mu => mu_jet(x),
            SmoothProfile::G { m, s, eps } => {
                let j = abs_scaled(x, eps);
                Jet1 {
                    v: (s - m) * j.v + m,
                    d1: (s - m) * j.d1,
                    d2: (s - m) * j.d2,
                }
            }
            SmoothProfile::F { m, s, eps } => {
                let j = abs_scaled(x, eps);
                Jet1 {
                    v: s - (s - m) * j.v,
                    d1: -(s - m) * j.d1,
                    d2: -(s - m) * j.d2,
                }
            }
            SmoothProfile::Nu { k } => {
                let sign = if x < 0.0 { -1.0 } else { 1.0 };
                let j = mu_jet(x.abs() - k);
                Jet1 {
                    v: j.v,
                    d1: sign * j.d1,
                    d2: j.d2,
                }
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).v
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.jet(x).d1
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.jet(x).d2
    }

    /// Width of the transition region of a `g`/`f` profile.
    pub fn eps(&self) -> Option<f64> {
        match *self {
            SmoothProfile::G { eps, .. } | SmoothProfile::F { eps, .. } => Some(eps),
            SmoothProfile::Mu => Some(1.0),
            SmoothProfile::Nu { .. } => None,
        }
    }
}

fn check_params(m: f64, s: f64, eps: f64) -> Result<()> {
    if !(m < s) || !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::BadProfileParams { m, s, eps });
    }
    Ok(())
}

/// Jet of `x ↦ μ(|x| / ε)`; smooth at 0 because `μ` is flat there.
fn abs_scaled(x: f64, eps: f64) -> Jet1 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let j = mu_jet(x.abs() / eps);
    Jet1 {
        v: j.v,
        d1: sign * j.d1 / eps,
        d2: j.d2 / (eps * eps),
    }
}

/// The two solutions `0 < s⁰ < s¹ < ε` of `h'(x) = slope` for a `g`/`f`
/// profile, whose derivative on `(0, ε)` is unimodal with extremum at `ε/2`.
pub fn solve_slope_equation(h: &SmoothProfile, slope: f64) -> Result<(f64, f64)> {
    let eps = h.eps().ok_or(Error::NoRoot { target: slope, eps: f64::NAN })?;
    let mid = 0.5 * eps;
    let residual = |x: f64| h.d1(x) - slope;
    let at_mid = residual(mid);
    // h' vanishes at both ends of (0, ε); the target must be passed at ε/2
    let at_end = residual(0.0);
    if at_mid == 0.0 {
        return Ok((mid, mid));
    }
    if at_mid.signum() == at_end.signum() {
        return Err(Error::NoRoot { target: slope, eps });
    }
    let lo = bisect_then_newton(h, slope, 0.0, mid);
    let hi = bisect_then_newton(h, slope, mid, eps);
    Ok((lo, hi))
}

fn bisect_then_newton(h: &SmoothProfile, slope: f64, mut a: f64, mut b: f64) -> f64 {
    let f = |x: f64| h.d1(x) - slope;
    let fa_sign = f(a).signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m).signum() == fa_sign {
            a = m;
        } else {
            b = m;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..3 {
        let d2 = h.d2(x);
        if d2 == 0.0 {
            break;
        }
        let next = x - f(x) / d2;
        if next.is_finite() && next > a - (b - a) && next < b + (b - a) {
            x = next;
        }
    }
    x
}
