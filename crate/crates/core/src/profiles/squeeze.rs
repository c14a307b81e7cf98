//! The squeezing pair `H₁ <= H <= H₀` around the loops `{p = 0}` and
//! `{p = R}`, its window constants, and the monotone homotopy between them.

use serde::{Deserialize, Serialize};

use super::{solve_slope_equation, SmoothProfile};
use crate::error::{Error, Result};
use crate::geometry::Chart;
use crate::hamiltonian::{Hamiltonian, Preset};

/// Points per band when sampling band extrema.
pub const BAND_SAMPLES: usize = 512;
/// Minimum distance of `a`, `b`, `c` from any known action value.
pub const SPECTRUM_CLEARANCE: f64 = 1e-6;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConstants {
    pub r: i64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub tau: f64,
    pub eps1: f64,
    pub m_x: f64,
    pub s_y: f64,
    pub m0: f64,
    pub s0: f64,
    pub m1: f64,
    pub s1: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `C = r R`.
    #[serde(rename = "C")]
    pub cap: f64,
    pub sup_h: f64,
    pub inf_h: f64,
    /// `S_H = sup |H|` and `m_H = -sup |H|`.
    pub s_h: f64,
    pub m_h: f64,
    pub c_h: f64,
    pub c_h_prime: f64,
    /// Roots `s⁰ < s¹` of `h₁' = -r`.
    pub s_lo: f64,
    pub s_hi: f64,
}

impl WindowConstants {
    pub fn h0(&self) -> SmoothProfile {
        SmoothProfile::F {
            m: self.m0,
            s: self.s0,
            eps: self.eps1,
        }
    }

    pub fn h1(&self) -> SmoothProfile {
        SmoothProfile::G {
            m: self.m1,
            s: self.s1,
            eps: self.eps1,
        }
    }

    pub fn window_a(&self) -> (f64, f64) {
        (self.m1 - 1.0, self.m1)
    }

    pub fn window_b(&self) -> (f64, f64) {
        (self.cap + self.m0, self.s1)
    }

    pub fn window_c(&self) -> (f64, f64) {
        (self.cap + self.s0, self.cap + self.s0 + 1.0)
    }

    /// `(a', c') = (m₁ - 1, C + S₀ + 1)`, the outer window used on the
    /// covering strip.
    pub fn outer_window(&self) -> (f64, f64) {
        (self.m1 - 1.0, self.cap + self.s0 + 1.0)
    }

    /// Closed-form actions `(x⁰, x¹)` of the `H₀` circles at `p = R - sⁱ`:
    /// the `y`-intercepts of the tangents of slope `-r`.
    pub fn h0_actions(&self) -> (f64, f64) {
        let h0 = self.h0();
        let r = self.r as f64;
        let act = |s: f64| h0.value(-s) + r * (self.big_r - s);
        (act(self.s_lo), act(self.s_hi))
    }

    /// Closed-form actions `(x⁰, x¹)` of the `H₁` circles at `p = sⁱ`.
    pub fn h1_actions(&self) -> (f64, f64) {
        let h1 = self.h1();
        let r = self.r as f64;
        let act = |s: f64| h1.value(s) + r * s;
        (act(self.s_lo), act(self.s_hi))
    }

    /// Names of the invariants that fail; empty when all hold.
    pub fn violations(&self) -> Vec<&'static str> {
        let r = self.r as f64;
        let mut out = vec![];
        let mut check = |ok: bool, name: &'static str| {
            if !ok {
                out.push(name);
            }
        };
        check(self.m_x - self.s_y > self.cap, "m_X - S_Y > C");
        check(self.m0 == self.s_y, "m0 = S_Y");
        check(self.s1 == self.m_x, "S1 = m_X");
        check(
            ((self.s1 - self.m1) - (self.s0 - self.m0)).abs() <= 1e-12 * (1.0 + self.s0.abs()),
            "S1 - m1 = S0 - m0",
        );
        check(self.cap + self.m0 < self.b && self.b < self.s1, "C + m0 < b < S1");
        check(self.m1 - 1.0 < self.a && self.a < self.m1, "m1 - 1 < a < m1");
        check(
            self.cap + self.s0 < self.c && self.c < self.cap + self.s0 + 1.0,
            "C + S0 < c < C + S0 + 1",
        );
        check(self.s1 <= r * (self.big_r - self.eps1) + self.s0, "S1 <= r(R - eps1) + S0");
        check(self.m1 < self.m0, "m1 < m0");
        check(r * self.eps1 + self.m1 <= self.cap + self.m0, "r eps1 + m1 <= C + m0");
        check(self.s1 <= self.s0, "S1 <= S0");
        check(self.s0 <= 3.0 * self.s_h, "S0 <= 3 S_H");
        check(3.0 * self.m_h <= self.m1, "3 m_H <= m1");
        check(
            0.0 < self.s_lo && self.s_lo < self.s_hi && self.s_hi < self.eps1,
            "0 < s0 < s1 < eps1",
        );
        out
    }

    /// Move `a`, `b`, `c` off the given action values (golden-ratio walk
    /// through each window, starting at its midpoint).
    pub fn avoid(&mut self, spectrum: &[f64]) -> Result<()> {
        let pick = |(lo, hi): (f64, f64)| -> Result<f64> {
            let width = hi - lo;
            for j in 0..10_000 {
                let frac = (0.5 + j as f64 * GOLDEN).fract();
                let x = lo + width * frac;
                if x > lo
                    && x < hi
                    && spectrum.iter().all(|s| (s - x).abs() >= SPECTRUM_CLEARANCE)
                {
                    return Ok(x);
                }
            }
            Err(Error::BadParams(format!(
                "window ({lo}, {hi}) is saturated by the action spectrum"
            )))
        };
        self.a = pick(self.window_a())?;
        self.b = pick(self.window_b())?;
        self.c = pick(self.window_c())?;
        Ok(())
    }
}

/// `H₀ = h₀(p - R)`, `H₁ = h₁(p)` and their constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingPair {
    pub h0: Hamiltonian,
    pub h1: Hamiltonian,
    pub wc: WindowConstants,
}

/// Sampling grid for extrema of a planar Hamiltonian over `S¹ × 𝕋¹ × I`.
struct Sampler<'a> {
    h: &'a Hamiltonian,
    qs: Vec<f64>,
    ts: Vec<f64>,
}

impl<'a> Sampler<'a> {
    fn new(h: &'a Hamiltonian, nq: usize, nt: usize) -> Self {
        let qs = if h.is_q_dependent() {
            (0..nq).map(|i| i as f64 / nq as f64).collect()
        } else {
            vec![0.0]
        };
        let ts = if h.is_time_dependent() {
            (0..nt).map(|i| i as f64 / nt as f64).collect()
        } else {
            vec![0.0]
        };
        Sampler { h, qs, ts }
    }

    /// `(inf, sup)` of `H` over `p ∈ [lo, hi]` with `n` samples.
    fn extrema(&self, lo: f64, hi: f64, n: usize) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..n {
            let p = if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            };
            for &q in &self.qs {
                for &t in &self.ts {
                    let v = self.h.value_at(t, &[q, p]);
                    min = min.min(v);
                    max = max.max(v);
                }
            }
        }
        (min, max)
    }
}

/// Largest dyadic `ε₁ = τ/2^j (j >= 1)` with `m_X - S_Y > C` on the widened
/// bands, with the band extrema at that `ε₁`.
pub fn select_eps1(h: &Hamiltonian, big_r: f64, cap: f64, tau: f64) -> Result<(f64, f64, f64)> {
    let sampler = Sampler::new(h, 64, 8);
    let mut eps = tau;
    for _ in 0..40 {
        eps *= 0.5;
        let (m_x, _) = sampler.extrema(-eps, eps, BAND_SAMPLES);
        let (_, s_y) = sampler.extrema(big_r - eps, big_r + eps, BAND_SAMPLES);
        if m_x - s_y > cap {
            return Ok((eps, m_x, s_y));
        }
    }
    Err(Error::NoEpsilon { tau, c: cap })
}

/// Build `H₀`, `H₁` and the window constants for `H` on an annulus (or a
/// torus fundamental domain), class `-r`, and loops at `p = 0`, `p = R`.
/// `tau` defaults to `R / 4`.
pub fn build_squeezing_pair(
    h: &Hamiltonian,
    chart: &Chart,
    r: i64,
    big_r: f64,
    tau: Option<f64>,
) -> Result<SqueezingPair> {
    if h.dof() != 1 || chart.dof() != 1 {
        return Err(Error::UnsupportedDimension(h.dof().max(chart.dof())));
    }
    if r < 1 || !(big_r > 0.0) {
        return Err(Error::BadParams(format!("need r >= 1 and R > 0 (r = {r}, R = {big_r})")));
    }
    let (plo, phi) = match chart {
        Chart::Strip { .. } => {
            return Err(Error::BadParams("squeezing needs a bounded chart".into()))
        }
        other => other.p_bounds().unwrap_or_else(|| other.p_range()),
    };
    let tau = tau.unwrap_or(0.25 * big_r);
    let periodic_p = matches!(chart, Chart::Torus2);
    if periodic_p && big_r + tau >= 1.0 {
        return Err(Error::BadParams(format!("R + tau = {} must stay below 1 on the torus", big_r + tau)));
    }
    if !(tau > 0.0 && tau < big_r) || (!periodic_p && (-tau < plo || big_r + tau > phi)) {
        return Err(Error::BadParams(format!(
            "tau = {tau} must lie in (0, R) with (-tau, R + tau) inside the chart"
        )));
    }
    let cap = r as f64 * big_r;
    let sampler = Sampler::new(h, 64, 8);
    let (m_x0, _) = sampler.extrema(0.0, 0.0, 1);
    let (_, s_y0) = sampler.extrema(big_r, big_r, 1);
    if !(m_x0 - s_y0 > cap) {
        return Err(Error::ThresholdNotMet {
            gap: m_x0 - s_y0,
            c: cap,
        });
    }
    let (eps1, m_x, s_y) = select_eps1(h, big_r, cap, tau)?;
    let (inf_h, sup_h) = sampler.extrema(plo, phi, 1024);

    let norm = sup_h.abs().max(inf_h.abs());
    let m0 = s_y;
    let s0 = sup_h.max(-inf_h + s_y + m_x);
    let m1 = inf_h.min(-sup_h + s_y + m_x);
    let s1 = m_x;
    let h1_profile = SmoothProfile::g(m1, s1, eps1)?;
    let (s_lo, s_hi) = solve_slope_equation(&h1_profile, -(r as f64))?;
    let mut wc = WindowConstants {
        r,
        big_r,
        tau,
        eps1,
        m_x,
        s_y,
        m0,
        s0,
        m1,
        s1,
        a: 0.0,
        b: 0.0,
        c: 0.0,
        cap,
        sup_h,
        inf_h,
        s_h: norm,
        m_h: -norm,
        c_h: -6.0 * norm - 1.0,
        c_h_prime: 6.0 * norm + cap + 1.0,
        s_lo,
        s_hi,
    };
    let (a0, a1) = wc.h0_actions();
    let (b0, b1) = wc.h1_actions();
    wc.avoid(&[a0, a1, b0, b1])?;

    let pair = SqueezingPair {
        h0: Hamiltonian::planar(Preset::F {
            m: m0,
            s: s0,
            eps: eps1,
            center: big_r,
            coord: 0,
        })?,
        h1: Hamiltonian::planar(Preset::G {
            m: m1,
            s: s1,
            eps: eps1,
            center: 0.0,
            coord: 0,
        })?,
        wc,
    };
    let violation = sandwich_violation(&pair, h, (plo, phi), 200);
    if violation > 1e-12 {
        return Err(Error::BadParams(format!(
            "H1 <= H <= H0 fails by {violation:e} on the sample grid"
        )));
    }
    Ok(pair)
}

/// Largest amount by which `H₁ <= H <= H₀` fails on an `n × n` grid in
/// `(q, p)` (times a few time samples for time-dependent `H`).
pub fn sandwich_violation(pair: &SqueezingPair, h: &Hamiltonian, (lo, hi): (f64, f64), n: usize) -> f64 {
    let ts: Vec<f64> = if h.is_time_dependent() {
        (0..8).map(|i| i as f64 / 8.0).collect()
    } else {
        vec![0.0]
    };
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let q = i as f64 / n as f64;
        for j in 0..n {
            let p = lo + (hi - lo) * j as f64 / (n - 1) as f64;
            let x = [q, p];
            let up = pair.h0.value_at(0.0, &x);
            let down = pair.h1.value_at(0.0, &x);
            for &t in &ts {
                let v = h.value_at(t, &x);
                worst = worst.max(v - up).max(down - v);
            }
        }
    }
    worst
}

/// `H_s` for `s ∈ [0, 1]`: first the plateau of `h₀` widens to
/// `[ε₁, R]` (`s <= 1/2`), then a linear interpolation to `H₁`.
pub fn monotone_homotopy(wc: &WindowConstants, s: f64) -> Result<Hamiltonian> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::BadParams(format!("homotopy parameter {s} outside [0, 1]")));
    }
    let l = 0.5 * (wc.big_r - wc.eps1);
    let plateau = |sigma: f64| Preset::Plateau {
        m: wc.m0,
        s: wc.s0,
        eps: wc.eps1,
        center: wc.big_r - sigma * l,
        half_width: sigma * l,
        coord: 0,
    };
    let preset = if s <= 0.5 {
        plateau(2.0 * s)
    } else {
        let sigma = 2.0 * s - 1.0;
        plateau(1.0)
            .scaled(1.0 - sigma)
            .plus(Preset::g(wc.m1, wc.s1, wc.eps1).scaled(sigma))
    };
    Hamiltonian::planar(preset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> (Hamiltonian, SqueezingPair) {
        let h = Hamiltonian::planar(Preset::g(0.0, 1.0, 0.2)).unwrap();
        let pair = build_squeezing_pair(&h, &Chart::annulus(1.0), 1, 0.6, None).unwrap();
        (h, pair)
    }

    #[test]
    fn annulus_example_constants() {
        let (_, pair) = example();
        let wc = &pair.wc;
        assert_eq!(wc.m0, 0.0);
        assert_eq!(wc.s_y, 0.0);
        assert_eq!(wc.s1, wc.m_x);
        // ε₁ = τ/2 = 0.075 already separates the bands
        assert_eq!(wc.eps1, 0.075);
        let expected = SmoothProfile::g(0.0, 1.0, 0.2).unwrap().value(0.075);
        assert!((wc.m_x - expected).abs() < 1e-15);
        assert!(wc.violations().is_empty(), "{:?}", wc.violations());
    }

    #[test]
    fn eps1_matches_grid_oracle() {
        // Oracle: independent dense minimization over each candidate band.
        let h = Hamiltonian::planar(Preset::g(0.0, 1.0, 0.2)).unwrap();
        for (cap, big_r) in [(0.6, 0.6), (0.95, 0.6), (0.99, 0.8)] {
            let tau = big_r / 4.0;
            let mut want = None;
            let mut eps = tau;
            for _ in 0..40 {
                eps /= 2.0;
                let m_x = (0..=4000)
                    .map(|i| h.value_at(0.0, &[0.0, -eps + 2.0 * eps * i as f64 / 4000.0]))
                    .fold(f64::INFINITY, f64::min);
                let s_y = (0..=4000)
                    .map(|i| h.value_at(0.0, &[0.0, big_r - eps + 2.0 * eps * i as f64 / 4000.0]))
                    .fold(f64::NEG_INFINITY, f64::max);
                if m_x - s_y > cap {
                    want = Some(eps);
                    break;
                }
            }
            let got = select_eps1(&h, big_r, cap, tau).ok().map(|x| x.0);
            assert_eq!(got, want, "C = {cap}");
        }
    }

    #[test]
    fn sandwich_on_grid() {
        let (h, pair) = example();
        assert!(sandwich_violation(&pair, &h, (-0.25, 1.25), 200) <= 0.0);
    }

    #[test]
    fn sandwich_with_q_dependence() {
        let h = Hamiltonian::planar(Preset::ProductWithCos {
            amplitude: 0.05,
            offset: 1.0,
            kq: vec![1],
            kp: vec![],
            kt: 0,
            phase: 0.0,
            factor: Box::new(Preset::g(0.0, 1.0, 0.2)),
        })
        .unwrap()
        .scaled(1.0)
        .preset()
        .clone()
        .plus(Preset::g(0.0, 0.9, 0.2));
        let h = Hamiltonian::planar(h).unwrap();
        let pair = build_squeezing_pair(&h, &Chart::annulus(1.0), 1, 0.5, None).unwrap();
        assert!(pair.wc.violations().is_empty(), "{:?}", pair.wc.violations());
        assert!(sandwich_violation(&pair, &h, (-0.25, 1.25), 200) <= 0.0);
    }

    #[test]
    fn threshold_errors() {
        let h = Hamiltonian::planar(Preset::g(0.0, 1.0, 0.2)).unwrap();
        assert!(matches!(
            build_squeezing_pair(&h, &Chart::annulus(1.0), 2, 0.6, None),
            Err(Error::ThresholdNotMet { .. })
        ));
        // the gap holds on the loops but every dyadic band around p = 0
        // reaches the foot of the profile
        let steep = Hamiltonian::planar(Preset::g(0.0, 1.0, 1e-15)).unwrap();
        assert!(matches!(
            build_squeezing_pair(&steep, &Chart::annulus(1.0), 1, 0.6, None),
            Err(Error::NoEpsilon { .. })
        ));
    }

    #[test]
    fn window_actions_in_windows() {
        let (_, pair) = example();
        let wc = &pair.wc;
        let (x0, x1) = wc.h0_actions();
        assert!(wc.a < x0 && x0 < wc.b, "{x0} vs ({}, {})", wc.a, wc.b);
        assert!(wc.b < x1 && x1 < wc.c, "{x1}");
        let (y0, y1) = wc.h1_actions();
        assert!(wc.a < y1 && y1 < wc.b, "{y1}");
        assert!(wc.b < y0 && y0 < wc.c, "{y0}");
    }

    #[test]
    fn symmetric_roots() {
        let (_, pair) = example();
        let wc = &pair.wc;
        let h0 = wc.h0();
        let r = wc.r as f64;
        assert!((h0.d1(-wc.s_lo) + r).abs() < 1e-10);
        assert!((h0.d1(-wc.s_hi) + r).abs() < 1e-10);
        assert!((wc.s_lo + wc.s_hi - wc.eps1).abs() < 1e-12);
        assert!((wc.h1().d1(wc.s_lo) + r).abs() < 1e-10);
    }

    #[test]
    fn avoid_moves_off_spectrum() {
        let (_, pair) = example();
        let mut wc = pair.wc.clone();
        let (lo, hi) = wc.window_b();
        let mid = 0.5 * (lo + hi);
        wc.avoid(&[mid]).unwrap();
        assert!((wc.b - mid).abs() >= SPECTRUM_CLEARANCE);
        assert!(wc.violations().is_empty());
    }

    #[test]
    fn homotopy_endpoints_and_monotonicity() {
        let (_, pair) = example();
        let wc = &pair.wc;
        let h_0 = monotone_homotopy(wc, 0.0).unwrap();
        let h_half = monotone_homotopy(wc, 0.5).unwrap();
        let h_1 = monotone_homotopy(wc, 1.0).unwrap();
        let ps: Vec<f64> = (0..1000).map(|j| -0.25 + 1.5 * j as f64 / 999.0).collect();
        for &p in &ps {
            assert_eq!(h_0.value_at(0.0, &[0.0, p]), pair.h0.value_at(0.0, &[0.0, p]));
            assert!((h_1.value_at(0.0, &[0.0, p]) - pair.h1.value_at(0.0, &[0.0, p])).abs() < 1e-15);
            if p >= wc.eps1 && p <= wc.big_r {
                assert_eq!(h_half.value_at(0.0, &[0.0, p]), wc.m0);
            }
        }
        let mut prev: Vec<f64> = ps.iter().map(|p| h_0.value_at(0.0, &[0.0, *p])).collect();
        for i in 1..100 {
            let hs = monotone_homotopy(wc, i as f64 / 99.0).unwrap();
            for (k, p) in ps.iter().enumerate() {
                let v = hs.value_at(0.0, &[0.0, *p]);
                assert!(v <= prev[k] + 1e-14, "s = {}, p = {p}", i as f64 / 99.0);
                prev[k] = v;
            }
        }
    }
}
