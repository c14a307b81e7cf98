//! Hamiltonians assembled from JSON presets, with analytic gradients and
//! Hessians.
//!
//! A [`Preset`] is the serializable description; [`Hamiltonian`] is the
//! compiled form that evaluates value, gradient and Hessian together. States
//! are `[q_0.., p_0..]` in lifted coordinates and time is `t ∈ [0, 1]`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PhasePoint;
use crate::profiles::{mu_integral, mu_jet, Jet1, SmoothProfile};

/// Largest number of degrees of freedom the evaluator supports.
pub const MAX_DOF: usize = 2;
const MAX_DIM: usize = 2 * MAX_DOF;

/// `coef · cos(2π(kq·q + kp·p + kt·t) + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coef: f64,
    #[serde(default)]
    pub kq: Vec<i64>,
    #[serde(default)]
    pub kp: Vec<i64>,
    #[serde(default)]
    pub kt: i64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    Constant {
        value: f64,
    },
    /// `g_{m,S,ε}(p_coord - center)`.
    G {
        m: f64,
        #[serde(rename = "S")]
        s: f64,
        eps: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        coord: usize,
    },
    /// `f_{m,S,ε}(p_coord - center)`.
    F {
        m: f64,
        #[serde(rename = "S")]
        s: f64,
        eps: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        coord: usize,
    },
    /// `f_{m,S,ε}((|p_coord - center| - half_width)⁺)`: an `f` well whose
    /// bottom is stretched into a plateau of width `2 half_width`.
    Plateau {
        m: f64,
        #[serde(rename = "S")]
        s: f64,
        eps: f64,
        center: f64,
        half_width: f64,
        #[serde(default)]
        coord: usize,
    },
    Trig {
        terms: Vec<TrigTerm>,
    },
    Sum {
        terms: Vec<Preset>,
    },
    Scaled {
        factor: f64,
        base: Box<Preset>,
    },
    /// `amplitude · (offset - cos(2π(kq·q + kp·p + kt·t) + phase)) · factor`.
    ProductWithCos {
        amplitude: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        kq: Vec<i64>,
        #[serde(default)]
        kp: Vec<i64>,
        #[serde(default)]
        kt: i64,
        #[serde(default)]
        phase: f64,
        factor: Box<Preset>,
    },
    /// `ν^k(p) · H(q, p mod 1)` on the strip covering a torus Hamiltonian.
    Gk {
        k: u32,
        base: Box<Preset>,
    },
    /// Monotone ramp in `p - start`: rises from 0 on `(-left, 0)` to `drop`,
    /// then falls back to 0 with slope at most `drop / length`, reaching 0
    /// at `length + eta`.
    Ramp {
        drop: f64,
        length: f64,
        eta: f64,
        left: f64,
        #[serde(default)]
        start: f64,
    },
    /// `g_{m,S,ε}(|p|)` on `𝕋^{2n}`, `|p|` the distance from `p` to `0` on
    /// `𝕋ⁿ`. Needs `ε < 1/2`.
    Radial {
        m: f64,
        #[serde(rename = "S")]
        s: f64,
        eps: f64,
    },
    /// Orbit-free profile `f(p)` with `f(0) = c - delta`, `f' > -r` and
    /// support in `(-tau, c / r)`.
    CounterexampleAnnulus {
        c: f64,
        delta: f64,
        r: i64,
        tau: f64,
    },
    /// `f_{0,k,d(0,Γ)/2}(d(p, Γ))` on `𝕋^{2n}` with
    /// `Γ = {p | (p - w)·β ∈ ℤ}`.
    CounterexampleLagrangian {
        w: Vec<f64>,
        k: f64,
        alpha: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<Vec<i64>>,
    },
}

impl Preset {
    pub fn g(m: f64, s: f64, eps: f64) -> Self {
        Preset::G {
            m,
            s,
            eps,
            center: 0.0,
            coord: 0,
        }
    }

    pub fn f(m: f64, s: f64, eps: f64) -> Self {
        Preset::F {
            m,
            s,
            eps,
            center: 0.0,
            coord: 0,
        }
    }

    pub fn shifted(self, by: f64) -> Self {
        match self {
            Preset::G { m, s, eps, center, coord } => Preset::G {
                m,
                s,
                eps,
                center: center + by,
                coord,
            },
            Preset::F { m, s, eps, center, coord } => Preset::F {
                m,
                s,
                eps,
                center: center + by,
                coord,
            },
            other => other,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Preset::Scaled {
            factor,
            base: Box::new(self),
        }
    }

    pub fn plus(self, other: Preset) -> Self {
        match self {
            Preset::Sum { mut terms } => {
                terms.push(other);
                Preset::Sum { terms }
            }
            first => Preset::Sum {
                terms: vec![first, other],
            },
        }
    }

    pub fn cos_p(coef: f64) -> Self {
        Preset::Trig {
            terms: vec![TrigTerm {
                coef,
                kq: vec![],
                kp: vec![1],
                kt: 0,
                phase: 0.0,
            }],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("presets always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::BadParams(e.to_string()))
    }
}

/// Value, gradient and Hessian in state coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; MAX_DIM],
    pub h: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet {
    const ZERO: Jet = Jet {
        v: 0.0,
        g: [0.0; MAX_DIM],
        h: [[0.0; MAX_DIM]; MAX_DIM],
    };

    fn constant(v: f64) -> Jet {
        Jet { v, ..Jet::ZERO }
    }

    /// Lift a one-variable jet in coordinate `i`.
    fn along(j: Jet1, i: usize) -> Jet {
        let mut out = Jet::constant(j.v);
        out.g[i] = j.d1;
        out.h[i][i] = j.d2;
        out
    }

    fn scale(mut self, c: f64) -> Jet {
        self.v *= c;
        for i in 0..MAX_DIM {
            self.g[i] *= c;
            for k in 0..MAX_DIM {
                self.h[i][k] *= c;
            }
        }
        self
    }

    fn add(mut self, o: &Jet) -> Jet {
        self.v += o.v;
        for i in 0..MAX_DIM {
            self.g[i] += o.g[i];
            for k in 0..MAX_DIM {
                self.h[i][k] += o.h[i][k];
            }
        }
        self
    }

    fn mul(&self, o: &Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for i in 0..MAX_DIM {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for k in 0..MAX_DIM {
                out.h[i][k] = self.h[i][k] * o.v
                    + self.g[i] * o.g[k]
                    + o.g[i] * self.g[k]
                    + self.v * o.h[i][k];
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RampShape {
    drop: f64,
    slope: f64,
    length: f64,
    eta: f64,
    left: f64,
    start: f64,
}

impl RampShape {
    /// Jet in `p - start`.
    fn jet(&self, p: f64) -> Jet1 {
        let x = p - self.start;
        let end = self.length + self.eta;
        if x <= -self.left || x >= end {
            return Jet1::ZERO;
        }
        if x < 0.0 {
            let j = mu_jet(-x / self.left);
            return Jet1 {
                v: self.drop * j.v,
                d1: -self.drop * j.d1 / self.left,
                d2: self.drop * j.d2 / (self.left * self.left),
            };
        }
        let eta = self.eta;
        let close = self.length;
        let (psi, dpsi, integral) = if x < eta {
            let j = mu_jet(x / eta);
            (1.0 - j.v, -j.d1 / eta, x - eta * mu_integral(x / eta))
        } else if x <= close {
            (1.0, 0.0, x - 0.5 * eta)
        } else {
            let u = (x - close) / eta;
            let j = mu_jet(u);
            (j.v, j.d1 / eta, close - 0.5 * eta + eta * mu_integral(u))
        };
        Jet1 {
            v: self.drop - self.slope * integral,
            d1: -self.slope * psi,
            d2: -self.slope * dpsi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Const(f64),
    Profile {
        prof: SmoothProfile,
        index: usize,
        center: f64,
    },
    Plateau {
        prof: SmoothProfile,
        index: usize,
        center: f64,
        half_width: f64,
    },
    Trig(Vec<(f64, [f64; MAX_DIM], f64, f64)>),
    Sum(Vec<Expr>),
    Scale(f64, Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    Cutoff {
        k: f64,
        index: usize,
        base: Box<Expr>,
    },
    Ramp {
        shape: RampShape,
        index: usize,
    },
    Radial {
        prof: SmoothProfile,
        dof: usize,
    },
    Distance {
        prof: SmoothProfile,
        beta: [f64; MAX_DIM],
        w_dot_beta: f64,
        norm: f64,
        dof: usize,
    },
}

impl Expr {
    fn jet(&self, t: f64, x: &[f64]) -> Jet {
        match self {
            Expr::Const(c) => Jet::constant(*c),
            Expr::Profile { prof, index, center } => {
                Jet::along(prof.jet(x[*index] - center), *index)
            }
            Expr::Plateau {
                prof,
                index,
                center,
                half_width,
            } => {
                let d = x[*index] - center;
                let outside = d.abs() - half_width;
                if outside <= 0.0 {
                    Jet::constant(prof.value(0.0))
                } else {
                    let j = prof.jet(outside);
                    let sign = d.signum();
                    Jet::along(
                        Jet1 {
                            v: j.v,
                            d1: sign * j.d1,
                            d2: j.d2,
                        },
                        *index,
                    )
                }
            }
            Expr::Trig(terms) => {
                let mut out = Jet::ZERO;
                for (coef, k, kt, phase) in terms {
                    let theta = TAU
                        * (k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + kt * t)
                        + phase;
                    let (s, c) = theta.sin_cos();
                    out.v += coef * c;
                    for i in 0..x.len() {
                        out.g[i] -= coef * s * TAU * k[i];
                        for j in 0..x.len() {
                            out.h[i][j] -= coef * c * TAU * TAU * k[i] * k[j];
                        }
                    }
                }
                out
            }
            Expr::Sum(terms) => terms
                .iter()
                .fold(Jet::ZERO, |acc, e| acc.add(&e.jet(t, x))),
            Expr::Scale(c, e) => e.jet(t, x).scale(*c),
            Expr::Product(a, b) => a.jet(t, x).mul(&b.jet(t, x)),
            Expr::Cutoff { k, index, base } => {
                let mut wrapped = [0.0; MAX_DIM];
                wrapped[..x.len()].copy_from_slice(x);
                wrapped[*index] = x[*index].rem_euclid(1.0);
                let b = base.jet(t, &wrapped[..x.len()]);
                let nu = Jet::along(SmoothProfile::nu(*k).jet(x[*index]), *index);
                nu.mul(&b)
            }
            Expr::Ramp { shape, index } => Jet::along(shape.jet(x[*index]), *index),
            Expr::Radial { prof, dof } => {
                let mut u = [0.0; MAX_DOF];
                for i in 0..*dof {
                    u[i] = x[dof + i] - x[dof + i].round();
                }
                let rho = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                // g is flat to all orders at 0
                if rho < 1e-12 {
                    return Jet::constant(prof.value(0.0));
                }
                let j = prof.jet(rho);
                let mut out = Jet::constant(j.v);
                for i in 0..*dof {
                    out.g[dof + i] = j.d1 * u[i] / rho;
                    for k in 0..*dof {
                        let radial = u[i] * u[k] / (rho * rho);
                        let delta = if i == k { 1.0 } else { 0.0 };
                        out.h[dof + i][dof + k] = j.d2 * radial + j.d1 / rho * (delta - radial);
                    }
                }
                out
            }
            Expr::Distance {
                prof,
                beta,
                w_dot_beta,
                norm,
                dof,
            } => {
                let u: f64 = (0..*dof).map(|i| beta[i] * x[dof + i]).sum::<f64>() - w_dot_beta;
                let frac = u - u.round();
                let d = frac.abs() / norm;
                let sign = if frac < 0.0 { -1.0 } else { 1.0 };
                let j = prof.jet(d);
                let mut out = Jet::constant(j.v);
                for i in 0..*dof {
                    out.g[dof + i] = j.d1 * sign * beta[i] / norm;
                    for k in 0..*dof {
                        out.h[dof + i][dof + k] = j.d2 * beta[i] * beta[k] / (norm * norm);
                    }
                }
                out
            }
        }
    }

    fn time_dependent(&self) -> bool {
        match self {
            Expr::Trig(terms) => terms.iter().any(|(_, _, kt, _)| *kt != 0.0),
            Expr::Sum(ts) => ts.iter().any(Expr::time_dependent),
            Expr::Scale(_, e) => e.time_dependent(),
            Expr::Product(a, b) => a.time_dependent() || b.time_dependent(),
            Expr::Cutoff { base, .. } => base.time_dependent(),
            _ => false,
        }
    }

    fn q_dependent(&self, dof: usize) -> bool {
        match self {
            Expr::Trig(terms) => terms.iter().any(|(_, k, _, _)| k[..dof].iter().any(|v| *v != 0.0)),
            Expr::Sum(ts) => ts.iter().any(|e| e.q_dependent(dof)),
            Expr::Scale(_, e) => e.q_dependent(dof),
            Expr::Product(a, b) => a.q_dependent(dof) || b.q_dependent(dof),
            Expr::Cutoff { base, .. } => base.q_dependent(dof),
            Expr::Profile { index, .. }
            | Expr::Plateau { index, .. }
            | Expr::Ramp { index, .. } => *index < dof,
            _ => false,
        }
    }
}

/// Region outside which the Hamiltonian vanishes, as far as the preset tells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    /// Vanishes for `p_0` outside `[lo, hi]`.
    PBand { lo: f64, hi: f64 },
    Unbounded,
}

/// A compiled Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    preset: Preset,
    expr: Expr,
    dof: usize,
    time_dependent: bool,
    q_dependent: bool,
    support: Support,
}

impl Hamiltonian {
    pub fn new(preset: Preset, dof: usize) -> Result<Self> {
        if dof == 0 || dof > MAX_DOF {
            return Err(Error::UnsupportedDimension(dof));
        }
        let expr = compile(&preset, dof)?;
        let support = support_of(&preset);
        Ok(Hamiltonian {
            time_dependent: expr.time_dependent(),
            q_dependent: expr.q_dependent(dof),
            preset,
            expr,
            dof,
            support,
        })
    }

    /// One degree of freedom: annulus, strip and two-torus charts.
    pub fn planar(preset: Preset) -> Result<Self> {
        Hamiltonian::new(preset, 1)
    }

    pub fn preset(&self) -> &Preset {
        &self.preset
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn is_q_dependent(&self) -> bool {
        self.q_dependent
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn jet(&self, t: f64, state: &[f64]) -> Jet {
        debug_assert_eq!(state.len(), 2 * self.dof);
        self.expr.jet(t, state)
    }

    pub fn value_at(&self, t: f64, state: &[f64]) -> f64 {
        self.jet(t, state).v
    }

    pub fn value(&self, t: f64, x: &PhasePoint) -> f64 {
        self.value_at(t, &x.to_state())
    }

    /// `(∂H/∂q, ∂H/∂p)`.
    pub fn gradient(&self, t: f64, x: &PhasePoint) -> (Vec<f64>, Vec<f64>) {
        let j = self.jet(t, &x.to_state());
        let n = self.dof;
        (j.g[..n].to_vec(), j.g[n..2 * n].to_vec())
    }

    /// The same Hamiltonian multiplied by a constant.
    pub fn scaled(&self, factor: f64) -> Hamiltonian {
        Hamiltonian::new(self.preset.clone().scaled(factor), self.dof)
            .expect("scaling a valid preset stays valid")
    }
}

fn p_index(coord: usize, dof: usize) -> Result<usize> {
    if coord >= dof {
        return Err(Error::BadParams(format!(
            "coordinate {coord} out of range for {dof} degrees of freedom"
        )));
    }
    Ok(dof + coord)
}

fn wave_vector(kq: &[i64], kp: &[i64], dof: usize) -> Result<[f64; MAX_DIM]> {
    if kq.len() > dof || kp.len() > dof {
        return Err(Error::BadParams("wave vector longer than dof".into()));
    }
    let mut k = [0.0; MAX_DIM];
    for (i, v) in kq.iter().enumerate() {
        k[i] = *v as f64;
    }
    for (i, v) in kp.iter().enumerate() {
        k[dof + i] = *v as f64;
    }
    Ok(k)
}

fn compile(preset: &Preset, dof: usize) -> Result<Expr> {
    Ok(match preset {
        Preset::Constant { value } => Expr::Const(*value),
        Preset::G { m, s, eps, center, coord } => Expr::Profile {
            prof: SmoothProfile::g(*m, *s, *eps)?,
            index: p_index(*coord, dof)?,
            center: *center,
        },
        Preset::F { m, s, eps, center, coord } => Expr::Profile {
            prof: SmoothProfile::f(*m, *s, *eps)?,
            index: p_index(*coord, dof)?,
            center: *center,
        },
        Preset::Plateau {
            m,
            s,
            eps,
            center,
            half_width,
            coord,
        } => {
            if !(*half_width >= 0.0) {
                return Err(Error::BadParams("plateau half width must be >= 0".into()));
            }
            Expr::Plateau {
                prof: SmoothProfile::f(*m, *s, *eps)?,
                index: p_index(*coord, dof)?,
                center: *center,
                half_width: *half_width,
            }
        }
        Preset::Trig { terms } => Expr::Trig(
            terms
                .iter()
                .map(|t| Ok((t.coef, wave_vector(&t.kq, &t.kp, dof)?, t.kt as f64, t.phase)))
                .collect::<Result<_>>()?,
        ),
        Preset::Sum { terms } => Expr::Sum(
            terms
                .iter()
                .map(|t| compile(t, dof))
                .collect::<Result<_>>()?,
        ),
        Preset::Scaled { factor, base } => Expr::Scale(*factor, Box::new(compile(base, dof)?)),
        Preset::ProductWithCos {
            amplitude,
            offset,
            kq,
            kp,
            kt,
            phase,
            factor,
        } => {
            let wave = Expr::Sum(vec![
                Expr::Const(amplitude * offset),
                Expr::Trig(vec![(-amplitude, wave_vector(kq, kp, dof)?, *kt as f64, *phase)]),
            ]);
            Expr::Product(Box::new(wave), Box::new(compile(factor, dof)?))
        }
        Preset::Gk { k, base } => {
            if *k == 0 {
                return Err(Error::BadParams("G^k needs k >= 1".into()));
            }
            if dof != 1 {
                return Err(Error::BadParams("G^k is defined on the planar strip".into()));
            }
            let base_expr = compile(base, dof)?;
            check_p_periodic(&base_expr)?;
            Expr::Cutoff {
                k: *k as f64,
                index: 1,
                base: Box::new(base_expr),
            }
        }
        Preset::Ramp {
            drop,
            length,
            eta,
            left,
            start,
        } => {
            if !(*length > 0.0 && *eta > 0.0 && *left > 0.0 && *eta <= *length) {
                return Err(Error::BadParams(
                    "ramp needs length >= eta > 0 and left > 0".into(),
                ));
            }
            Expr::Ramp {
                shape: RampShape {
                    drop: *drop,
                    slope: drop / length,
                    length: *length,
                    eta: *eta,
                    left: *left,
                    start: *start,
                },
                index: dof,
            }
        }
        Preset::Radial { m, s, eps } => {
            if !(*eps < 0.5) {
                return Err(Error::BadParams(format!("radial profile needs eps < 1/2, got {eps}")));
            }
            Expr::Radial {
                prof: SmoothProfile::g(*m, *s, *eps)?,
                dof,
            }
        }
        Preset::CounterexampleAnnulus { c, delta, r, tau } => {
            compile(&counterexample_annulus_ramp(*c, *delta, *r, *tau)?, dof)?
        }
        Preset::CounterexampleLagrangian { w, k, alpha, beta } => {
            let n = w.len();
            if n != dof {
                return Err(Error::DimensionMismatch {
                    expected: dof,
                    found: n,
                });
            }
            let (beta, d0) = lagrangian_beta(w, alpha, beta.as_deref())?;
            if !(*k > 0.0) {
                return Err(Error::BadParams("k must be positive".into()));
            }
            let mut b = [0.0; MAX_DIM];
            for (i, v) in beta.iter().enumerate() {
                b[i] = *v as f64;
            }
            let norm = beta.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt();
            Expr::Distance {
                prof: SmoothProfile::f(0.0, *k, 0.5 * d0)?,
                beta: b,
                w_dot_beta: w.iter().zip(&beta).map(|(a, b)| a * *b as f64).sum(),
                norm,
                dof,
            }
        }
    })
}

fn check_p_periodic(e: &Expr) -> Result<()> {
    for i in 0..16 {
        let q = (i as f64 + 0.3) / 16.0;
        let p = (i as f64 * 0.618_033_988_749_895).fract();
        for t in [0.0, 0.37] {
            let a = e.jet(t, &[q, p]);
            let b = e.jet(t, &[q, p + 1.0]);
            let tol = 1e-9 * (1.0 + a.v.abs());
            if (a.v - b.v).abs() > tol || (a.g[1] - b.g[1]).abs() > tol * 10.0 {
                return Err(Error::NotPeriodic);
            }
        }
    }
    Ok(())
}

/// Parameters of the orbit-free ramp for gap `c - delta` and class `-r`:
/// plateau slope `(c - delta) / λ` with `λ = R - δ/(2r)` stays below `r`.
pub fn counterexample_annulus_ramp(c: f64, delta: f64, r: i64, tau: f64) -> Result<Preset> {
    if r < 1 || !(c > 0.0) || !(delta > 0.0 && delta < c) || !(tau > 0.0) {
        return Err(Error::BadParams(format!(
            "counterexample needs 0 < delta < C, r >= 1, tau > 0 (C = {c}, delta = {delta}, r = {r}, tau = {tau})"
        )));
    }
    let rf = r as f64;
    let area = c / rf;
    let length = area - delta / (2.0 * rf);
    let eta = (delta / (4.0 * rf)).min(length / 4.0);
    Ok(Preset::Ramp {
        drop: c - delta,
        length,
        eta,
        left: 0.5 * tau,
        start: 0.0,
    })
}

/// Sup of `-f'` for a ramp preset: the plateau slope `drop / length`.
pub fn ramp_max_descent(preset: &Preset) -> Option<f64> {
    match preset {
        Preset::Ramp { drop, length, .. } => Some(drop / length),
        Preset::CounterexampleAnnulus { c, delta, r, tau } => {
            counterexample_annulus_ramp(*c, *delta, *r, *tau)
                .ok()
                .and_then(|p| ramp_max_descent(&p))
        }
        _ => None,
    }
}

/// Pick `β ∈ ℤⁿ` with `β·w ∉ ℤ` and `α ∦ β` (smallest in the L1 norm,
/// ties broken lexicographically); returns `β` and `d(0, Γ)`.
pub fn lagrangian_beta(w: &[f64], alpha: &[i64], given: Option<&[i64]>) -> Result<(Vec<i64>, f64)> {
    let n = w.len();
    if n < 2 || alpha.len() != n {
        return Err(Error::BadParams(
            "Lagrangian counterexample needs n >= 2 and alpha of length n".into(),
        ));
    }
    if alpha.iter().all(|a| *a == 0) {
        return Err(Error::ZeroClass);
    }
    let admissible = |beta: &[i64]| -> Option<f64> {
        let norm = beta.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let wb: f64 = w.iter().zip(beta).map(|(a, b)| a * *b as f64).sum();
        let frac = (wb - wb.round()).abs();
        let parallel = (0..n).all(|i| (0..n).all(|j| alpha[i] * beta[j] == alpha[j] * beta[i]));
        if frac > 1e-9 && !parallel {
            Some(frac / norm)
        } else {
            None
        }
    };
    if let Some(b) = given {
        if b.len() != n {
            return Err(Error::NoValidBeta);
        }
        return admissible(b).map(|d| (b.to_vec(), d)).ok_or(Error::NoValidBeta);
    }
    const BOUND: i64 = 3;
    let mut candidates: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..n {
        candidates = candidates
            .into_iter()
            .flat_map(|c| {
                (-BOUND..=BOUND).map(move |v| {
                    let mut c = c.clone();
                    c.push(v);
                    c
                })
            })
            .collect();
    }
    candidates.retain(|c| c.iter().find(|v| **v != 0).map_or(false, |v| *v > 0));
    candidates.sort_by_key(|c| (c.iter().map(|v| v.abs()).sum::<i64>(), c.iter().map(|v| -v).collect::<Vec<_>>()));
    candidates
        .into_iter()
        .find_map(|b| admissible(&b).map(|d| (b, d)))
        .ok_or(Error::NoValidBeta)
}

fn support_of(preset: &Preset) -> Support {
    use Support::*;
    let union = |a: Support, b: Support| match (a, b) {
        (PBand { lo: a0, hi: a1 }, PBand { lo: b0, hi: b1 }) => PBand {
            lo: a0.min(b0),
            hi: a1.max(b1),
        },
        _ => Unbounded,
    };
    match preset {
        Preset::Constant { value } if *value == 0.0 => PBand { lo: 0.0, hi: 0.0 },
        Preset::G { m, eps, center, coord, .. } if *m == 0.0 && *coord == 0 => PBand {
            lo: center - eps,
            hi: center + eps,
        },
        Preset::Sum { terms } => terms
            .iter()
            .map(support_of)
            .reduce(union)
            .unwrap_or(PBand { lo: 0.0, hi: 0.0 }),
        Preset::Scaled { base, .. } => support_of(base),
        Preset::ProductWithCos { factor, .. } => support_of(factor),
        Preset::Gk { k, .. } => PBand {
            lo: -(*k as f64) - 1.0,
            hi: *k as f64 + 1.0,
        },
        Preset::Ramp {
            length,
            eta,
            left,
            start,
            ..
        } => PBand {
            lo: start - left,
            hi: start + length + eta,
        },
        Preset::CounterexampleAnnulus { c, delta, r, tau } => {
            match counterexample_annulus_ramp(*c, *delta, *r, *tau) {
                Ok(p) => support_of(&p),
                Err(_) => Unbounded,
            }
        }
        _ => Unbounded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_gradients(h: &Hamiltonian, points: &[Vec<f64>], t: f64) {
        let d = 1e-6;
        for x in points {
            let j = h.jet(t, x);
            for i in 0..x.len() {
                let mut a = x.clone();
                let mut b = x.clone();
                a[i] += d;
                b[i] -= d;
                let ja = h.jet(t, &a);
                let jb = h.jet(t, &b);
                let fd = (ja.v - jb.v) / (2.0 * d);
                let scale = 1.0 + j.g[i].abs();
                assert!((fd - j.g[i]).abs() < 1e-6 * scale, "grad {i} at {x:?}: {fd} vs {}", j.g[i]);
                for k in 0..x.len() {
                    let fd2 = (ja.g[k] - jb.g[k]) / (2.0 * d);
                    let scale = 1.0 + j.h[k][i].abs();
                    assert!(
                        (fd2 - j.h[k][i]).abs() < 1e-5 * scale,
                        "hess {k}{i} at {x:?}: {fd2} vs {}",
                        j.h[k][i]
                    );
                }
            }
        }
    }

    fn grid(n: usize, plo: f64, phi: f64) -> Vec<Vec<f64>> {
        let mut out = vec![];
        for i in 0..n {
            for j in 0..n {
                out.push(vec![
                    (i as f64 + 0.31) / n as f64,
                    plo + (phi - plo) * (j as f64 + 0.47) / n as f64,
                ]);
            }
        }
        out
    }

    #[test]
    fn gradients_match_finite_differences() {
        let presets = vec![
            Preset::g(0.0, 1.0, 0.2),
            Preset::f(-0.3, 1.0, 0.1).shifted(0.6),
            Preset::Plateau {
                m: 0.0,
                s: 1.0,
                eps: 0.1,
                center: 0.4,
                half_width: 0.2,
                coord: 0,
            },
            Preset::ProductWithCos {
                amplitude: 0.3,
                offset: 1.0,
                kq: vec![1],
                kp: vec![],
                kt: 1,
                phase: 0.2,
                factor: Box::new(Preset::g(0.0, 1.0, 0.5)),
            },
            Preset::Gk {
                k: 1,
                base: Box::new(Preset::cos_p(0.5).plus(Preset::Trig {
                    terms: vec![TrigTerm {
                        coef: 0.1,
                        kq: vec![1],
                        kp: vec![1],
                        kt: 0,
                        phase: 0.0,
                    }],
                })),
            },
            Preset::CounterexampleAnnulus {
                c: 0.6,
                delta: 0.1,
                r: 1,
                tau: 0.15,
            },
        ];
        for p in presets {
            let h = Hamiltonian::planar(p).unwrap();
            check_gradients(&h, &grid(23, -2.3, 2.3), 0.3);
        }
    }

    #[test]
    fn lagrangian_gradients() {
        let h = Hamiltonian::new(
            Preset::CounterexampleLagrangian {
                w: vec![0.5, 0.0],
                k: 2.0,
                alpha: vec![0, 1],
                beta: None,
            },
            2,
        )
        .unwrap();
        let mut pts = vec![];
        for i in 0..9 {
            for j in 0..9 {
                pts.push(vec![0.1, 0.7, i as f64 / 9.0 + 0.013, j as f64 / 9.0 + 0.021]);
            }
        }
        check_gradients(&h, &pts, 0.0);
        assert!(!h.is_q_dependent());
    }

    #[test]
    fn gk_cuts_off() {
        let base = Preset::cos_p(0.5).plus(Preset::Trig {
            terms: vec![TrigTerm {
                coef: 0.05,
                kq: vec![1],
                kp: vec![],
                kt: 0,
                phase: 0.0,
            }],
        });
        let torus = Hamiltonian::planar(base.clone()).unwrap();
        let gk = Hamiltonian::planar(Preset::Gk {
            k: 3,
            base: Box::new(base),
        })
        .unwrap();
        for i in 0..50 {
            let q = i as f64 / 50.0;
            assert_eq!(gk.value_at(0.0, &[q, 0.0]), torus.value_at(0.0, &[q, 0.0]));
            assert_eq!(gk.value_at(0.0, &[q, 5.0]), 0.0);
            assert_eq!(gk.value_at(0.0, &[q, -4.2]), 0.0);
            for p in [-2.9, -1.3, 0.4, 2.99] {
                let a = gk.jet(0.0, &[q, p]).g[0];
                let b = torus.jet(0.0, &[q, p.rem_euclid(1.0)]).g[0];
                assert!((a - b).abs() < 1e-12);
                // lifted q-derivative against a central difference of π*H
                let d = 1e-6;
                let fd = (torus.value_at(0.0, &[q + d, p]) - torus.value_at(0.0, &[q - d, p])) / (2.0 * d);
                assert!((a - fd).abs() < 1e-8);
            }
        }
        let non_periodic = Hamiltonian::planar(Preset::Gk {
            k: 1,
            base: Box::new(Preset::g(0.0, 1.0, 0.2)),
        });
        assert_eq!(non_periodic.unwrap_err(), Error::NotPeriodic);
    }

    #[test]
    fn counterexample_annulus_shape() {
        let (c, delta, r, tau) = (0.6, 0.05, 1, 0.15);
        let h = Hamiltonian::planar(Preset::CounterexampleAnnulus { c, delta, r, tau }).unwrap();
        assert!((h.value_at(0.0, &[0.0, 0.0]) - (c - delta)).abs() < 1e-15);
        assert_eq!(h.value_at(0.0, &[0.0, 0.6]), 0.0);
        assert_eq!(h.value_at(0.0, &[0.0, -0.075]), 0.0);
        let n = 10_000;
        let mut min_slope = f64::INFINITY;
        let mut prev = h.value_at(0.0, &[0.0, -0.1]);
        for i in 0..=n {
            let p = -0.1 + 0.8 * i as f64 / n as f64;
            let j = h.jet(0.0, &[0.0, p]);
            min_slope = min_slope.min(j.g[1]);
            assert!(j.v >= -1e-15);
            if p > 0.0 {
                assert!(j.v <= prev + 1e-15);
            }
            prev = j.v;
        }
        assert!(min_slope > -r as f64, "{min_slope}");
        // the closing end of the ramp is continuous with zero
        let pre = counterexample_annulus_ramp(c, delta, r, tau).unwrap();
        if let Preset::Ramp { length, eta, .. } = pre {
            let end = length + eta;
            assert!(h.value_at(0.0, &[0.0, end - 1e-9]).abs() < 1e-12);
            assert!(end < c / r as f64);
        }
        assert!(Hamiltonian::planar(Preset::CounterexampleAnnulus { c, delta: c, r, tau }).is_err());
    }

    #[test]
    fn beta_search() {
        let (b, d0) = lagrangian_beta(&[0.5, 0.0], &[0, 1], None).unwrap();
        assert_eq!(b, vec![1, 0]);
        assert_eq!(d0, 0.5);
        assert_eq!(lagrangian_beta(&[0.0, 0.0], &[0, 1], None), Err(Error::NoValidBeta));
        assert_eq!(lagrangian_beta(&[0.5, 0.0], &[0, 0], None), Err(Error::ZeroClass));
        assert_eq!(lagrangian_beta(&[0.5, 0.0], &[1, 0], Some(&[1, 0])), Err(Error::NoValidBeta));
    }

    #[test]
    fn radial_gradients() {
        let h = Hamiltonian::new(Preset::Radial { m: 0.0, s: 0.5, eps: 0.3 }, 2).unwrap();
        let mut pts = vec![];
        for i in 0..9 {
            for j in 0..9 {
                pts.push(vec![0.1, 0.7, i as f64 / 9.0 + 0.013, j as f64 / 9.0 + 0.021]);
            }
        }
        check_gradients(&h, &pts, 0.0);
        assert!(!h.is_q_dependent());
        // radial and periodic
        let a = h.value_at(0.0, &[0.0, 0.0, 0.1, 0.2]);
        assert!((a - h.value_at(0.0, &[0.0, 0.0, -0.2, 1.1])).abs() < 1e-14);
        assert_eq!(h.value_at(0.0, &[0.0, 0.0, 0.0, 0.0]), 0.5);
        assert_eq!(h.value_at(0.0, &[0.0, 0.0, 0.3, 0.0]), 0.0);
        assert!(Hamiltonian::new(Preset::Radial { m: 0.0, s: 1.0, eps: 0.5 }, 2).is_err());
    }

    #[test]
    fn lagrangian_gap_is_k() {
        let h = Hamiltonian::new(
            Preset::CounterexampleLagrangian {
                w: vec![0.5, 0.0],
                k: 4.0,
                alpha: vec![0, 1],
                beta: None,
            },
            2,
        )
        .unwrap();
        let on_x = h.value_at(0.0, &[0.3, 0.1, 0.0, 0.0]);
        let on_y = h.value_at(0.0, &[0.3, 0.1, 0.5, 0.0]);
        assert_eq!(on_x - on_y, 4.0);
        // constant in q everywhere, and locally constant far from Γ
        let j = h.jet(0.0, &[0.3, 0.1, 0.1, 0.4]);
        assert_eq!(j.g, [0.0; 4]);
    }

    #[test]
    fn flags() {
        let h = Hamiltonian::planar(Preset::ProductWithCos {
            amplitude: 0.01,
            offset: 1.0,
            kq: vec![1],
            kp: vec![],
            kt: 1,
            phase: 0.0,
            factor: Box::new(Preset::Constant { value: 1.0 }),
        })
        .unwrap();
        assert!(h.is_time_dependent() && h.is_q_dependent());
        let g = Hamiltonian::planar(Preset::g(0.0, 1.0, 0.2)).unwrap();
        assert!(!g.is_time_dependent() && !g.is_q_dependent());
        assert_eq!(g.support(), Support::PBand { lo: -0.2, hi: 0.2 });
    }

    fn arb_leaf() -> impl Strategy<Value = Preset> {
        prop_oneof![
            any::<f64>().prop_map(|value| Preset::Constant { value }),
            (any::<f64>(), any::<f64>(), any::<f64>(), any::<f64>()).prop_map(|(m, s, eps, center)| Preset::G {
                m,
                s,
                eps,
                center,
                coord: 0
            }),
            (any::<f64>(), any::<f64>(), any::<f64>()).prop_map(|(m, s, eps)| Preset::F {
                m,
                s,
                eps,
                center: 0.0,
                coord: 0
            }),
            (any::<f64>(), -5i64..5, -5i64..5, any::<f64>()).prop_map(|(coef, a, b, phase)| Preset::Trig {
                terms: vec![TrigTerm { coef, kq: vec![a], kp: vec![b], kt: a - b, phase }]
            }),
            (any::<f64>(), any::<f64>(), 1i64..5, any::<f64>()).prop_map(|(c, delta, r, tau)| {
                Preset::CounterexampleAnnulus { c, delta, r, tau }
            }),
        ]
    }

    proptest! {
        #[test]
        fn preset_json_round_trip_is_bit_exact(
            leaf in arb_leaf(), other in arb_leaf(), factor in any::<f64>(), k in 1u32..9
        ) {
            prop_assume!(serde_json::to_string(&leaf).is_ok() && serde_json::to_string(&other).is_ok()
                && factor.is_finite());
            let preset = Preset::Sum { terms: vec![
                leaf.clone(),
                Preset::Scaled { factor, base: Box::new(other) },
                Preset::Gk { k, base: Box::new(leaf) },
            ]};
            let Ok(text) = serde_json::to_string(&preset) else { return Ok(()); };
            let back = Preset::from_json(&text).unwrap();
            prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
            prop_assert!(bitwise_eq(&back, &preset));
        }
    }

    fn bitwise_eq(a: &Preset, b: &Preset) -> bool {
        // NaN never appears (JSON cannot carry it), so PartialEq on floats is
        // bitwise except for ±0, which serde_json preserves.
        a == b && format!("{a:?}") == format!("{b:?}")
    }
}
