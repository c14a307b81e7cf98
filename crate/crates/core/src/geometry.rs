//! Charted symplectic surfaces with universal-cover bookkeeping.
//!
//! Every chart has unit circumference in each periodic direction and carries
//! the form `dp ∧ dq` (summed over coordinate pairs on product tori). States
//! are stored lifted to the universal cover, laid out as `[q_0.., p_0..]`.
//! Free homotopy classes are winding vectors over the periodic coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible jump between adjacent lifted samples.
pub const LIFT_JUMP_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chart {
    /// `q ∈ ℝ/ℤ`, `p ∈ [0, width]`, with a collar `[-collar, width + collar]`
    /// into which the chart may be extended.
    Annulus {
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        collar: Option<f64>,
    },
    /// `ℝ²/ℤ²` with unit area.
    Torus2,
    /// `q ∈ ℝ/ℤ`, `p ∈ ℝ` (or `|p| <= half_width` when bounded).
    Strip {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width: Option<f64>,
    },
    /// `𝕋^{2n}` with coordinates `(q_1..q_n, p_1..p_n)`.
    ProductTorus { n: usize },
}

impl Chart {
    pub fn annulus(width: f64) -> Self {
        Chart::Annulus { width, collar: None }
    }

    pub fn strip() -> Self {
        Chart::Strip { half_width: None }
    }

    pub fn dof(&self) -> usize {
        match self {
            Chart::ProductTorus { n } => *n,
            _ => 1,
        }
    }

    pub fn state_dim(&self) -> usize {
        2 * self.dof()
    }

    /// Periodicity flag for every state coordinate.
    pub fn periodic_mask(&self) -> Vec<bool> {
        let n = self.dof();
        let p_periodic = matches!(self, Chart::Torus2 | Chart::ProductTorus { .. });
        (0..2 * n).map(|i| i < n || p_periodic).collect()
    }

    /// Number of entries in a winding vector for this chart.
    pub fn class_dim(&self) -> usize {
        self.periodic_mask().iter().filter(|b| **b).count()
    }

    /// Extended `p` range inside which trajectories must stay, if bounded.
    pub fn p_bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Chart::Annulus { width, collar } => {
                let c = collar.unwrap_or(width / 4.0);
                Some((-c, width + c))
            }
            Chart::Strip {
                half_width: Some(w),
            } => Some((-w, w)),
            _ => None,
        }
    }

    /// Nominal `p` range: the closed annulus, one fundamental domain of a
    /// torus, or the bounded part of a strip.
    pub fn p_range(&self) -> (f64, f64) {
        match *self {
            Chart::Annulus { width, .. } => (0.0, width),
            Chart::Strip { half_width } => {
                let w = half_width.unwrap_or(1.0);
                (-w, w)
            }
            Chart::Torus2 | Chart::ProductTorus { .. } => (0.0, 1.0),
        }
    }

    /// Lift displacement of the state over one period for the given class.
    pub fn shift_vector(&self, class: &HomotopyClass) -> Result<Vec<f64>> {
        if class.winding.len() != self.class_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.class_dim(),
                found: class.winding.len(),
            });
        }
        let mut it = class.winding.iter();
        Ok(self
            .periodic_mask()
            .into_iter()
            .map(|periodic| {
                if periodic {
                    *it.next().expect("length checked") as f64
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Representative of a state with periodic coordinates reduced to `[0, 1)`.
    pub fn canonical(&self, state: &[f64]) -> Vec<f64> {
        state
            .iter()
            .zip(self.periodic_mask())
            .map(|(x, periodic)| if periodic { wrap_unit(*x) } else { *x })
            .collect()
    }

    /// Distance between two states on the chart (periodic coordinates
    /// measured on the circle), in the max norm.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(self.periodic_mask())
            .map(|((x, y), periodic)| {
                let d = x - y;
                if periodic {
                    (d - d.round()).abs()
                } else {
                    d.abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `x mod 1` in `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point on the universal cover of a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        debug_assert_eq!(q.len(), p.len());
        PhasePoint { q, p }
    }

    pub fn planar(q: f64, p: f64) -> Self {
        PhasePoint {
            q: vec![q],
            p: vec![p],
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn from_state(state: &[f64]) -> Self {
        let n = state.len() / 2;
        PhasePoint {
            q: state[..n].to_vec(),
            p: state[n..].to_vec(),
        }
    }

    pub fn to_state(&self) -> Vec<f64> {
        self.q.iter().chain(self.p.iter()).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomotopyClass {
    pub winding: Vec<i64>,
}

impl HomotopyClass {
    pub fn new(winding: Vec<i64>) -> Self {
        HomotopyClass { winding }
    }

    /// The class `[t ↦ (-r t, 0, ...)]` of `r` backwards turns around the
    /// first `q` circle.
    pub fn backwards_turns(chart: &Chart, r: i64) -> Self {
        let mut winding = vec![0; chart.class_dim()];
        winding[0] = -r;
        HomotopyClass { winding }
    }

    pub fn is_zero(&self) -> bool {
        self.winding.iter().all(|w| *w == 0)
    }
}

/// Densely sampled loop, stored in lifted coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedLoop {
    pub points: Vec<PhasePoint>,
}

impl LiftedLoop {
    /// Lift a sequence of chart points by choosing, at every sample, the
    /// representative nearest to the previous lifted sample.
    pub fn unwrap(chart: &Chart, points: &[PhasePoint]) -> Self {
        let mut out: Vec<PhasePoint> = Vec::with_capacity(points.len());
        for pt in points {
            let next = match out.last() {
                Some(prev) => lift(chart, pt, prev),
                None => pt.clone(),
            };
            out.push(next);
        }
        LiftedLoop { points: out }
    }
}

/// Integer displacement of the lift over one period.
pub fn winding_class(chart: &Chart, lp: &LiftedLoop) -> Result<HomotopyClass> {
    let mask = chart.periodic_mask();
    let states: Vec<Vec<f64>> = lp.points.iter().map(PhasePoint::to_state).collect();
    for (i, w) in states.windows(2).enumerate() {
        for (k, periodic) in mask.iter().enumerate() {
            if !periodic {
                continue;
            }
            let jump = (w[1][k] - w[0][k]).abs();
            if jump >= LIFT_JUMP_LIMIT {
                return Err(Error::NonContinuousLoop { index: i + 1, jump });
            }
        }
    }
    let (first, last) = match (states.first(), states.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Ok(HomotopyClass::new(vec![0; chart.class_dim()])),
    };
    let displacement: Vec<f64> = mask
        .iter()
        .enumerate()
        .filter(|(_, periodic)| **periodic)
        .map(|(k, _)| last[k] - first[k])
        .collect();
    // Non-periodic coordinates must return exactly; periodic ones up to an integer.
    let open_gap = mask
        .iter()
        .enumerate()
        .filter(|(_, periodic)| !**periodic)
        .map(|(k, _)| (last[k] - first[k]).abs())
        .fold(0.0, f64::max);
    let integral = displacement.iter().all(|d| (d - d.round()).abs() < 1e-6);
    if !integral || open_gap > 1e-6 {
        return Err(Error::LoopNotClosed { displacement });
    }
    Ok(HomotopyClass::new(
        displacement.iter().map(|d| d.round() as i64).collect(),
    ))
}

/// Representative of `point` closest to `base` in every periodic coordinate.
pub fn lift(chart: &Chart, point: &PhasePoint, base: &PhasePoint) -> PhasePoint {
    let x = point.to_state();
    let b = base.to_state();
    let lifted: Vec<f64> = x
        .iter()
        .zip(&b)
        .zip(chart.periodic_mask())
        .map(|((xi, bi), periodic)| {
            if periodic {
                xi + (bi - xi).round()
            } else {
                *xi
            }
        })
        .collect();
    PhasePoint::from_state(&lifted)
}

/// Canonical projection to the chart.
pub fn project(chart: &Chart, point: &PhasePoint) -> PhasePoint {
    PhasePoint::from_state(&chart.canonical(&point.to_state()))
}

/// Symplectic area between the `p`-levels `p0` and `p1` (first pair).
pub fn annulus_area(chart: &Chart, p0: f64, p1: f64) -> Result<f64> {
    match *chart {
        Chart::Annulus { width, .. } => {
            for v in [p0, p1] {
                if !(0.0..=width).contains(&v) {
                    return Err(Error::OutOfChart {
                        value: v,
                        lo: 0.0,
                        hi: width,
                    });
                }
            }
            Ok(p1 - p0)
        }
        Chart::Strip { half_width } => {
            if let Some(w) = half_width {
                for v in [p0, p1] {
                    if v.abs() > w {
                        return Err(Error::OutOfChart {
                            value: v,
                            lo: -w,
                            hi: w,
                        });
                    }
                }
            }
            Ok(p1 - p0)
        }
        Chart::Torus2 | Chart::ProductTorus { .. } => {
            // least positive area over homotopies between the two levels
            let a = (p1 - p0).rem_euclid(1.0);
            if a == 0.0 || a >= 1.0 {
                Err(Error::CoincidentLoops)
            } else {
                Ok(a)
            }
        }
    }
}

/// Fixed reference loop `z` in a class, sampled along `{p = level}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLoop {
    pub class: HomotopyClass,
    pub points: Vec<PhasePoint>,
}

impl ReferenceLoop {
    /// `z(t) = (w t, 0)` where `w` is the class read on the `q` coordinates.
    pub fn standard(chart: &Chart, class: &HomotopyClass, samples: usize) -> Result<Self> {
        let shift = chart.shift_vector(class)?;
        let n = chart.dof();
        let samples = samples.max(2);
        let points = (0..=samples)
            .map(|i| {
                let t = i as f64 / samples as f64;
                PhasePoint::new((0..n).map(|k| shift[k] * t).collect(), vec![0.0; n])
            })
            .collect();
        Ok(ReferenceLoop {
            class: class.clone(),
            points,
        })
    }

    /// `∮_z Σ p dq` by the trapezoid rule.
    pub fn p_dq(&self) -> f64 {
        loop_p_dq(&self.points)
    }
}

/// `∮ Σ p_i dq_i` along lifted samples by the trapezoid rule.
pub fn loop_p_dq(points: &[PhasePoint]) -> f64 {
    points
        .windows(2)
        .map(|w| {
            w[0].p
                .iter()
                .zip(&w[1].p)
                .zip(w[0].q.iter().zip(&w[1].q))
                .map(|((pa, pb), (qa, qb))| 0.5 * (pa + pb) * (qb - qa))
                .sum::<f64>()
        })
        .sum()
}
