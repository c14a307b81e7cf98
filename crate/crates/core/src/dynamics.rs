//! Hamiltonian vector fields and their time-one maps.
//!
//! Steps are implicit midpoint (`x' = x + h X_H(t + h/2, (x + x')/2)`),
//! symplectic for any smooth `H`. The monodromy is the exact derivative of
//! the discrete map, `∏ (I - hA/2)⁻¹ (I + hA/2)` with `A = J ∇²H` at each
//! midpoint, so it agrees with finite differences of the discrete flow up
//! to the Newton tolerance rather than up to the step size.

use std::fmt::Write as _;

use nalgebra::{DMatrix, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Chart, PhasePoint};
use crate::hamiltonian::{Hamiltonian, Jet};

pub const DEFAULT_STEPS: usize = 2048;
pub const MIN_STEPS: usize = 16;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

/// `q̇ = ∂H/∂p`, `ṗ = -∂H/∂q`.
pub fn vector_field(h: &Hamiltonian, t: f64, x: &PhasePoint) -> TangentVector {
    let n = h.dof();
    let j = h.jet(t, &x.to_state());
    TangentVector {
        dq: j.g[n..2 * n].to_vec(),
        dp: j.g[..n].iter().map(|v| -v).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub step: f64,
}

impl Trajectory {
    pub fn start(&self) -> &PhasePoint {
        &self.points[0]
    }

    pub fn end(&self) -> &PhasePoint {
        self.points.last().expect("trajectories are never empty")
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    /// Columns `t, q_1.., p_1.., H`.
    pub fn to_csv(&self, h: &Hamiltonian) -> String {
        let n = self.start().dof();
        let mut out = String::from("t");
        for i in 0..n {
            let _ = write!(out, ",q{}", i + 1);
        }
        for i in 0..n {
            let _ = write!(out, ",p{}", i + 1);
        }
        out.push_str(",H\n");
        for (t, x) in self.times.iter().zip(&self.points) {
            let _ = write!(out, "{t:?}");
            for v in x.q.iter().chain(&x.p) {
                let _ = write!(out, ",{v:?}");
            }
            let _ = writeln!(out, ",{:?}", h.value(*t, x));
        }
        out
    }
}

/// Linearized time-one map at the start of an orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Monodromy {
    pub matrix: DMatrix<f64>,
}

impl Monodromy {
    pub fn identity(dim: usize) -> Self {
        Monodromy {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        Monodromy {
            matrix: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.matrix.nrows())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    /// `det(M - I)`.
    pub fn fixed_point_det(&self) -> f64 {
        let n = self.matrix.nrows();
        (&self.matrix - DMatrix::identity(n, n)).determinant()
    }

    /// Floquet multipliers as `(re, im)` pairs, sorted.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let mut ev: Vec<(f64, f64)> = self
            .matrix
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re, z.im))
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}

impl Serialize for Monodromy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Monodromy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Ok(Monodromy::from_rows(&rows))
    }
}

/// `|det(M - I)| > tol`.
pub fn is_nondegenerate(m: &Monodromy, tol: f64) -> bool {
    m.fixed_point_det().abs() > tol
}

/// Fixed-step implicit midpoint integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrator {
    pub steps: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Trajectories leaving `lo <= p_0 <= hi` fail with `LeftChart`.
    pub p_bounds: Option<(f64, f64)>,
}

impl Integrator {
    pub fn new(steps: usize) -> Self {
        Integrator {
            steps,
            newton_tol: NEWTON_TOL,
            max_newton: NEWTON_MAX_ITER,
            p_bounds: None,
        }
    }

    pub fn on_chart(chart: &Chart, steps: usize) -> Self {
        Integrator {
            p_bounds: chart.p_bounds(),
            ..Integrator::new(steps)
        }
    }

    fn check_steps(&self) -> Result<()> {
        if self.steps < MIN_STEPS {
            return Err(Error::BadParams(format!(
                "need at least {MIN_STEPS} steps per unit time, got {}",
                self.steps
            )));
        }
        Ok(())
    }

    /// Trajectory over `[0, 1]`.
    pub fn flow(&self, h: &Hamiltonian, x0: &PhasePoint) -> Result<Trajectory> {
        self.flow_span(h, x0, 0.0, 1.0)
    }

    /// Trajectory over `[t0, t1]` (either direction) with `steps · |t1 - t0|`
    /// steps, rounded up.
    pub fn flow_span(&self, h: &Hamiltonian, x0: &PhasePoint, t0: f64, t1: f64) -> Result<Trajectory> {
        self.check_steps()?;
        check_dim(h, x0)?;
        let n_steps = ((t1 - t0).abs() * self.steps as f64).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / n_steps as f64;
        let dim = 2 * h.dof();
        let mut x = pad(&x0.to_state());
        let mut times = Vec::with_capacity(n_steps + 1);
        let mut points = Vec::with_capacity(n_steps + 1);
        times.push(t0);
        points.push(x0.clone());
        for k in 0..n_steps {
            let t = t0 + k as f64 * dt;
            let (next, _) = self.step(h, t, dt, &x)?;
            x = next;
            self.check_bounds(h, t + dt, &x)?;
            times.push(if k + 1 == n_steps { t1 } else { t + dt });
            points.push(PhasePoint::from_state(&x.as_slice()[..dim]));
        }
        Ok(Trajectory {
            times,
            points,
            step: dt.abs(),
        })
    }

    /// End point of the time-one flow, with the monodromy if requested.
    pub fn end_map(&self, h: &Hamiltonian, x0: &[f64], with_monodromy: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
        self.end_map_span(h, x0, 0.0, 1.0, with_monodromy)
    }

    pub fn end_map_span(
        &self,
        h: &Hamiltonian,
        x0: &[f64],
        t0: f64,
        t1: f64,
        with_monodromy: bool,
    ) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
        self.check_steps()?;
        let dim = 2 * h.dof();
        if x0.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: h.dof(),
                found: x0.len() / 2,
            });
        }
        let n_steps = ((t1 - t0).abs() * self.steps as f64).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / n_steps as f64;
        let mut x = pad(x0);
        let mut m = Matrix4::identity();
        for k in 0..n_steps {
            let t = t0 + k as f64 * dt;
            let (next, cayley) = self.step(h, t, dt, &x)?;
            x = next;
            self.check_bounds(h, t + dt, &x)?;
            if with_monodromy {
                m = cayley(&m);
            }
        }
        let mono = with_monodromy.then(|| DMatrix::from_fn(dim, dim, |i, j| m[(i, j)]));
        Ok((x.as_slice()[..dim].to_vec(), mono))
    }

    /// Monodromy along a stored trajectory (re-integrated from its start with
    /// the trajectory's own step count).
    pub fn monodromy(&self, h: &Hamiltonian, traj: &Trajectory) -> Result<Monodromy> {
        let again = Integrator {
            steps: traj.steps().max(MIN_STEPS),
            ..self.clone()
        };
        let t0 = traj.times[0];
        let t1 = *traj.times.last().expect("non-empty");
        let (_, m) = again.end_map_span(h, &traj.start().to_state(), t0, t1, true)?;
        Ok(Monodromy {
            matrix: m.expect("requested"),
        })
    }

    fn check_bounds(&self, h: &Hamiltonian, t: f64, x: &Vector4<f64>) -> Result<()> {
        if let Some((lo, hi)) = self.p_bounds {
            let p = x[h.dof()];
            if !(p >= lo && p <= hi) {
                return Err(Error::LeftChart { t, p });
            }
        }
        Ok(())
    }

    /// One step from `(t, x)`; returns the new state and the map advancing
    /// the variational solution.
    fn step(
        &self,
        h: &Hamiltonian,
        t: f64,
        dt: f64,
        x: &Vector4<f64>,
    ) -> Result<(Vector4<f64>, impl Fn(&Matrix4<f64>) -> Matrix4<f64>)> {
        let n = h.dof();
        let dim = 2 * n;
        let tm = t + 0.5 * dt;
        let half = 0.5 * dt;
        let eval = |y: &Vector4<f64>| -> (Vector4<f64>, Matrix4<f64>) {
            let j = h.jet(tm, &y.as_slice()[..dim]);
            field_and_linearization(&j, n)
        };
        // explicit half step as the initial midpoint guess
        let (f0, _) = eval(x);
        let mut y = x + f0 * half;
        let mut converged = false;
        let mut residual = f64::INFINITY;
        let mut a = Matrix4::zeros();
        for _ in 0..self.max_newton {
            let (f, lin) = eval(&y);
            a = lin;
            let r = y - x - f * half;
            residual = r.amax();
            let jac = Matrix4::identity() - a * half;
            let delta = jac
                .lu()
                .solve(&r)
                .ok_or(Error::NewtonDivergence { t, residual })?;
            y -= delta;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::NewtonDivergence { t, residual });
            }
            if delta.amax() <= self.newton_tol * (1.0 + y.amax()) {
                converged = true;
                let (_, lin) = eval(&y);
                a = lin;
                break;
            }
        }
        if !converged {
            return Err(Error::NewtonDivergence { t, residual });
        }
        let next = y * 2.0 - x;
        let minus = Matrix4::identity() - a * half;
        let plus = Matrix4::identity() + a * half;
        let lu = minus.lu();
        let cayley = move |m: &Matrix4<f64>| lu.solve(&(plus * m)).unwrap_or(*m);
        Ok((next, cayley))
    }
}

fn check_dim(h: &Hamiltonian, x: &PhasePoint) -> Result<()> {
    if x.dof() != h.dof() {
        return Err(Error::DimensionMismatch {
            expected: h.dof(),
            found: x.dof(),
        });
    }
    Ok(())
}

fn pad(x: &[f64]) -> Vector4<f64> {
    let mut v = Vector4::zeros();
    for (i, xi) in x.iter().enumerate() {
        v[i] = *xi;
    }
    v
}

/// `X_H = J ∇H` and `A = J ∇²H` for states `(q, p)`, zero-padded to 4.
fn field_and_linearization(j: &Jet, n: usize) -> (Vector4<f64>, Matrix4<f64>) {
    let mut f = Vector4::zeros();
    let mut a = Matrix4::zeros();
    for i in 0..n {
        f[i] = j.g[n + i];
        f[n + i] = -j.g[i];
        for k in 0..2 * n {
            a[(i, k)] = j.h[n + i][k];
            a[(n + i, k)] = -j.h[i][k];
        }
    }
    (f, a)
}

/// `ω(ξ, η) = Σ dp_i(ξ) dq_i(η) - dq_i(ξ) dp_i(η)` for `ω = dp ∧ dq`.
pub fn symplectic_product(xi: &[f64], eta: &[f64]) -> f64 {
    let n = xi.len() / 2;
    (0..n)
        .map(|i| xi[n + i] * eta[i] - xi[i] * eta[n + i])
        .sum()
}
