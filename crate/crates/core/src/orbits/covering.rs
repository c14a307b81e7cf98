//! Orbits on the strip covering a torus: translation between the cut-offs
//! `G^k`, the oscillation bound, projection back to the torus and the
//! search for the smallest usable `k`.

use serde::{Deserialize, Serialize};

use super::{build_orbit, class_shift, find_orbits, OrbitSet, PeriodicOrbit, SearchConfig};
use crate::dynamics::{Integrator, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{wrap_unit, Chart, HomotopyClass, PhasePoint, ReferenceLoop};
use crate::hamiltonian::{Hamiltonian, Preset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// `G^k` for a torus Hamiltonian.
pub fn build_gk(torus_h: &Hamiltonian, k: u32) -> Result<Hamiltonian> {
    Hamiltonian::planar(Preset::Gk {
        k,
        base: Box::new(torus_h.preset().clone()),
    })
}

/// Strip chart wide enough for everything `G^k` does.
pub fn gk_chart(k: u32) -> Chart {
    Chart::Strip {
        half_width: Some(k as f64 + 2.0),
    }
}

/// Change of action under `T_l`: `∓ l · w` for `q`-winding `w` (so `± r l`
/// for the class of `r` backwards turns).
pub fn translation_action_shift(class: &HomotopyClass, l: u32, side: Side) -> f64 {
    -side.sign() * l as f64 * class.winding[0] as f64
}

/// `T_l : (q, p) ↦ (q, p ± l)` for an orbit of `G^k` inside `{±p > 0}`; the
/// action is re-evaluated with `G^{k+l}`.
pub fn translate_orbit(orbit: &PeriodicOrbit, l: u32, side: Side, g_kl: &Hamiltonian) -> Result<PeriodicOrbit> {
    let s = side.sign();
    if orbit.trajectory.points.iter().any(|x| !(s * x.p[0] > 0.0)) {
        return Err(Error::NotInHalfStrip { bound: 0.0 });
    }
    let shift = s * l as f64;
    let trajectory = Trajectory {
        times: orbit.trajectory.times.clone(),
        points: orbit
            .trajectory
            .points
            .iter()
            .map(|x| PhasePoint::new(x.q.clone(), vec![x.p[0] + shift]))
            .collect(),
        step: orbit.trajectory.step,
    };
    let z = ReferenceLoop::standard(&Chart::strip(), &orbit.class, 256)?;
    let action = super::action(g_kl, &trajectory, &orbit.class, &z)?;
    Ok(PeriodicOrbit {
        trajectory,
        action,
        ..orbit.clone()
    })
}

/// `sup |∂H/∂q|` over an `n × n` grid of the torus (and 8 time samples for
/// time-dependent `H`).
pub fn sup_abs_dq(h: &Hamiltonian, n: usize) -> f64 {
    let ts: Vec<f64> = if h.is_time_dependent() {
        (0..8).map(|i| i as f64 / 8.0).collect()
    } else {
        vec![0.0]
    };
    let mut sup: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = [i as f64 / n as f64, j as f64 / n as f64];
            for &t in &ts {
                sup = sup.max(h.jet(t, &x).g[0].abs());
            }
        }
    }
    sup
}

/// `max p - min p <= bound + 1e-6` along the orbit.
pub fn osc_check(points: &[PhasePoint], bound: f64) -> bool {
    let (lo, hi) = points
        .iter()
        .map(|x| x.p[0])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
    hi - lo <= bound + 1e-6
}

/// Project an orbit of `G^k` inside `{|p| < k}` to the torus and re-verify
/// it there. `window` is `(a', c')`; the orbit's action must lie inside.
pub fn project_orbit(
    orbit: &PeriodicOrbit,
    torus_h: &Hamiltonian,
    k: u32,
    window: (f64, f64),
    steps: usize,
    tol: f64,
) -> Result<PeriodicOrbit> {
    if !(window.0 < orbit.action && orbit.action < window.1) {
        return Err(Error::BadParams(format!(
            "action {} outside the window ({}, {})",
            orbit.action, window.0, window.1
        )));
    }
    let max_abs_p = orbit
        .trajectory
        .points
        .iter()
        .map(|x| x.p[0].abs())
        .fold(0.0, f64::max);
    if max_abs_p >= k as f64 {
        return Err(Error::EscapesWindow { max_abs_p, k });
    }
    let chart = Chart::Torus2;
    let class = HomotopyClass::new(vec![orbit.class.winding[0], 0]);
    let shift = class_shift(&chart, &class)?;
    let start = orbit.start();
    let x = [wrap_unit(start.q[0]), wrap_unit(start.p[0])];
    let z = ReferenceLoop::standard(&chart, &class, 256)?;
    let projected = build_orbit(torus_h, &Integrator::new(steps), &class, &shift, &z, &x)?;
    if projected.residual >= tol {
        return Err(Error::BadParams(format!(
            "projected orbit does not close under H: residual {:e}",
            projected.residual
        )));
    }
    Ok(projected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KAttempt {
    pub k: u32,
    pub in_window: usize,
    pub escaping: usize,
    pub max_abs_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KEscalation {
    pub k: u32,
    pub attempts: Vec<KAttempt>,
    pub gk_orbits: OrbitSet,
    pub projected: Vec<PeriodicOrbit>,
}

/// Run `k = 1, 2, …, k_max` until every orbit of `G^k` with action in
/// `window` projects; the seed grid spans `|p| <= k + 1`.
pub fn minimal_k(
    torus_h: &Hamiltonian,
    r: i64,
    window: (f64, f64),
    cfg: &SearchConfig,
    k_max: u32,
) -> Result<KEscalation> {
    let class = HomotopyClass::new(vec![-r]);
    let mut attempts = vec![];
    for k in 1..=k_max {
        let gk = build_gk(torus_h, k)?;
        let kf = k as f64;
        let search = SearchConfig {
            p_range: Some((-kf - 1.0, kf + 1.0)),
            ..cfg.clone()
        };
        let set = find_orbits(&gk, &gk_chart(k), &class, &search)?;
        let in_window: Vec<&PeriodicOrbit> = set
            .all()
            .into_iter()
            .filter(|o| window.0 < o.action && o.action < window.1)
            .collect();
        let mut projected = vec![];
        let mut escaping = 0;
        let mut max_abs_p: f64 = 0.0;
        for o in &in_window {
            let (lo, hi) = o.p_extent();
            max_abs_p = max_abs_p.max(lo.abs()).max(hi.abs());
            match project_orbit(o, torus_h, k, window, cfg.steps, cfg.tol) {
                Ok(p) => projected.push(p),
                Err(Error::EscapesWindow { .. }) => escaping += 1,
                Err(e) => return Err(e),
            }
        }
        attempts.push(KAttempt {
            k,
            in_window: in_window.len(),
            escaping,
            max_abs_p,
        });
        if escaping == 0 && !in_window.is_empty() {
            return Ok(KEscalation {
                k,
                attempts,
                gk_orbits: set,
                projected,
            });
        }
    }
    Err(Error::BadParams(format!(
        "no k <= {k_max} projects every window orbit"
    )))
}
