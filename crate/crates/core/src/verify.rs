//! The end-to-end checks: capacity values, closed-form actions, no-orbit
//! certificates, covering-space checks, orbit counts, rescaling, rotation vectors
//! and numerical hygiene. Each returns a pass/fail line with details.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::capacity::{self, cp_comparison, estimate_capacity, CapacityEstimate, LevelSet};
use crate::dynamics::{symplectic_product, Integrator};
use crate::error::Result;
use crate::geometry::{Chart, HomotopyClass, PhasePoint};
use crate::hamiltonian::{ramp_max_descent, Hamiltonian, Preset, TrigTerm};
use crate::orbits::covering::{minimal_k, osc_check, sup_abs_dq, translate_orbit, translation_action_shift, Side};
use crate::orbits::covering::build_gk;
use crate::orbits::{find_orbits, rescaling_residual, verify_window, PairSide, SearchConfig};
use crate::profiles::squeeze::{build_squeezing_pair, SqueezingPair};

/// Presets shared by the checks, the CLI and the tests.
pub mod presets {
    use super::*;

    pub const AREA: f64 = 0.6;

    /// `g_{0,m,0.2}` on the unit annulus with `R = 0.6`.
    pub fn annulus_pair(r: i64, m: f64) -> Result<SqueezingPair> {
        let h = Hamiltonian::planar(Preset::g(0.0, m, 0.2))?;
        build_squeezing_pair(&h, &Chart::annulus(1.0), r, AREA, None)
    }

    /// `H₁ + 0.001 (1 - cos 2π(q + rt)) g_{0,1,2ε₁}(p)`.
    pub fn perturbed_h1(pair: &SqueezingPair) -> Result<Hamiltonian> {
        let wc = &pair.wc;
        Hamiltonian::planar(pair.h1.preset().clone().plus(Preset::ProductWithCos {
            amplitude: 0.001,
            offset: 1.0,
            kq: vec![1],
            kp: vec![],
            kt: wc.r,
            phase: 0.0,
            factor: Box::new(Preset::g(0.0, 1.0, 2.0 * wc.eps1)),
        }))
    }

    /// `0.5 cos 2πp`, plus `0.01 cos 2π(q + t)` when perturbed.
    pub fn torus(perturbed: bool) -> Result<Hamiltonian> {
        let mut terms = vec![TrigTerm { coef: 0.5, kq: vec![], kp: vec![1], kt: 0, phase: 0.0 }];
        if perturbed {
            terms.push(TrigTerm { coef: 0.01, kq: vec![1], kp: vec![], kt: 1, phase: 0.0 });
        }
        Hamiltonian::planar(Preset::Trig { terms })
    }

    /// `amplitude · cos(2πq) · g_{0,1,1}(p)`.
    pub fn bump_wave(amplitude: f64) -> Result<Hamiltonian> {
        Hamiltonian::planar(Preset::ProductWithCos {
            amplitude: -amplitude,
            offset: 0.0,
            kq: vec![1],
            kp: vec![],
            kt: 0,
            phase: 0.0,
            factor: Box::new(Preset::g(0.0, 1.0, 1.0)),
        })
    }

    /// A torus Hamiltonian whose `q`, `p` and `t` dependence is coupled.
    pub fn coupled_torus() -> Result<Hamiltonian> {
        Hamiltonian::planar(Preset::Trig {
            terms: vec![
                TrigTerm { coef: 0.2, kq: vec![], kp: vec![1], kt: 0, phase: 0.0 },
                TrigTerm { coef: 0.05, kq: vec![1], kp: vec![1], kt: 1, phase: 0.3 },
            ],
        })
    }

    pub fn counterexample_annulus() -> Preset {
        Preset::CounterexampleAnnulus { c: AREA, delta: 0.05, r: 1, tau: 0.15 }
    }

    pub const LAGRANGIAN_W: [f64; 2] = [0.5, 0.0];
    pub const LAGRANGIAN_ALPHA: [i64; 2] = [1, 1];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub details: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}. {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Collects checks; an `Err` from the body counts as a failure.
struct Check {
    name: &'static str,
    pass: bool,
    details: Vec<String>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check { name, pass: true, details: vec![] }
    }

    fn expect(&mut self, ok: bool, detail: String) {
        self.pass &= ok;
        self.details.push(format!("{} {detail}", if ok { "ok" } else { "FAILED" }));
    }

    fn run(id: u8, name: &'static str, body: impl FnOnce(&mut Check) -> Result<()>) -> CriterionResult {
        let start = Instant::now();
        let mut c = Check::new(name);
        if let Err(e) = body(&mut c) {
            c.expect(false, format!("error: {e}"));
        }
        CriterionResult {
            id,
            name: c.name.to_string(),
            pass: c.pass,
            details: c.details,
            elapsed: start.elapsed(),
        }
    }
}

pub const CAPACITY_TOL: f64 = 0.01;
pub const CAPACITY_BUDGET: Duration = Duration::from_secs(60);

/// The annulus family bisected on `[0.45 r, 0.95 r]`.
pub fn annulus_capacity(r: i64) -> Result<CapacityEstimate> {
    let fam = capacity::annulus_family(r, presets::AREA)?;
    let class = HomotopyClass::new(vec![-r]);
    estimate_capacity(&fam, &class, (0.45 * r as f64, 0.95 * r as f64), CAPACITY_TOL)
}

/// Capacity `= r · Area` for `r = 1, 2, 3`; also returns the estimates.
pub fn criterion_capacity() -> (CriterionResult, Vec<(i64, CapacityEstimate)>) {
    let mut estimates = vec![];
    let res = Check::run(1, "capacity equals r * area on the annulus", |c| {
        for r in 1..=3 {
            let start = Instant::now();
            let est = annulus_capacity(r)?;
            let took = start.elapsed();
            let target = r as f64 * presets::AREA;
            let width = est.width().unwrap_or(f64::INFINITY);
            c.expect(
                est.contains(target) && width <= CAPACITY_TOL && took <= CAPACITY_BUDGET,
                format!(
                    "r = {r}: [{:.6}, {}] contains {target}, width {width:.2e}, {} steps{}",
                    est.lower,
                    est.upper.map_or("none".into(), |u| format!("{u:.6}")),
                    est.search_log.len(),
                    if took <= CAPACITY_BUDGET { "" } else { ", over the 60 s budget" }
                ),
            );
            estimates.push((r, est));
        }
        Ok(())
    });
    (res, estimates)
}

/// Squeezing-pair orbits: actions equal the tangent intercepts to `1e-7`
/// and lie in their windows.
pub fn criterion_actions() -> CriterionResult {
    Check::run(2, "closed-form actions and action windows", |c| {
        let chart = Chart::annulus(1.0);
        for (r, m) in [(1, 1.0), (2, 2.0)] {
            let pair = presets::annulus_pair(r, m)?;
            let wc = &pair.wc;
            let class = HomotopyClass::new(vec![-r]);
            let sides = [
                (PairSide::H1, &pair.h1, (0.0, wc.eps1), wc.h1_actions()),
                (PairSide::H0, &pair.h0, (wc.big_r - wc.eps1, wc.big_r), wc.h0_actions()),
            ];
            for (side, h, range, (x0, x1)) in sides {
                let cfg = SearchConfig { p_range: Some(range), ..SearchConfig::default() };
                let set = find_orbits(h, &chart, &class, &cfg)?;
                let mut worst: f64 = 0.0;
                let mut hit = [false, false];
                for o in set.all() {
                    let (e0, e1) = ((o.action - x0).abs(), (o.action - x1).abs());
                    hit[usize::from(e1 < e0)] = true;
                    worst = worst.max(e0.min(e1));
                }
                c.expect(
                    worst < 1e-7 && hit == [true, true],
                    format!("r = {r} {side:?}: {} orbits, max |A - intercept| = {worst:.1e}", set.count()),
                );
                let report = verify_window(&set, wc, Some(side));
                c.expect(
                    report.pass,
                    format!(
                        "r = {r} {side:?}: windows a = {:.4}, b = {:.4}, c = {:.4} {:?}",
                        wc.a, wc.b, wc.c, report.violations
                    ),
                );
            }
            if r != 1 {
                continue;
            }
            let perturbed = presets::perturbed_h1(&pair)?;
            let cfg = SearchConfig { p_range: Some((0.0, wc.eps1)), ..SearchConfig::with_grid(32) };
            let set = find_orbits(&perturbed, &chart, &class, &cfg)?;
            let report = verify_window(&set, wc, Some(PairSide::H1));
            c.expect(
                report.pass && set.count() > 0,
                format!("r = {r} perturbed H1: {} in windows {:?}", set.summary(), report.violations),
            );
        }
        Ok(())
    })
}

/// Zero orbits for the annulus and Lagrangian counterexamples, each with
/// its analytic reason.
pub fn criterion_no_orbits() -> CriterionResult {
    Check::run(3, "no-orbit certificates", |c| {
        let preset = presets::counterexample_annulus();
        let h = Hamiltonian::planar(preset.clone())?;
        let set = find_orbits(&h, &Chart::annulus(1.0), &HomotopyClass::new(vec![-1]), &SearchConfig::default())?;
        let descent = ramp_max_descent(&preset).unwrap_or(f64::INFINITY);
        c.expect(
            set.is_empty() && descent < 1.0,
            format!("annulus: {}; max descent {descent:.6} < r = 1", set.summary()),
        );
        let fam = capacity::lagrangian_family(presets::LAGRANGIAN_W.to_vec(), presets::LAGRANGIAN_ALPHA.to_vec())?;
        let alpha = presets::LAGRANGIAN_ALPHA;
        let class = HomotopyClass::new(vec![alpha[0], alpha[1], 0, 0]);
        for k in [1.0, 2.0, 4.0] {
            let h = fam.build(k)?;
            let set = find_orbits(&h, &fam.chart, &class, &fam.search)?;
            let gap = capacity::sampled_gap(&h, &fam.x, &fam.y, 8);
            let cert = fam.analytic_certificate(k);
            c.expect(
                set.is_empty() && (gap - k).abs() < 1e-12 && cert.is_some(),
                format!(
                    "lagrangian k = {k}: 0 orbits among {} seeds of the 8^4 grid, gap {gap}; {}",
                    8usize.pow(4),
                    cert.unwrap_or_default()
                ),
            );
        }
        Ok(())
    })
}

/// Action shift under `T_l`, the oscillation bound and projection at the
/// smallest working `k`.
pub fn criterion_covering() -> CriterionResult {
    Check::run(4, "covering-space checks", |c| {
        let h = presets::torus(true)?;
        let r = 1;
        let wc = build_squeezing_pair(&h, &Chart::Torus2, r, 0.5, None)?.wc;
        // T_l moves p by l, so the action error is about l times the closure
        // residual: converge well below the 1e-9 target
        let cfg = SearchConfig { tol: 1e-12, ..SearchConfig::with_grid(32) };
        let esc = minimal_k(&h, r, (wc.a, wc.c), &cfg, 6)?;
        let k = esc.k;
        let set = &esc.gk_orbits;
        let s = sup_abs_dq(&h, 256);
        let all = set.all();
        let osc_ok = all.iter().all(|o| osc_check(&o.trajectory.points, s));
        c.expect(osc_ok, format!("osc(p) <= S = {s:.6} for all {} orbits of G^{k}", all.len()));
        for l in [1u32, 2, 5] {
            let g_kl = build_gk(&h, k + l)?;
            let mut worst: f64 = 0.0;
            let mut n = 0;
            for o in &all {
                let (lo, hi) = o.p_extent();
                let side = if lo > 0.0 {
                    Side::Plus
                } else if hi < 0.0 {
                    Side::Minus
                } else {
                    continue;
                };
                let moved = translate_orbit(o, l, side, &g_kl)?;
                let shift = translation_action_shift(&o.class, l, side);
                worst = worst.max((moved.action - o.action - shift).abs());
                n += 1;
            }
            c.expect(
                n > 0 && worst < 1e-9,
                format!("l = {l}: {n} orbits, max |A(T_l x) - A(x) - shift| = {worst:.1e}"),
            );
        }
        let worst = esc.projected.iter().map(|o| o.residual).fold(0.0, f64::max);
        c.expect(
            !esc.projected.is_empty() && worst < 1e-9,
            format!(
                "minimal k = {k} (attempts {:?}): {} window orbits project, max residual {worst:.1e}",
                esc.attempts.iter().map(|a| (a.k, a.in_window, a.escaping)).collect::<Vec<_>>(),
                esc.projected.len()
            ),
        );
        Ok(())
    })
}

/// At least 4 (and an even number of) nondegenerate orbits when perturbed;
/// at least two families separated by `b` otherwise.
pub fn criterion_orbit_count() -> CriterionResult {
    Check::run(5, "orbit-count bounds on the torus", |c| {
        let chart = Chart::Torus2;
        let class = HomotopyClass::new(vec![-1, 0]);
        let cfg = SearchConfig::with_grid(32);
        let h = presets::torus(true)?;
        let wc = build_squeezing_pair(&h, &chart, 1, 0.5, None)?.wc;
        let set = find_orbits(&h, &chart, &class, &cfg)?;
        let n = set.count();
        let nondeg = set.all().iter().all(|o| o.nondegenerate);
        c.expect(
            n >= 4 && n % 2 == 0 && nondeg && set.families.is_empty(),
            format!("perturbed: {} (all nondegenerate: {nondeg})", set.summary()),
        );
        let h = presets::torus(false)?;
        let wc0 = build_squeezing_pair(&h, &chart, 1, 0.5, None)?.wc;
        let set = find_orbits(&h, &chart, &class, &cfg)?;
        let actions: Vec<f64> = set.families.iter().map(|f| f.action()).collect();
        let split = actions.iter().any(|a| *a < wc0.b) && actions.iter().any(|a| *a > wc0.b);
        c.expect(
            set.families.len() >= 2 && split,
            format!("unperturbed: {} with actions {actions:.6?} around b = {}", set.summary(), wc0.b),
        );
        c.expect(wc.violations().is_empty(), format!("window constants consistent: {:?}", wc.violations()));
        Ok(())
    })
}

/// Orbits of `T·H` rescaled to period `T` close under `H`.
pub fn criterion_rescaling() -> CriterionResult {
    Check::run(6, "rescaled orbits close", |c| {
        let h = Hamiltonian::planar(Preset::cos_p(0.5))?;
        let chart = Chart::Torus2;
        let class = HomotopyClass::new(vec![-1, 0]);
        for period in [2u32, 3] {
            let th = h.scaled(period as f64);
            let set = find_orbits(&th, &chart, &class, &SearchConfig::with_grid(16))?;
            let mut worst: f64 = 0.0;
            for o in set.all() {
                worst = worst.max(rescaling_residual(&h, o, &chart, period, 2048 * period as usize)?);
            }
            c.expect(
                set.count() > 0 && worst < 1e-8,
                format!("T = {period}: {} orbits, max residual {worst:.1e}", set.count()),
            );
        }
        Ok(())
    })
}

/// Rotation vectors of witnesses equal their class; the rotation-vector
/// criterion holds above the estimated capacity.
pub fn criterion_rotation(estimates: &[(i64, CapacityEstimate)]) -> CriterionResult {
    Check::run(7, "rotation vectors and C^P <= C", |c| {
        let chart = Chart::annulus(1.0);
        c.expect(!estimates.is_empty(), format!("{} capacity estimates", estimates.len()));
        for (r, est) in estimates {
            let class = HomotopyClass::new(vec![-r]);
            let mut worst: f64 = 0.0;
            let mut n = 0;
            for s in &est.samples {
                for o in &s.witnesses {
                    let rho = capacity::trajectory_rotation_vector(&chart, &o.trajectory);
                    worst = worst.max((rho.components[0] + *r as f64).abs());
                    n += 1;
                }
            }
            c.expect(n > 0 && worst < 1e-9, format!("r = {r}: {n} witnesses, max |rho - class| = {worst:.1e}"));
            let cp = cp_comparison(&chart, &class, est)?;
            let ok = !cp.vacuous && cp.all_met && cp.bound.is_some_and(|b| est.upper.is_some_and(|u| b <= u));
            c.expect(ok, format!("r = {r}: {}", cp.note));
        }
        Ok(())
    })
}

fn max_gradient_error(h: &Hamiltonian, points: &[Vec<f64>], t: f64) -> f64 {
    let d = 1e-6;
    let mut worst: f64 = 0.0;
    for x in points {
        let j = h.jet(t, x);
        for i in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[i] += d;
            b[i] -= d;
            let fd = (h.value_at(t, &a) - h.value_at(t, &b)) / (2.0 * d);
            worst = worst.max((fd - j.g[i]).abs());
        }
    }
    worst
}

/// Energy drift, monodromy against finite differences, conservation of
/// the symplectic product, gradient checks and byte-identical reruns.
pub fn criterion_hygiene() -> CriterionResult {
    Check::run(8, "numerical hygiene", |c| {
        let h = presets::bump_wave(0.1)?;
        let x = PhasePoint::planar(0.1, 0.2);
        let tr = Integrator::new(1000).flow(&h, &x)?;
        let e0 = h.value(0.0, &x);
        let drift = tr.points.iter().map(|p| (h.value(0.0, p) - e0).abs()).fold(0.0, f64::max);
        c.expect(drift < 1e-8, format!("energy drift at h = 1e-3: {drift:.1e}"));

        let integ = Integrator::new(512);
        let mut worst: f64 = 0.0;
        for h in [presets::coupled_torus()?, presets::bump_wave(0.3)?] {
            let x = [0.37, 0.21];
            let (_, m) = integ.end_map(&h, &x, true)?;
            let m = m.expect("requested");
            let d = 1e-6;
            for k in 0..2 {
                let (mut a, mut b) = (x, x);
                a[k] += d;
                b[k] -= d;
                let (ya, _) = integ.end_map(&h, &a, false)?;
                let (yb, _) = integ.end_map(&h, &b, false)?;
                for i in 0..2 {
                    worst = worst.max(((ya[i] - yb[i]) / (2.0 * d) - m[(i, k)]).abs());
                }
            }
        }
        c.expect(worst < 1e-5, format!("monodromy vs finite differences: {worst:.1e}"));

        let (_, m) = Integrator::new(256).end_map(&presets::coupled_torus()?, &[0.1, 0.6], true)?;
        let m = m.expect("requested");
        let (xi, eta) = ([0.3, -0.7], [1.1, 0.4]);
        let push = |v: [f64; 2]| -> Vec<f64> { (0..2).map(|i| m[(i, 0)] * v[0] + m[(i, 1)] * v[1]).collect() };
        let change = (symplectic_product(&xi, &eta) - symplectic_product(&push(xi), &push(eta))).abs();
        c.expect(change < 1e-8, format!("symplectic product change: {change:.1e}"));

        let planar: Vec<Vec<f64>> = (0..11)
            .flat_map(|i| (0..11).map(move |j| vec![i as f64 / 11.0 + 0.013, -0.3 + 1.3 * j as f64 / 11.0]))
            .collect();
        let pair = presets::annulus_pair(1, 1.0)?;
        let mut worst: f64 = 0.0;
        for h in [
            presets::coupled_torus()?,
            presets::bump_wave(0.3)?,
            presets::perturbed_h1(&pair)?,
            pair.h0.clone(),
            Hamiltonian::planar(presets::counterexample_annulus())?,
            build_gk(&presets::torus(true)?, 2)?,
        ] {
            worst = worst.max(max_gradient_error(&h, &planar, 0.3));
        }
        let lag = capacity::lagrangian_family(presets::LAGRANGIAN_W.to_vec(), presets::LAGRANGIAN_ALPHA.to_vec())?.build(2.0)?;
        let four: Vec<Vec<f64>> = (0..6)
            .flat_map(|i| (0..6).map(move |j| vec![0.1, 0.7, i as f64 / 6.0 + 0.013, j as f64 / 6.0 + 0.021]))
            .collect();
        worst = worst.max(max_gradient_error(&lag, &four, 0.0));
        c.expect(worst < 1e-6, format!("gradient vs finite differences: {worst:.1e}"));

        let wc = &pair.wc;
        let cfg = SearchConfig { p_range: Some((0.0, wc.eps1)), ..SearchConfig::with_grid(16) };
        let chart = Chart::annulus(1.0);
        let class = HomotopyClass::new(vec![-1]);
        let run = || -> Result<(String, String)> {
            let set = find_orbits(&pair.h1, &chart, &class, &cfg)?;
            Ok((set.to_json(), set.to_csv()))
        };
        let same_orbits = run()? == run()?;
        let fam = capacity::annulus_family(1, presets::AREA)?;
        let cap = || estimate_capacity(&fam, &class, (0.45, 0.95), 0.1).map(|e| e.to_json());
        let same_capacity = cap()? == cap()?;
        let bps = capacity::annulus_bps_family(1, presets::AREA, LevelSet::level(0.0))?;
        c.expect(
            same_orbits && same_capacity && bps.y.is_empty(),
            format!("reruns byte-identical: orbit JSON/CSV {same_orbits}, capacity JSON {same_capacity}"),
        );
        Ok(())
    })
}

/// Every check, in order.
pub fn run_all() -> VerifyReport {
    let (first, estimates) = criterion_capacity();
    let criteria = vec![
        first,
        criterion_actions(),
        criterion_no_orbits(),
        criterion_covering(),
        criterion_orbit_count(),
        criterion_rescaling(),
        criterion_rotation(&estimates),
        criterion_hygiene(),
    ];
    let pass = criteria.iter().all(|c| c.pass);
    VerifyReport { criteria, pass }
}
