//! 1-periodic orbits in a prescribed class: seed-grid shooting, grouping into
//! isolated orbits and circle families, actions and action windows.
//!
//! Shooting solves `φ¹(x) - x - α̃ = 0` in lifted coordinates, where `α̃` is
//! the lift displacement of the class. Newton steps use the SVD
//! pseudo-inverse of `dφ¹ - I`, so seeds near a Morse–Bott circle land on the
//! circle instead of stalling. Every seed is first converged with a coarse
//! integrator, duplicates are dropped, and the survivors are polished at the
//! full step count.

pub mod covering;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{is_nondegenerate, Integrator, Monodromy, Trajectory, DEFAULT_STEPS};
use crate::error::{Error, Result};
use crate::geometry::{loop_p_dq, Chart, HomotopyClass, PhasePoint, ReferenceLoop};
use crate::hamiltonian::Hamiltonian;
use crate::profiles::squeeze::WindowConstants;

pub const CLOSURE_TOL: f64 = 1e-9;
pub const DEDUPE_RADIUS: f64 = 1e-5;
pub const DEGENERACY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Seeds per state dimension.
    pub grid: usize,
    pub steps: usize,
    /// Step count for converging seeds before polishing.
    pub coarse_steps: usize,
    pub tol: f64,
    pub dedupe_radius: f64,
    /// Seed range in `p`; the chart's nominal range when absent.
    pub p_range: Option<(f64, f64)>,
    pub max_newton: usize,
    /// Double `steps` (at most four times) until the polished start point
    /// moves by less than `tol`.
    pub auto_double: bool,
    /// Tie-breaking seed for equal sort keys.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid: 64,
            steps: DEFAULT_STEPS,
            coarse_steps: 256,
            tol: CLOSURE_TOL,
            dedupe_radius: DEDUPE_RADIUS,
            p_range: None,
            max_newton: 30,
            auto_double: false,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn with_grid(grid: usize) -> Self {
        SearchConfig {
            grid,
            ..SearchConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub trajectory: Trajectory,
    pub class: HomotopyClass,
    pub action: f64,
    pub monodromy: Monodromy,
    pub nondegenerate: bool,
    pub family_id: Option<usize>,
    /// `|φ¹(x) - x - α̃|_∞` at the trajectory's step count.
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn start(&self) -> &PhasePoint {
        self.trajectory.start()
    }

    pub fn start_state(&self) -> Vec<f64> {
        self.start().to_state()
    }

    pub fn p_extent(&self) -> (f64, f64) {
        self.trajectory
            .points
            .iter()
            .map(|x| x.p[0])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)))
    }
}

/// A connected curve of degenerate orbits (a circle of orbits at a `p` level
/// for the unperturbed constructions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFamily {
    pub id: usize,
    pub members: Vec<PeriodicOrbit>,
    /// Members go all the way around the `q` circle without gaps.
    pub closed: bool,
}

impl OrbitFamily {
    pub fn level(&self) -> f64 {
        self.members.iter().map(|o| o.start().p[0]).sum::<f64>() / self.members.len() as f64
    }

    pub fn action(&self) -> f64 {
        self.members.iter().map(|o| o.action).sum::<f64>() / self.members.len() as f64
    }

    /// Largest deviation of a member action from the mean.
    pub fn action_spread(&self) -> f64 {
        let mean = self.action();
        self.members.iter().map(|o| (o.action - mean).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSet {
    pub class: HomotopyClass,
    pub density: usize,
    pub seeds: usize,
    pub converged_seeds: usize,
    pub isolated: Vec<PeriodicOrbit>,
    pub families: Vec<OrbitFamily>,
}

impl OrbitSet {
    pub fn is_empty(&self) -> bool {
        self.isolated.is_empty() && self.families.is_empty()
    }

    /// Isolated orbits plus one entry per family.
    pub fn count(&self) -> usize {
        self.isolated.len() + self.families.len()
    }

    /// Every orbit found, family members included, in output order.
    pub fn all(&self) -> Vec<&PeriodicOrbit> {
        let mut out: Vec<&PeriodicOrbit> = self.isolated.iter().collect();
        for f in &self.families {
            out.extend(f.members.iter());
        }
        out
    }

    pub fn summary(&self) -> String {
        if self.is_empty() {
            return format!("0 orbits at density {}", self.density);
        }
        format!(
            "{} isolated orbits and {} families at density {}",
            self.isolated.len(),
            self.families.len(),
            self.density
        )
    }

    pub fn actions(&self) -> ActionSpectrum {
        let mut entries: Vec<SpectrumEntry> = self
            .isolated
            .iter()
            .enumerate()
            .map(|(i, o)| SpectrumEntry {
                action: o.action,
                source: SpectrumSource::Orbit(i),
            })
            .chain(self.families.iter().map(|f| SpectrumEntry {
                action: f.action(),
                source: SpectrumSource::Family(f.id),
            }))
            .collect();
        entries.sort_by(|a, b| a.action.total_cmp(&b.action));
        let mut merged: Vec<SpectrumEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            if merged
                .last()
                .map_or(false, |m| (e.action - m.action).abs() < SPECTRUM_MERGE)
            {
                continue;
            }
            merged.push(e);
        }
        ActionSpectrum { entries: merged }
    }
}

pub const SPECTRUM_MERGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum SpectrumSource {
    Orbit(usize),
    Family(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub action: f64,
    pub source: SpectrumSource,
}

/// Sorted action values with entries closer than `1e-8` coalesced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpectrum {
    pub entries: Vec<SpectrumEntry>,
}

impl ActionSpectrum {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.action).collect()
    }
}

/// `𝒜 = ∫₀¹ H dt - ∮_x p dq + ∮_z p dq` by the trapezoid rule on the
/// trajectory samples.
pub fn action(h: &Hamiltonian, traj: &Trajectory, class: &HomotopyClass, z: &ReferenceLoop) -> Result<f64> {
    if *class != z.class {
        return Err(Error::ClassMismatch {
            orbit: class.winding.clone(),
            reference: z.class.winding.clone(),
        });
    }
    let values: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.points)
        .map(|(t, x)| h.value(*t, x))
        .collect();
    let mut integral = 0.0;
    for k in 0..values.len() - 1 {
        integral += 0.5 * (values[k] + values[k + 1]) * (traj.times[k + 1] - traj.times[k]);
    }
    Ok(integral - loop_p_dq(&traj.points) + z.p_dq())
}

/// Lift displacement of the class as a full state vector.
pub fn class_shift(chart: &Chart, class: &HomotopyClass) -> Result<Vec<f64>> {
    chart.shift_vector(class)
}

/// Residual of the closing condition `φ¹(x) - x - α̃` (max norm).
pub fn closure_residual(integ: &Integrator, h: &Hamiltonian, x: &[f64], shift: &[f64]) -> Result<f64> {
    let (y, _) = integ.end_map(h, x, false)?;
    Ok(y.iter()
        .zip(x)
        .zip(shift)
        .map(|((y, x), s)| (y - x - s).abs())
        .fold(0.0, f64::max))
}

struct Shooter<'a> {
    h: &'a Hamiltonian,
    integ: Integrator,
    shift: Vec<f64>,
    tol: f64,
    max_iter: usize,
    /// Newton iterates must stay in `lo <= p <= hi` (first `p`).
    p_window: Option<(f64, f64)>,
}

impl Shooter<'_> {
    /// Newton from `x0`; `None` when it fails to converge.
    fn shoot(&self, x0: &[f64]) -> Option<(Vec<f64>, f64)> {
        let n = x0.len();
        let dof = n / 2;
        let mut x = x0.to_vec();
        let mut best = f64::INFINITY;
        let mut since_best = 0;
        for _ in 0..self.max_iter {
            let (y, m) = self.integ.end_map(self.h, &x, true).ok()?;
            let f: Vec<f64> = (0..n).map(|i| y[i] - x[i] - self.shift[i]).collect();
            let res = f.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if !res.is_finite() {
                return None;
            }
            if res < self.tol {
                return Some((x, res));
            }
            if res < 0.5 * best {
                best = res;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= 4 {
                    return None;
                }
            }
            let a = m.expect("requested") - DMatrix::identity(n, n);
            let delta = pinv_solve(&a, &f)?;
            let size = delta.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let scale = if size > 0.25 { 0.25 / size } else { 1.0 };
            for i in 0..n {
                x[i] -= scale * delta[i];
            }
            if let Some((lo, hi)) = self.p_window {
                if !(x[dof] >= lo && x[dof] <= hi) {
                    return None;
                }
            }
        }
        let res = closure_residual(&self.integ, self.h, &x, &self.shift).ok()?;
        (res < self.tol).then_some((x, res))
    }
}

/// `A⁺ b` with singular values below `1e-9 σ_max` treated as zero.
fn pinv_solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = 1e-9 * smax.max(1.0);
    let pinv = svd.pseudo_inverse(cutoff).ok()?;
    let rhs = nalgebra::DVector::from_column_slice(b);
    Some((pinv * rhs).iter().copied().collect())
}

/// Smallest singular value of `M - I` and its right singular vector.
fn kernel_direction(m: &Monodromy) -> (f64, Vec<f64>) {
    let n = m.matrix.nrows();
    let a = &m.matrix - DMatrix::identity(n, n);
    let svd = a.svd(false, true);
    let (k, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    let v_t = svd.v_t.expect("requested");
    (smin, v_t.row(k).iter().copied().collect())
}

/// Uniform seed grid over `[0, 1)` in each `q` and the seed range in each `p`.
pub fn seed_grid(chart: &Chart, cfg: &SearchConfig) -> Vec<Vec<f64>> {
    let n = chart.dof();
    let (lo, hi) = cfg.p_range.unwrap_or_else(|| chart.p_range());
    let g = cfg.grid.max(1);
    let axis_q: Vec<f64> = (0..g).map(|i| i as f64 / g as f64).collect();
    let axis_p: Vec<f64> = (0..g).map(|j| lo + (hi - lo) * (j as f64 + 0.5) / g as f64).collect();
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for d in 0..2 * n {
        let axis = if d < n { &axis_q } else { &axis_p };
        out = out
            .into_iter()
            .flat_map(|s| {
                axis.iter().map(move |v| {
                    let mut s = s.clone();
                    s.push(*v);
                    s
                })
            })
            .collect();
    }
    out
}

fn sort_key(chart: &Chart, x: &[f64]) -> Vec<f64> {
    let c = chart.canonical(x);
    let n = c.len() / 2;
    c[n..].iter().chain(&c[..n]).copied().collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Sort states by canonical `(p, q)` (ties broken by a seeded hash of the
/// input index) and drop any within `radius` of an earlier one.
fn unique_states(chart: &Chart, states: Vec<Vec<f64>>, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut keyed: Vec<(Vec<f64>, u64, Vec<f64>)> = states
        .into_iter()
        .enumerate()
        .map(|(i, s)| (sort_key(chart, &s), mix(seed, i as u64), chart.canonical(&s)))
        .collect();
    keyed.sort_by(|a, b| lex_cmp(&a.0, &b.0).then(a.1.cmp(&b.1)));
    let mut kept: Vec<Vec<f64>> = vec![];
    for (_, _, s) in keyed {
        let close = if chart.dof() == 1 && !is_periodic_p(chart) {
            // kept is sorted by p, so only its tail can be within reach
            kept.iter()
                .rev()
                .take_while(|k| s[1] - k[1] <= radius)
                .any(|k| chart.distance(k, &s) < radius)
        } else {
            kept.iter().any(|k| chart.distance(k, &s) < radius)
        };
        if !close {
            kept.push(s);
        }
    }
    kept
}

fn is_periodic_p(chart: &Chart) -> bool {
    matches!(chart, Chart::Torus2 | Chart::ProductTorus { .. })
}

fn mix(seed: u64, i: u64) -> u64 {
    // splitmix64
    let mut z = seed.wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Find the 1-periodic orbits of `h` in `class` reachable from the seed grid.
pub fn find_orbits(h: &Hamiltonian, chart: &Chart, class: &HomotopyClass, cfg: &SearchConfig) -> Result<OrbitSet> {
    if h.dof() != chart.dof() {
        return Err(Error::DimensionMismatch {
            expected: chart.dof(),
            found: h.dof(),
        });
    }
    let shift = class_shift(chart, class)?;
    // without q-dependence every orbit comes in a q-translation family, so
    // one column of seeds suffices and the family is filled in by translation
    let q_free = !h.is_q_dependent();
    let n = chart.dof();
    let mut seeds = seed_grid(chart, cfg);
    if q_free {
        seeds.retain(|s| s[..n].iter().all(|q| *q == 0.0));
    }
    let (lo, hi) = cfg.p_range.unwrap_or_else(|| chart.p_range());
    let margin = 0.5 * (hi - lo).max(1.0);
    let p_window = (!is_periodic_p(chart)).then_some((lo - margin, hi + margin));
    let coarse = Shooter {
        h,
        integ: Integrator {
            p_bounds: chart.p_bounds(),
            ..Integrator::new(cfg.coarse_steps.min(cfg.steps))
        },
        shift: shift.clone(),
        tol: cfg.tol,
        max_iter: cfg.max_newton,
        p_window,
    };
    let converged: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|s| coarse.shoot(s).map(|(x, _)| x))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let converged_seeds = converged.len();
    let coarse_unique = unique_states(chart, converged, cfg.dedupe_radius, cfg.seed);

    let mut steps = cfg.steps;
    let mut polished = polish(h, chart, &shift, &coarse_unique, steps, cfg, p_window);
    if cfg.auto_double {
        for _ in 0..4 {
            let finer = polish(h, chart, &shift, &polished, 2 * steps, cfg, p_window);
            let moved = polished
                .iter()
                .zip(&finer)
                .map(|(a, b)| chart.distance(a, b))
                .fold(0.0, f64::max);
            steps *= 2;
            let same_count = finer.len() == polished.len();
            polished = finer;
            if same_count && moved < cfg.tol {
                break;
            }
        }
    }
    if q_free {
        for x in polished.iter_mut() {
            x[..n].iter_mut().for_each(|q| *q = 0.0);
        }
    }
    let unique = unique_states(chart, polished, cfg.dedupe_radius, cfg.seed);

    let integ = Integrator {
        p_bounds: chart.p_bounds(),
        ..Integrator::new(steps)
    };
    let z = ReferenceLoop::standard(chart, class, 256)?;
    let orbits: Vec<PeriodicOrbit> = unique
        .par_iter()
        .map(|x| build_orbit(h, &integ, class, &shift, &z, x))
        .collect::<Result<Vec<_>>>()?;
    if q_free {
        return Ok(OrbitSet {
            class: class.clone(),
            density: cfg.grid,
            seeds: seeds.len(),
            converged_seeds,
            isolated: vec![],
            families: translation_families(orbits, cfg.grid.max(1), n),
        });
    }
    let recheck = Shooter {
        h,
        integ: integ.clone(),
        shift: shift.clone(),
        tol: cfg.tol,
        max_iter: cfg.max_newton,
        p_window,
    };
    let link = 2.5 / cfg.grid.max(1) as f64;
    let (isolated, families) = dedupe(orbits, chart, cfg.dedupe_radius, link, &|x| {
        recheck.shoot(x).map(|(y, _)| y)
    })?;
    Ok(OrbitSet {
        class: class.clone(),
        density: cfg.grid,
        seeds: seeds.len(),
        converged_seeds,
        isolated,
        families,
    })
}

/// Each orbit together with its translates by `i / grid` in every `q`.
fn translation_families(orbits: Vec<PeriodicOrbit>, grid: usize, dof: usize) -> Vec<OrbitFamily> {
    let offsets: Vec<Vec<f64>> = (0..grid.pow(dof as u32))
        .map(|mut k| {
            (0..dof)
                .map(|_| {
                    let i = k % grid;
                    k /= grid;
                    i as f64 / grid as f64
                })
                .collect()
        })
        .collect();
    orbits
        .into_iter()
        .enumerate()
        .map(|(id, base)| {
            let members = offsets
                .iter()
                .map(|dq| {
                    let mut o = base.clone();
                    for x in o.trajectory.points.iter_mut() {
                        x.q.iter_mut().zip(dq).for_each(|(q, d)| *q += d);
                    }
                    o.family_id = Some(id);
                    o
                })
                .collect();
            OrbitFamily { id, members, closed: true }
        })
        .collect()
}

fn polish(
    h: &Hamiltonian,
    chart: &Chart,
    shift: &[f64],
    states: &[Vec<f64>],
    steps: usize,
    cfg: &SearchConfig,
    p_window: Option<(f64, f64)>,
) -> Vec<Vec<f64>> {
    let fine = Shooter {
        h,
        integ: Integrator {
            p_bounds: chart.p_bounds(),
            ..Integrator::new(steps)
        },
        shift: shift.to_vec(),
        tol: cfg.tol,
        max_iter: cfg.max_newton,
        p_window,
    };
    states
        .par_iter()
        .map(|s| fine.shoot(s).map(|(x, _)| chart.canonical(&x)))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Integrate, linearize and evaluate the action of a converged start point.
pub fn build_orbit(
    h: &Hamiltonian,
    integ: &Integrator,
    class: &HomotopyClass,
    shift: &[f64],
    z: &ReferenceLoop,
    x: &[f64],
) -> Result<PeriodicOrbit> {
    let traj = integ.flow(h, &PhasePoint::from_state(x))?;
    let monodromy = integ.monodromy(h, &traj)?;
    let end = traj.end().to_state();
    let residual = end
        .iter()
        .zip(x)
        .zip(shift)
        .map(|((y, x), s)| (y - x - s).abs())
        .fold(0.0, f64::max);
    let action = action(h, &traj, class, z)?;
    Ok(PeriodicOrbit {
        nondegenerate: is_nondegenerate(&monodromy, DEGENERACY_TOL),
        trajectory: traj,
        class: class.clone(),
        action,
        monodromy,
        family_id: None,
        residual,
    })
}

/// Group orbits whose start points lie on a common curve of degenerate
/// solutions into families; everything else is reported individually.
///
/// Two degenerate orbits closer than `link` are joined when the chord
/// between them follows the kernel of `M - I` and `on_curve` (Newton from
/// the chord midpoint) lands next to that midpoint. Orbits closer than
/// `radius` are duplicates.
pub fn dedupe(
    orbits: Vec<PeriodicOrbit>,
    chart: &Chart,
    radius: f64,
    link: f64,
    on_curve: &(dyn Fn(&[f64]) -> Option<Vec<f64>> + Sync),
) -> Result<(Vec<PeriodicOrbit>, Vec<OrbitFamily>)> {
    let mut orbits = orbits;
    orbits.sort_by(|a, b| lex_cmp(&sort_key(chart, &a.start_state()), &sort_key(chart, &b.start_state())));
    let mut unique: Vec<PeriodicOrbit> = vec![];
    for o in orbits {
        let s = o.start_state();
        if !unique.iter().any(|u| chart.distance(&u.start_state(), &s) < radius) {
            unique.push(o);
        }
    }
    let n = unique.len();
    let kernels: Vec<Option<Vec<f64>>> = unique
        .iter()
        .map(|o| {
            let (smin, v) = kernel_direction(&o.monodromy);
            (smin < DEGENERACY_TOL.sqrt()).then_some(v)
        })
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    let mut candidate_pairs = vec![];
    for i in 0..n {
        let Some(ki) = &kernels[i] else { continue };
        let xi = unique[i].start_state();
        for j in i + 1..n {
            if kernels[j].is_none() {
                continue;
            }
            let xj = unique[j].start_state();
            let d = chart.distance(&xi, &xj);
            if d >= link {
                continue;
            }
            let chord = periodic_chord(chart, &xi, &xj);
            let norm = chord.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cos = chord.iter().zip(ki).map(|(a, b)| a * b).sum::<f64>().abs() / norm;
            if cos > 0.95 {
                candidate_pairs.push((i, j, chord));
            }
        }
    }
    let checks: Vec<(usize, usize, bool)> = candidate_pairs
        .par_iter()
        .map(|(i, j, chord)| {
            let xi = unique[*i].start_state();
            let mid: Vec<f64> = xi.iter().zip(chord).map(|(a, c)| a + 0.5 * c).collect();
            let len = chord.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let ok = on_curve(&mid).map_or(false, |y| {
                let d = chart.distance(&y, &mid);
                d < 0.1 * len
            });
            (*i, *j, ok)
        })
        .collect();
    for (i, j, ok) in checks {
        if !ok {
            let center = unique[i].start_state();
            return Err(Error::AmbiguousCluster { center, radius: link });
        }
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![];
    let mut root_to_group = std::collections::BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let g = *root_to_group.entry(r).or_insert_with(|| {
            groups.push(vec![]);
            groups.len() - 1
        });
        groups[g].push(i);
    }
    let mut slots: Vec<Option<PeriodicOrbit>> = unique.into_iter().map(Some).collect();
    let mut isolated = vec![];
    let mut families = vec![];
    for g in groups {
        if g.len() == 1 {
            isolated.push(slots[g[0]].take().expect("each index used once"));
            continue;
        }
        let id = families.len();
        let mut members: Vec<PeriodicOrbit> = g
            .iter()
            .map(|&i| {
                let mut o = slots[i].take().expect("each index used once");
                o.family_id = Some(id);
                o
            })
            .collect();
        members.sort_by(|a, b| a.start().q[0].total_cmp(&b.start().q[0]));
        let closed = covers_circle(&members, link);
        families.push(OrbitFamily { id, members, closed });
    }
    Ok((isolated, families))
}

/// Shortest representative of `b - a` (periodic coordinates wrapped).
fn periodic_chord(chart: &Chart, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(chart.periodic_mask())
        .map(|((x, y), periodic)| {
            let d = y - x;
            if periodic {
                d - d.round()
            } else {
                d
            }
        })
        .collect()
}

fn covers_circle(members: &[PeriodicOrbit], link: f64) -> bool {
    let qs: Vec<f64> = members.iter().map(|o| o.start().q[0]).collect();
    let mut gap = 1.0 - (qs[qs.len() - 1] - qs[0]);
    for w in qs.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap < link
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// `(a, b)`
    Lower,
    /// `(b, c)`
    Upper,
}

/// Which member of the squeezing pair produced an orbit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSide {
    H0,
    H1,
}

impl PairSide {
    /// Window predicted for the orbit level `p`: the circle whose tangent
    /// intercept is closer to `a` lies in `(a, b)`.
    pub fn predicted(self, wc: &WindowConstants, p: f64) -> Window {
        let (near_lo, near_hi) = match self {
            PairSide::H0 => (wc.big_r - wc.s_lo, wc.big_r - wc.s_hi),
            PairSide::H1 => (wc.s_hi, wc.s_lo),
        };
        if (p - near_lo).abs() <= (p - near_hi).abs() {
            Window::Lower
        } else {
            Window::Upper
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub label: String,
    pub level: f64,
    pub action: f64,
    pub window: Option<Window>,
    pub predicted: Option<Window>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub entries: Vec<WindowEntry>,
    pub pass: bool,
    pub violations: Vec<String>,
}

pub fn window_of(wc: &WindowConstants, action: f64) -> Option<Window> {
    if wc.a < action && action < wc.b {
        Some(Window::Lower)
    } else if wc.b < action && action < wc.c {
        Some(Window::Upper)
    } else {
        None
    }
}

/// Check that every orbit (every member of every family) lies in `(a, b)`
/// or `(b, c)`, in the predicted one when `side` is given, and that both
/// windows are populated.
pub fn verify_window(set: &OrbitSet, wc: &WindowConstants, side: Option<PairSide>) -> WindowReport {
    let mut entries = vec![];
    for (i, o) in set.isolated.iter().enumerate() {
        entries.push((format!("orbit {i}"), o.start().p[0], o.action));
    }
    for f in &set.families {
        for (k, o) in f.members.iter().enumerate() {
            entries.push((format!("family {} member {k}", f.id), o.start().p[0], o.action));
        }
    }
    let mut violations = vec![];
    let entries: Vec<WindowEntry> = entries
        .into_iter()
        .map(|(label, level, action)| {
            let window = window_of(wc, action);
            let predicted = side.map(|s| s.predicted(wc, level));
            if window.is_none() {
                violations.push(format!("{label}: action {action} outside (a, b) ∪ (b, c)"));
            } else if predicted.is_some() && predicted != window {
                violations.push(format!("{label}: action {action} not in predicted window {predicted:?}"));
            }
            WindowEntry {
                label,
                level,
                action,
                window,
                predicted,
            }
        })
        .collect();
    for w in [Window::Lower, Window::Upper] {
        if !entries.iter().any(|e| e.window == Some(w)) {
            violations.push(format!("no orbit in the {w:?} window"));
        }
    }
    WindowReport {
        a: wc.a,
        b: wc.b,
        c: wc.c,
        pass: violations.is_empty(),
        entries,
        violations,
    }
}

/// For `T >= 1`: integrate `H` for time `T` from the start of an orbit of
/// `T·H` and return `|y(T) - y(0) - α̃|_∞`.
pub fn rescaling_residual(h: &Hamiltonian, orbit_of_th: &PeriodicOrbit, chart: &Chart, period: u32, steps: usize) -> Result<f64> {
    let shift = class_shift(chart, &orbit_of_th.class)?;
    let x0 = orbit_of_th.start_state();
    let integ = Integrator::new(steps);
    let (y, _) = integ.end_map_span(h, &x0, 0.0, period as f64, false)?;
    Ok(y.iter()
        .zip(&x0)
        .zip(&shift)
        .map(|((y, x), s)| (y - x - s).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
    pub class: Vec<i64>,
    pub action: f64,
    pub floquet: Vec<(f64, f64)>,
    pub det_m_minus_i: f64,
    pub nondegenerate: bool,
    pub residual: f64,
    pub family_id: Option<usize>,
    /// Rows `[t, q.., p..]`, at most 257 of them.
    pub samples: Vec<Vec<f64>>,
}

impl OrbitRecord {
    pub fn new(o: &PeriodicOrbit) -> Self {
        let traj = &o.trajectory;
        let stride = (traj.steps() / 256).max(1);
        let samples = traj
            .times
            .iter()
            .zip(&traj.points)
            .enumerate()
            .filter(|(i, _)| i % stride == 0 || *i == traj.steps())
            .map(|(_, (t, x))| std::iter::once(*t).chain(x.q.iter().copied()).chain(x.p.iter().copied()).collect())
            .collect();
        OrbitRecord {
            q0: o.start().q.clone(),
            p0: o.start().p.clone(),
            class: o.class.winding.clone(),
            action: o.action,
            floquet: o.monodromy.eigenvalues(),
            det_m_minus_i: o.monodromy.fixed_point_det(),
            nondegenerate: o.nondegenerate,
            residual: o.residual,
            family_id: o.family_id,
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub id: usize,
    pub level: f64,
    pub action: f64,
    pub action_spread: f64,
    pub closed: bool,
    pub members: usize,
    pub representative: OrbitRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSetRecord {
    pub class: Vec<i64>,
    pub density: usize,
    pub seeds: usize,
    pub converged_seeds: usize,
    pub summary: String,
    pub isolated: Vec<OrbitRecord>,
    pub families: Vec<FamilyRecord>,
    pub spectrum: Vec<f64>,
}

impl OrbitSet {
    pub fn record(&self) -> OrbitSetRecord {
        OrbitSetRecord {
            class: self.class.winding.clone(),
            density: self.density,
            seeds: self.seeds,
            converged_seeds: self.converged_seeds,
            summary: self.summary(),
            isolated: self.isolated.iter().map(OrbitRecord::new).collect(),
            families: self
                .families
                .iter()
                .map(|f| FamilyRecord {
                    id: f.id,
                    level: f.level(),
                    action: f.action(),
                    action_spread: f.action_spread(),
                    closed: f.closed,
                    members: f.members.len(),
                    representative: OrbitRecord::new(&f.members[0]),
                })
                .collect(),
            spectrum: self.actions().values(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.record()).expect("orbit records serialize")
    }

    /// One row per orbit: `kind,id,family,q0..,p0..,action,det_m_minus_i,nondegenerate`.
    pub fn to_csv(&self) -> String {
        let n = self
            .all()
            .first()
            .map_or(1, |o| o.start().dof());
        let mut out = String::from("kind,id,family");
        for i in 0..n {
            let _ = write!(out, ",q{}", i + 1);
        }
        for i in 0..n {
            let _ = write!(out, ",p{}", i + 1);
        }
        out.push_str(",action,det_m_minus_i,nondegenerate\n");
        let mut row = |kind: &str, id: usize, o: &PeriodicOrbit| {
            let fam = o.family_id.map_or(String::new(), |f| f.to_string());
            let _ = write!(out, "{kind},{id},{fam}");
            for v in o.start().q.iter().chain(&o.start().p) {
                let _ = write!(out, ",{v:?}");
            }
            let _ = writeln!(
                out,
                ",{:?},{:?},{}",
                o.action,
                o.monodromy.fixed_point_det(),
                o.nondegenerate
            );
        };
        for (i, o) in self.isolated.iter().enumerate() {
            row("isolated", i, o);
        }
        for f in &self.families {
            for (k, o) in f.members.iter().enumerate() {
                row("member", k, o);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests;
