//! Relative capacity by bisection over one-parameter Hamiltonian families,
//! the BPS special case, and rotation vectors of orbit measures.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Integrator, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{Chart, HomotopyClass, PhasePoint};
use crate::hamiltonian::{Hamiltonian, Preset};
use crate::orbits::{find_orbits, OrbitRecord, OrbitSet, PeriodicOrbit, SearchConfig};

/// A compact set of the form `{p ∈ P}` (all `q`, all `t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelSet {
    Empty,
    /// The level `{p = level}`.
    PLevel { level: Vec<f64> },
    /// `{lo <= p <= hi}` for one degree of freedom.
    PBand { lo: f64, hi: f64 },
}

impl LevelSet {
    pub fn level(p: f64) -> Self {
        LevelSet::PLevel { level: vec![p] }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, LevelSet::Empty)
    }

    /// Sample `p` values (all of them for a level, `n + 1` for a band).
    pub fn sample_p(&self, n: usize) -> Vec<Vec<f64>> {
        match self {
            LevelSet::Empty => vec![],
            LevelSet::PLevel { level } => vec![level.clone()],
            LevelSet::PBand { lo, hi } => (0..=n)
                .map(|i| vec![lo + (hi - lo) * i as f64 / n as f64])
                .collect(),
        }
    }
}

/// `inf_X H - sup_Y H` (or `inf_X H` when `Y` is empty) on a sample grid
/// of `n` points per `q`, `t` and band direction.
pub fn sampled_gap(h: &Hamiltonian, x: &LevelSet, y: &LevelSet, n: usize) -> f64 {
    let dof = h.dof();
    let qs: Vec<f64> = if h.is_q_dependent() {
        (0..n).map(|i| i as f64 / n as f64).collect()
    } else {
        vec![0.0]
    };
    let ts: Vec<f64> = if h.is_time_dependent() {
        (0..n).map(|i| i as f64 / n as f64).collect()
    } else {
        vec![0.0]
    };
    let values = |set: &LevelSet| -> Vec<f64> {
        let mut out = vec![];
        for p in set.sample_p(n) {
            for &q in &qs {
                for &t in &ts {
                    let mut state = vec![q; dof];
                    state.extend(&p);
                    out.push(h.value_at(t, &state));
                }
            }
        }
        out
    };
    let inf_x = values(x).into_iter().fold(f64::INFINITY, f64::min);
    let sup_y = if y.is_empty() {
        0.0
    } else {
        values(y).into_iter().fold(f64::NEG_INFINITY, f64::max)
    };
    inf_x - sup_y
}

type Builder = Arc<dyn Fn(f64) -> Result<Hamiltonian> + Send + Sync>;
type Gap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Certifier = Arc<dyn Fn(f64) -> Option<String> + Send + Sync>;

/// `c ↦ H_c` together with the gap `inf_X H_c - sup_Y H_c`, strictly
/// increasing in `c`, and optionally an analytic reason why `H_c` has no
/// orbit in the class under study.
#[derive(Clone)]
pub struct HamiltonianFamily {
    pub name: String,
    pub chart: Chart,
    pub x: LevelSet,
    pub y: LevelSet,
    pub search: SearchConfig,
    builder: Builder,
    gap: Gap,
    certifier: Option<Certifier>,
}

impl fmt::Debug for HamiltonianFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianFamily")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("x", &self.x)
            .field("y", &self.y)
            .field("analytic", &self.certifier.is_some())
            .finish()
    }
}

impl HamiltonianFamily {
    pub fn new(
        name: impl Into<String>,
        chart: Chart,
        x: LevelSet,
        y: LevelSet,
        builder: impl Fn(f64) -> Result<Hamiltonian> + Send + Sync + 'static,
        gap: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let search = SearchConfig::default();
        HamiltonianFamily {
            name: name.into(),
            chart,
            x,
            y,
            search,
            builder: Arc::new(builder),
            gap: Arc::new(gap),
            certifier: None,
        }
    }

    pub fn with_certifier(mut self, f: impl Fn(f64) -> Option<String> + Send + Sync + 'static) -> Self {
        self.certifier = Some(Arc::new(f));
        self
    }

    pub fn with_search(mut self, search: SearchConfig) -> Self {
        self.search = search;
        self
    }

    pub fn build(&self, c: f64) -> Result<Hamiltonian> {
        (self.builder)(c)
    }

    pub fn gap(&self, c: f64) -> f64 {
        (self.gap)(c)
    }

    pub fn analytic_certificate(&self, c: f64) -> Option<String> {
        self.certifier.as_ref().and_then(|f| f(c))
    }
}

/// The annulus ramp: `H_c` depends on `p` only, is linear with slope
/// `-c / R` on `[0, R]` and smoothly flattens to 0 within `eta` on both
/// sides. Hence `H_c(0) - H_c(R) = c` and `|∂H_c/∂p| <= c / R` wherever it
/// is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRamp {
    pub r: i64,
    pub big_r: f64,
    pub eta: f64,
}

impl AnnulusRamp {
    pub fn new(r: i64, big_r: f64) -> Result<Self> {
        if r < 1 || !(big_r > 0.0 && big_r <= 0.8) {
            return Err(Error::BadParams(format!(
                "annulus ramp needs r >= 1 and 0 < R <= 0.8 (r = {r}, R = {big_r})"
            )));
        }
        Ok(AnnulusRamp { r, big_r, eta: big_r / 8.0 })
    }

    pub fn chart(&self) -> Chart {
        Chart::annulus(1.0)
    }

    pub fn class(&self) -> HomotopyClass {
        HomotopyClass::new(vec![-self.r])
    }

    pub fn slope(&self, c: f64) -> f64 {
        c / self.big_r
    }

    pub fn preset(&self, c: f64) -> Preset {
        let s = self.slope(c);
        Preset::Ramp {
            drop: s * (self.big_r + self.eta),
            length: self.big_r + self.eta,
            eta: self.eta,
            left: self.eta,
            start: -self.eta,
        }
    }

    pub fn hamiltonian(&self, c: f64) -> Result<Hamiltonian> {
        Hamiltonian::planar(self.preset(c))
    }

    /// Seeds cover the whole support.
    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            p_range: Some((-2.0 * self.eta, self.big_r + self.eta)),
            ..SearchConfig::default()
        }
    }

    /// Along any orbit `p` is constant and `q̇ = ∂H/∂p >= -c/R`, so no orbit
    /// winds `r` times backwards while `c < rR`.
    pub fn certificate(&self, c: f64) -> Option<String> {
        let s = self.slope(c);
        (s < self.r as f64).then(|| {
            format!(
                "H depends on p only and dq/dt >= -{s} > -{} everywhere: no orbit winds {} times backwards",
                self.r, self.r
            )
        })
    }

    /// The family with `X`, `Y` given; the gap is sampled from the exact
    /// profile, which is `p`-only.
    pub fn family(&self, x: LevelSet, y: LevelSet) -> HamiltonianFamily {
        let ramp = *self;
        let (gx, gy) = (x.clone(), y.clone());
        let gap = move |c: f64| match ramp.hamiltonian(c) {
            Ok(h) => sampled_gap(&h, &gx, &gy, 4096),
            Err(_) => f64::NAN,
        };
        HamiltonianFamily::new(
            format!("annulus ramp r={} R={}", self.r, self.big_r),
            self.chart(),
            x,
            y,
            move |c| ramp.hamiltonian(c),
            gap,
        )
        .with_certifier(move |c| ramp.certificate(c))
        .with_search(self.search())
    }
}

/// `X = {p = 0}`, `Y = {p = R}`: the gap is `c` itself.
pub fn annulus_family(r: i64, big_r: f64) -> Result<HamiltonianFamily> {
    let ramp = AnnulusRamp::new(r, big_r)?;
    let mut fam = ramp.family(LevelSet::level(0.0), LevelSet::level(big_r));
    fam.gap = Arc::new(|c| c);
    Ok(fam)
}

/// `X = {p = 0}`, `Y = ∅`: the gap is `H_c(0)`.
pub fn annulus_bps_family(r: i64, big_r: f64, x: LevelSet) -> Result<HamiltonianFamily> {
    Ok(AnnulusRamp::new(r, big_r)?.family(x, LevelSet::Empty))
}

/// Lagrangian counterexample on `𝕋^{2n}`; the parameter is `k` and the gap
/// `inf_{p=0} H - sup_{p=w} H` equals `k`.
pub fn lagrangian_family(w: Vec<f64>, alpha: Vec<i64>) -> Result<HamiltonianFamily> {
    let n = w.len();
    let (beta, _) = crate::hamiltonian::lagrangian_beta(&w, &alpha, None)?;
    let preset = {
        let (w, alpha) = (w.clone(), alpha.clone());
        move |k: f64| Preset::CounterexampleLagrangian {
            w: w.clone(),
            k,
            alpha: alpha.clone(),
            beta: None,
        }
    };
    let certificate = format!(
        "H depends on p through (p - w)·β only with β = {beta:?}: every orbit moves along β \
         and β is not parallel to α = {alpha:?}"
    );
    Ok(HamiltonianFamily::new(
        "lagrangian counterexample",
        Chart::ProductTorus { n },
        LevelSet::PLevel { level: vec![0.0; n] },
        LevelSet::PLevel { level: w },
        move |k| Hamiltonian::new(preset(k), n),
        |k| k,
    )
    .with_certifier(move |_| Some(certificate.clone()))
    .with_search(SearchConfig::with_grid(8)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoOrbitCertificate {
    pub c: f64,
    pub gap: f64,
    pub density: usize,
    pub seeds: usize,
    pub converged_seeds: usize,
    /// Present for families whose emptiness is also proved symbolically.
    pub analytic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub c: f64,
    pub gap: f64,
    pub orbits: usize,
    pub summary: String,
}

/// One family member that had orbits, with a representative of each orbit
/// and each family of orbits.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub c: f64,
    pub gap: f64,
    pub witnesses: Vec<PeriodicOrbit>,
}

/// Bracket for the capacity in gap units: `lower` is the largest sampled gap
/// without orbits, `upper` the smallest with one (`None` if even the top of
/// the bracket had none).
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityEstimate {
    pub lower: f64,
    pub upper: Option<f64>,
    pub tol: f64,
    pub grid_density: usize,
    pub witnesses: Vec<PeriodicOrbit>,
    pub certificates: Vec<NoOrbitCertificate>,
    pub search_log: Vec<BisectionStep>,
    pub samples: Vec<Sample>,
}

impl CapacityEstimate {
    pub fn width(&self) -> Option<f64> {
        self.upper.map(|u| u - self.lower)
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && self.upper.map_or(true, |u| value <= u)
    }

    pub fn record(&self) -> CapacityRecord {
        CapacityRecord {
            lower: self.lower,
            upper: self.upper,
            tol: self.tol,
            witnesses: self.witnesses.iter().map(OrbitRecord::new).collect(),
            certificates: self.certificates.clone(),
            grid_density: self.grid_density,
            search_log: self.search_log.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.record()).expect("capacity records serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRecord {
    pub lower: f64,
    pub upper: Option<f64>,
    pub tol: f64,
    pub witnesses: Vec<OrbitRecord>,
    pub certificates: Vec<NoOrbitCertificate>,
    pub grid_density: usize,
    pub search_log: Vec<BisectionStep>,
}

fn representatives(set: &OrbitSet) -> Vec<PeriodicOrbit> {
    let mut out = set.isolated.clone();
    out.extend(set.families.iter().filter_map(|f| f.members.first().cloned()));
    out
}

struct Outcome {
    gap: f64,
    set: OrbitSet,
}

fn probe(fam: &HamiltonianFamily, class: &HomotopyClass, c: f64, log: &mut Vec<BisectionStep>) -> Result<Outcome> {
    let h = fam.build(c)?;
    let set = find_orbits(&h, &fam.chart, class, &fam.search)?;
    let gap = fam.gap(c);
    log.push(BisectionStep {
        c,
        gap,
        orbits: set.count(),
        summary: set.summary(),
    });
    Ok(Outcome { gap, set })
}

/// Bisection in the family parameter until the gap bracket is at most `tol`
/// wide. Emptiness at each step is decided by the orbit search.
pub fn estimate_capacity(
    fam: &HamiltonianFamily,
    class: &HomotopyClass,
    bracket: (f64, f64),
    tol: f64,
) -> Result<CapacityEstimate> {
    let (c_lo, c_hi) = bracket;
    if !(c_lo <= c_hi) || !(tol > 0.0) {
        return Err(Error::BracketInvalid(format!(
            "need c_lo <= c_hi and tol > 0 (got [{c_lo}, {c_hi}], tol {tol})"
        )));
    }
    let mut log = vec![];
    let mut samples = vec![];
    let mut certificates = vec![];
    let certify = |c: f64, o: &Outcome| NoOrbitCertificate {
        c,
        gap: o.gap,
        density: o.set.density,
        seeds: o.set.seeds,
        converged_seeds: o.set.converged_seeds,
        analytic: fam.analytic_certificate(c),
    };
    let sample = |c: f64, o: &Outcome| Sample {
        c,
        gap: o.gap,
        witnesses: representatives(&o.set),
    };

    let bottom = probe(fam, class, c_lo, &mut log)?;
    if c_lo == c_hi {
        // nothing to bisect: a single sample is its own bracket
        let found = !bottom.set.is_empty();
        if found {
            samples.push(sample(c_lo, &bottom));
        } else {
            certificates.push(certify(c_lo, &bottom));
        }
        return Ok(CapacityEstimate {
            lower: bottom.gap,
            upper: found.then_some(bottom.gap),
            tol,
            grid_density: fam.search.grid,
            witnesses: representatives(&bottom.set),
            certificates,
            search_log: log,
            samples,
        });
    }
    if !bottom.set.is_empty() {
        return Err(Error::BracketInvalid(format!(
            "orbits already exist at the bottom of the bracket (c = {c_lo}: {})",
            bottom.set.summary()
        )));
    }
    certificates.push(certify(c_lo, &bottom));
    let top = probe(fam, class, c_hi, &mut log)?;
    if top.set.is_empty() {
        certificates.push(certify(c_hi, &top));
        return Ok(CapacityEstimate {
            lower: top.gap,
            upper: None,
            tol,
            grid_density: fam.search.grid,
            witnesses: vec![],
            certificates,
            search_log: log,
            samples,
        });
    }
    samples.push(sample(c_hi, &top));
    let (mut lo, mut hi) = ((c_lo, bottom.gap), (c_hi, top.gap));
    let mut witnesses = representatives(&top.set);
    while hi.1 - lo.1 > tol {
        let mid = 0.5 * (lo.0 + hi.0);
        if mid <= lo.0 || mid >= hi.0 {
            break;
        }
        let o = probe(fam, class, mid, &mut log)?;
        if o.set.is_empty() {
            certificates.push(certify(mid, &o));
            lo = (mid, o.gap);
        } else {
            samples.push(sample(mid, &o));
            witnesses = representatives(&o.set);
            hi = (mid, o.gap);
        }
    }
    Ok(CapacityEstimate {
        lower: lo.1,
        upper: Some(hi.1),
        tol,
        grid_density: fam.search.grid,
        witnesses,
        certificates,
        search_log: log,
        samples,
    })
}

/// The BPS capacity: `Y` must be empty, so the gap is `inf_X H`.
pub fn bps_capacity(
    fam: &HamiltonianFamily,
    class: &HomotopyClass,
    bracket: (f64, f64),
    tol: f64,
) -> Result<CapacityEstimate> {
    if class.is_zero() {
        return Err(Error::ZeroClass);
    }
    if !fam.y.is_empty() {
        return Err(Error::BadParams("the BPS capacity takes Y = ∅".into()));
    }
    estimate_capacity(fam, class, bracket, tol)
}

/// Pairing of an invariant measure with `dqᵢ` (and `dpᵢ` where `p` is
/// periodic), in chart order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationVector {
    pub components: Vec<f64>,
}

/// Time average of the periodic components of `X_H` along a trajectory,
/// i.e. their net displacement over the elapsed time.
pub fn trajectory_rotation_vector(chart: &Chart, traj: &Trajectory) -> RotationVector {
    let a = traj.start().to_state();
    let b = traj.end().to_state();
    let span = traj.times.last().copied().unwrap_or(0.0) - traj.times.first().copied().unwrap_or(0.0);
    let components = chart
        .periodic_mask()
        .into_iter()
        .zip(a.iter().zip(&b))
        .filter(|(periodic, _)| *periodic)
        .map(|(_, (x, y))| if span == 0.0 { 0.0 } else { (y - x) / span })
        .collect();
    RotationVector { components }
}

/// Birkhoff average of `X_H` over `[0, t]` starting at `x0`.
pub fn rotation_vector(h: &Hamiltonian, chart: &Chart, x0: &PhasePoint, t: f64, steps: usize) -> Result<RotationVector> {
    if !(t > 0.0) {
        return Err(Error::BadParams(format!("averaging time must be positive, got {t}")));
    }
    let traj = Integrator::new(steps).flow_span(h, x0, 0.0, t)?;
    Ok(trajectory_rotation_vector(chart, &traj))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpEntry {
    pub gap: f64,
    pub rotation: Vec<f64>,
    pub pairing: f64,
    pub required: f64,
    pub met: bool,
}

/// Rotation-vector criterion `|⟨𝔩, ρ⟩| >= 𝔩(α)` on the orbit measures of
/// every sampled witness, with `𝔩` the coordinate class dual to `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    pub functional: Vec<i64>,
    pub entries: Vec<CpEntry>,
    pub vacuous: bool,
    pub all_met: bool,
    /// The smallest sampled gap above which the criterion held everywhere
    /// it was sampled: an upper bound for the rotation-vector capacity.
    pub bound: Option<f64>,
    pub note: String,
}

/// `sign(αᵢ) · dxᵢ` for the first nonzero component of `α`.
pub fn dual_functional(class: &HomotopyClass) -> Result<Vec<i64>> {
    let i = class.winding.iter().position(|a| *a != 0).ok_or(Error::ZeroClass)?;
    let mut l = vec![0; class.winding.len()];
    l[i] = class.winding[i].signum();
    Ok(l)
}

pub fn cp_comparison(chart: &Chart, class: &HomotopyClass, est: &CapacityEstimate) -> Result<CpReport> {
    let functional = dual_functional(class)?;
    let required: f64 = functional.iter().zip(&class.winding).map(|(l, a)| (l * a) as f64).sum();
    let upper = est.upper;
    let mut entries = vec![];
    for s in &est.samples {
        if upper.map_or(true, |u| s.gap < u) {
            continue;
        }
        for o in &s.witnesses {
            let rho = trajectory_rotation_vector(chart, &o.trajectory);
            let pairing: f64 = functional.iter().zip(&rho.components).map(|(l, r)| *l as f64 * r).sum();
            entries.push(CpEntry {
                gap: s.gap,
                rotation: rho.components,
                pairing,
                required,
                met: pairing.abs() >= required - 1e-9,
            });
        }
    }
    entries.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    let vacuous = entries.is_empty();
    let all_met = entries.iter().all(|e| e.met);
    let note = if vacuous {
        "no witness orbit was found: the rotation-vector criterion is vacuous here".to_string()
    } else if all_met {
        format!(
            "criterion met by every witness at all {} sampled gaps >= {}",
            est.samples.iter().filter(|s| upper.map_or(false, |u| s.gap >= u)).count(),
            upper.unwrap_or(f64::NAN)
        )
    } else {
        "criterion violated by some witness".to_string()
    };
    Ok(CpReport {
        functional,
        entries,
        vacuous,
        all_met,
        bound: (!vacuous && all_met).then_some(upper).flatten(),
        note,
    })
}

/// The hypotheses `inf_X H - sup_Y H > |α|R` and `sup H < |α|R + inf_X H`
/// for `X = {p = 0}`, `Y = {|p| = R}` on `𝕋^{2n}`, checked on samples, and
/// the orbits found in class `α`. A measurement: nothing here asserts the
/// value of the capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTorusCheck {
    pub alpha: Vec<i64>,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `|α| R`.
    pub threshold: f64,
    /// `inf_X H - sup_Y H`.
    pub gap: f64,
    /// `|α| R + inf_X H - sup H`.
    pub headroom: f64,
    pub hypotheses_met: bool,
    pub summary: String,
    /// Torus distance `|p|` of each orbit found (family representatives).
    pub radii: Vec<f64>,
}

fn torus_norm(p: &[f64]) -> f64 {
    p.iter().map(|v| (v - v.round()).powi(2)).sum::<f64>().sqrt()
}

pub fn round_torus_check(h: &Hamiltonian, alpha: &[i64], big_r: f64, search: &SearchConfig) -> Result<RoundTorusCheck> {
    let n = h.dof();
    if n != 2 || alpha.len() != 2 {
        return Err(Error::BadParams("the round-torus check runs on T^4 with alpha in Z^2".into()));
    }
    if !(big_r > 0.0 && big_r < 0.5) {
        return Err(Error::BadParams(format!("need 0 < R < 1/2, got {big_r}")));
    }
    let class = HomotopyClass::new(vec![alpha[0], alpha[1], 0, 0]);
    if class.is_zero() {
        return Err(Error::ZeroClass);
    }
    let ts: Vec<f64> = if h.is_time_dependent() { (0..8).map(|i| i as f64 / 8.0).collect() } else { vec![0.0] };
    let qs: Vec<[f64; 2]> = if h.is_q_dependent() {
        (0..64).map(|i| [(i % 8) as f64 / 8.0, (i / 8) as f64 / 8.0]).collect()
    } else {
        vec![[0.0, 0.0]]
    };
    let extrema = |ps: &mut dyn Iterator<Item = [f64; 2]>| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in ps {
            for q in &qs {
                for &t in &ts {
                    let v = h.value_at(t, &[q[0], q[1], p[0], p[1]]);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo, hi)
    };
    let (inf_x, _) = extrema(&mut std::iter::once([0.0, 0.0]));
    let (_, sup_y) = extrema(&mut (0..512).map(|i| {
        let a = std::f64::consts::TAU * i as f64 / 512.0;
        [big_r * a.cos(), big_r * a.sin()]
    }));
    let (_, sup_h) = extrema(&mut (0..128 * 128).map(|i| [(i % 128) as f64 / 128.0, (i / 128) as f64 / 128.0]));
    let threshold = big_r * ((alpha[0] * alpha[0] + alpha[1] * alpha[1]) as f64).sqrt();
    let gap = inf_x - sup_y;
    let headroom = threshold + inf_x - sup_h;
    let set = find_orbits(h, &Chart::ProductTorus { n: 2 }, &class, search)?;
    let mut radii: Vec<f64> = set
        .isolated
        .iter()
        .chain(set.families.iter().map(|f| &f.members[0]))
        .map(|o| torus_norm(&o.start().p))
        .collect();
    radii.sort_by(f64::total_cmp);
    Ok(RoundTorusCheck {
        alpha: alpha.to_vec(),
        big_r,
        threshold,
        gap,
        headroom,
        hypotheses_met: gap > threshold && headroom > 0.0,
        summary: set.summary(),
        radii,
    })
}

#[cfg(test)]
mod tests;
