//! The subcommands. Each returns `Ok(true)` when its checks pass,
//! `Ok(false)` when a check fails, and `Err` for unusable input.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context};

use hamcap::capacity::{self, CapacityEstimate};
use hamcap::dynamics::Integrator;
use hamcap::geometry::{PhasePoint, ReferenceLoop};
use hamcap::hamiltonian::Hamiltonian;
use hamcap::orbits::{self, verify_window, OrbitSet, PairSide};
use hamcap::profiles::squeeze::{build_squeezing_pair, SqueezingPair};
use hamcap::verify;

use crate::config::{FamilySpec, PairMember, RunConfig};
use crate::svg::{wrap_pieces, Plot, Series};

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
/// Tolerance between tangent-line intercepts and integrated actions.
const INTERCEPT_TOL: f64 = 1e-8;

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn pair_of(cfg: &RunConfig, h: &Hamiltonian) -> anyhow::Result<Option<SqueezingPair>> {
    let Some(spec) = &cfg.pair else { return Ok(None) };
    Ok(Some(build_squeezing_pair(h, &cfg.chart, spec.r, spec.big_r, spec.tau)?))
}

/// `H` along `p₁` at `q = 0`, `t = 0`, other momenta zero.
fn slice(h: &Hamiltonian, p: f64) -> f64 {
    let n = h.dof();
    let mut x = vec![0.0; 2 * n];
    x[n] = p;
    h.value_at(0.0, &x)
}

pub fn profiles(cfg: &RunConfig, samples: usize) -> anyhow::Result<bool> {
    if samples < 2 {
        bail!("need at least 2 samples, got {samples}");
    }
    let h = cfg.hamiltonian()?;
    let (lo, hi) = cfg.p_range.unwrap_or_else(|| cfg.chart.p_range());
    let Some(pair) = pair_of(cfg, &h)? else {
        let xs: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
        let mut csv = String::from("p,H\n");
        let mut pts = vec![];
        for &p in &xs {
            let v = slice(&h, p);
            let _ = writeln!(csv, "{p},{v}");
            pts.push((p, v));
        }
        let mut plot = Plot::new(format!("{}: H at q = 0, t = 0", cfg.name), (lo, hi), (0.0, 1.0)).labels("p", "H");
        plot.series.push(Series::line("H", COLORS[0], pts));
        write(&cfg.out, "profiles.csv", &csv)?;
        write(&cfg.out, "profiles.svg", &plot.fit_y().render())?;
        return Ok(true);
    };

    let wc = &pair.wc;
    let r = wc.r as f64;
    println!(
        "pair r = {}, R = {}: eps1 = {}, a = {:.6}, b = {:.6}, c = {:.6}",
        wc.r, wc.big_r, wc.eps1, wc.a, wc.b, wc.c
    );
    // orbit levels and the member they belong to
    let levels = [
        ("l1", PairSide::H1, wc.s_hi),
        ("l2", PairSide::H1, wc.s_lo),
        ("l3", PairSide::H0, wc.big_r - wc.s_lo),
        ("l4", PairSide::H0, wc.big_r - wc.s_hi),
    ];
    let class = cfg.class();
    let shift = orbits::class_shift(&cfg.chart, &class)?;
    let z = ReferenceLoop::standard(&cfg.chart, &class, 256)?;
    let integ = Integrator::on_chart(&cfg.chart, cfg.steps);
    let mut pass = true;
    let mut lines = vec![];
    for (name, side, level) in levels {
        let member = match side {
            PairSide::H0 => &pair.h0,
            PairSide::H1 => &pair.h1,
        };
        let value = slice(member, level);
        let intercept = value + r * level;
        let orbit = orbits::build_orbit(member, &integ, &class, &shift, &z, &PhasePoint::planar(0.0, level).to_state())?;
        let err = (orbit.action - intercept).abs();
        pass &= err < INTERCEPT_TOL;
        println!(
            "{name} ({side:?}, p = {level:.9}): intercept {intercept:.12}, action {:.12}, |diff| = {err:.1e}",
            orbit.action
        );
        lines.push((name, level, value));
    }

    let (lo, hi) = (-wc.tau, wc.big_r + wc.tau);
    let xs: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
    let mut csv = String::from("p,H,H0,H1,l1,l2,l3,l4\n");
    let mut curves = vec![vec![]; 3];
    let mut tangents = vec![vec![]; 4];
    for &p in &xs {
        let vals = [slice(&h, p), slice(&pair.h0, p), slice(&pair.h1, p)];
        let _ = write!(csv, "{p},{},{},{}", vals[0], vals[1], vals[2]);
        for (k, (_, level, value)) in lines.iter().enumerate() {
            let y = value - r * (p - level);
            let _ = write!(csv, ",{y}");
            tangents[k].push((p, y));
        }
        csv.push('\n');
        for (c, v) in curves.iter_mut().zip(vals) {
            c.push((p, v));
        }
    }
    let mut plot = Plot::new(format!("{}: H1 <= H <= H0, tangents of slope -{}", cfg.name, wc.r), (lo, hi), (0.0, 1.0))
        .labels("p", "H");
    for (k, (label, c)) in ["H", "H0", "H1"].into_iter().zip(curves).enumerate() {
        plot.series.push(Series::line(label, ["black", COLORS[1], COLORS[0]][k], c));
    }
    // fit to the profiles, not to the steep tangent lines
    let mut plot = plot.fit_y();
    for (k, t) in tangents.into_iter().enumerate() {
        plot.series.push(Series::line(lines[k].0, COLORS[k], t).dashed());
        plot.marks.push((lines[k].1, lines[k].2, lines[k].0.to_string()));
    }
    write(&cfg.out, "profiles.csv", &csv)?;
    write(&cfg.out, "profiles.svg", &plot.render())?;
    write(&cfg.out, "window.json", &serde_json::to_string_pretty(wc)?)?;
    println!("intercepts match actions to {INTERCEPT_TOL:e}: {}", if pass { "yes" } else { "NO" });
    Ok(pass)
}

fn phase_plot(cfg: &RunConfig, set: &OrbitSet) -> Plot {
    let (lo, hi) = cfg.p_range.unwrap_or_else(|| cfg.chart.p_range());
    let mut plot = Plot::new(format!("{}: {}", cfg.name, set.summary()), (0.0, 1.0), (lo, hi)).labels("q1 mod 1", "p1");
    let mut reps: Vec<(String, &orbits::PeriodicOrbit)> =
        set.isolated.iter().enumerate().map(|(i, o)| (format!("orbit {i}"), o)).collect();
    reps.extend(set.families.iter().map(|f| (format!("family {}", f.id), &f.members[0])));
    for (k, (label, o)) in reps.into_iter().enumerate() {
        let pts: Vec<(f64, f64)> = o.trajectory.points.iter().map(|x| (x.q[0], x.p[0])).collect();
        plot.series.push(Series {
            label,
            color: COLORS[k % COLORS.len()],
            dashed: false,
            pieces: wrap_pieces(&pts),
        });
    }
    plot
}

pub fn orbits(cfg: &RunConfig) -> anyhow::Result<bool> {
    let h = cfg.hamiltonian()?;
    let class = cfg.class();
    let mut search = cfg.search();
    let pair = pair_of(cfg, &h)?;
    let (target, side) = match (&pair, &cfg.pair) {
        (Some(pair), Some(spec)) => {
            let wc = &pair.wc;
            // search the member's own orbit band
            let (member, side, range) = match spec.search {
                PairMember::H1 => (&pair.h1, PairSide::H1, (0.0, wc.eps1)),
                PairMember::H0 => (&pair.h0, PairSide::H0, (wc.big_r - wc.eps1, wc.big_r)),
            };
            search.p_range = Some(range);
            (member.clone(), Some(side))
        }
        _ => (h, None),
    };
    if let Some(big_r) = cfg.round_torus {
        let check = capacity::round_torus_check(&target, &class.winding[..2], big_r, &search)?;
        println!(
            "round torus |p| = {big_r}: inf_X H - sup_Y H = {:.6} vs |alpha| R = {:.6}, headroom {:.6}; hypotheses met: {}",
            check.gap, check.threshold, check.headroom, check.hypotheses_met
        );
        println!("  orbit radii {:.9?}", check.radii);
        write(&cfg.out, "round_torus.json", &serde_json::to_string_pretty(&check)?)?;
    }
    let started = Instant::now();
    let set = orbits::find_orbits(&target, &cfg.chart, &class, &search)?;
    println!("{} ({} of {} seeds converged, {:.1} s)", set.summary(), set.converged_seeds, set.seeds, started.elapsed().as_secs_f64());
    for (i, o) in set.isolated.iter().enumerate() {
        println!(
            "  orbit {i}: start q = {:.6?}, p = {:.6?}, action {:.9}, nondegenerate {}",
            o.start().q, o.start().p, o.action, o.nondegenerate
        );
    }
    for f in &set.families {
        println!(
            "  family {}: {} members, level {:.6}, action {:.9} (spread {:.1e}), closed {}",
            f.id, f.members.len(), f.level(), f.action(), f.action_spread(), f.closed
        );
    }

    let mut pass = true;
    if cfg.expect_empty {
        pass &= set.is_empty();
        println!("expected no orbits: {}", if set.is_empty() { "ok" } else { "FAILED" });
    }
    if let (Some(pair), Some(side)) = (&pair, side) {
        let report = verify_window(&set, &pair.wc, Some(side));
        println!(
            "windows a = {:.6}, b = {:.6}, c = {:.6}: {}",
            report.a, report.b, report.c, if report.pass { "ok" } else { "FAILED" }
        );
        for v in &report.violations {
            println!("  {v}");
        }
        pass &= report.pass;
        write(&cfg.out, "windows.json", &serde_json::to_string_pretty(&report)?)?;
    }
    let all_isolated = set.families.is_empty() && set.isolated.iter().all(|o| o.nondegenerate);
    if all_isolated && !set.is_empty() {
        let even = set.count() % 2 == 0;
        println!("{} nondegenerate orbits, count is even: {}", set.count(), if even { "ok" } else { "FAILED" });
        pass &= even;
    }

    write(&cfg.out, "orbits.json", &set.to_json())?;
    write(&cfg.out, "orbits.csv", &set.to_csv())?;
    write(&cfg.out, "phase.svg", &phase_plot(cfg, &set).render())?;
    Ok(pass)
}

fn print_estimate(est: &CapacityEstimate) {
    for step in &est.search_log {
        println!("  c = {:.6}, gap = {:.6}: {}", step.c, step.gap, step.summary);
    }
    match est.upper {
        Some(upper) => println!(
            "capacity in [{:.6}, {:.6}] (width {:.2e}, tol {}, density {})",
            est.lower, upper, upper - est.lower, est.tol, est.grid_density
        ),
        None => println!(
            "capacity >= {:.6}: no upper witness found <= c_max (density {})",
            est.lower, est.grid_density
        ),
    }
    for cert in est.certificates.iter().filter_map(|c| c.analytic.as_ref()).take(1) {
        println!("  certificate below: {cert}");
    }
}

pub fn capacity(cfg: &RunConfig) -> anyhow::Result<bool> {
    let Some((fam, spec)) = cfg.family()? else {
        bail!("config {:?} has no capacity family", cfg.name);
    };
    let class = cfg.class();
    let started = Instant::now();
    let est = match spec.family {
        FamilySpec::AnnulusBps { .. } => capacity::bps_capacity(&fam, &class, spec.bracket, spec.tol)?,
        _ => capacity::estimate_capacity(&fam, &class, spec.bracket, spec.tol)?,
    };
    println!("{} on class {:?} ({:.1} s)", fam.name, class.winding, started.elapsed().as_secs_f64());
    print_estimate(&est);
    let cp = capacity::cp_comparison(&fam.chart, &class, &est)?;
    println!(
        "rotation criterion with functional {:?}: {} entries, all met {}, bound {:?}; {}",
        cp.functional, cp.entries.len(), cp.all_met, cp.bound, cp.note
    );
    write(&cfg.out, "capacity.json", &est.to_json())?;
    write(&cfg.out, "cp.json", &serde_json::to_string_pretty(&cp)?)?;
    Ok(cp.all_met || cp.vacuous)
}

pub fn verify_all(out: &Path) -> anyhow::Result<bool> {
    let started = Instant::now();
    let report = verify::run_all();
    for c in &report.criteria {
        println!("{}", c.line());
        for d in &c.details {
            println!("    {d}");
        }
    }
    let passed = report.criteria.iter().filter(|c| c.pass).count();
    println!(
        "{passed} of {} criteria passed in {:.1} s",
        report.criteria.len(),
        started.elapsed().as_secs_f64()
    );
    write(out, "verify.json", &report.to_json())?;
    Ok(report.pass)
}

