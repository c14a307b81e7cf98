use super::*;
use crate::geometry::PhasePoint;
use crate::orbits::SearchConfig;

const BRACKET: (f64, f64) = (0.45, 0.95);

#[test]
fn annulus_gap_is_c() {
    let fam = annulus_family(1, 0.6).unwrap();
    let ramp = AnnulusRamp::new(1, 0.6).unwrap();
    for c in [0.1, 0.6, 1.7] {
        let h = fam.build(c).unwrap();
        let sampled = sampled_gap(&h, &fam.x, &fam.y, 64);
        assert!((sampled - c).abs() < 1e-12, "{sampled} vs {c}");
        assert_eq!(fam.gap(c), c);
        // the Y level sits on the linear part
        assert!(ramp.eta < 0.6 && h.jet(0.0, &[0.0, 0.6]).g[1] < 0.0);
    }
}

#[test]
fn certificate_iff_slope_below_r() {
    let fam = annulus_family(2, 0.6).unwrap();
    assert!(fam.analytic_certificate(1.19).is_some());
    assert!(fam.analytic_certificate(1.2).is_none());
    assert!(fam.analytic_certificate(1.3).is_none());
    // the ramp never descends faster than c / R
    let h = fam.build(1.0).unwrap();
    let steepest = (0..=8000)
        .map(|i| -0.2 + 1.0 * i as f64 / 8000.0)
        .map(|p| -h.jet(0.0, &[0.0, p]).g[1])
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((steepest - 1.0 / 0.6).abs() < 1e-12, "{steepest}");
}

#[test]
fn annulus_capacity_is_r_times_area() {
    let fam = annulus_family(1, 0.6).unwrap();
    let class = HomotopyClass::new(vec![-1]);
    let est = estimate_capacity(&fam, &class, BRACKET, 0.01).unwrap();
    assert!(est.contains(0.6), "[{}, {:?}]", est.lower, est.upper);
    assert!(est.width().unwrap() <= 0.01);
    assert!(!est.witnesses.is_empty());
    // every sampled gap at or above `upper` had orbits
    let upper = est.upper.unwrap();
    for step in &est.search_log {
        assert_eq!(step.orbits > 0, step.gap >= upper, "{step:?}");
    }
    for cert in &est.certificates {
        assert!(cert.analytic.is_some());
        assert_eq!(cert.density, 64);
    }
}

#[test]
fn tighter_tolerance_only_narrows() {
    let fam = annulus_family(1, 0.6).unwrap();
    let class = HomotopyClass::new(vec![-1]);
    let coarse = estimate_capacity(&fam, &class, BRACKET, 0.1).unwrap();
    let fine = estimate_capacity(&fam, &class, BRACKET, 0.02).unwrap();
    assert!(fine.lower >= coarse.lower);
    assert!(fine.upper.unwrap() <= coarse.upper.unwrap());
}

#[test]
fn degenerate_and_invalid_brackets() {
    let fam = annulus_family(1, 0.6).unwrap();
    let class = HomotopyClass::new(vec![-1]);
    let point = estimate_capacity(&fam, &class, (0.8, 0.8), 0.01).unwrap();
    assert_eq!(point.width(), Some(0.0));
    assert_eq!(point.lower, 0.8);
    assert!(matches!(
        estimate_capacity(&fam, &class, (0.7, 0.9), 0.01),
        Err(Error::BracketInvalid(_))
    ));
    assert!(matches!(
        estimate_capacity(&fam, &class, (0.9, 0.7), 0.01),
        Err(Error::BracketInvalid(_))
    ));
}

#[test]
fn bps_matches_support_boundary_oracle() {
    let ramp = AnnulusRamp::new(1, 0.6).unwrap();
    let class = ramp.class();
    let bps = bps_capacity(
        &annulus_bps_family(1, 0.6, LevelSet::level(0.0)).unwrap(),
        &class,
        (0.3, 0.9),
        0.01,
    )
    .unwrap();
    let boundary = ramp.family(LevelSet::level(0.0), LevelSet::level(0.6 + ramp.eta));
    let oracle = estimate_capacity(&boundary, &class, (0.3, 0.9), 0.01).unwrap();
    assert!((bps.lower - oracle.lower).abs() < 1e-12);
    assert_eq!(bps.upper, oracle.upper);
    // BPS value is r(R + eta/2) here: the gap is measured at p = 0
    let expected = 0.6 + 0.5 * ramp.eta;
    assert!(bps.contains(expected), "[{}, {:?}] vs {expected}", bps.lower, bps.upper);
}

#[test]
fn bps_rejects_zero_class_and_nonempty_y() {
    let fam = annulus_bps_family(1, 0.6, LevelSet::level(0.0)).unwrap();
    assert!(matches!(
        bps_capacity(&fam, &HomotopyClass::new(vec![0]), (0.3, 0.9), 0.01),
        Err(Error::ZeroClass)
    ));
    let with_y = annulus_family(1, 0.6).unwrap();
    assert!(bps_capacity(&with_y, &HomotopyClass::new(vec![-1]), (0.3, 0.9), 0.01).is_err());
}

#[test]
fn enlarging_x_does_not_raise_bps() {
    let class = HomotopyClass::new(vec![-1]);
    let small = annulus_bps_family(1, 0.6, LevelSet::level(0.0)).unwrap();
    let large = annulus_bps_family(1, 0.6, LevelSet::PBand { lo: -0.05, hi: 0.0 }).unwrap();
    let a = bps_capacity(&small, &class, (0.3, 0.9), 0.02).unwrap();
    let b = bps_capacity(&large, &class, (0.3, 0.9), 0.02).unwrap();
    assert!(b.upper.unwrap() <= a.upper.unwrap());
    assert!(b.lower <= a.lower);
}

#[test]
fn lagrangian_family_has_no_witness() {
    let fam = lagrangian_family(vec![0.5, 0.0], vec![0, 1]).unwrap();
    let class = HomotopyClass::new(vec![0, 1, 0, 0]);
    let est = estimate_capacity(&fam, &class, (1.0, 4.0), 0.5).unwrap();
    assert_eq!(est.upper, None);
    assert_eq!(est.lower, 4.0);
    assert!(est.certificates.iter().all(|c| c.analytic.is_some()));
    let cp = cp_comparison(&fam.chart, &class, &est).unwrap();
    assert!(cp.vacuous && cp.bound.is_none());
}

#[test]
fn orbit_rotation_is_its_class() {
    let fam = annulus_family(2, 0.6).unwrap();
    let class = HomotopyClass::new(vec![-2]);
    let set = find_orbits(&fam.build(1.5).unwrap(), &fam.chart, &class, &fam.search).unwrap();
    assert!(!set.is_empty());
    for o in set.all() {
        let rho = trajectory_rotation_vector(&fam.chart, &o.trajectory);
        assert!((rho.components[0] + 2.0).abs() < 1e-9, "{rho:?}");
    }
    // long-time average along the same orbit
    let o = set.all()[0];
    let rho = rotation_vector(&fam.build(1.5).unwrap(), &fam.chart, o.start(), 100.0, 2048).unwrap();
    assert!((rho.components[0] + 2.0).abs() < 1e-6, "{rho:?}");
}

#[test]
fn rotation_of_level_is_slope() {
    let h = Hamiltonian::planar(Preset::g(0.0, 1.0, 0.2)).unwrap();
    let chart = Chart::annulus(1.0);
    for p0 in [0.05, 0.1, 0.15] {
        let rho = rotation_vector(&h, &chart, &PhasePoint::planar(0.3, p0), 3.0, 512).unwrap();
        let slope = h.jet(0.0, &[0.3, p0]).g[1];
        assert!((rho.components[0] - slope).abs() < 1e-12, "{rho:?} vs {slope}");
    }
    let zero = Hamiltonian::planar(Preset::Constant { value: 0.0 }).unwrap();
    let rho = rotation_vector(&zero, &Chart::Torus2, &PhasePoint::planar(0.3, 0.4), 2.0, 64).unwrap();
    assert_eq!(rho.components, vec![0.0, 0.0]);
}

#[test]
fn cp_criterion_holds_above_capacity() {
    let fam = annulus_family(1, 0.6).unwrap().with_search(SearchConfig {
        grid: 32,
        ..AnnulusRamp::new(1, 0.6).unwrap().search()
    });
    let class = HomotopyClass::new(vec![-1]);
    let est = estimate_capacity(&fam, &class, BRACKET, 0.05).unwrap();
    let cp = cp_comparison(&fam.chart, &class, &est).unwrap();
    assert_eq!(cp.functional, vec![-1]);
    assert!(!cp.vacuous && cp.all_met, "{cp:?}");
    assert_eq!(cp.bound, est.upper);
    for e in &cp.entries {
        assert!((e.pairing - 1.0).abs() < 1e-9 && e.required == 1.0);
    }
}

#[test]
fn report_json_is_deterministic() {
    let fam = annulus_family(1, 0.6).unwrap();
    let class = HomotopyClass::new(vec![-1]);
    let a = estimate_capacity(&fam, &class, BRACKET, 0.1).unwrap().to_json();
    let b = estimate_capacity(&fam, &class, BRACKET, 0.1).unwrap().to_json();
    assert_eq!(a, b);
    let rec: CapacityRecord = serde_json::from_str(&a).unwrap();
    assert_eq!(rec.grid_density, 64);
}

#[test]
fn round_torus_orbits_sit_where_the_slope_is_alpha() {
    let (eps, alpha) = (0.3, [1i64, 1]);
    let h = Hamiltonian::new(Preset::Radial { m: 0.0, s: 0.5, eps }, 2).unwrap();
    let check = round_torus_check(&h, &alpha, 0.3, &SearchConfig::with_grid(16)).unwrap();
    assert!(check.hypotheses_met, "{check:?}");
    assert!((check.gap - 0.5).abs() < 1e-12);
    // predicted radii: g'(rho) = -|alpha|
    let norm = 2f64.sqrt();
    let prof = crate::profiles::SmoothProfile::g(0.0, 0.5, eps).unwrap();
    // one circle of orbits on each side of the steepest point
    assert_eq!(check.radii.len(), 2, "{check:?}");
    for rho in &check.radii {
        assert!((prof.d1(*rho) + norm).abs() < 1e-8, "{rho}: {}", prof.d1(*rho));
    }
}
