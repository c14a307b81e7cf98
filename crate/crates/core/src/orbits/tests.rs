use super::covering::*;
use super::*;
use crate::hamiltonian::{Preset, TrigTerm};
use crate::profiles::squeeze::{build_squeezing_pair, SqueezingPair};

fn annulus() -> Chart {
    Chart::annulus(1.0)
}

fn pair() -> SqueezingPair {
    let h = Hamiltonian::planar(Preset::g(0.0, 1.0, 0.2)).unwrap();
    build_squeezing_pair(&h, &annulus(), 1, 0.6, None).unwrap()
}

fn minus(r: i64) -> HomotopyClass {
    HomotopyClass::new(vec![-r])
}

#[test]
fn h1_has_two_circle_families() {
    let pair = pair();
    let wc = &pair.wc;
    let cfg = SearchConfig {
        p_range: Some((0.0, wc.eps1)),
        ..SearchConfig::with_grid(16)
    };
    let set = find_orbits(&pair.h1, &annulus(), &minus(1), &cfg).unwrap();
    assert!(set.isolated.is_empty(), "{}", set.summary());
    assert_eq!(set.families.len(), 2);
    let (y0, y1) = wc.h1_actions();
    for f in &set.families {
        assert!(f.closed);
        assert_eq!(f.members.len(), 16);
        let (level, expected) = if (f.level() - wc.s_lo).abs() < (f.level() - wc.s_hi).abs() {
            (wc.s_lo, y0)
        } else {
            (wc.s_hi, y1)
        };
        for o in &f.members {
            assert!((o.start().p[0] - level).abs() < 1e-9);
            assert!((o.action - expected).abs() < 1e-8, "{} vs {expected}", o.action);
            assert!(o.residual < 1e-9);
            assert!(!o.nondegenerate);
            assert!((o.monodromy.det() - 1.0).abs() < 1e-6);
        }
    }
    let report = verify_window(&set, wc, Some(PairSide::H1));
    assert!(report.pass, "{:?}", report.violations);
}

#[test]
fn h0_families_in_windows() {
    let pair = pair();
    let wc = &pair.wc;
    let cfg = SearchConfig {
        p_range: Some((wc.big_r - wc.eps1, wc.big_r)),
        ..SearchConfig::with_grid(16)
    };
    let set = find_orbits(&pair.h0, &annulus(), &minus(1), &cfg).unwrap();
    assert_eq!(set.families.len(), 2);
    let (x0, x1) = wc.h0_actions();
    let mut actions: Vec<f64> = set.families.iter().map(|f| f.action()).collect();
    actions.sort_by(f64::total_cmp);
    assert!((actions[0] - x0).abs() < 1e-8 && (actions[1] - x1).abs() < 1e-8);
    let report = verify_window(&set, wc, Some(PairSide::H0));
    assert!(report.pass, "{:?}", report.violations);
}

#[test]
fn counterexample_has_no_orbits() {
    let h = Hamiltonian::planar(Preset::CounterexampleAnnulus {
        c: 0.6,
        delta: 0.05,
        r: 1,
        tau: 0.15,
    })
    .unwrap();
    let set = find_orbits(&h, &annulus(), &minus(1), &SearchConfig::with_grid(24)).unwrap();
    assert!(set.is_empty());
    assert_eq!(set.summary(), "0 orbits at density 24");
}

/// `H₁ + 0.001 (1 - cos 2π(q + t)) g_{0,1,2ε₁}(p)`: the perturbation is
/// constant along the unperturbed orbits in the co-moving frame.
fn perturbed_h1(pair: &SqueezingPair) -> Hamiltonian {
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
    .unwrap()
}

#[test]
fn perturbation_breaks_circles_into_four_orbits() {
    let pair = pair();
    let h = perturbed_h1(&pair);
    let cfg = SearchConfig {
        p_range: Some((0.0, pair.wc.eps1)),
        ..SearchConfig::with_grid(32)
    };
    let set = find_orbits(&h, &annulus(), &minus(1), &cfg).unwrap();
    assert!(set.families.is_empty(), "{}", set.summary());
    assert_eq!(set.isolated.len(), 4);
    for o in &set.isolated {
        assert!(o.nondegenerate);
        assert!(o.residual < 1e-9);
        let q = o.start().q[0];
        let d = (q - q.round()).abs().min((q - 0.5).abs());
        assert!(d < 0.05, "q0 = {q}");
    }
    let report = verify_window(&set, &pair.wc, Some(PairSide::H1));
    assert!(report.pass, "{:?}", report.violations);
}

#[test]
fn dedupe_keeps_distant_points_apart() {
    let h = Hamiltonian::planar(Preset::Trig {
        terms: vec![TrigTerm { coef: 0.3, kq: vec![1], kp: vec![], kt: 1, phase: 0.0 }],
    })
    .unwrap();
    let integ = Integrator::new(64);
    let class = HomotopyClass::new(vec![0]);
    let z = ReferenceLoop::standard(&Chart::strip(), &class, 8).unwrap();
    let a = build_orbit(&h, &integ, &class, &[0.0, 0.0], &z, &[0.1, 0.2]).unwrap();
    let b = build_orbit(&h, &integ, &class, &[0.0, 0.0], &z, &[0.4, 0.2]).unwrap();
    let (iso, fam) = dedupe(vec![a.clone(), b, a], &Chart::strip(), 1e-3, 0.04, &|_| None).unwrap();
    assert_eq!(iso.len(), 2);
    assert!(fam.is_empty());
}

#[test]
fn action_contract_examples() {
    // constant H at p = 0: the action is the value
    let h = Hamiltonian::planar(Preset::Constant { value: 0.7 }).unwrap();
    let class = minus(2);
    let traj = Trajectory {
        times: (0..=64).map(|i| i as f64 / 64.0).collect(),
        points: (0..=64).map(|i| PhasePoint::planar(-2.0 * i as f64 / 64.0, 0.0)).collect(),
        step: 1.0 / 64.0,
    };
    let z = ReferenceLoop::standard(&annulus(), &class, 16).unwrap();
    assert!((action(&h, &traj, &class, &z).unwrap() - 0.7).abs() < 1e-15);
    let other = ReferenceLoop::standard(&annulus(), &minus(1), 16).unwrap();
    assert!(matches!(action(&h, &traj, &class, &other), Err(Error::ClassMismatch { .. })));
}

#[test]
fn action_converges_at_second_order() {
    // a standing-wave perturbation makes p oscillate along the orbit, so the
    // discretisation error is visible; reference by Richardson extrapolation
    let h = Hamiltonian::planar(Preset::Trig {
        terms: vec![
            TrigTerm { coef: 0.5, kq: vec![], kp: vec![1], kt: 0, phase: 0.0 },
            TrigTerm { coef: 0.05, kq: vec![1], kp: vec![], kt: 1, phase: 0.0 },
            TrigTerm { coef: 0.05, kq: vec![1], kp: vec![], kt: -1, phase: 0.0 },
        ],
    })
    .unwrap();
    let chart = Chart::Torus2;
    let class = HomotopyClass::new(vec![-1, 0]);
    let shift = class_shift(&chart, &class).unwrap();
    let z = ReferenceLoop::standard(&chart, &class, 16).unwrap();
    let cfg = SearchConfig::with_grid(8);
    let seed = find_orbits(&h, &chart, &class, &cfg).unwrap().all()[0].start_state();
    let action_at = |steps: usize| {
        let shooter = Shooter {
            h: &h,
            integ: Integrator::new(steps),
            shift: shift.clone(),
            tol: 1e-12,
            max_iter: 20,
            p_window: None,
        };
        let (x, _) = shooter.shoot(&seed).unwrap();
        build_orbit(&h, &Integrator::new(steps), &class, &shift, &z, &x).unwrap().action
    };
    let (a512, a2048, a4096, a8192) = (action_at(512), action_at(2048), action_at(4096), action_at(8192));
    let exact = a8192 + (a8192 - a4096) / 3.0;
    let ratio = (a512 - exact).abs() / (a2048 - exact).abs();
    assert!((ratio - 16.0).abs() <= 0.2 * 16.0, "ratio {ratio}");
}

#[test]
fn rescaled_orbits_close() {
    let h = Hamiltonian::planar(Preset::cos_p(0.5)).unwrap();
    let chart = Chart::Torus2;
    let class = HomotopyClass::new(vec![-1, 0]);
    for period in [2u32, 3] {
        let th = h.scaled(period as f64);
        let set = find_orbits(&th, &chart, &class, &SearchConfig::with_grid(16)).unwrap();
        assert!(!set.is_empty());
        for o in set.all() {
            let res = rescaling_residual(&h, o, &chart, period, 2048 * period as usize).unwrap();
            assert!(res < 1e-8, "T = {period}: {res:e}");
        }
    }
}

#[test]
fn lagrangian_counterexample_is_empty() {
    let h = Hamiltonian::new(
        Preset::CounterexampleLagrangian { w: vec![0.5, 0.0], k: 1.0, alpha: vec![0, 1], beta: None },
        2,
    )
    .unwrap();
    let chart = Chart::ProductTorus { n: 2 };
    let class = HomotopyClass::new(vec![0, 1, 0, 0]);
    let cfg = SearchConfig { coarse_steps: 64, steps: 256, ..SearchConfig::with_grid(4) };
    assert!(find_orbits(&h, &chart, &class, &cfg).unwrap().is_empty());
}

fn torus_h(perturbed: bool) -> Hamiltonian {
    let mut terms = vec![TrigTerm { coef: 0.5, kq: vec![], kp: vec![1], kt: 0, phase: 0.0 }];
    if perturbed {
        terms.push(TrigTerm { coef: 0.01, kq: vec![1], kp: vec![], kt: 1, phase: 0.0 });
    }
    Hamiltonian::planar(Preset::Trig { terms }).unwrap()
}

#[test]
fn translation_shifts_action_by_rl() {
    let torus = torus_h(false);
    let k = 2;
    let gk = build_gk(&torus, k).unwrap();
    // synthetic loop at p = k + 1/2, where ν^k is not constant
    let r = 3;
    let class = minus(r);
    let traj = Trajectory {
        times: (0..=256).map(|i| i as f64 / 256.0).collect(),
        points: (0..=256)
            .map(|i| PhasePoint::planar(0.1 - r as f64 * i as f64 / 256.0, k as f64 + 0.5))
            .collect(),
        step: 1.0 / 256.0,
    };
    let z = ReferenceLoop::standard(&Chart::strip(), &class, 16).unwrap();
    let orbit = PeriodicOrbit {
        action: action(&gk, &traj, &class, &z).unwrap(),
        trajectory: traj,
        class: class.clone(),
        monodromy: Monodromy::identity(2),
        nondegenerate: false,
        family_id: None,
        residual: 0.0,
    };
    let g_kl = build_gk(&torus, k + 2).unwrap();
    let moved = translate_orbit(&orbit, 2, Side::Plus, &g_kl).unwrap();
    assert!((moved.action - orbit.action - 2.0 * r as f64).abs() < 1e-9);
    assert_eq!(translation_action_shift(&class, 2, Side::Plus), 2.0 * r as f64);
    assert!(matches!(
        translate_orbit(&orbit, 2, Side::Minus, &g_kl),
        Err(Error::NotInHalfStrip { .. })
    ));
    let same = translate_orbit(&orbit, 0, Side::Plus, &gk).unwrap();
    assert_eq!(same.trajectory, orbit.trajectory);
    assert!(matches!(
        project_orbit(&orbit, &torus, k, (f64::NEG_INFINITY, f64::INFINITY), 512, 1e-9),
        Err(Error::EscapesWindow { .. })
    ));
}

#[test]
fn osc_examples() {
    let flat: Vec<PhasePoint> = (0..10).map(|i| PhasePoint::planar(i as f64 * 0.1, 0.3)).collect();
    assert!(osc_check(&flat, 0.0));
    let wild: Vec<PhasePoint> = (0..10).map(|i| PhasePoint::planar(0.0, i as f64 * 0.1)).collect();
    assert!(!osc_check(&wild, 0.4));
    let s = sup_abs_dq(&torus_h(true), 64);
    assert!((s - 0.02 * std::f64::consts::PI).abs() < 1e-3);
}

#[test]
fn exports_are_deterministic() {
    let pair = pair();
    let cfg = SearchConfig {
        p_range: Some((0.0, pair.wc.eps1)),
        ..SearchConfig::with_grid(16)
    };
    let a = find_orbits(&pair.h1, &annulus(), &minus(1), &cfg).unwrap();
    let b = find_orbits(&pair.h1, &annulus(), &minus(1), &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_csv().lines().count(), 1 + 32);
    let back: OrbitSetRecord = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(back, a.record());
}
