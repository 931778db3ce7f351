use goggrow::*;
use proptest::prelude::*;

fn small(model: Model, chi: f64) -> SimConfig {
    let mut cfg = SimConfig::new(model, chi, 0.1, 1.0).unwrap();
    cfg.grid = Grid1D::spanning(-20.0, 30.0, 0.1).unwrap();
    cfg.window_policy = WindowPolicy {
        left_pad: 10.0,
        right_pad: 10.0,
    };
    cfg
}

fn table(cfg: &SimConfig, f: impl Fn(f64) -> f64) -> InitPreset {
    let g = cfg.grid;
    let x: Vec<f64> = (0..g.n).map(|i| g.x(i)).collect();
    let values = x.iter().map(|&x| f(x)).collect();
    InitPreset::FileTable { x, values }
}

fn advance(state: &SimState, cfg: &SimConfig, steps: usize) -> SimState {
    let dt = stable_dt(cfg);
    let mut s = state.clone();
    for _ in 0..steps {
        s = step(&s, cfg, dt).unwrap();
    }
    s
}

#[test]
fn initial_data_examples() {
    let cfg = small(Model::LocalU, 1.0);
    let s = make_state(&cfg).unwrap();
    for i in 0..s.len() {
        assert_eq!(s.primary[i], if s.x(i) <= 0.0 { 1.0 } else { 0.0 });
    }
    let mut cfg = small(Model::NonlocalP, 2.0);
    cfg.init = InitPreset::TravelingWave;
    let s = make_state(&cfg).unwrap();
    for i in 0..s.len() {
        assert_eq!(s.primary[i], traveling_wave(WaveField::P, 2.0, s.x(i)));
    }
    cfg.init = InitPreset::FileTable {
        x: vec![-20.0, 0.0, 30.0],
        values: vec![1.0, 2.0, 0.0],
    };
    assert!(matches!(make_state(&cfg), Err(SolverError::Config { .. })));
}

#[test]
fn stable_dt_examples() {
    let mut cfg = SimConfig::new(Model::NonlocalP, 1.0, 0.05, 1.0).unwrap();
    assert!((stable_dt(&cfg) - 5e-4).abs() < 1e-15);
    let local = SimConfig::new(Model::LocalU, 1.0, 0.05, 1.0).unwrap();
    assert!((stable_dt(&local) - 0.4 * 0.05 * 0.05 / 2.0).abs() < 1e-15);
    cfg.cfl_sigma = 0.0;
    assert!(matches!(cfg.validate(), Err(SolverError::Config { .. })));
}

#[test]
fn cumulative_mass_examples() {
    let g = Grid1D::new(-2.0, 0.25, 100).unwrap();
    let zero = cumulative_mass(&vec![0.0; g.n], &g);
    assert!(zero.iter().all(|&p| p == 0.0));
    let rho: Vec<f64> = (0..g.n)
        .map(|i| if (0.0..1.0).contains(&g.x(i)) { 1.0 } else { 0.0 })
        .collect();
    let p = cumulative_mass(&rho, &g);
    assert_eq!((p[8], p[10], p[12]), (1.0, 0.5, 0.0));

    let g = Grid1D::spanning(-20.0, 30.0, 0.01).unwrap();
    let rho: Vec<f64> = (0..g.n)
        .map(|i| traveling_wave(WaveField::Rho, 1.0, g.x(i)))
        .collect();
    let p = cumulative_mass(&rho, &g);
    let worst = (0..g.n)
        .map(|i| (p[i] - traveling_wave(WaveField::P, 1.0, g.x(i))).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "{worst}");
}

#[test]
fn fixed_points() {
    for model in [Model::LocalU, Model::NonlocalP, Model::NonlocalRho, Model::Fkpp] {
        let mut cfg = small(model, 1.5);
        cfg.init = table(&cfg, |_| 0.0);
        let s = make_state(&cfg).unwrap();
        let s1 = advance(&s, &cfg, 200);
        assert!(s1.primary.iter().all(|&v| v == 0.0), "{model:?}");
    }
    for model in [Model::LocalU, Model::Fkpp] {
        let mut cfg = small(model, 0.5);
        cfg.init = table(&cfg, |_| 1.0);
        let s = make_state(&cfg).unwrap();
        let s1 = advance(&s, &cfg, 200);
        // The right boundary is pinned to 0, so look away from it.
        let n = s1.len();
        assert!(s1.primary[..n - 100].iter().all(|&v| (v - 1.0).abs() <= 1e-12), "{model:?}");
    }
    // ρ ≡ 2 with P ≥ 1 away from the right edge: reaction is off there.
    let mut cfg = small(Model::NonlocalRho, 0.7);
    cfg.init = table(&cfg, |_| 2.0);
    let s = make_state(&cfg).unwrap();
    let s1 = advance(&s, &cfg, 200);
    assert!(s1.primary[..s1.len() - 100].iter().all(|&v| (v - 2.0).abs() <= 1e-12));
}

#[test]
fn step_rejects_large_dt() {
    let cfg = small(Model::NonlocalP, 1.0);
    let s = make_state(&cfg).unwrap();
    let dt = stable_dt(&cfg) / cfg.cfl_sigma * 1.01;
    assert!(matches!(step(&s, &cfg, dt), Err(SolverError::Cfl { .. })));
}

#[test]
fn run_examples() {
    let cfg = small(Model::LocalU, 1.0);
    let cfg0 = SimConfig { t_end: 0.0, ..cfg };
    let s0 = run(&cfg0, None, &mut []).unwrap();
    assert_eq!(s0, make_state(&cfg0).unwrap());

    let cfg = SimConfig::new(Model::NonlocalP, 1.0, 0.05, 50.0).unwrap();
    let mut first = None;
    let mut obs = |s: &SimState, c: &SimConfig| {
        first.get_or_insert(front_location(s, c).unwrap());
        Ok(())
    };
    let s = run(&cfg, None, &mut [&mut obs]).unwrap();
    let speed = (front_location(&s, &cfg).unwrap() - first.unwrap()) / 50.0;
    assert!((1.8..=2.1).contains(&speed), "{speed}");
}

#[test]
fn observer_errors_abort() {
    let cfg = small(Model::NonlocalP, 1.0);
    let mut obs = |_: &SimState, _: &SimConfig| Err(SolverError::Observer("stop".into()));
    assert!(matches!(run(&cfg, Some(0.5), &mut [&mut obs]), Err(SolverError::Observer(_))));
}

#[test]
fn recentring_preserves_moment() {
    // Frame slower than the front, so the window has to follow it.
    let moment = |recentre: bool, x_max: f64| {
        let mut cfg = SimConfig::new(Model::NonlocalP, 2.0, 0.05, 50.0).unwrap();
        cfg.frame = Frame::Moving { c: 2.0 };
        cfg.recentre = recentre;
        cfg.grid = Grid1D::spanning(-60.0, x_max, 0.05).unwrap();
        let s = run(&cfg, None, &mut []).unwrap();
        (s.x_left, exponential_moment(&s, &cfg, MomentKind::Irho).unwrap().value)
    };
    let (left_a, a) = moment(true, 90.0);
    let (left_b, b) = moment(false, 200.0);
    assert!(left_a > left_b, "window never moved");
    assert!((a - b).abs() <= 1e-8 * b, "{a} {b}");
}

#[test]
fn frame_consistency() {
    let t = 5.0;
    let mut lab = SimConfig::new(Model::NonlocalP, 0.5, 0.05, t).unwrap();
    lab.init = InitPreset::TravelingWave;
    let moving = SimConfig {
        frame: Frame::Moving { c: 2.0 },
        ..lab.clone()
    };
    let a = run(&lab, None, &mut []).unwrap();
    let b = run(&moving, None, &mut []).unwrap();
    let dt = stable_dt(&moving);
    let tol = 2.0 * (0.05 + dt) * t;
    let interp = |s: &SimState, x: f64| {
        let j = (x - s.x_left) / s.dx;
        let i = j.floor() as usize;
        let w = j - i as f64;
        s.primary[i] * (1.0 - w) + s.primary[i + 1] * w
    };
    let mut worst = 0.0f64;
    for i in 0..b.len() {
        let z = b.x(i);
        let x = moving.frame.to_lab(z, t);
        if x > a.x_left + 1.0 && x < a.x(a.len() - 2) && z > b.x_left + 5.0 && z < 20.0 {
            worst = worst.max((interp(&a, x) - b.primary[i]).abs());
        }
    }
    assert!(worst <= tol, "{worst} > {tol}");
}

#[test]
fn nonlocal_integrators_agree() {
    // Node-sampled ρ puts the jump half a cell off the exact P, so the gap is O(dx).
    let gap = |dx: f64| {
        let front = |model: Model| {
            let cfg = SimConfig::new(model, 2.0, dx, 10.0).unwrap();
            let s = run(&cfg, None, &mut []).unwrap();
            front_location(&s, &cfg).unwrap()
        };
        (front(Model::NonlocalP) - front(Model::NonlocalRho)).abs()
    };
    let (coarse, fine) = (gap(0.05), gap(0.025));
    assert!(coarse <= 3.0 * 0.05 && fine <= 0.6 * coarse, "{coarse} {fine}");
}

fn bump_strategy() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0f64..3.0, 0.1f64..1.0, -5.0f64..5.0, 0.3f64..4.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn range_preserved((chi, amp, center, width) in bump_strategy(), which in 0usize..3) {
        let model = [Model::LocalU, Model::NonlocalP, Model::NonlocalRho][which];
        let mut cfg = small(model, chi);
        cfg.init = InitPreset::GaussianBump { amplitude: amp, center, width };
        let s = advance(&make_state(&cfg).unwrap(), &cfg, 300);
        prop_assert!(s.primary.iter().all(|v| v.is_finite()));
        match model {
            Model::LocalU => prop_assert!(s.primary.iter().all(|&u| (0.0..=1.0 + 1e-12).contains(&u))),
            Model::NonlocalP => {
                prop_assert!(s.primary.iter().all(|&p| p >= 0.0));
                prop_assert!(s.primary.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            }
            _ => prop_assert!(s.primary.iter().all(|&r| r >= -1e-12)),
        }
    }

    #[test]
    fn comparison_preserved((chi, amp, center, width) in bump_strategy(), lambda in 0.1f64..0.99, local in any::<bool>()) {
        let (model, flux) = if local {
            (Model::LocalU, FluxSpec::RegularizedLocal { epsilon: 0.1 })
        } else {
            (Model::NonlocalP, FluxSpec::NonlocalRamp)
        };
        let mut cfg = small(model, chi);
        cfg.flux = flux;
        cfg.init = InitPreset::GaussianBump { amplitude: amp, center, width };
        let upper = make_state(&cfg).unwrap();
        let mut lower = upper.clone();
        lower.primary.iter_mut().for_each(|v| *v *= lambda);
        let dt = stable_dt(&cfg);
        let (mut a, mut b) = (lower, upper);
        for _ in 0..300 {
            a = step(&a, &cfg, dt).unwrap();
            b = step(&b, &cfg, dt).unwrap();
        }
        let gap = b.primary.iter().zip(&a.primary).map(|(y, x)| y - x).fold(f64::INFINITY, f64::min);
        prop_assert!(gap >= -1e-12, "gap = {gap}");
    }

    #[test]
    fn frame_maps_round_trip(c in -5.0f64..5.0, r in 0.0f64..2.0, t0 in 1.0f64..100.0, z in -50.0f64..50.0, t in 0.0f64..100.0) {
        for frame in [Frame::Lab, Frame::Moving { c }, Frame::LogShifted { c, r, t0 }] {
            let back = frame.to_frame(frame.to_lab(z, t), t);
            prop_assert!((back - z).abs() <= 1e-9 * (1.0 + z.abs() + c.abs() * t));
        }
    }
}
