use goggrow::diagnostics::level_crossing;
use goggrow::*;

fn wave_config(model: Model, chi: f64, dx: f64) -> SimConfig {
    let mut cfg = SimConfig::new(model, chi, dx, 0.0).unwrap();
    cfg.grid = Grid1D::spanning(-20.0, 30.0, dx).unwrap();
    cfg.window_policy = WindowPolicy {
        left_pad: 10.0,
        right_pad: 10.0,
    };
    cfg.init = InitPreset::TravelingWave;
    cfg
}

fn zero_state(cfg: &mut SimConfig) -> SimState {
    let g = cfg.grid;
    cfg.init = InitPreset::FileTable {
        x: vec![g.x(0), g.x_right()],
        values: vec![0.0, 0.0],
    };
    make_state(cfg).unwrap()
}

#[test]
fn front_of_sampled_waves() {
    let cfg = wave_config(Model::NonlocalP, 1.0, 0.01);
    let s = make_state(&cfg).unwrap();
    assert!(front_location(&s, &cfg).unwrap().abs() <= 0.01);

    let mut cfg = SimConfig::new(Model::LocalU, 1.0, 0.05, 0.0).unwrap();
    let s = make_state(&cfg).unwrap();
    assert!(front_location(&s, &cfg).unwrap().abs() <= 0.05);
    let s = zero_state(&mut cfg);
    assert!(matches!(front_location(&s, &cfg), Err(DiagnosticsError::NoFront)));
    assert!(matches!(
        rankine_hugoniot_residual(&s, &cfg),
        Err(DiagnosticsError::NoFront)
    ));
}

#[test]
fn level_crossing_is_rightmost() {
    assert_eq!(level_crossing(&[2.0, 0.0, 2.0, 0.0], 1.0), Some(2.5));
    assert_eq!(level_crossing(&[0.0, 0.0], 1.0), None);
    assert_eq!(level_crossing(&[2.0, 2.0], 1.0), None);
}

#[test]
fn shape_defect_of_exact_wave() {
    let cfg = wave_config(Model::NonlocalP, 2.0, 0.01);
    let s = make_state(&cfg).unwrap();
    let sd = shape_defect(&s, &cfg, false, None).unwrap();
    assert!(sd.sup_abs() <= 0.05, "{}", sd.sup_abs());
    // The weighted version is localized at the kink, which sits at z = 0.
    assert!(weighted_defect_sup(&s, &cfg).unwrap() <= 0.05);

    let cfg = SimConfig::new(Model::LocalU, 0.5, 0.05, 0.0).unwrap();
    let s = make_state(&cfg).unwrap();
    let sd = shape_defect(&s, &cfg, false, None).unwrap();
    for (i, &w) in sd.values.iter().enumerate().skip(1) {
        if s.x(i) < -1.0 {
            assert_eq!(w, 0.0);
        }
    }
}

#[test]
fn zero_field_defect_and_moment() {
    let mut cfg = SimConfig::new(Model::NonlocalP, 2.0, 0.05, 0.0).unwrap();
    let s = zero_state(&mut cfg);
    assert_eq!(weighted_defect_sup(&s, &cfg).unwrap(), 0.0);
    assert_eq!(exponential_moment(&s, &cfg, MomentKind::Irho).unwrap().value, 0.0);
}

#[test]
fn heaviside_defect_after_short_run() {
    let mut cfg = SimConfig::new(Model::NonlocalRho, 1.0, 0.02, 2.0).unwrap();
    cfg.grid = Grid1D::spanning(-20.0, 30.0, 0.02).unwrap();
    cfg.window_policy = WindowPolicy {
        left_pad: 10.0,
        right_pad: 10.0,
    };
    let s = run(&cfg, None, &mut []).unwrap();
    let sd = shape_defect(&s, &cfg, false, None).unwrap();
    assert!(sd.min() >= -10.0 * 0.02, "{}", sd.min());
}

/// Heaviside data on a grid that avoids a node at the jump.
fn staggered_heaviside(model: Model, chi: f64) -> (SimConfig, SimState) {
    let dx = 0.004;
    let mut cfg = SimConfig::new(model, chi, dx, 0.0).unwrap();
    cfg.grid = Grid1D::new(-80.0 + dx / 2.0, dx, 30_000).unwrap();
    cfg.window_policy = WindowPolicy {
        left_pad: 10.0,
        right_pad: 10.0,
    };
    let s = make_state(&cfg).unwrap();
    (cfg, s)
}

#[test]
fn moments_of_heaviside_data() {
    let (cfg, s) = staggered_heaviside(Model::LocalU, 0.5);
    let i = exponential_moment(&s, &cfg, MomentKind::Iu).unwrap();
    assert!((i.value - 1.0).abs() <= 1e-6, "{}", i.value);
    assert!(i.tail_resolved);
    let (cfg, s) = staggered_heaviside(Model::NonlocalRho, 2.0);
    let i = exponential_moment(&s, &cfg, MomentKind::Irho).unwrap();
    assert!((i.value - 2.0).abs() <= 1e-6, "{}", i.value);
}

#[test]
fn moment_of_pushed_wave() {
    let cfg = wave_config(Model::NonlocalP, 2.0, 0.01);
    let s = make_state(&cfg).unwrap();
    let i = exponential_moment(&s, &cfg, MomentKind::Irho).unwrap();
    assert!((i.value - 16.0 / 3.0).abs() <= 1e-3, "{}", i.value);
    assert!(matches!(
        exponential_moment(&s, &cfg, MomentKind::Iu),
        Err(DiagnosticsError::Unsupported(_))
    ));
    assert!(matches!(
        exponential_moment(&s, &cfg, MomentKind::Im(1.5)),
        Err(DiagnosticsError::MomentOrder(_))
    ));
}

#[test]
fn rankine_hugoniot_of_exact_waves() {
    let cfg = wave_config(Model::LocalU, 1.0, 0.01);
    let s = make_state(&cfg).unwrap();
    assert!(rankine_hugoniot_residual(&s, &cfg).unwrap() <= 0.05);
    let cfg = wave_config(Model::NonlocalP, 2.0, 0.01);
    let s = make_state(&cfg).unwrap();
    assert!(rankine_hugoniot_residual(&s, &cfg).unwrap() <= 0.1);
}

#[test]
fn weighted_defect_decays_for_pushed_heaviside() {
    let mut cfg = SimConfig::new(Model::NonlocalP, 2.0, 0.02, 50.0).unwrap();
    cfg.frame = Frame::Moving { c: 2.5 };
    cfg.grid = Grid1D::spanning(-25.0, 55.0, 0.02).unwrap();
    cfg.window_policy = WindowPolicy {
        left_pad: 20.0,
        right_pad: 40.0,
    };
    let mut v = vec![];
    let mut obs = |s: &SimState, c: &SimConfig| {
        if s.t >= 1.0 {
            v.push(s.t.sqrt() * weighted_defect_sup(s, c).unwrap());
        }
        Ok(())
    };
    run(&cfg, Some(1.0), &mut [&mut obs]).unwrap();
    for w in v.windows(2) {
        assert!(w[1] <= 1.2 * w[0], "{w:?}");
    }
}

#[test]
fn pushed_moment_converges_under_refinement() {
    let err = |dx: f64| {
        let mut cfg = SimConfig::new(Model::NonlocalP, 2.0, dx, 50.0).unwrap();
        cfg.frame = Frame::Moving { c: 2.5 };
        cfg.grid = Grid1D::spanning(-30.0, 70.0, dx).unwrap();
        cfg.window_policy = WindowPolicy {
            left_pad: 25.0,
            right_pad: 60.0,
        };
        let mut worst = 0.0f64;
        let mut obs = |s: &SimState, c: &SimConfig| {
            let i = exponential_moment(s, c, MomentKind::Irho).unwrap().value;
            worst = worst.max((i - 2.0).abs() / 2.0);
            Ok(())
        };
        run(&cfg, Some(1.0), &mut [&mut obs]).unwrap();
        worst
    };
    let coarse = err(0.02);
    let fine = err(0.01);
    assert!(coarse <= 1e-2 && fine < coarse, "{coarse} {fine}");
}

#[test]
fn pulled_moment_stays_below_initial() {
    let mut cfg = SimConfig::new(Model::NonlocalP, 0.5, 0.05, 30.0).unwrap();
    cfg.frame = Frame::Moving { c: 2.0 };
    let mut v = vec![];
    let mut obs = |s: &SimState, c: &SimConfig| {
        v.push(exponential_moment(s, c, MomentKind::Irho).unwrap().value);
        Ok(())
    };
    run(&cfg, Some(0.5), &mut [&mut obs]).unwrap();
    assert!(v.iter().all(|&i| i <= v[0] * (1.0 + 1e-3)));
}

#[test]
fn auxiliary_moment_growth() {
    let m = 0.2;
    let mut cfg = SimConfig::new(Model::NonlocalP, 1.0, 0.05, 20.0).unwrap();
    cfg.frame = Frame::Moving { c: 2.0 };
    cfg.grid = Grid1D::spanning(-60.0, 120.0, 0.05).unwrap();
    let mut rows = vec![];
    let mut obs = |s: &SimState, c: &SimConfig| {
        let im = exponential_moment(s, c, MomentKind::Im(m)).unwrap().value;
        rows.push((s.t, im, front_location(s, c).ok()));
        Ok(())
    };
    run(&cfg, Some(1.0), &mut [&mut obs]).unwrap();
    let c0 = rows
        .iter()
        .filter_map(|&(t, _, x)| x.map(|x| (x - 2.0 * t).max(0.0)))
        .fold(0.0, f64::max);
    let i0 = rows[0].1;
    for &(t, im, _) in &rows {
        assert!(im <= i0 * ((1.0 + c0) * m * m * t).exp() * (1.0 + 1e-9), "t = {t}");
    }
}

#[test]
fn trace_recorder_csv() {
    let cfg = SimConfig::new(Model::NonlocalP, 2.0, 0.05, 1.0).unwrap();
    let mut rec = TraceRecorder::new(cfg.model);
    run(&cfg, Some(0.5), &mut [&mut rec]).unwrap();
    assert_eq!(rec.rows.len(), 3);
    let mut buf = Vec::new();
    rec.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("t,x_front,I,min_shape_defect,weighted_defect_sup,rh_residual")
    );
    assert!(lines.next().unwrap().starts_with("0,"));
    assert_eq!(rec.front_trace().len(), 3);
    assert_eq!(rec.moment_trace().samples.len(), 3);
}

#[test]
fn front_trace_rejects_bad_samples() {
    let mut tr = FrontTrace::default();
    tr.push(1.0, 0.0).unwrap();
    assert!(tr.push(1.0, 1.0).is_err());
    assert!(tr.push(2.0, f64::NAN).is_err());
    tr.push(3.0, 2.0).unwrap();
    assert_eq!(tr.at(2.0), Some(1.0));
    assert_eq!(tr.at(4.0), None);
}
