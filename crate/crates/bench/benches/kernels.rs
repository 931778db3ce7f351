use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use goggrow::{
    eta_local, lambert_w_minus1_checked, make_state, stable_dt, step, Frame, Model, SimConfig,
};

fn lambert(c: &mut Criterion) {
    let ys: Vec<f64> = (1..=256).map(|k| -(k as f64) / 256.0 / std::f64::consts::E).collect();
    c.bench_function("lambert_w_minus1/256", |b| {
        b.iter(|| {
            ys.iter()
                .map(|&y| lambert_w_minus1_checked(black_box(y)).unwrap())
                .sum::<f64>()
        })
    });
    c.bench_function("eta_local/chi=0.5", |b| {
        b.iter(|| eta_local(0.5, black_box(0.37)).unwrap())
    });
}

fn stepping(c: &mut Criterion) {
    for (name, model, chi) in [
        ("step/nonlocal_p/chi=2", Model::NonlocalP, 2.0),
        ("step/local_u/chi=0.5", Model::LocalU, 0.5),
    ] {
        let mut cfg = SimConfig::new(model, chi, 0.05, 1.0).unwrap();
        cfg.frame = Frame::Moving {
            c: cfg.chi_params.c_star,
        };
        let state = make_state(&cfg).unwrap();
        let dt = stable_dt(&cfg);
        c.bench_function(name, |b| b.iter(|| step(black_box(&state), &cfg, dt).unwrap()));
    }
}

criterion_group!(benches, lambert, stepping);
criterion_main!(benches);
