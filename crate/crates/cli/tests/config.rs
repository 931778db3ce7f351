use goggrow::{EpsilonPolicy, Frame, InitPreset, Model, Stencil};
use goggrow_cli::{emit_config, parse_config, CliError};

const MINIMAL: &str = "[model]\nmodel = \"nonlocal_p\"\nchi = 1.0\n\n[grid]\ndx = 0.05\nt_end = 10.0\n";

#[test]
fn minimal_config_gets_defaults() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.sim.model, Model::NonlocalP);
    assert_eq!(cfg.sim.cfl_sigma, 0.4);
    assert_eq!(cfg.sim.frame, Frame::Lab);
    assert_eq!(cfg.sim.init, InitPreset::Heaviside { amplitude: 1.0 });
    assert_eq!(cfg.sim.stencil, Stencil::Central);
    assert_eq!(cfg.sim.epsilon_policy, EpsilonPolicy::GridTied(2.0));
    assert_eq!(cfg.output.trace_every, 1.0);
    assert!(cfg.output.snapshot_every.is_none());
}

#[test]
fn negative_chi_names_the_key() {
    let err = parse_config(&MINIMAL.replace("chi = 1.0", "chi = -1.0")).unwrap_err();
    assert!(matches!(&err, CliError::Invalid { key, .. } if key == "chi"), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn unknown_key_reports_line() {
    let err = parse_config(&format!("{MINIMAL}cfl = 0.3\n")).unwrap_err();
    match err {
        CliError::Parse { line, message } => {
            assert_eq!(line, 8, "{message}");
            assert!(message.contains("cfl"), "{message}");
        }
        other => panic!("{other}"),
    }
    assert!(matches!(parse_config("[model\n"), Err(CliError::Parse { line: 1, .. })));
}

#[test]
fn missing_key_is_named() {
    let err = parse_config("[model]\nmodel = \"local_u\"\nchi = 0.5\n").unwrap_err();
    assert!(matches!(err, CliError::Invalid { key, .. } if key == "dx"));
}

#[test]
fn nan_table_rejected_before_stepping() {
    let text = "[model]\nmodel = \"local_u\"\nchi = 0.5\ninit = \"table\"\n\
                table_x = [-10.0, 0.0, 10.0]\ntable_values = [1.0, nan, 0.0]\n\n\
                [grid]\ndx = 0.1\nt_end = 1.0\n";
    let err = parse_config(text).unwrap_err();
    assert!(matches!(&err, CliError::Invalid { key, .. } if key == "init"), "{err}");
}

#[test]
fn canonical_form_round_trips() {
    let texts = [
        MINIMAL.to_string(),
        "[model]\nmodel = \"local_u\"\nchi = 0.3\nepsilon = 0.05\ninit = \"gaussian\"\n\
         amplitude = 0.5\nwidth = 2.0\nfront_theta = 0.1\n\n[grid]\ndx = 0.1\nt_end = 3.0\n\
         frame = \"moving\"\nstencil = \"upwind\"\nx_min = -40.0\nx_max = 60.0\nrecentre = false\n\n\
         [output]\ntrace_every = 0.5\nsnapshot_every = 1.0\ndefects = false\nout_dir = \"out\"\n"
            .to_string(),
        "[model]\nmodel = \"nonlocal_rho\"\nchi = 2.0\ninit = \"traveling_wave\"\n\n\
         [grid]\ndx = 0.05\nt_end = 1.0\nframe = \"log_shifted\"\nframe_r = 1.5\nframe_t0 = 2.0\n"
            .to_string(),
    ];
    for text in texts {
        let cfg = parse_config(&text).unwrap();
        let canonical = emit_config(&cfg);
        let back = parse_config(&canonical).unwrap();
        assert_eq!(back, cfg, "{canonical}");
        assert_eq!(emit_config(&back), canonical);
    }
}

#[test]
fn moving_frame_defaults_to_minimal_speed() {
    let cfg = parse_config(&MINIMAL.replace("chi = 1.0", "chi = 2.0").replace("t_end", "frame = \"moving\"\nt_end")).unwrap();
    assert_eq!(cfg.sim.frame, Frame::Moving { c: 2.5 });
}
