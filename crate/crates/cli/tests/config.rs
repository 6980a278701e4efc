use mflab_cli::config::{AlphaConfig, AlphaName, FamilyName, Interaction, RunConfig};

#[test]
fn defaults_round_trip() {
    let cfg = RunConfig::default();
    let again = RunConfig::parse(&cfg.dump()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(again.dump(), cfg.dump());
    cfg.resolve().unwrap();
}

#[test]
fn full_config_round_trips_bit_exactly() {
    let text = r#"{
        "model": {
            "d": 3,
            "h0": [[[0.1, 0], [0.3, -0.2], [0, 0]],
                   [[0.3, 0.2], [-1.7, 0], [0.1, 0.1]],
                   [[0, 0], [0.1, -0.1], [0.12345678901234568, 0]]],
            "interaction": {"onsite": {"g": 0.7}}
        },
        "state": {"family": "mixture", "alpha": "sqrt_n",
                  "generators": [[[0, 1], [0, 0], [0, 0]], [[0, 0], [0.6, 0], [0.8, 0]]]},
        "sweep": {"ns": [4, 8, 16], "ps": [1, 3], "times": [0.0, 0.1, 0.30000000000000004]},
        "numerics": {"dt": 5e-4, "quadrature": 32, "gauss_nodes": 6, "kmax": 3, "series_c": 3.0},
        "output": {"rates": "r.csv", "slopes": "s.csv"}
    }"#;
    let cfg = RunConfig::parse(text).unwrap();
    assert_eq!(cfg.state.family, FamilyName::Mixture);
    assert_eq!(cfg.state.alpha, Some(AlphaConfig::Rule(AlphaName::SqrtN)));
    assert_eq!(cfg.model.h0[2][2][0], 0.12345678901234568);
    let again = RunConfig::parse(&cfg.dump()).unwrap();
    assert_eq!(cfg, again);
    let resolved = again.resolve().unwrap();
    assert_eq!(resolved.series.kmax, 3);
    assert_eq!(resolved.plan.ns, vec![4, 8, 16]);
}

#[test]
fn explicit_kernels_and_numeric_alpha_parse() {
    let text = r#"{
        "model": {"d": 2, "h0": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]],
                  "interaction": {"kernel": {"entries": [[[0.5, 0], [0, 0], [0, 0]],
                                                         [[0, 0], [0.2, 0], [0, 0]],
                                                         [[0, 0], [0, 0], [0.5, 0]]]}}},
        "state": {"family": "mixture", "alpha": 10}
    }"#;
    let cfg = RunConfig::parse(text).unwrap();
    assert!(matches!(cfg.model.interaction, Interaction::Kernel { .. }));
    assert_eq!(cfg.state.alpha, Some(AlphaConfig::Fixed(10.0)));
    let resolved = cfg.resolve().unwrap();
    assert!((resolved.model.qnorm() - 0.5).abs() < 1e-14);
    assert_eq!(RunConfig::parse(&cfg.dump()).unwrap(), cfg);
}

#[test]
fn unknown_keys_are_rejected_with_location() {
    let err = RunConfig::parse(
        "{\n  \"sweep\": {\"ns\": [4], \"ps\": [1], \"times\": [0], \"tmax\": 1}\n}",
    )
    .unwrap_err()
    .0;
    assert!(err.contains("tmax"), "{err}");
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("sweep"), "{err}");

    let err = RunConfig::parse(r#"{"modle": {}}"#).unwrap_err().0;
    assert!(err.contains("modle"), "{err}");
}

#[test]
fn malformed_values_name_their_key() {
    let err = RunConfig::parse(r#"{"state": {"family": "cat"}}"#)
        .unwrap_err()
        .0;
    assert!(err.contains("state.family"), "{err}");
    let err = RunConfig::parse(r#"{"state": {"family": "w"}, "numerics": {"dt": "small"}}"#)
        .unwrap_err()
        .0;
    assert!(err.contains("numerics.dt"), "{err}");
    assert!(RunConfig::parse("{").is_err());
    assert!(RunConfig::parse("{} {}").is_err());
}

#[test]
fn invariants_are_enforced_at_load() {
    let cases = [
        (
            r#"{"state": {"family": "twin"}, "sweep": {"ns": [4], "ps": [3], "times": [0]}}"#,
            "sweep",
        ),
        (
            r#"{"model": {"d": 2, "h0": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]], "interaction": {"onsite": {"g": 1}}}}"#,
            "model",
        ),
        (
            r#"{"model": {"d": 2, "h0": [[[0, 0]]], "interaction": {"onsite": {"g": 1}}}}"#,
            "model.h0",
        ),
        (
            r#"{"state": {"family": "product", "generators": [[[1, 0], [1, 0]]]}}"#,
            "state",
        ),
        (
            r#"{"state": {"family": "w", "generators": [[[1, 0], [0, 0]], [[1, 0], [0, 0]]]}}"#,
            "state",
        ),
        (r#"{"state": {"family": "mixture"}}"#, "state"),
        (
            r#"{"state": {"family": "mixture", "alpha": 0.5}}"#,
            "state.alpha",
        ),
        (
            r#"{"state": {"family": "product", "alpha": 2}}"#,
            "state.alpha",
        ),
        (r#"{"numerics": {"dt": -1}}"#, "numerics.dt"),
        (r#"{"numerics": {"kmax": 9}}"#, "numerics.kmax"),
        (r#"{"numerics": {"series_c": 2}}"#, "numerics.series_c"),
        (r#"{"sweep": {"ns": [8], "ps": [1], "times": []}}"#, "sweep"),
    ];
    for (text, key) in cases {
        let cfg = RunConfig::parse(text).unwrap_or_else(|e| panic!("{text}: {e}"));
        let err = cfg.resolve().unwrap_err().0;
        assert!(err.starts_with(key), "{text}: {err}");
    }
}
