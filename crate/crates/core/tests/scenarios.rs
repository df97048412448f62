use flownet_core::certificates::{lyapunov_value, LyapunovWeights, Verdict};
use flownet_core::export::{read_trajectory, trajectory_header, write_trajectory};
use flownet_core::multicommodity::{mc_certify, mc_lyapunov, mc_simulate, McState};
use flownet_core::scenario::{
    bundled_file, bundled_names, load_bundled, load_scenario, save_scenario, ScenarioError,
    ScenarioFile, ScenarioModel,
};
use flownet_core::simulator::{simulate, RunVerdict, SimConfig};

fn params(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn every_bundled_scenario_loads_and_round_trips() {
    let dir = tempdir();
    for name in bundled_names() {
        let file = bundled_file(name).unwrap();
        load_bundled(name, &[]).unwrap();
        let reparsed = ScenarioFile::parse(&file.to_json(), "memory").unwrap();
        assert_eq!(reparsed, file, "{name}");

        let path = dir.join(format!("{name}.json"));
        save_scenario(&file, &path).unwrap();
        let loaded = load_scenario(&path).unwrap();
        assert_eq!(loaded.source, file, "{name}");
    }
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("flownet-scenarios-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn malformed_file_reports_line() {
    let text = "{\n  \"schema_version\": 1,\n  \"name\": ,\n}";
    match ScenarioFile::parse(text, "bad.json") {
        Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn unknown_field_is_a_schema_violation() {
    let mut v: serde_json::Value = serde_json::from_str(&bundled_file("example1").unwrap().to_json()).unwrap();
    v["colour"] = serde_json::json!("blue");
    let err = ScenarioFile::parse(&v.to_string(), "extra.json").unwrap_err();
    assert!(matches!(err, ScenarioError::Schema { .. }), "{err}");
}

#[test]
fn undeclared_parameter_is_rejected() {
    let err = load_bundled("example1", &params(&[("nope", 1.0)])).unwrap_err();
    assert!(matches!(err, ScenarioError::Parameter(_)), "{err}");
}

#[test]
fn example1_growth_bound_uses_leontief_of_initial_state() {
    let s = load_bundled("example1", &[]).unwrap();
    let ScenarioModel::Single {
        network,
        inflow,
        initial,
    } = &s.model
    else {
        panic!("single commodity expected")
    };
    let xi = network.leontief().apply(initial);
    assert!((xi[0] - 10.0).abs() < 1e-12 && (xi[1] - 9.0).abs() < 1e-12, "{xi:?}");
    let cfg = SimConfig::new(1e-2, 50.0).unwrap();
    let traj = simulate(network, inflow, initial, &cfg).unwrap();
    assert!(traj.monitors.iter().all(|m| m.holds()));
}

#[test]
fn multicommodity_scaled_up_is_not_certified_and_diverges() {
    let s = load_bundled("multicommodity", &params(&[("lambdaA", 4.0), ("lambdaB", 4.0)])).unwrap();
    let ScenarioModel::Multi { network, initial } = &s.model else {
        panic!("multi-commodity expected")
    };
    let report = mc_certify(network).unwrap();
    assert!(report.lhs > 1.0);
    assert_eq!(report.verdict, Verdict::NotCertified);
    let cfg = SimConfig::new(1e-2, 100.0).unwrap();
    assert_eq!(mc_simulate(network, initial, &cfg).unwrap().verdict, RunVerdict::Diverging);
}

#[test]
fn multicommodity_without_inflow_drains() {
    let s = load_bundled("multicommodity", &params(&[("lambdaA", 0.0), ("lambdaB", 0.0)])).unwrap();
    let ScenarioModel::Multi { network, initial } = &s.model else {
        panic!("multi-commodity expected")
    };
    assert_eq!(mc_certify(network).unwrap().lhs, 0.0);
    let cfg = SimConfig::new(1e-2, 60.0).unwrap();
    let traj = mc_simulate(network, initial, &cfg).unwrap();
    let v0 = traj.lyapunov[0];
    let v_end = *traj.lyapunov.last().unwrap();
    assert!(v_end < 1e-3 * v0, "{v_end} vs {v0}");
    assert!(traj.lyapunov.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn multicommodity_lyapunov_regression() {
    let s = load_bundled("multicommodity", &[]).unwrap();
    let ScenarioModel::Multi { network, initial } = &s.model else {
        panic!("multi-commodity expected")
    };
    let w = LyapunovWeights::capacity(network.field()).unwrap();
    let v = mc_lyapunov(network, &w, initial).unwrap();
    assert!((v - 2.1050800077115865).abs() < 1e-12, "{v}");

    let by_hand: f64 = (0..network.commodity_count())
        .map(|k| lyapunov_value(&w, network.leontief(k), initial.commodity(k)).unwrap())
        .sum();
    assert!((v - by_hand).abs() < 1e-14);

    let zero = McState::zeros(network.commodity_count(), network.link_count());
    assert_eq!(mc_lyapunov(network, &w, &zero).unwrap(), 0.0);
}

#[test]
fn aggregate_rate_matches_share_weighted_routing() {
    let s = load_bundled("multicommodity", &[]).unwrap();
    let ScenarioModel::Multi { network, .. } = &s.model else {
        panic!("multi-commodity expected")
    };
    let n = network.link_count();
    for seed in 0..20u32 {
        let per: Vec<Vec<f64>> = (0..2)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        let v = ((seed * 7 + k * 13 + i as u32 * 5) % 11) as f64 / 4.0;
                        if v < 0.5 { 0.0 } else { v }
                    })
                    .collect()
            })
            .collect();
        let x = McState::new(per).unwrap();
        let (rates, aggregate) = network.rates(0.0, &x).unwrap();
        for i in 0..n {
            let summed: f64 = rates.iter().map(|r| r[i]).sum();
            assert!((summed - aggregate[i]).abs() < 1e-8, "seed {seed} link {i}");
        }
    }
}

#[test]
fn csv_schema_is_stable() {
    assert_eq!(
        trajectory_header(2),
        ["t", "x_1", "x_2", "z_1", "z_2", "V_uniform", "V_capacity"]
    );
}

#[test]
fn bounded_timevarying_run_round_trips_through_csv() {
    let s = load_bundled("timevarying", &params(&[("A", 0.45)])).unwrap();
    let ScenarioModel::Single {
        network,
        inflow,
        initial,
    } = &s.model
    else {
        panic!("single commodity expected")
    };
    let cfg = SimConfig::new(1e-2, 100.0).unwrap().with_record_every(10);
    let traj = simulate(network, inflow, initial, &cfg).unwrap();
    let path = tempdir().join("timevarying.csv");
    write_trajectory(&traj, &path).unwrap();
    assert!(read_trajectory(&path).unwrap().matches(&traj));

    let mass: Vec<f64> = traj.states.iter().map(|x| x.iter().sum()).collect();
    let tail = &mass[mass.len() / 2..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo > 1e-3, "aggregate mass should oscillate");
    assert!(hi < 50.0);
}
