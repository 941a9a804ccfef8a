use lfic_core::models::{self, ModelKind};
use lfic_core::presets;
use lfic_core::quantum::behavior_from_realization;
use lfic_core::simulator::{self, tree, Protocol, RunConfig};

fn q1(runs: u64, seed: u64) -> RunConfig {
    RunConfig::new("Q1", presets::q1_realization(), runs, seed)
}

#[test]
fn counts_depend_only_on_the_seed() {
    let a = simulator::simulate_runs(&q1(30_000, 5)).unwrap();
    let b = simulator::simulate_runs(&q1(30_000, 5)).unwrap();
    let c = simulator::simulate_runs(&q1(30_000, 6)).unwrap();
    assert_eq!(a.tables, b.tables);
    assert_ne!(a.tables, c.tables);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let d = pool.install(|| simulator::simulate_runs(&q1(30_000, 5))).unwrap();
    assert_eq!(a.tables, d.tables);
    assert_eq!(a.total(), 30_000);
}

#[test]
fn lueders_expectation_is_the_born_rule_behavior() {
    let exact = simulator::expected_behavior(&q1(1, 0)).unwrap().to_f64_vec();
    let born = behavior_from_realization(&presets::q1_realization()).to_f64_vec();
    for (a, b) in exact.iter().zip(&born) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn frequencies_converge_to_the_expectation() {
    for policy in tree::policy_names() {
        let cfg = q1(200_000, 21).with_policy(policy);
        let expected = simulator::expected_behavior(&cfg).unwrap().to_f64_vec();
        let est = simulator::estimate_behavior(&simulator::simulate_runs(&cfg).unwrap());
        assert!(est.missing.is_empty());
        for (i, (f, se)) in est.frequencies.iter().zip(&est.std_errors).enumerate() {
            let (f, se) = (f.unwrap(), se.unwrap());
            let sd = se.max(1e-4);
            assert!((f - expected[i]).abs() <= 5.0 * sd, "{policy} entry {i}: {f} vs {}", expected[i]);
        }
    }
}

#[test]
fn standard_errors_shrink_as_root_n() {
    let z1 = presets::z1();
    let small = simulator::estimate_behavior(&simulator::simulate_runs(&q1(20_000, 1)).unwrap());
    let large = simulator::estimate_behavior(&simulator::simulate_runs(&q1(320_000, 1)).unwrap());
    let ratio = small.functional(&z1).unwrap().1 / large.functional(&z1).unwrap().1;
    assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
    let ratio = small.mean_std_error() / large.mean_std_error();
    assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
}

#[test]
fn dephasing_restores_the_lfic_bound() {
    let cfg = q1(1, 0).with_policy("von-neumann");
    let p = simulator::expected_behavior(&cfg).unwrap();
    assert!(presets::z1().evaluate(&p).unwrap().to_f64() >= 0.0);
    assert!(models::membership(&p, ModelKind::Lfic).unwrap().is_inside());
}

#[test]
fn protocol_two_without_the_extra_query_is_the_main_protocol() {
    let main = simulator::simulate_runs(&q1(20_000, 8)).unwrap();
    let two = simulator::simulate_runs(&q1(20_000, 8).with_protocol(Protocol::Two { t_distribution: None })).unwrap();
    assert_eq!(main.aggregate(), two.aggregate());
}

#[test]
fn reduction_check_needs_stratified_counts() {
    let cfg = q1(1000, 0);
    let c = simulator::simulate_runs(&cfg).unwrap();
    assert!(simulator::reduction_report(&cfg, &c).is_err());
}

#[test]
fn registries_reject_unknown_names() {
    assert!(tree::policy("copenhagen").is_err());
    assert!(simulator::device("oracle").is_err());
    assert!(simulator::simulate_runs(&q1(10, 0).with_policy("copenhagen")).is_err());
    assert_eq!(tree::policy_names(), ["lueders", "von-neumann"]);
    assert_eq!(simulator::device_names(), ["honest", "faulty"]);
}

#[test]
fn bad_input_distributions_are_rejected() {
    let mut cfg = q1(10, 0);
    cfg.x_distribution = Some(vec![0.5, 0.5]);
    assert!(simulator::simulate_runs(&cfg).is_err());
    cfg.x_distribution = Some(vec![1.0, 0.0, 0.0]);
    let c = simulator::simulate_runs(&cfg).unwrap();
    let est = simulator::estimate_behavior(&c);
    assert_eq!(est.missing.len(), 4);
    assert!(est.behavior().is_none());
}
