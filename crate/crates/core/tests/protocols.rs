use vaxsel::experiment::run::{build_scenario, run_scenario};
use vaxsel::experiment::{sweep_samples, ExperimentConfig, GeneratorConfig};
use vaxsel::generators::DEFAULT_VARIANCE_RANGE;
use vaxsel::*;

fn waxman(n: usize, repetitions: usize, algorithms: Vec<Algorithm>, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        model: DiffusionModel::LinearThreshold,
        generator: GeneratorConfig::Waxman {
            n,
            centers: 5,
            alpha: 0.5,
            beta: 0.1,
            box_side: 10.0,
            variance_range: DEFAULT_VARIANCE_RANGE,
        },
        infected_fraction: 0.1,
        budget_fraction: 0.1,
        samples: 50,
        algorithms,
        seed,
        repetitions,
        budgets: Vec::new(),
        sample_counts: Vec::new(),
    }
}

#[test]
fn greedy_stays_within_two_nodes_of_blp_at_64() {
    let config = waxman(64, 10, vec![Algorithm::Greedy, Algorithm::Blp], 64);
    for rep in 0..config.repetitions {
        let scenario = build_scenario(&config, rep).unwrap();
        let rows = run_scenario(&config, &scenario, 0.1, &config.algorithms).unwrap();
        let saved = |a| rows.iter().find(|r| r.row.algorithm == a).unwrap().row.saved_avg.unwrap();
        let gap = saved(Algorithm::Blp) - saved(Algorithm::Greedy);
        assert!((-1e-9..=2.0).contains(&gap), "rep {rep}: gap {gap}");
    }
}

#[test]
fn small_samples_do_not_underestimate() {
    let n = 128;
    let config = waxman(n, 10, vec![Algorithm::Greedy], 25);
    let (_, stats) = sweep_samples(&config, &[25, 300]).unwrap();
    let mean = |s: usize| stats.iter().find(|d| d.s == s).unwrap().mean;
    assert!(mean(300) <= mean(25) + 0.05 * n as f64, "{} vs {}", mean(300), mean(25));
}

#[test]
fn single_sample_count_makes_one_group() {
    let config = waxman(32, 3, vec![Algorithm::Greedy], 1);
    let (rows, stats) = sweep_samples(&config, &[10]).unwrap();
    assert_eq!(stats.len(), 1);
    assert_eq!(stats[0].executions, 3);
    assert_eq!(rows.len(), 3);
}
