use coderank::experiments::{run_sweep, run_sweep_with};
use coderank::{
    AlgorithmConfig, ExperimentSpec, PopulationConfig, RatingMode, SigmaMinRule, Sweep, SweepResult, SweepVariable,
};

fn spec(sweep: Sweep, realizations: usize) -> ExperimentSpec {
    ExperimentSpec {
        population: PopulationConfig {
            num_users: 60,
            num_objects: 60,
            sparsity: 0.15,
            seed: 3,
        },
        sweep,
        algorithms: AlgorithmConfig::all(),
        realizations,
        relevant_fraction: 0.05,
    }
}

fn sigma(grid: Vec<f64>) -> Sweep {
    Sweep::SigmaMax {
        r_max: 5,
        sigma_min: 0.0,
        sigma_max_grid: grid,
        modes: RatingMode::ALL.to_vec(),
    }
}

#[test]
fn sigma_sweep_has_one_row_per_cell() {
    let s = spec(sigma(vec![0.0, 0.5, 1.0]), 3);
    let r: SweepResult = run_sweep(&s).unwrap();
    assert_eq!(r.rows.len(), 3 * 2 * 4);
    assert_eq!(r.rows.len(), s.num_cells());
    for row in &r.rows {
        assert_eq!(row.variable, SweepVariable::SigmaMax);
        assert_eq!(row.stats.runs, 3);
        assert!(row.stats.nonconverged <= 3);
        assert_eq!(row.stats.mean.auc_users.is_some(), row.algorithm != "AA");
    }
}

#[test]
fn resolution_sweep_is_discrete_only() {
    let s = spec(
        Sweep::Resolution {
            r_grid: vec![2, 3, 5],
            sigma_min_rule: SigmaMinRule::Zero,
        },
        2,
    );
    let r: SweepResult = run_sweep(&s).unwrap();
    assert_eq!(r.rows.len(), 3 * 4);
    assert!(r.rows.iter().all(|row| row.mode == RatingMode::Discrete));
    assert_eq!(
        r.rows.iter().map(|row| row.value).collect::<Vec<_>>(),
        [2.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 3.0, 5.0, 5.0, 5.0, 5.0]
    );
}

#[test]
fn worker_count_does_not_change_results() {
    let s = spec(sigma(vec![0.5, 2.0]), 5);
    let one: SweepResult = run_sweep_with(&s, 1, |_| Ok(())).unwrap();
    let four: SweepResult = run_sweep_with(&s, 4, |_| Ok(())).unwrap();
    assert_eq!(one, four);
}

#[test]
fn rows_are_handed_over_per_grid_point() {
    let s = spec(sigma(vec![0.0, 1.0, 2.0]), 2);
    let mut batches = Vec::new();
    let r: SweepResult = run_sweep_with(&s, 0, |rows| {
        batches.push(rows.len());
        Ok(())
    })
    .unwrap();
    assert_eq!(batches, [8, 8, 8]);
    assert_eq!(r.rows.len(), 24);
}

#[test]
fn sink_errors_stop_the_sweep() {
    let s = spec(sigma(vec![0.0, 1.0]), 1);
    let mut calls = 0;
    let err = run_sweep_with::<f64, _>(&s, 0, |_| {
        calls += 1;
        Err(coderank::Error::Sink("disk full".into()))
    })
    .unwrap_err();
    assert_eq!(calls, 1);
    assert!(err.to_string().contains("disk full"));
}

#[test]
fn invalid_specs_fail_before_running() {
    let mut s = spec(sigma(vec![1.0, 0.5]), 1);
    assert!(run_sweep::<f64>(&s).is_err());
    s.sweep = sigma(vec![0.5]);
    s.realizations = 0;
    assert!(run_sweep::<f64>(&s).is_err());
}
