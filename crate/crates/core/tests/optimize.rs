use noisy_qst::gates::{standard_mub_params, Interaction, QuorumParams};
use noisy_qst::noise::{Channel, NoiseModel};
use noisy_qst::optimize::{optimize_quorum, AnnealSchedule, OptimizerOptions, Strategy};
use noisy_qst::quality::evaluate;
use noisy_qst::Execution;

fn quick() -> OptimizerOptions {
    OptimizerOptions {
        max_iters: 20,
        sa_schedule: AnnealSchedule {
            cooling: 0.8,
            steps_per_temp: 30,
            ..AnnealSchedule::default()
        },
        seed: 17,
        ..OptimizerOptions::default()
    }
}

#[test]
fn ou_optimization_improves_on_mub() {
    for i in [Interaction::Heisenberg, Interaction::Ising] {
        let n = NoiseModel::new(Channel::OverUnderRotation, i, 0.2).unwrap();
        let mub = evaluate(&standard_mub_params(i), &n).unwrap().q_noisy;
        let r = optimize_quorum(&n, Strategy::MubSeeded, &quick()).unwrap();
        assert!(r[0].q_noisy > mub, "{i}: {} vs {mub}", r[0].q_noisy);
        assert!(r[0].q_noisy <= r[0].q_geometric + 1e-15);
    }
}

#[test]
fn annealing_runs_are_sorted_and_mode_independent() {
    let n = NoiseModel::new(Channel::Depolarizing, Interaction::Ising, 0.05).unwrap();
    let strategy = Strategy::Annealing { runs: 2 };
    let a = optimize_quorum(&n, strategy, &quick()).unwrap();
    let b = optimize_quorum(
        &n,
        strategy,
        &OptimizerOptions {
            execution: Execution::Sequential,
            ..quick()
        },
    )
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 2);
    assert!(a[0].q_noisy >= a[1].q_noisy);
    assert!(a
        .iter()
        .all(|r| r.q_noisy > 0.0 && r.trajectory.windows(2).all(|w| w[1].1 <= w[0].1)));
}

#[test]
fn optimized_quorum_survives_json() {
    let n = NoiseModel::new(Channel::Depolarizing, Interaction::Heisenberg, 0.1).unwrap();
    let r = optimize_quorum(&n, Strategy::MubSeeded, &quick()).unwrap();
    let back = QuorumParams::from_json(&r[0].params.to_json()).unwrap();
    assert_eq!(back, r[0].params);
    assert_eq!(evaluate(&back, &n).unwrap().q_noisy, r[0].q_noisy);
}
