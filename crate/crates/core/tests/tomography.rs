use noisy_qst::gates::Interaction;
use noisy_qst::noise::{Channel, NoiseModel};
use noisy_qst::optimize::{optimize_quorum, OptimizerOptions, Strategy};
use noisy_qst::par::substream;
use noisy_qst::quantum::random_density;
use noisy_qst::tomography::{ml_reconstruct, run_experiment, sample_measurement, ExperimentOptions, Scheme};
use noisy_qst::Execution;

fn opts(n_states: usize, total_shots: u64, seed: u64) -> ExperimentOptions {
    ExperimentOptions {
        n_states,
        total_shots,
        seed,
        noise_aware: true,
        execution: Execution::Parallel,
    }
}

#[test]
fn pauli_reports_ignore_entangler_noise() {
    let schemes = [Scheme::pauli(Interaction::Heisenberg)];
    let base = run_experiment(
        &schemes,
        &NoiseModel::noiseless(Interaction::Heisenberg),
        &opts(50, 23_040, 8),
    )
    .unwrap();
    for z in [0.1, 0.2] {
        let n = NoiseModel::new(Channel::Depolarizing, Interaction::Heisenberg, z).unwrap();
        let r = run_experiment(&schemes, &n, &opts(50, 23_040, 8)).unwrap();
        assert_eq!(r[0].mean_infidelity, base[0].mean_infidelity);
        assert_eq!(r[0].sem, base[0].sem);
    }
}

#[test]
fn infidelity_falls_with_shots() {
    let schemes = [Scheme::mub(Interaction::Ising)];
    let n = NoiseModel::new(Channel::Depolarizing, Interaction::Ising, 0.05).unwrap();
    let rs: Vec<_> = [2304u64, 23_040, 230_400]
        .iter()
        .map(|&s| run_experiment(&schemes, &n, &opts(200, s, 1)).unwrap().remove(0))
        .collect();
    for w in rs.windows(2) {
        let slack = 2.0 * (w[0].sem.powi(2) + w[1].sem.powi(2)).sqrt();
        assert!(w[1].mean_infidelity < w[0].mean_infidelity + slack, "{rs:?}");
    }
}

#[test]
fn noise_ignorant_reconstruction_is_worse_under_strong_noise() {
    let schemes = [Scheme::mub(Interaction::Heisenberg)];
    let n = NoiseModel::new(Channel::Depolarizing, Interaction::Heisenberg, 0.3).unwrap();
    let aware = run_experiment(&schemes, &n, &opts(100, 23_040, 2)).unwrap();
    let ignorant = run_experiment(
        &schemes,
        &n,
        &ExperimentOptions {
            noise_aware: false,
            ..opts(100, 23_040, 2)
        },
    )
    .unwrap();
    assert!(ignorant[0].mean_infidelity > aware[0].mean_infidelity + 3.0 * ignorant[0].sem);
}

#[test]
fn optimized_scheme_beats_mub_under_noise() {
    // Q_N-optimized quorums should help once the MUB entanglers are costly.
    let i = Interaction::Heisenberg;
    let n = NoiseModel::new(Channel::Depolarizing, i, 0.15).unwrap();
    let best = optimize_quorum(&n, Strategy::MubSeeded, &OptimizerOptions::default()).unwrap();
    let schemes = [Scheme::mub(i), Scheme::from_quorum("optimized", &best[0].params)];
    let r = run_experiment(&schemes, &n, &opts(300, 23_040, 4)).unwrap();
    assert!(r[1].mean_infidelity < r[0].mean_infidelity, "{r:?}");
}

#[test]
fn reconstructions_are_valid_states() {
    let mut rng = substream(12, 0);
    let n = NoiseModel::new(Channel::OverUnderRotation, Interaction::Ising, 0.4).unwrap();
    let povms = Scheme::mub(Interaction::Ising).povms(&n).unwrap();
    for _ in 0..20 {
        let rho = random_density(4, &mut rng).unwrap();
        let counts: Vec<_> = povms
            .iter()
            .map(|p| sample_measurement(&rho, p, 300, &mut rng).unwrap())
            .collect();
        let est = ml_reconstruct(&counts, &povms).unwrap();
        assert!(est.rho.eigenvalues().iter().all(|v| *v >= -1e-12));
        assert!((est.rho.matrix().trace().re - 1.0).abs() < 1e-10);
    }
}
