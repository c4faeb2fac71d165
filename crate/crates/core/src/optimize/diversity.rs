//! Diversity-filtered random starting quorums.
//!
//! Every projector of a quorum is described by the multiset of its trace
//! overlaps `Tr(P_a P_b) − 1/4` with the other 19 projectors, binned with
//! width 0.05 over `[−1/4, 3/4]`. Two quorums are compared through the
//! multiset Jaccard distance `1 − Σmin/Σmax` of these histograms: each
//! projector is matched to its closest counterpart in the other quorum, the
//! matches are averaged, and the result is symmetrized.

use std::f64::consts::PI;

use log::info;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::gates::{Interaction, QuorumParams, QUORUM_PARAMS};
use crate::noise::NoiseModel;
use crate::par::{map_indexed, substream, Execution};
use crate::quantum::{trace_product, CMat};

/// Histogram bin width.
pub const BIN_WIDTH: f64 = 0.05;
/// Number of bins covering `[−1/4, 3/4]`.
pub const BINS: usize = 20;
/// Random pairs used to set the acceptance threshold.
pub const THRESHOLD_PAIRS: usize = 10_000;
/// Factor applied to the threshold after `100·n` consecutive rejections.
pub const RELAX_FACTOR: f64 = 0.9;

type Histogram = [u16; BINS];

/// Overlap histograms of the 20 projectors of a quorum.
#[derive(Clone, Debug, PartialEq)]
pub struct QuorumSignature(Vec<Histogram>);

fn bin(v: f64) -> usize {
    let idx = ((v + 0.25) / BIN_WIDTH + 1e-9).floor();
    idx.clamp(0.0, (BINS - 1) as f64) as usize
}

impl QuorumSignature {
    pub fn new(q: &QuorumParams) -> Self {
        let projectors: Vec<CMat> = q
            .unitaries()
            .iter()
            .flat_map(|u| u.basis_projectors().into_iter().map(|p| p.matrix().clone()))
            .collect();
        let n = projectors.len();
        let mut hists = vec![[0u16; BINS]; n];
        for a in 0..n {
            for b in a + 1..n {
                let v = trace_product(&projectors[a], &projectors[b]).re - 0.25;
                let k = bin(v);
                hists[a][k] += 1;
                hists[b][k] += 1;
            }
        }
        Self(hists)
    }
}

fn jaccard(a: &Histogram, b: &Histogram) -> f64 {
    let (mut lo, mut hi) = (0u32, 0u32);
    for (x, y) in a.iter().zip(b) {
        lo += (*x).min(*y) as u32;
        hi += (*x).max(*y) as u32;
    }
    if hi == 0 {
        0.0
    } else {
        1.0 - lo as f64 / hi as f64
    }
}

fn directed(a: &QuorumSignature, b: &QuorumSignature) -> f64 {
    let total: f64 =
        a.0.iter()
            .map(|ha| b.0.iter().map(|hb| jaccard(ha, hb)).fold(f64::INFINITY, f64::min))
            .sum();
    total / a.0.len() as f64
}

/// Symmetrized distance between precomputed signatures.
pub fn signature_distance(a: &QuorumSignature, b: &QuorumSignature) -> f64 {
    0.5 * (directed(a, b) + directed(b, a))
}

/// Distance in `[0, 1]` between the projector geometries of two quorums.
pub fn quorum_distance(a: &QuorumParams, b: &QuorumParams) -> f64 {
    signature_distance(&QuorumSignature::new(a), &QuorumSignature::new(b))
}

/// Quorum with uniformly random parameters: angles in `[0, 2π)`,
/// Heisenberg times in `[0, 2)`, Ising phases in `[−π/2, π/2)`.
pub fn random_quorum<R: Rng + ?Sized>(interaction: Interaction, rng: &mut R) -> QuorumParams {
    let mut x = vec![0.0; QUORUM_PARAMS];
    for (i, v) in x.iter_mut().enumerate() {
        let slot = i % 15;
        *v = if (6..9).contains(&slot) {
            match interaction {
                Interaction::Heisenberg => rng.random_range(0.0..2.0),
                Interaction::Ising => rng.random_range(-PI / 2.0..PI / 2.0),
            }
        } else {
            rng.random_range(0.0..2.0 * PI)
        };
    }
    QuorumParams::from_vector(interaction, &x).expect("finite parameters")
}

/// Mean and standard deviation of the distance over random pairs.
pub fn distance_statistics(interaction: Interaction, pairs: usize, seed: u64, exec: Execution) -> (f64, f64) {
    let ds = map_indexed(exec, pairs, |i| {
        let mut rng = substream(seed, i as u64);
        quorum_distance(
            &random_quorum(interaction, &mut rng),
            &random_quorum(interaction, &mut rng),
        )
    });
    let n = ds.len() as f64;
    let mean = ds.iter().sum::<f64>() / n;
    let var = ds.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Result of [`diverse_starts`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiverseStarts {
    pub quorums: Vec<QuorumParams>,
    /// Threshold from the pair statistics.
    pub initial_threshold: f64,
    /// Threshold in force when the last quorum was accepted.
    pub final_threshold: f64,
}

/// Rejection-samples `n` random quorums whose pairwise distances all reach
/// the threshold `mean − std`.
///
/// Streams: `substream(seed, 0)` drives the candidates, `substream(seed + 1,
/// i)` the threshold pairs.
pub fn diverse_starts(n: usize, noise: &NoiseModel, seed: u64, exec: Execution) -> Result<DiverseStarts> {
    if n == 0 {
        return Err(invalid("start count", "must be at least 1"));
    }
    let interaction = noise.interaction;
    let (mean, std) = distance_statistics(interaction, THRESHOLD_PAIRS, seed.wrapping_add(1), exec);
    let initial_threshold = mean - std;
    let mut threshold = initial_threshold;
    let mut rng = substream(seed, 0);
    let mut quorums = Vec::with_capacity(n);
    let mut signatures: Vec<QuorumSignature> = Vec::with_capacity(n);
    let mut rejections = 0;
    while quorums.len() < n {
        let q = random_quorum(interaction, &mut rng);
        let sig = QuorumSignature::new(&q);
        if signatures.iter().all(|s| signature_distance(s, &sig) >= threshold) {
            quorums.push(q);
            signatures.push(sig);
            rejections = 0;
        } else {
            rejections += 1;
            if rejections > 100 * n {
                threshold *= RELAX_FACTOR;
                rejections = 0;
                info!(
                    "diversity threshold relaxed to {threshold:.4} after {} accepted",
                    quorums.len()
                );
            }
        }
    }
    Ok(DiverseStarts {
        quorums,
        initial_threshold,
        final_threshold: threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::standard_mub_params;
    use crate::noise::Channel;

    #[test]
    fn binning() {
        assert_eq!(bin(-0.25), 0);
        assert_eq!(bin(0.0), 5);
        assert_eq!(bin(0.75), BINS - 1);
        assert_eq!(bin(-0.3), 0);
        assert_eq!(bin(-0.2), 1);
    }

    #[test]
    fn self_distance_zero_and_symmetry() {
        let mut rng = substream(2, 0);
        let a = random_quorum(Interaction::Heisenberg, &mut rng);
        assert_eq!(quorum_distance(&a, &a), 0.0);
        for _ in 0..100 {
            let a = random_quorum(Interaction::Ising, &mut rng);
            let b = random_quorum(Interaction::Ising, &mut rng);
            let d = quorum_distance(&a, &b);
            assert!((0.0..=1.0).contains(&d));
            assert_eq!(d, quorum_distance(&b, &a));
        }
    }

    #[test]
    fn mub_signature() {
        // Within a basis: three orthogonal partners (bin 0); across bases: 16
        // overlaps of 1/4, i.e. traceless value 0 (bin 5).
        let sig = QuorumSignature::new(&standard_mub_params(Interaction::Heisenberg));
        for h in &sig.0 {
            assert_eq!(h[0], 3);
            assert_eq!(h[5], 16);
        }
    }

    #[test]
    fn mean_distance_regression() {
        // Pinned from this implementation's own statistics (10^3 pairs).
        let (mean, std) = distance_statistics(Interaction::Heisenberg, 1000, 77, Execution::Parallel);
        let (m2, s2) = distance_statistics(Interaction::Heisenberg, 1000, 77, Execution::Sequential);
        assert_eq!((mean, std), (m2, s2));
        assert!((mean - MEAN_1000_PAIRS).abs() < 1e-12, "{mean}");
    }

    const MEAN_1000_PAIRS: f64 = 0.381_069_593_713_452_45;

    #[test]
    fn starts_are_diverse_and_deterministic() {
        let noise = NoiseModel::new(Channel::Depolarizing, Interaction::Heisenberg, 0.02).unwrap();
        let a = diverse_starts(4, &noise, 3, Execution::Parallel).unwrap();
        let b = diverse_starts(4, &noise, 3, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.quorums.len(), 4);
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(quorum_distance(&a.quorums[i], &a.quorums[j]) >= a.final_threshold);
            }
        }
        assert!(diverse_starts(0, &noise, 3, Execution::Parallel).is_err());
    }
}
