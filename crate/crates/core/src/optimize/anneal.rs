//! Simulated annealing with Gaussian proposals and geometric cooling,
//! followed by a Powell polish of the best point found.
//!
//! With `adaptive` set, the proposal width is rescaled after every
//! temperature level to keep the acceptance ratio near `[0.4, 0.6]`
//! (Corana et al.), starting from `proposal_std`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::powell::{powell_minimize, Minimum, PowellOptions, Tracked};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealSchedule {
    pub t0: f64,
    pub cooling: f64,
    pub steps_per_temp: usize,
    pub proposal_std: f64,
    /// Annealing stops once the temperature drops below this value.
    pub min_temp: f64,
    #[serde(default = "yes")]
    pub adaptive: bool,
}

fn yes() -> bool {
    true
}

const MIN_STD: f64 = 1e-9;
const MAX_STD: f64 = 1e3;

fn adapt(std: f64, acceptance: f64) -> f64 {
    let s = if acceptance > 0.6 {
        std * (1.0 + 2.0 * (acceptance - 0.6) / 0.4)
    } else if acceptance < 0.4 {
        std / (1.0 + 2.0 * (0.4 - acceptance) / 0.4)
    } else {
        std
    };
    s.clamp(MIN_STD, MAX_STD)
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            t0: 1.0,
            cooling: 0.95,
            steps_per_temp: 100,
            proposal_std: 0.1,
            min_temp: 1e-3,
            adaptive: true,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("t0", self.t0, self.t0 > 0.0),
            ("cooling", self.cooling, self.cooling > 0.0 && self.cooling < 1.0),
            ("steps_per_temp", self.steps_per_temp as f64, self.steps_per_temp > 0),
            ("proposal_std", self.proposal_std, self.proposal_std > 0.0),
            (
                "min_temp",
                self.min_temp,
                self.min_temp > 0.0 && self.min_temp < self.t0,
            ),
        ];
        for (name, value, ok) in checks {
            if !ok {
                return Err(Error::OutOfRange { name, value });
            }
        }
        Ok(())
    }

    /// Number of temperature levels visited.
    pub fn levels(&self) -> usize {
        ((self.min_temp / self.t0).ln() / self.cooling.ln()).floor() as usize + 1
    }
}

/// Anneals from `x0`; if `polish` is given, the best annealed point is
/// refined with Powell's method. The trajectory records the best value at
/// the end of each temperature level, then the polish sweeps.
pub fn simulated_annealing<F, R>(
    mut f: F,
    x0: &[f64],
    schedule: &AnnealSchedule,
    rng: &mut R,
    polish: Option<&PowellOptions>,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    schedule.validate()?;
    let n = x0.len();
    let mut std = schedule.proposal_std;
    let mut tracked = Tracked::new(&mut f, n);
    let mut x = x0.to_vec();
    let mut fx = tracked.eval(&x)?;
    if !fx.is_finite() {
        return Err(Error::NonFiniteObjective {
            value: fx,
            evaluations: 1,
        });
    }
    let mut trajectory = vec![(0, fx)];
    let mut y = vec![0.0; n];
    let mut temp = schedule.t0;
    let levels = schedule.levels();
    for level in 1..=levels {
        let proposal = Normal::new(0.0, std).expect("positive std");
        let mut accepted = 0;
        for _ in 0..schedule.steps_per_temp {
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi = xi + proposal.sample(rng);
            }
            let fy = tracked.eval(&y)?;
            let accept = fy <= fx || rng.random::<f64>() < (-(fy - fx) / temp).exp();
            if accept {
                std::mem::swap(&mut x, &mut y);
                fx = fy;
                accepted += 1;
            }
        }
        if schedule.adaptive {
            std = adapt(std, accepted as f64 / schedule.steps_per_temp as f64);
        }
        trajectory.push((level, tracked.best_f));
        temp *= schedule.cooling;
    }
    let evaluations = tracked.evaluations;
    let best_x = tracked.best_x.clone();
    let best_f = tracked.best_f;
    let Some(opts) = polish else {
        return Ok(Minimum {
            x: best_x,
            f: best_f,
            iterations: levels,
            evaluations,
            trajectory,
        });
    };
    let local = powell_minimize(&mut f, &best_x, opts)?;
    trajectory.extend(local.trajectory.iter().skip(1).map(|(i, v)| (levels + i, *v)));
    Ok(Minimum {
        x: local.x,
        f: local.f,
        iterations: levels + local.iterations,
        evaluations: evaluations + local.evaluations,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::substream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn convex_quadratic() {
        let f = |x: &[f64]| (x[0] - 0.7).powi(2) + 2.0 * (x[1] + 0.4).powi(2);
        let m = simulated_annealing(
            f,
            &[3.0, 3.0],
            &AnnealSchedule::default(),
            &mut substream(1, 0),
            Some(&PowellOptions::default()),
        )
        .unwrap();
        assert_abs_diff_eq!(m.x[0], 0.7, epsilon = 1e-4);
        assert_abs_diff_eq!(m.x[1], -0.4, epsilon = 1e-4);
    }

    #[test]
    fn multimodal_global_basin() {
        let f = |x: &[f64]| (5.0 * x[0]).sin() + 0.1 * x[0] * x[0];
        // Grid-search oracle on [−5, 5].
        let (mut xg, mut fg) = (0.0, f64::MAX);
        for i in 0..=100_000 {
            let x = -5.0 + 10.0 * i as f64 / 100_000.0;
            let v = f(&[x]);
            if v < fg {
                fg = v;
                xg = x;
            }
        }
        let mut hits = 0;
        for seed in 0..10 {
            let mut rng = substream(seed, 0);
            let x0 = rng.random_range(-5.0..5.0);
            let m = simulated_annealing(
                f,
                &[x0],
                &AnnealSchedule::default(),
                &mut rng,
                Some(&PowellOptions::default()),
            )
            .unwrap();
            if (m.x[0] - xg).abs() < 0.05 {
                hits += 1;
            }
        }
        assert!(hits >= 8, "{hits}/10");
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| x[0].cos() * x[1].sin() + 0.05 * (x[0] * x[0] + x[1] * x[1]);
        let run =
            || simulated_annealing(f, &[1.0, 1.0], &AnnealSchedule::default(), &mut substream(5, 2), None).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn adaptation_rule() {
        assert_eq!(adapt(0.1, 0.5), 0.1);
        assert!((adapt(0.1, 1.0) - 0.3).abs() < 1e-15);
        assert!((adapt(0.1, 0.0) - 0.1 / 3.0).abs() < 1e-15);
        assert_eq!(adapt(MAX_STD, 1.0), MAX_STD);
    }

    #[test]
    fn schedule_validation() {
        let bad = AnnealSchedule {
            cooling: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(AnnealSchedule::default().levels(), 135);
    }
}
