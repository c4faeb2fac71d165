//! Powell's direction-set method with bracketed Brent line searches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowellOptions {
    /// Outer iterations (full sweeps over the direction set).
    pub max_iters: usize,
    /// Relative decrease of `f` per sweep below which the search stops.
    pub f_tol: f64,
    /// Relative tolerance of each line search and of the step per sweep.
    pub x_tol: f64,
}

impl Default for PowellOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            f_tol: 1e-10,
            x_tol: 1e-8,
        }
    }
}

impl PowellOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_tol > 0.0) {
            return Err(Error::OutOfRange {
                name: "f_tol",
                value: self.f_tol,
            });
        }
        if !(self.x_tol > 0.0) {
            return Err(Error::OutOfRange {
                name: "x_tol",
                value: self.x_tol,
            });
        }
        Ok(())
    }
}

/// Result of a minimization.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// `(iteration, best objective)` after each outer iteration.
    pub trajectory: Vec<(usize, f64)>,
}

/// Counts evaluations, remembers the best point and rejects NaN.
pub(crate) struct Tracked<F> {
    f: F,
    pub evaluations: usize,
    pub best_x: Vec<f64>,
    pub best_f: f64,
}

impl<F: FnMut(&[f64]) -> f64> Tracked<F> {
    pub fn new(f: F, n: usize) -> Self {
        Self {
            f,
            evaluations: 0,
            best_x: vec![0.0; n],
            best_f: f64::INFINITY,
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x);
        self.evaluations += 1;
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(Error::NonFiniteObjective {
                value: v,
                evaluations: self.evaluations,
            });
        }
        if v < self.best_f {
            self.best_f = v;
            self.best_x.copy_from_slice(x);
        }
        Ok(v)
    }
}

const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105;
const TINY: f64 = 1e-20;
const ZEPS: f64 = 1e-12;
const MAX_EXPANSIONS: usize = 60;
const BRENT_ITERS: usize = 100;

fn along(x: &[f64], d: &[f64], t: f64, out: &mut [f64]) {
    for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
        *o = xi + t * di;
    }
}

/// Minimizes `t ↦ f(x + t·d)`, moves `x` to the minimizer and returns
/// `(t_min, f_min)`.
fn line_minimize<F: FnMut(&[f64]) -> f64>(
    f: &mut Tracked<F>,
    x: &mut [f64],
    d: &[f64],
    fx: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut buf = vec![0.0; x.len()];
    let mut g = |t: f64, f: &mut Tracked<F>| -> Result<f64> {
        along(x, d, t, &mut buf);
        f.eval(&buf)
    };

    // Bracket by golden expansion from (0, 1).
    let (mut a, mut fa) = (0.0, fx);
    let (mut b, mut fb) = (1.0, g(1.0, f)?);
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + GOLD * (b - a);
    let mut fc = g(c, f)?;
    let mut expansions = 0;
    while fb > fc && expansions < MAX_EXPANSIONS {
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        c = b + GOLD * (b - a);
        fc = g(c, f)?;
        expansions += 1;
    }
    let _ = fa;
    if fb > fc {
        // Unbounded descent within the expansion budget: accept the last point.
        along(x, d, c, &mut buf);
        x.copy_from_slice(&buf);
        return Ok((c, fc));
    }

    // Brent's method on [min(a,c), max(a,c)] starting at b.
    let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };
    let (mut xm, mut w, mut v) = (b, b, b);
    let (mut fxm, mut fw, mut fv) = (fb, fb, fb);
    let mut e: f64 = 0.0;
    let mut step: f64 = 0.0;
    for _ in 0..BRENT_ITERS {
        let mid = 0.5 * (lo + hi);
        let tol1 = tol * xm.abs() + ZEPS;
        let tol2 = 2.0 * tol1;
        if (xm - mid).abs() <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (xm - w) * (fxm - fv);
            let mut q = (xm - v) * (fxm - fw);
            let mut p = (xm - v) * q - (xm - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = step;
            if p.is_finite() && p.abs() < (0.5 * q * etemp).abs() && p > q * (lo - xm) && p < q * (hi - xm) {
                step = p / q;
                let u = xm + step;
                if u - lo < tol2 || hi - u < tol2 {
                    step = tol1.copysign(mid - xm);
                }
                golden = false;
            }
        }
        if golden {
            e = if xm >= mid { lo - xm } else { hi - xm };
            step = CGOLD * e;
        }
        let u = if step.abs() >= tol1 {
            xm + step
        } else {
            xm + tol1.copysign(step)
        };
        let fu = g(u, f)?;
        if fu <= fxm {
            if u >= xm {
                lo = xm;
            } else {
                hi = xm;
            }
            v = w;
            fv = fw;
            w = xm;
            fw = fxm;
            xm = u;
            fxm = fu;
        } else {
            if u < xm {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == xm {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == xm || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    along(x, d, xm, &mut buf);
    x.copy_from_slice(&buf);
    Ok((xm, fxm))
}

/// Minimizes `f` from `x0`. The returned point is the best one evaluated.
pub fn powell_minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &PowellOptions) -> Result<Minimum> {
    opts.validate()?;
    let n = x0.len();
    let mut tracked = Tracked::new(f, n);
    let mut x = x0.to_vec();
    let mut fx = tracked.eval(&x)?;
    if !fx.is_finite() {
        return Err(Error::NonFiniteObjective {
            value: fx,
            evaluations: 1,
        });
    }
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();
    let mut trajectory = vec![(0, fx)];
    let mut iterations = 0;
    let mut xt = vec![0.0; n];
    while iterations < opts.max_iters {
        iterations += 1;
        let f_start = fx;
        let x_start = x.clone();
        let mut biggest = 0.0;
        let mut ibig = 0;
        for (i, d) in dirs.iter().enumerate() {
            let before = fx;
            let (_, fnew) = line_minimize(&mut tracked, &mut x, d, fx, opts.x_tol)?;
            fx = fnew;
            if before - fx > biggest {
                biggest = before - fx;
                ibig = i;
            }
        }
        trajectory.push((iterations, fx));
        let step: f64 = x.iter().zip(&x_start).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if 2.0 * (f_start - fx) <= opts.f_tol * (f_start.abs() + fx.abs()) + TINY || step <= opts.x_tol * scale {
            break;
        }
        // Extrapolated point along the average direction of this sweep.
        let new_dir: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        for ((t, a), b) in xt.iter_mut().zip(&x).zip(&x_start) {
            *t = 2.0 * a - b;
        }
        let fe = tracked.eval(&xt)?;
        if fe < f_start {
            let t =
                2.0 * (f_start - 2.0 * fx + fe) * (f_start - fx - biggest).powi(2) - biggest * (f_start - fe).powi(2);
            if t < 0.0 {
                let (_, fnew) = line_minimize(&mut tracked, &mut x, &new_dir, fx, opts.x_tol)?;
                fx = fnew;
                dirs[ibig] = dirs[n - 1].clone();
                dirs[n - 1] = new_dir;
            }
        }
    }
    Ok(Minimum {
        x: tracked.best_x,
        f: tracked.best_f,
        iterations,
        evaluations: tracked.evaluations,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::{single_qubit_optimal_angle, single_qubit_quality};
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_bowl() {
        let m = powell_minimize(
            |x: &[f64]| x.iter().map(|v| (v - 1.0).powi(2)).sum(),
            &[0.0; 4],
            &PowellOptions::default(),
        )
        .unwrap();
        for v in &m.x {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = powell_minimize(rosen, &[-1.2, 1.0], &PowellOptions::default()).unwrap();
        assert!(m.f < 1e-8, "{m:?}");
        assert_abs_diff_eq!(m.x[0], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn coupled_quadratic_uses_conjugate_directions() {
        let f = |x: &[f64]| {
            let (a, b, c) = (x[0] - 2.0, x[1] + 1.0, x[2] - 0.5);
            a * a + 3.0 * b * b + 2.0 * c * c + 1.5 * a * b - 0.8 * b * c
        };
        let m = powell_minimize(f, &[0.0; 3], &PowellOptions::default()).unwrap();
        assert_abs_diff_eq!(m.x[0], 2.0, epsilon = 1e-5);
        assert_abs_diff_eq!(m.x[1], -1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(m.x[2], 0.5, epsilon = 1e-5);
    }

    #[test]
    fn single_qubit_angle() {
        let r = 0.1;
        let m = powell_minimize(
            |x: &[f64]| -single_qubit_quality(x[0], r),
            &[0.5],
            &PowellOptions::default(),
        )
        .unwrap();
        // The objective is even in θ.
        assert_abs_diff_eq!(m.x[0].abs(), single_qubit_optimal_angle(r), epsilon = 1e-6);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| (3.0 * x[0]).sin() + (2.0 * x[1]).cos() + 0.01 * x[0] * x[0];
        let x0 = [0.3, -0.2];
        let m = powell_minimize(f, &x0, &PowellOptions::default()).unwrap();
        assert!(m.f <= f(&x0));
        assert_eq!(m.f, f(&m.x));
        assert!(m.trajectory.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn nan_aborts() {
        let f = |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { (x[0] - 2.0).powi(2) };
        assert!(matches!(
            powell_minimize(f, &[0.0], &PowellOptions::default()),
            Err(Error::NonFiniteObjective { .. })
        ));
        assert!(powell_minimize(|_: &[f64]| f64::INFINITY, &[0.0], &PowellOptions::default()).is_err());
    }

    #[test]
    fn infinite_regions_are_avoided() {
        let f = |x: &[f64]| {
            if x[0] < -1.0 {
                f64::INFINITY
            } else {
                (x[0] + 0.9).powi(2)
            }
        };
        let m = powell_minimize(f, &[3.0], &PowellOptions::default()).unwrap();
        assert_abs_diff_eq!(m.x[0], -0.9, epsilon = 1e-6);
    }
}
