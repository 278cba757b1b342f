//! Levenberg–Marquardt least squares for small parameter vectors.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Stopping rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    /// Iteration cap.
    pub max_iter: usize,
    /// Relative decrease of the cost below which the fit stops.
    pub ftol: f64,
    /// Relative step size below which the fit stops.
    pub xtol: f64,
    /// Gradient infinity-norm below which the fit stops.
    pub gtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iter: 500, ftol: 1e-15, xtol: 1e-14, gtol: 1e-300 }
    }
}

/// Result of [`levenberg_marquardt`].
#[derive(Clone, Debug, PartialEq)]
pub struct LmFit {
    /// Best parameters.
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub ssr: f64,
    /// Number of accepted steps.
    pub iterations: usize,
    /// A stopping rule fired before `max_iter`.
    pub converged: bool,
    /// Row-major `n × n` covariance `s² (JᵀJ)⁻¹` with `s² = SSR/(m − n)`,
    /// or `None` when `JᵀJ` is singular or `m ≤ n`.
    pub covariance: Option<Vec<f64>>,
}

impl LmFit {
    /// `√SSR`.
    pub fn residual_norm(&self) -> f64 {
        self.ssr.sqrt()
    }

    /// Standard error of parameter `i` (infinite when not identifiable).
    pub fn std_error(&self, i: usize) -> f64 {
        let n = self.params.len();
        self.covariance.as_ref().map_or(f64::INFINITY, |c| c[i * n + i].max(0.0).sqrt())
    }
}

/// Minimizes `Σ r_k(p)²`.
///
/// `model(p, r, jac)` fills the `m` residuals and, when `jac` is given, the
/// row-major `m × n` Jacobian `∂r_k/∂p_i`.
pub fn levenberg_marquardt<F>(mut model: F, p0: &[f64], m: usize, opts: LmOptions) -> LmFit
where
    F: FnMut(&[f64], &mut [f64], Option<&mut [f64]>),
{
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    let mut jac = vec![0.0; m * n];
    model(&p, &mut r, Some(&mut jac));
    let mut cost = sumsq(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut r_new = vec![0.0; m];
    'outer: while iterations < opts.max_iter {
        if !cost.is_finite() {
            break;
        }
        let (a, g) = normal_equations(&jac, &r, m, n);
        if g.iter().fold(0.0f64, |s, x| s.max(x.abs())) <= opts.gtol {
            converged = true;
            break;
        }
        let dmax = (0..n).map(|i| a[i * n + i]).fold(0.0f64, f64::max);
        loop {
            let mut damped = a.clone();
            for i in 0..n {
                damped[i * n + i] += lambda * a[i * n + i].max(1e-12 * dmax).max(f64::MIN_POSITIVE);
            }
            let neg_g: Vec<f64> = g.iter().map(|x| -x).collect();
            let step = solve(&damped, &neg_g, n);
            if let Some(delta) = step {
                let trial: Vec<f64> = p.iter().zip(&delta).map(|(a, b)| a + b).collect();
                model(&trial, &mut r_new, None);
                let c_new = sumsq(&r_new);
                if c_new.is_finite() && c_new < cost {
                    let small_step = delta.iter().zip(&p).all(|(d, x)| d.abs() <= opts.xtol * (x.abs() + opts.xtol));
                    let small_gain = cost - c_new <= opts.ftol * cost;
                    p = trial;
                    cost = c_new;
                    model(&p, &mut r, Some(&mut jac));
                    iterations += 1;
                    lambda = (lambda / 3.0).max(1e-15);
                    if small_step || small_gain {
                        converged = true;
                        break 'outer;
                    }
                    continue 'outer;
                }
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                converged = true;
                break 'outer;
            }
        }
    }
    let (a, _) = normal_equations(&jac, &r, m, n);
    let covariance = if m > n {
        invert(&a, n).map(|inv| {
            let s2 = cost / (m - n) as f64;
            inv.into_iter().map(|x| x * s2).collect()
        })
    } else {
        None
    };
    LmFit { params: p, ssr: cost, iterations, converged, covariance }
}

fn sumsq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn normal_equations(jac: &[f64], r: &[f64], m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; n * n];
    let mut g = vec![0.0; n];
    for k in 0..m {
        let row = &jac[k * n..(k + 1) * n];
        for i in 0..n {
            g[i] += row[i] * r[k];
            for j in 0..n {
                a[i * n + j] += row[i] * row[j];
            }
        }
    }
    (a, g)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub(crate) fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col].abs() <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let col = solve(a, &e, n)?;
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_decay() {
        let ts: Vec<f64> = (0..20).map(|k| k as f64 * 0.25).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.5 * (-0.7 * t).exp()).collect();
        let fit = levenberg_marquardt(
            |p, r, mut jac| {
                for (k, (&t, &y)) in ts.iter().zip(&ys).enumerate() {
                    let e = (-p[1] * t).exp();
                    r[k] = p[0] * e - y;
                    if let Some(j) = jac.as_deref_mut() {
                        j[2 * k] = e;
                        j[2 * k + 1] = -p[0] * t * e;
                    }
                }
            },
            &[1.0, 0.1],
            ts.len(),
            LmOptions::default(),
        );
        assert!(fit.converged);
        assert!((fit.params[0] - 2.5).abs() < 1e-9);
        assert!((fit.params[1] - 0.7).abs() < 1e-9);
        assert!(fit.ssr < 1e-20);
    }

    #[test]
    fn solve_small_system() {
        let x = solve(&[2.0, 1.0, 1.0, 3.0], &[3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(solve(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn covariance_matches_linear_regression() {
        // y = a + b x with known residuals; covariance from the textbook
        // formula s² (XᵀX)⁻¹.
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.1, 0.9, 2.2, 2.8, 4.1];
        let fit = levenberg_marquardt(
            |p, r, mut jac| {
                for k in 0..5 {
                    r[k] = p[0] + p[1] * xs[k] - ys[k];
                    if let Some(j) = jac.as_deref_mut() {
                        j[2 * k] = 1.0;
                        j[2 * k + 1] = xs[k];
                    }
                }
            },
            &[0.0, 0.0],
            5,
            LmOptions::default(),
        );
        let sxx: f64 = xs.iter().map(|x| (x - 2.0) * (x - 2.0)).sum();
        let s2 = fit.ssr / 3.0;
        assert!((fit.std_error(1) - (s2 / sxx).sqrt()).abs() < 1e-9);
    }
}
