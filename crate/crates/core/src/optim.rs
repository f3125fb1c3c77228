//! Derivative-free minimization and small nonlinear least-squares fits.
//!
//! Both optimizers here are deterministic: given identical inputs they
//! perform identical arithmetic, so every caller in this crate produces
//! byte-identical results run to run. The Nelder–Mead simplex polishes
//! minima found by coarse grid scans (discord measurement angles, AMID
//! phases); the Levenberg–Marquardt fitter handles the three-parameter
//! sigmoid model used for correlation-decay curves.

use crate::error::{CoreError, Result};

/// Result of a Nelder–Mead minimization.
#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    /// Best point found.
    pub x: Vec<f64>,
    /// Objective value at `x`.
    pub fx: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Whether the simplex met the objective-spread tolerance.
    pub converged: bool,
}

/// Options controlling the simplex iteration.
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Stop when the objective spread over the simplex falls below this.
    pub f_tol: f64,
    /// Stop when every vertex coordinate spread falls below this.
    pub x_tol: f64,
    /// Iteration budget.
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-12,
            x_tol: 1e-10,
            max_iter: 400,
        }
    }
}

/// Minimize `f` from `x0` with an initial simplex of per-coordinate steps
/// `steps`, using the standard reflection/expansion/contraction/shrink
/// coefficients (1, 2, ½, ½).
///
/// # Errors
///
/// Returns [`CoreError::OptimizerStagnation`] if the iteration budget is
/// exhausted while the objective spread still exceeds `1e-6` — a spread
/// below that is reported as converged-enough rather than an error, since
/// callers polish grid minima that are already near-optimal.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    options: &NelderMeadOptions,
) -> Result<NelderMeadResult> {
    let n = x0.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    assert!(n >= 1, "dimension must be positive");

    // Vertices paired with objective values.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = f(x0);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        let fv = f(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    loop {
        // Stable sort keeps tie handling deterministic.
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("objective is finite"));
        let f_spread = simplex[n].1 - simplex[0].1;
        let x_spread = (0..n)
            .map(|i| {
                let coords = simplex.iter().map(|(v, _)| v[i]);
                let max = coords.clone().fold(f64::NEG_INFINITY, f64::max);
                let min = coords.fold(f64::INFINITY, f64::min);
                max - min
            })
            .fold(0.0, f64::max);
        if f_spread <= options.f_tol && x_spread <= options.x_tol {
            return Ok(NelderMeadResult {
                x: simplex[0].0.clone(),
                fx: simplex[0].1,
                iterations,
                converged: true,
            });
        }
        if iterations >= options.max_iter {
            // A grid-polishing run that has flattened the simplex to within
            // 1e-6 is acceptable; anything looser is stagnation.
            if f_spread <= 1e-6 {
                return Ok(NelderMeadResult {
                    x: simplex[0].0.clone(),
                    fx: simplex[0].1,
                    iterations,
                    converged: false,
                });
            }
            return Err(CoreError::OptimizerStagnation(f_spread, iterations));
        }
        iterations += 1;

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (v, _) in simplex.iter().take(n) {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let at = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|i| centroid[i] + t * (centroid[i] - worst.0[i]))
                .collect()
        };

        let reflected = at(1.0);
        let f_r = f(&reflected);
        if f_r < simplex[0].1 {
            // Try to expand past the reflection.
            let expanded = at(2.0);
            let f_e = f(&expanded);
            simplex[n] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
            continue;
        }
        if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
            continue;
        }
        // Contract toward the better of the worst vertex and its reflection.
        let contracted = if f_r < worst.1 { at(0.5) } else { at(-0.5) };
        let f_c = f(&contracted);
        if f_c < worst.1.min(f_r) {
            simplex[n] = (contracted, f_c);
            continue;
        }
        // Shrink everything toward the best vertex.
        let best = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            for i in 0..n {
                entry.0[i] = best[i] + 0.5 * (entry.0[i] - best[i]);
            }
            entry.1 = f(&entry.0);
        }
    }
}

/// Fit of the three-parameter reciprocal-sigmoid model
/// y = 1 / (a + e^{b (x − c)}).
#[derive(Debug, Clone)]
pub struct SigmoidFit {
    /// Offset parameter a.
    pub a: f64,
    /// Rate parameter b.
    pub b: f64,
    /// Center parameter c.
    pub c: f64,
    /// Sum of squared residuals at the fit.
    pub residual_ss: f64,
    /// Iterations used.
    pub iterations: usize,
}

/// Evaluate the reciprocal-sigmoid model 1 / (a + e^{b (x − c)}).
pub fn sigmoid_model(a: f64, b: f64, c: f64, x: f64) -> f64 {
    1.0 / (a + (b * (x - c)).exp())
}

/// Least-squares fit of `ys ≈ 1/(a + e^{b(x − c)})` by Levenberg–Marquardt
/// with analytic Jacobian, started from (a, b, c) = `init`.
///
/// # Errors
///
/// Returns [`CoreError::InvalidParameter`] for fewer than 4 points or
/// mismatched slice lengths, and [`CoreError::OptimizerStagnation`] if the
/// step size fails to drop below tolerance within the iteration budget.
pub fn fit_reciprocal_sigmoid(xs: &[f64], ys: &[f64], init: (f64, f64, f64)) -> Result<SigmoidFit> {
    if xs.len() != ys.len() {
        return Err(CoreError::InvalidParameter(
            "x and y slices must have equal length".into(),
        ));
    }
    if xs.len() < 4 {
        return Err(CoreError::InvalidParameter(
            "need at least 4 points to fit 3 parameters".into(),
        ));
    }

    let mut p = [init.0, init.1, init.2];
    let mut lambda = 1e-3;
    const MAX_ITER: usize = 200;

    let residuals = |p: &[f64; 3]| -> Vec<f64> {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| y - sigmoid_model(p[0], p[1], p[2], x))
            .collect()
    };
    let ss = |r: &[f64]| -> f64 { r.iter().map(|v| v * v).sum() };

    let mut r = residuals(&p);
    let mut current_ss = ss(&r);

    for iteration in 1..=MAX_ITER {
        // Jacobian of the residuals r_i = y_i − g(x_i): with
        // g = 1/(a + E), E = e^{b(x−c)}:
        //   ∂r/∂a = g², ∂r/∂b = g²·E·(x−c), ∂r/∂c = −g²·E·b.
        let mut jtj = [[0.0_f64; 3]; 3];
        let mut jtr = [0.0_f64; 3];
        for (i, &x) in xs.iter().enumerate() {
            let e = (p[1] * (x - p[2])).exp();
            let g = 1.0 / (p[0] + e);
            let g2 = g * g;
            let row = [g2, g2 * e * (x - p[2]), -g2 * e * p[1]];
            for a in 0..3 {
                jtr[a] += row[a] * r[i];
                for b in 0..3 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }

        // Damped normal equations (J'J + λ diag(J'J)) δ = −J'r, solved by
        // Gaussian elimination with partial pivoting on the 3×3 system.
        let mut step = None;
        for _ in 0..40 {
            let mut a = jtj;
            for k in 0..3 {
                a[k][k] += lambda * jtj[k][k].max(1e-12);
            }
            let mut b = [-jtr[0], -jtr[1], -jtr[2]];
            if let Some(delta) = solve3(a, &mut b) {
                let candidate = [p[0] + delta[0], p[1] + delta[1], p[2] + delta[2]];
                let cr = residuals(&candidate);
                let css = ss(&cr);
                if css < current_ss {
                    step = Some((candidate, cr, css, delta));
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }

        match step {
            Some((candidate, cr, css, delta)) => {
                p = candidate;
                r = cr;
                current_ss = css;
                lambda = (lambda / 10.0).max(1e-12);
                let step_norm = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
                let p_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
                if step_norm <= 1e-12 * p_norm {
                    return Ok(SigmoidFit {
                        a: p[0],
                        b: p[1],
                        c: p[2],
                        residual_ss: current_ss,
                        iterations: iteration,
                    });
                }
            }
            None => {
                // No damping level improved the fit: already at a minimum.
                return Ok(SigmoidFit {
                    a: p[0],
                    b: p[1],
                    c: p[2],
                    residual_ss: current_ss,
                    iterations: iteration,
                });
            }
        }
    }

    Err(CoreError::OptimizerStagnation(current_ss, MAX_ITER))
}

/// Solve a 3×3 linear system in place; returns `None` for a singular matrix.
fn solve3(mut a: [[f64; 3]; 3], b: &mut [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        // Partial pivot.
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut sum = b[row];
        for k in (row + 1)..3 {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    Some(x)
}
