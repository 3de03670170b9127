//! Quasi-Newton minimization and the parameter maps used to keep
//! constrained likelihoods in an unconstrained search space.

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Gradient max-norm fell below the tolerance.
    GradientTolerance,
    /// No further decrease is representable in floating point and the
    /// gradient is already small.
    PrecisionLimit,
    MaxIterations,
    LineSearchFailed,
    NonFiniteStart,
}

impl Status {
    pub fn converged(self) -> bool {
        matches!(self, Status::GradientTolerance | Status::PrecisionLimit)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::GradientTolerance => "converged (gradient tolerance)",
            Status::PrecisionLimit => "converged (precision limit)",
            Status::MaxIterations => "maximum iterations reached",
            Status::LineSearchFailed => "line search failed",
            Status::NonFiniteStart => "objective not finite at start",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Convergence threshold on the gradient max-norm.
    pub grad_tol: f64,
    /// Gradient max-norm accepted when progress stalls at machine precision.
    pub stall_grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            stall_grad_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_max: f64,
    pub iterations: usize,
    pub status: Status,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// BFGS with an Armijo backtracking line search.
///
/// `fg` returns the objective and its gradient. A non-finite objective marks
/// an infeasible point and makes the line search shrink the step.
pub fn bfgs<F>(mut fg: F, x0: &[f64], opts: &BfgsOptions) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Minimum {
            x,
            f,
            grad_max: f64::INFINITY,
            iterations: 0,
            status: Status::NonFiniteStart,
        };
    }
    let identity = |n: usize| -> Vec<f64> {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
        h
    };
    let mut h = identity(n);
    let mut fresh = true;
    let mut status = Status::MaxIterations;
    let mut iter = 0;

    while iter < opts.max_iter {
        let gmax = max_abs(&g);
        if gmax < opts.grad_tol {
            status = Status::GradientTolerance;
            break;
        }
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 || !slope.is_finite() {
            h = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let mut step = if fresh { (1.0 / max_abs(&d)).min(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..80 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let (fnew, gnew) = fg(&xn);
            if fnew.is_finite()
                && gnew.iter().all(|v| v.is_finite())
                && fnew <= f + 1e-4 * step * slope
            {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        iter += 1;

        let Some((xn, fnew, gnew)) = accepted else {
            if !fresh {
                h = identity(n);
                fresh = true;
                continue;
            }
            status = if gmax < opts.stall_grad_tol {
                Status::PrecisionLimit
            } else {
                Status::LineSearchFailed
            };
            break;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let no_progress = (f - fnew).abs() <= 1e-15 * f.abs().max(1.0);
        x = xn;
        f = fnew;
        g = gnew;

        if no_progress && max_abs(&g) < opts.stall_grad_tol {
            status = if max_abs(&g) < opts.grad_tol {
                Status::GradientTolerance
            } else {
                Status::PrecisionLimit
            };
            break;
        }

        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
                fresh = false;
            }
            // H+ = (I - rho s y') H (I - rho y s') + rho s s'
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
    if status == Status::MaxIterations && max_abs(&g) < opts.grad_tol {
        status = Status::GradientTolerance;
    }
    Minimum {
        grad_max: max_abs(&g),
        x,
        f,
        iterations: iter,
        status,
    }
}

/// Central-difference gradient with a relative step.
pub fn numerical_gradient<F>(f: &mut F, x: &[f64]) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-5 * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Hessian by central differences of an analytic gradient, symmetrized.
pub fn hessian_from_gradient<G>(grad: &mut G, x: &[f64], rel_step: f64) -> Vec<Vec<f64>>
where
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut hess = vec![vec![0.0; n]; n];
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = rel_step * x[j].abs().max(1e-3);
        xp[j] = x[j] + h;
        let gp = grad(&xp);
        xp[j] = x[j] - h;
        let gm = grad(&xp);
        xp[j] = x[j];
        for i in 0..n {
            hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (hess[i][j] + hess[j][i]);
            hess[i][j] = m;
            hess[j][i] = m;
        }
    }
    hess
}

/// Maps unconstrained reals onto the open simplex `{c_j > 0, sum c_j < 1}`
/// with `c_j = exp(v_j) / (1 + sum_k exp(v_k))`.
pub fn simplex_from_raw(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(0.0_f64, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let denom = (-m).exp() + e.iter().sum::<f64>();
    e.iter().map(|x| x / denom).collect()
}

/// Inverse of [`simplex_from_raw`]. Components are clamped into the open simplex.
pub fn raw_from_simplex(c: &[f64]) -> Vec<f64> {
    let c: Vec<f64> = c.iter().map(|x| x.max(1e-12)).collect();
    let total: f64 = c.iter().sum();
    let slack = (1.0 - total).max(1e-12);
    let scale = if total > 1.0 - 1e-12 { (1.0 - 1e-12) / total } else { 1.0 };
    c.iter().map(|x| (x * scale / slack).ln()).collect()
}

/// `J[j][k] = d c_j / d v_k = c_j (delta_jk - c_k)`.
pub fn simplex_jacobian(c: &[f64]) -> Vec<Vec<f64>> {
    let n = c.len();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|k| c[j] * (if j == k { 1.0 } else { 0.0 } - c[k]))
                .collect()
        })
        .collect()
}

/// Inverts a small symmetric positive-definite matrix; `None` if it is not.
pub fn invert_spd(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let inv = mat.cholesky()?.inverse();
    Some((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (f, g)
        };
        let m = bfgs(fg, &[-1.2, 1.0], &BfgsOptions::default());
        assert!(m.status.converged(), "{:?}", m.status);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn respects_infeasible_region() {
        // minimum of x - ln(x) at x = 1; infeasible for x <= 0
        let fg = |x: &[f64]| {
            if x[0] <= 0.0 {
                (f64::NAN, vec![f64::NAN])
            } else {
                (x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]])
            }
        };
        let m = bfgs(fg, &[5.0], &BfgsOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn simplex_round_trip() {
        let c = vec![0.05, 0.9, 0.04];
        let back = simplex_from_raw(&raw_from_simplex(&c));
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let big = simplex_from_raw(&[800.0, 0.0]);
        assert!(big[0] <= 1.0 && big[0] > 0.999 && big.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn simplex_jacobian_matches_differences() {
        let v = vec![0.3, -1.0, 2.0];
        let c = simplex_from_raw(&v);
        let jac = simplex_jacobian(&c);
        for k in 0..3 {
            let mut vp = v.clone();
            vp[k] += 1e-6;
            let mut vm = v.clone();
            vm[k] -= 1e-6;
            let (cp, cm) = (simplex_from_raw(&vp), simplex_from_raw(&vm));
            for j in 0..3 {
                let fd = (cp[j] - cm[j]) / 2e-6;
                assert!((fd - jac[j][k]).abs() < 1e-8);
            }
        }
    }
}
