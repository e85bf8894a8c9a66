//! BFGS with Armijo backtracking for smooth unconstrained problems.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the gradient norm falls below this.
    pub gtol: f64,
    /// Stop after two consecutive iterations improving the cost by less.
    pub ftol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            gtol: 1e-8,
            ftol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimises `f`, which returns the value and gradient at a point.
pub fn bfgs(
    mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    opts: &BfgsOptions,
) -> Minimum {
    let n = x0.len();
    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    let mut h = vec![0.0; n * n];
    identity(&mut h);
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut small_steps = 0;
    let mut fresh = true;
    let mut scaled = false;

    for iter in 0..opts.max_iter {
        let gn = norm(&g);
        if gn < opts.gtol || !fx.is_finite() {
            return Minimum {
                x,
                f: fx,
                grad_norm: gn,
                iterations: iter,
                converged: fx.is_finite(),
            };
        }
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            identity(&mut h);
            d = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
            fresh = true;
        }
        // first step along the raw gradient gets a unit-length trial
        let mut step = if fresh && !scaled { 1.0 / gn.max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let (fxn, gnew) = f(&xn);
            if fxn.is_finite() && fxn <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fxn, gnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fxn, gnew)) = accepted else {
            if fresh {
                // no descent possible along the gradient: numerical minimum
                return Minimum {
                    x,
                    f: fx,
                    grad_norm: gn,
                    iterations: iter,
                    converged: true,
                };
            }
            identity(&mut h);
            fresh = true;
            continue;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if fresh {
                // Shanno-Phua scaling of the initial inverse Hessian
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
                scaled = true;
            }
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh = false;
        }

        let improvement = fx - fxn;
        x = xn;
        fx = fxn;
        g = gnew;
        if improvement.abs() < opts.ftol {
            small_steps += 1;
            if small_steps >= 2 {
                return Minimum {
                    grad_norm: norm(&g),
                    x,
                    f: fx,
                    iterations: iter + 1,
                    converged: true,
                };
            }
        } else {
            small_steps = 0;
        }
    }
    Minimum {
        grad_norm: norm(&g),
        x,
        f: fx,
        iterations: opts.max_iter,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_rosenbrock() {
        let rosen = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (f, g)
        };
        let m = bfgs(rosen, &[-1.2, 1.0], &BfgsOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn quadratic_in_few_steps() {
        let q = |x: &[f64]| {
            let f = 0.5 * (x[0] * x[0] + 10.0 * x[1] * x[1] + 100.0 * x[2] * x[2]);
            (f, vec![x[0], 10.0 * x[1], 100.0 * x[2]])
        };
        let m = bfgs(q, &[1.0, 1.0, 1.0], &BfgsOptions::default());
        assert!(m.converged);
        assert!(m.f < 1e-14);
        assert!(m.iterations < 50);
    }
}
