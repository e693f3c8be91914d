//! Nelder-Mead simplex minimisation with dimension-adaptive coefficients.

/// Stopping rules for one simplex run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop once `f_max - f_min <= f_tol_abs + f_tol_rel |f_min|`...
    pub f_tol_abs: f64,
    pub f_tol_rel: f64,
    /// ...and the largest vertex distance from the best is below `x_tol`.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evals: 50_000,
            f_tol_abs: 1e-14,
            f_tol_rel: 1e-13,
            x_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimises `f` from an initial simplex `x0 + steps[i] e_i`.
pub fn minimize<F>(f: F, x0: &[f64], steps: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut vertices = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        vertices.push(v);
    }
    minimize_from(f, vertices, opts)
}

/// Minimises `f` from an explicit set of `n + 1` vertices.
pub fn minimize_from<F>(f: F, mut vertices: Vec<Vec<f64>>, opts: &SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = vertices[0].len();
    assert_eq!(vertices.len(), n + 1, "simplex needs n + 1 vertices");
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut values: Vec<f64> = vertices.iter().map(|v| eval(v)).collect();
    let mut evals = n + 1;
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();

    while evals < opts.max_evals {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);

        let spread = values[worst] - values[best];
        let size = vertices
            .iter()
            .map(|v| v.iter().zip(&vertices[best]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol_abs + opts.f_tol_rel * values[best].abs() && size <= opts.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for &k in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&vertices[k]) {
                *c += x / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&vertices[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        evals += 1;
        if fr < values[best] {
            let xe = along(gamma);
            let fe = eval(&xe);
            evals += 1;
            if fe < fr {
                vertices[worst] = xe;
                values[worst] = fe;
            } else {
                vertices[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            vertices[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[worst] {
            let xc = along(alpha * rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < values[worst].min(fr) {
            vertices[worst] = xc;
            values[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let anchor = vertices[best].clone();
        for k in 0..=n {
            if k == best {
                continue;
            }
            for (x, a) in vertices[k].iter_mut().zip(&anchor) {
                *x = a + sigma * (*x - a);
            }
            values[k] = eval(&vertices[k]);
        }
        evals += n;
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    SimplexResult {
        x: vertices[best].clone(),
        f: values[best],
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * (v - 1.0).powi(2)).sum();
        let r = minimize(f, &[0.0; 6], &[0.5; 6], &SimplexOptions::default());
        assert!(r.converged);
        for v in &r.x {
            assert!((v - 1.0).abs() < 1e-8, "{:?}", r.x);
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = minimize(f, &[-1.2, 1.0], &[0.1, 0.1], &SimplexOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r);
    }

    #[test]
    fn eval_budget_respected() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum();
        let opts = SimplexOptions {
            max_evals: 30,
            ..SimplexOptions::default()
        };
        let r = minimize(f, &[3.0; 4], &[0.1; 4], &opts);
        assert!(!r.converged);
        assert!(r.evals < 30 + 5);
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) };
        let r = minimize(f, &[0.1], &[0.2], &SimplexOptions::default());
        assert!((r.x[0] - 0.5).abs() < 1e-6);
    }
}
