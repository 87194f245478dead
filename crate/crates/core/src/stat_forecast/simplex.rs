//! Nelder-Mead downhill simplex minimization.

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_evaluations: usize,
    /// Converged when the spread of objective values across the simplex is
    /// below `f_tol * (1 + |f_best|)` ...
    pub f_tol: f64,
    /// ... and every vertex is within `x_tol` of the best one (max norm).
    pub x_tol: f64,
    /// Fresh restarts from the best vertex after a convergence, to escape
    /// collapsed simplices.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 20_000,
            f_tol: 1e-12,
            x_tol: 1e-8,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with an initial simplex spanned by `steps`.
/// Non-finite objective values are treated as `+inf`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], steps: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let evaluations = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let n = x0.len();
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0);
    if n == 0 {
        return SimplexResult {
            x: best_x,
            f: best_f,
            evaluations: 1,
            converged: true,
        };
    }

    let mut converged = false;
    for round in 0..=opts.restarts {
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_f)];
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += steps[i];
            let fx = eval(&x);
            simplex.push((x, fx));
        }
        converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (fb, fw) = (simplex[0].1, simplex[n].1);
            let spread_ok = (fw - fb).abs() <= opts.f_tol * (1.0 + fb.abs());
            let size_ok = simplex[1..]
                .iter()
                .all(|(x, _)| x.iter().zip(&simplex[0].0).all(|(a, b)| (a - b).abs() <= opts.x_tol));
            if spread_ok && size_ok {
                converged = true;
                break;
            }
            if evaluations.get() >= opts.max_evaluations {
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
            let worst = simplex[n].0.clone();
            let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect() };

            let xr = along(1.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(2.0);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = along(0.5);
                    let fc = eval(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-0.5);
                    let fc = eval(&xc);
                    (xc, fc)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let xs: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                        let fs = eval(&xs);
                        *vertex = (xs, fs);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = simplex[0].1 < best_f;
        let gain = best_f - simplex[0].1;
        if improved {
            best_x = simplex[0].0.clone();
            best_f = simplex[0].1;
        }
        // A restart that finds nothing new confirms the optimum.
        if !converged || (round > 0 && gain <= opts.f_tol * (1.0 + best_f.abs())) {
            break;
        }
    }
    SimplexResult {
        x: best_x,
        f: best_f,
        evaluations: evaluations.get(),
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(f, &[-1.2, 1.0], &[0.1, 0.1], &SimplexOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn quadratic_bowl_and_budget() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.5).powi(2)).sum::<f64>();
        let r = minimize(f, &[0.0; 4], &[0.1; 4], &SimplexOptions::default());
        assert!(r.x.iter().all(|v| (v - 0.5).abs() < 1e-6));
        let tight = SimplexOptions {
            max_evaluations: 10,
            ..SimplexOptions::default()
        };
        let r = minimize(f, &[0.0; 4], &[0.1; 4], &tight);
        assert!(!r.converged);
        assert!(r.f <= f(&[0.0; 4]));
    }
}
