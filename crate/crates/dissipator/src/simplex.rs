//! Derivative-free Nelder-Mead simplex minimizer.
//!
//! Used by the pencil search; kept generic over the objective so it can be
//! tested on standard functions.

/// Options for a single Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Edge length of the initial axis-aligned simplex.
    pub initial_scale: f64,
    /// Budget of objective evaluations.
    pub max_evals: usize,
    /// Stop when the simplex function spread falls below
    /// `ftol * (1 + |f_best|)`.
    pub ftol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_scale: 0.25,
            max_evals: 4000,
            ftol: 1e-10,
        }
    }
}

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0` with the standard reflection, expansion,
/// contraction and shrink coefficients (1, 2, 1/2, 1/2).
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n > 0, "empty parameter vector");
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_scale;
        simplex.push(x);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    let mut converged = false;

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| {
            fvals[a]
                .partial_cmp(&fvals[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fvals = order.iter().map(|&i| fvals[i]).collect();

        if (fvals[n] - fvals[0]).abs() <= opts.ftol * (1.0 + fvals[0].abs()) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for x in &simplex[..n] {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let combine = |a: &[f64], coeff: f64, b: &[f64]| -> Vec<f64> {
            a.iter()
                .zip(b)
                .map(|(&ai, &bi)| ai + coeff * (ai - bi))
                .collect()
        };

        let reflected = combine(&centroid, alpha, &simplex[n]);
        let f_reflected = f(&reflected);
        evals += 1;

        if f_reflected < fvals[0] {
            let expanded: Vec<f64> = centroid
                .iter()
                .zip(&reflected)
                .map(|(&c, &r)| c + gamma * (r - c))
                .collect();
            let f_expanded = f(&expanded);
            evals += 1;
            if f_expanded < f_reflected {
                simplex[n] = expanded;
                fvals[n] = f_expanded;
            } else {
                simplex[n] = reflected;
                fvals[n] = f_reflected;
            }
        } else if f_reflected < fvals[n - 1] {
            simplex[n] = reflected;
            fvals[n] = f_reflected;
        } else {
            let contracted: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(&c, &w)| c + rho * (w - c))
                .collect();
            let f_contracted = f(&contracted);
            evals += 1;
            if f_contracted < fvals[n] {
                simplex[n] = contracted;
                fvals[n] = f_contracted;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(&b, &x)| b + sigma * (x - b))
                        .collect();
                    simplex[i] = shrunk;
                    fvals[i] = f(&simplex[i]);
                    evals += 1;
                }
            }
        }
    }

    let best = fvals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);
    SimplexResult {
        x: simplex[best].clone(),
        f: fvals[best],
        evals,
        converged,
    }
}
