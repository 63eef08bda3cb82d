//! Derivative-free local minimization (Nelder-Mead). Used to refine the
//! grid stage of the generic preliminary estimator and to polish the
//! subgradient iterates of the Holevo-bound solver; problem dimensions are
//! small (at most ~16).

/// Options for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NmOptions {
    pub max_iter: usize,
    /// Initial simplex step per coordinate.
    pub initial_step: f64,
    /// Stop when the function spread over the simplex falls below
    /// `f_tol * (1 + |f_best|)` and the simplex diameter below `x_tol`.
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self { max_iter: 2000, initial_step: 0.05, f_tol: 1e-13, x_tol: 1e-10 }
    }
}

/// Minimize `f` from `x0`. Deterministic: the initial simplex is built by
/// stepping each coordinate, ties resolved by index order.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &NmOptions,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        let v = f(x0);
        return (x0.to_vec(), v);
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        let step = if p[i].abs() > 1.0 { opts.initial_step * p[i].abs() } else { opts.initial_step };
        p[i] += step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..opts.max_iter {
        // Order the simplex by value (stable, so deterministic).
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let ordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let ordered_vals: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        simplex = ordered;
        values = ordered_vals;

        let spread = values[n] - values[0];
        let diam = (0..n)
            .map(|i| {
                simplex
                    .iter()
                    .map(|p| p[i])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .map(|(lo, hi)| hi - lo)
            .fold(0.0f64, f64::max);
        if spread <= opts.f_tol * (1.0 + values[0].abs()) && diam <= opts.x_tol {
            break;
        }

        // Centroid of all but the worst point.
        let mut centroid = vec![0.0; n];
        for p in simplex.iter().take(n) {
            for i in 0..n {
                centroid[i] += p[i] / n as f64;
            }
        }

        let reflect: Vec<f64> =
            (0..n).map(|i| centroid[i] + alpha * (centroid[i] - simplex[n][i])).collect();
        let f_r = f(&reflect);

        if f_r < values[0] {
            let expand: Vec<f64> =
                (0..n).map(|i| centroid[i] + gamma * (reflect[i] - centroid[i])).collect();
            let f_e = f(&expand);
            if f_e < f_r {
                simplex[n] = expand;
                values[n] = f_e;
            } else {
                simplex[n] = reflect;
                values[n] = f_r;
            }
        } else if f_r < values[n - 1] {
            simplex[n] = reflect;
            values[n] = f_r;
        } else {
            let contract: Vec<f64> =
                (0..n).map(|i| centroid[i] + rho * (simplex[n][i] - centroid[i])).collect();
            let f_c = f(&contract);
            if f_c < values[n] {
                simplex[n] = contract;
                values[n] = f_c;
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].clone();
                for j in 1..=n {
                    for i in 0..n {
                        simplex[j][i] = best[i] + sigma * (simplex[j][i] - best[i]);
                    }
                    values[j] = f(&simplex[j]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}
