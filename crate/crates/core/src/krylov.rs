//! Restarted GMRES with right preconditioning for real, matrix-free operators.

#[derive(Clone, Copy, Debug)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// Final residual norm relative to `|b|`.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` starting from `x`. `apply` computes `A v`, `precond`
/// computes `M^{-1} v` for the right preconditioner `A M^{-1} (M x) = b`.
pub fn gmres<A, P>(
    mut apply: A,
    precond: P,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome
where
    A: FnMut(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return GmresOutcome { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let restart = restart.max(1);
    let mut total = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut r = vec![0.0; n];
    loop {
        apply(x, &mut w);
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        let beta = norm(&r);
        let mut rel = beta / bnorm;
        if rel <= rel_tol || total >= max_iter {
            return GmresOutcome { iterations: total, relative_residual: rel, converged: rel <= rel_tol };
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            precond(&basis[j], &mut z);
            apply(&z, &mut w);
            total += 1;
            // modified Gram-Schmidt
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            rel = g[j + 1].abs() / bnorm;
            if rel <= rel_tol || hn == 0.0 || total >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (u, vk) in update.iter_mut().zip(v) {
                *u += yi * vk;
            }
        }
        precond(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        if rel <= rel_tol || total >= max_iter {
            apply(x, &mut w);
            let true_rel = b.iter().zip(&w).map(|(bi, wi)| (bi - wi).powi(2)).sum::<f64>().sqrt() / bnorm;
            return GmresOutcome {
                iterations: total,
                relative_residual: true_rel,
                converged: true_rel <= rel_tol * 10.0,
            };
        }
    }
}
