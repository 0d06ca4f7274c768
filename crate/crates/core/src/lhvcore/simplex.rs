//! Dense revised simplex, phase 1 only, with Bland's rule.
//!
//! Solves `min sum(a)` subject to `A x + a = b`, `x, a >= 0` where columns of
//! `A` are produced on demand. Rows with negative right-hand side are negated
//! first so that the all-artificial basis is feasible.

const PRICE_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-10;
const REFACTOR_EVERY: usize = 50;

pub(crate) struct PhaseOne {
    /// Optimal sum of artificial variables.
    pub objective: f64,
    /// Structural basic variables and their values.
    pub primal: Vec<(usize, f64)>,
    /// Simplex multipliers for the original (un-negated) rows.
    pub dual: Vec<f64>,
}

pub(crate) fn phase_one<F>(b: &[f64], ncols: usize, column: F) -> PhaseOne
where
    F: Fn(usize, &mut [f64]),
{
    let m = b.len();
    let flip: Vec<f64> = b.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect();
    let rhs: Vec<f64> = b.iter().zip(&flip).map(|(x, f)| x * f).collect();

    let col_of = |j: usize, out: &mut [f64]| {
        if j < ncols {
            column(j, out);
            for (o, f) in out.iter_mut().zip(&flip) {
                *o *= f;
            }
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[j - ncols] = 1.0;
        }
    };
    let cost = |j: usize| if j >= ncols { 1.0 } else { 0.0 };

    let mut basis: Vec<usize> = (0..m).map(|i| ncols + i).collect();
    let mut is_basic = vec![false; ncols];
    let mut binv = identity(m);
    let mut x = rhs.clone();
    let mut y = vec![0.0; m];
    let mut col = vec![0.0; m];
    let mut u = vec![0.0; m];
    let mut pivots = 0usize;

    loop {
        // y = c_B^T B^-1
        for (jj, yj) in y.iter_mut().enumerate() {
            *yj = (0..m).map(|i| cost(basis[i]) * binv[i * m + jj]).sum();
        }

        // Bland: lowest-index column with negative reduced cost.
        let mut entering = None;
        for j in 0..ncols {
            if is_basic[j] {
                continue;
            }
            col_of(j, &mut col);
            let d = -dot(&y, &col);
            if d < -PRICE_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else { break };

        col_of(j, &mut col);
        for i in 0..m {
            u[i] = (0..m).map(|k| binv[i * m + k] * col[k]).sum();
        }

        // Ratio test; ties go to the lowest basic variable index.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if u[i] > PIVOT_TOL {
                let ratio = x[i] / u[i];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - 1e-14 || (ratio <= best + 1e-14 && basis[i] < basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        // Phase 1 is bounded below, so an unbounded ray only appears through
        // round-off; stop with the current basis.
        let Some((r, theta)) = leave else { break };

        for i in 0..m {
            if i != r {
                x[i] -= theta * u[i];
                if x[i] < 0.0 && x[i] > -1e-13 {
                    x[i] = 0.0;
                }
            }
        }
        x[r] = theta;
        let pivot = u[r];
        for k in 0..m {
            binv[r * m + k] /= pivot;
        }
        for i in 0..m {
            if i != r && u[i] != 0.0 {
                let f = u[i];
                for k in 0..m {
                    binv[i * m + k] -= f * binv[r * m + k];
                }
            }
        }
        if basis[r] < ncols {
            is_basic[basis[r]] = false;
        }
        basis[r] = j;
        is_basic[j] = true;
        pivots += 1;

        if pivots.is_multiple_of(REFACTOR_EVERY) {
            let mut bmat = vec![0.0; m * m];
            for (c, &var) in basis.iter().enumerate() {
                col_of(var, &mut col);
                for i in 0..m {
                    bmat[i * m + c] = col[i];
                }
            }
            if let Some(inv) = invert(&bmat, m) {
                binv = inv;
                for i in 0..m {
                    x[i] = (0..m).map(|k| binv[i * m + k] * rhs[k]).sum::<f64>().max(0.0);
                }
            }
        }
    }

    let objective = basis
        .iter()
        .zip(&x)
        .filter(|(&v, _)| v >= ncols)
        .map(|(_, &xi)| xi)
        .sum();
    let primal = basis
        .iter()
        .zip(&x)
        .filter(|(&v, _)| v < ncols)
        .map(|(&v, &xi)| (v, xi.max(0.0)))
        .collect();
    let dual = y.iter().zip(&flip).map(|(y, f)| y * f).collect();
    PhaseOne {
        objective,
        primal,
        dual,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity(m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    v
}

/// Gauss-Jordan with partial pivoting.
fn invert(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut a = a.to_vec();
    let mut inv = identity(m);
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i * m + c].abs().total_cmp(&a[j * m + c].abs()))?;
        if a[p * m + c].abs() < 1e-14 {
            return None;
        }
        if p != c {
            for k in 0..m {
                a.swap(p * m + k, c * m + k);
                inv.swap(p * m + k, c * m + k);
            }
        }
        let d = a[c * m + c];
        for k in 0..m {
            a[c * m + k] /= d;
            inv[c * m + k] /= d;
        }
        for i in 0..m {
            if i != c {
                let f = a[i * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        a[i * m + k] -= f * a[c * m + k];
                        inv[i * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
    }
    Some(inv)
}
