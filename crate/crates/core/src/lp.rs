//! Dense tableau simplex for covering/packing LP pairs with 0/1 constraint rows.
//!
//! The packing side `max Σ y_i  s.t.  Σ_{i∈R_j} y_i ≤ b_j, y ≥ 0` (with `b ≥ 0`)
//! starts from the all-slack basis, so no phase one is needed. The covering
//! side's optimal weights are read off the reduced costs of the slacks.
//! Pivoting follows Bland's rule, which makes every solve deterministic.

const PIVOT_EPS: f64 = 1e-12;

/// One packing row: coefficient 1 on the variables in `support`, right-hand side `rhs`.
#[derive(Debug, Clone, Copy)]
pub struct PackingRow {
    pub support: u32,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct PackingSolution {
    /// Optimal packing variables.
    pub y: Vec<f64>,
    /// Optimal covering weights, one per input row.
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Solves `max Σ y  s.t.  rows, y ≥ 0` over `vars` variables.
///
/// Every variable must appear alone in some row (or otherwise be bounded);
/// right-hand sides must be nonnegative.
pub fn solve_packing(vars: usize, rows: &[PackingRow]) -> PackingSolution {
    let m = rows.len();
    // Variable ids: 0..vars are y, vars..vars+m are slacks.
    let mut basis: Vec<usize> = (vars..vars + m).collect();
    let mut nonbasic: Vec<usize> = (0..vars).collect();
    // basic_r = rhs_r - Σ_c tab[r][c] · nonbasic_c
    let mut tab: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            (0..vars)
                .map(|i| f64::from((row.support >> i & 1) as u8))
                .collect()
        })
        .collect();
    let mut rhs: Vec<f64> = rows.iter().map(|r| r.rhs.max(0.0)).collect();
    // z = z0 + Σ_c obj[c] · nonbasic_c
    let mut obj = vec![1.0; vars];
    let mut z0 = 0.0;
    let mut pivots = 0;

    loop {
        let entering = (0..vars)
            .filter(|&c| obj[c] > PIVOT_EPS)
            .min_by_key(|&c| nonbasic[c]);
        let Some(col) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = tab[r][col];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = rhs[r] / a;
            leave = match leave {
                None => Some((r, ratio)),
                Some((best, best_ratio)) => {
                    if ratio < best_ratio - PIVOT_EPS
                        || (ratio <= best_ratio + PIVOT_EPS && basis[r] < basis[best])
                    {
                        Some((r, ratio))
                    } else {
                        Some((best, best_ratio))
                    }
                }
            };
        }
        let (row, _) = leave.expect("packing LP is bounded");
        pivot(&mut tab, &mut rhs, &mut obj, &mut z0, row, col);
        std::mem::swap(&mut basis[row], &mut nonbasic[col]);
        pivots += 1;
    }

    let mut y = vec![0.0; vars];
    for (r, &b) in basis.iter().enumerate() {
        if b < vars {
            y[b] = rhs[r];
        }
    }
    let mut alpha = vec![0.0; m];
    for (c, &nb) in nonbasic.iter().enumerate() {
        if nb >= vars {
            alpha[nb - vars] = (-obj[c]).max(0.0);
        }
    }
    PackingSolution {
        y,
        alpha,
        objective: z0,
        pivots,
    }
}

fn pivot(
    tab: &mut [Vec<f64>],
    rhs: &mut [f64],
    obj: &mut [f64],
    z0: &mut f64,
    row: usize,
    col: usize,
) {
    let a = tab[row][col];
    // Solve the pivot row for the entering variable.
    let pivot_row: Vec<f64> = tab[row]
        .iter()
        .enumerate()
        .map(|(c, &x)| if c == col { 1.0 / a } else { x / a })
        .collect();
    let pivot_rhs = rhs[row] / a;
    for r in 0..tab.len() {
        if r == row {
            continue;
        }
        let factor = tab[r][col];
        if factor == 0.0 {
            continue;
        }
        for (c, x) in tab[r].iter_mut().enumerate() {
            if c == col {
                *x = -factor * pivot_row[c];
            } else {
                *x -= factor * pivot_row[c];
            }
        }
        rhs[r] -= factor * pivot_rhs;
        if rhs[r] < 0.0 && rhs[r] > -1e-11 {
            rhs[r] = 0.0;
        }
    }
    let factor = obj[col];
    for (c, x) in obj.iter_mut().enumerate() {
        if c == col {
            *x = -factor * pivot_row[c];
        } else {
            *x -= factor * pivot_row[c];
        }
    }
    *z0 += factor * pivot_rhs;
    tab[row] = pivot_row;
    rhs[row] = pivot_rhs;
}
