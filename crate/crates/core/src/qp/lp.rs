use nalgebra::{DMatrix, DVector};

use crate::error::{KcmError, Result};

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub value: f64,
    pub pivots: usize,
}

/// Dense tableau in standard form `T y = rhs`, `y ≥ 0`.
struct Tableau {
    t: DMatrix<f64>,
    rhs: DVector<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        self.t.row_mut(row).scale_mut(1.0 / p);
        self.rhs[row] /= p;
        for r in 0..self.t.nrows() {
            if r == row {
                continue;
            }
            let f = self.t[(r, col)];
            if f != 0.0 {
                for c in 0..self.t.ncols() {
                    let v = self.t[(row, c)];
                    self.t[(r, c)] -= f * v;
                }
                self.rhs[r] -= f * self.rhs[row];
                self.t[(r, col)] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Maximizes `cost · y` over columns `0..allowed`, Bland's rule.
    fn run(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        let (m, _) = self.t.shape();
        let limit = 10_000 + 100 * cost.len();
        for _ in 0..limit {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - (0..m).map(|r| cost[self.basis[r]] * self.t[(r, j)]).sum::<f64>();
                reduced > PIVOT_EPS
            });
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.t[(r, col)];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[r] / a;
                    let better = match leaving {
                        None => true,
                        Some((lr, best)) => {
                            ratio < best || (ratio == best && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Err(KcmError::invalid("lp", "objective is unbounded"));
            };
            self.pivot(row, col);
        }
        Err(KcmError::NoConvergence {
            solver: "simplex",
            iterations: limit,
        })
    }
}

/// Maximizes `objectiveᵀ x` subject to `A x ≤ b` with free `x`, by the
/// two-phase simplex method on the split `x = x⁺ − x⁻`.
pub fn maximize(objective: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LpSolution> {
    let (m, n) = a.shape();
    if objective.len() != n || b.len() != m {
        return Err(KcmError::invalid("lp", "dimension mismatch"));
    }
    if a.iter().chain(b.iter()).chain(objective.iter()).any(|v| !v.is_finite()) {
        return Err(KcmError::invalid("lp", "non-finite entry"));
    }
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = negative.len();
    let cols = 2 * n + m + n_art;
    let mut t = DMatrix::zeros(m, cols);
    let mut rhs = DVector::zeros(m);
    let mut basis = vec![0; m];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * a[(i, j)];
            t[(i, n + j)] = -sign * a[(i, j)];
        }
        t[(i, 2 * n + i)] = sign;
        rhs[i] = sign * b[i];
        basis[i] = 2 * n + i;
    }
    for (k, &i) in negative.iter().enumerate() {
        let col = 2 * n + m + k;
        t[(i, col)] = 1.0;
        basis[i] = col;
    }
    let mut tab = Tableau {
        t,
        rhs,
        basis,
        pivots: 0,
    };

    let real = 2 * n + m;
    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        phase1[real..].iter_mut().for_each(|c| *c = -1.0);
        tab.run(&phase1, cols)?;
        let infeasibility: f64 = (0..m)
            .filter(|&r| tab.basis[r] >= real)
            .map(|r| tab.rhs[r])
            .sum();
        if infeasibility > 1e-9 * (1.0 + b.amax()) {
            return Err(KcmError::invalid("lp", "constraints are infeasible"));
        }
        // drive zero-level artificials out of the basis where possible
        for r in 0..m {
            if tab.basis[r] >= real {
                if let Some(col) = (0..real).find(|&j| tab.t[(r, j)].abs() > PIVOT_EPS) {
                    tab.pivot(r, col);
                }
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    for j in 0..n {
        phase2[j] = objective[j];
        phase2[n + j] = -objective[j];
    }
    tab.run(&phase2, real)?;

    let mut y = vec![0.0; cols];
    for r in 0..m {
        y[tab.basis[r]] = tab.rhs[r];
    }
    let x = DVector::from_fn(n, |j, _| y[j] - y[n + j]);
    Ok(LpSolution {
        value: objective.dot(&x),
        x,
        pivots: tab.pivots,
    })
}

/// Stacked ±identity constraint matrix and its duplicated bound vector:
/// rows `2i` and `2i + 1` encode `u_i ≤ c_i` and `−u_i ≤ c_i`.
pub fn stacked_box_constraints(c: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = c.len();
    let mut a = DMatrix::zeros(2 * n, n);
    let mut rhs = DVector::zeros(2 * n);
    for (i, &ci) in c.iter().enumerate() {
        a[(2 * i, i)] = 1.0;
        a[(2 * i + 1, i)] = -1.0;
        rhs[2 * i] = ci;
        rhs[2 * i + 1] = ci;
    }
    (a, rhs)
}

/// Optimum of `max w` subject to `A u + w·e ≤ c` and its maximizer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityCertificate {
    pub omega: f64,
    pub u: DVector<f64>,
    pub w: f64,
}

impl FeasibilityCertificate {
    /// The strict-feasibility condition ω > 0.
    pub fn condition_holds(&self) -> bool {
        self.omega > 0.0
    }
}

/// Solves the strict-feasibility LP of the box-constrained control problem.
pub fn lp_feasibility_omega(c: &[f64]) -> Result<FeasibilityCertificate> {
    if c.is_empty() {
        return Err(KcmError::invalid("bounds", "empty bound vector"));
    }
    if let Some(i) = c.iter().position(|v| !v.is_finite()) {
        return Err(KcmError::invalid(format!("bounds[{i}]"), "non-finite bound"));
    }
    let n = c.len();
    let (box_a, rhs) = stacked_box_constraints(c);
    let mut a = DMatrix::zeros(2 * n, n + 1);
    a.view_mut((0, 0), (2 * n, n)).copy_from(&box_a);
    a.column_mut(n).fill(1.0);
    let mut objective = DVector::zeros(n + 1);
    objective[n] = 1.0;
    let sol = maximize(&objective, &a, &rhs)?;
    Ok(FeasibilityCertificate {
        omega: sol.value,
        u: sol.x.rows(0, n).clone_owned(),
        w: sol.x[n],
    })
}
