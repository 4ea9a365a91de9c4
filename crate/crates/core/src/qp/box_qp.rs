use nalgebra::{DMatrix, DVector};

use crate::error::{KcmError, Result};

/// Symmetry tolerance on the weight matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Dense box-constrained QP: minimize ½ uᵀQu + gᵀu subject to |u_i| ≤ c_i.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxQP {
    q: DMatrix<f64>,
    g: DVector<f64>,
    c: DVector<f64>,
}

impl BoxQP {
    pub fn new(q: DMatrix<f64>, g: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        let n = g.len();
        if q.shape() != (n, n) || c.len() != n {
            return Err(KcmError::invalid(
                "qp",
                format!(
                    "dimension mismatch: Q is {}x{}, g has {n}, c has {}",
                    q.nrows(),
                    q.ncols(),
                    c.len()
                ),
            ));
        }
        if q.iter().chain(g.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(KcmError::invalid("qp", "non-finite entry"));
        }
        if (&q - q.transpose()).amax() > SYMMETRY_TOLERANCE {
            return Err(KcmError::invalid("qp.Q", "weight matrix is not symmetric"));
        }
        if let Some(i) = c.iter().position(|&ci| !(ci > 0.0)) {
            return Err(KcmError::invalid(
                format!("qp.c[{i}]"),
                format!("bounds must be positive, got {}", c[i]),
            ));
        }
        Ok(BoxQP { q, g, c })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn bounds(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn objective(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.q * u)) + self.g.dot(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundState {
    Free,
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QPSolution {
    pub u: DVector<f64>,
    pub objective: f64,
    pub active: Vec<BoundState>,
    pub iterations: usize,
}

impl QPSolution {
    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|s| **s != BoundState::Free).count()
    }
}

fn principal(q: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| q[(idx[a], idx[b])])
}

/// Primal active-set method, started from the clipped unconstrained
/// minimizer. Each iteration minimizes over the current face; a blocking
/// bound joins the working set, and a bound with a negative multiplier
/// leaves it.
pub fn solve_box_qp(problem: &BoxQP) -> Result<QPSolution> {
    let n = problem.dim();
    let (q, g, c) = (&problem.q, &problem.g, &problem.c);
    let chol = q.clone().cholesky().ok_or(KcmError::NotPositiveDefinite)?;

    let unconstrained = -chol.solve(g);
    let mut state = vec![BoundState::Free; n];
    let mut u = DVector::zeros(n);
    for i in 0..n {
        let v = unconstrained[i];
        // landing exactly on a bound counts as active
        (u[i], state[i]) = if v >= c[i] {
            (c[i], BoundState::Upper)
        } else if v <= -c[i] {
            (-c[i], BoundState::Lower)
        } else {
            (v, BoundState::Free)
        };
    }

    let scale = 1.0 + q.amax() * c.amax() + g.amax();
    let max_iterations = 50 * (n + 1);
    for iteration in 1..=max_iterations {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == BoundState::Free).collect();
        if !free.is_empty() {
            let grad = q * &u + g;
            let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| -grad[i]));
            let step = principal(q, &free)
                .cholesky()
                .ok_or(KcmError::NotPositiveDefinite)?
                .solve(&rhs);

            let mut alpha = 1.0;
            let mut blocking = None;
            for (k, &i) in free.iter().enumerate() {
                let (p, limit, side) = if step[k] > 0.0 {
                    (step[k], c[i] - u[i], BoundState::Upper)
                } else if step[k] < 0.0 {
                    (step[k], -c[i] - u[i], BoundState::Lower)
                } else {
                    continue;
                };
                let t = (limit / p).max(0.0);
                // a full step landing exactly on a bound still blocks
                if t < alpha || (t == alpha && blocking.is_none()) {
                    alpha = t;
                    blocking = Some((i, side));
                }
            }
            let mut hit = false;
            for (k, &i) in free.iter().enumerate() {
                u[i] += alpha * step[k];
                // rounding can land a full step on a bound without blocking
                if u[i] >= c[i] {
                    (u[i], state[i], hit) = (c[i], BoundState::Upper, true);
                } else if u[i] <= -c[i] {
                    (u[i], state[i], hit) = (-c[i], BoundState::Lower, true);
                }
            }
            if let Some((i, side)) = blocking {
                u[i] = if side == BoundState::Upper { c[i] } else { -c[i] };
                state[i] = side;
                continue;
            }
            if hit {
                continue;
            }
        }

        // u minimizes over the current face; check bound multipliers
        let grad = q * &u + g;
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..n {
            let lambda = match state[i] {
                BoundState::Free => continue,
                BoundState::Lower => grad[i],
                BoundState::Upper => -grad[i],
            };
            if lambda < -1e-13 * scale && worst.is_none_or(|(_, w)| lambda < w) {
                worst = Some((i, lambda));
            }
        }
        match worst {
            Some((i, _)) => state[i] = BoundState::Free,
            None => {
                return Ok(QPSolution {
                    objective: problem.objective(&u),
                    u,
                    active: state,
                    iterations: iteration,
                })
            }
        }
    }
    Err(KcmError::NoConvergence {
        solver: "box QP active-set",
        iterations: max_iterations,
    })
}
