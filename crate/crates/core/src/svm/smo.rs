//! Sequential minimal optimization for the box- and equality-constrained dual
//!
//! ```text
//! min_a  1/2 a' Q a + p' a    s.t.  y' a = 0,  0 <= a_t <= C
//! ```
//!
//! with `Q_ij = y_i y_j K(r_i, r_j)`, where `r_t` maps a variable to its row of
//! the kernel matrix (SVR doubles every row). Working pairs are picked by the
//! maximal-violating first index plus second-order gain for the second one.
//! Selection is a fixed scan order, so equal inputs give equal solutions.

const TAU: f64 = 1e-12;

pub struct Problem<'a> {
    /// Dense `n x n` kernel matrix, row-major.
    pub kernel: &'a [f64],
    pub n: usize,
    /// Kernel row of each variable.
    pub rows: Vec<usize>,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub c: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub alpha: Vec<f64>,
    /// Offset such that the decision function is `sum y_t a_t K(r_t, x) + bias`.
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation at exit.
    pub violation: f64,
}

impl Problem<'_> {
    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.kernel[self.rows[i] * self.n + self.rows[j]]
    }

    fn upper(&self, a: f64) -> bool {
        a >= self.c
    }

    fn lower(&self, a: f64) -> bool {
        a <= 0.0
    }

    pub fn solve(&self, tol: f64, max_iter: usize) -> Solution {
        let l = self.y.len();
        let c = self.c;
        let mut alpha = vec![0.0; l];
        let mut grad = self.p.clone();
        let qd: Vec<f64> = (0..l).map(|t| self.k(t, t)).collect();

        let mut iterations = 0;
        let mut converged = false;
        let mut violation = f64::INFINITY;

        while iterations < max_iter {
            let Some((i, j, gap)) = self.select(&alpha, &grad, &qd) else {
                converged = true;
                violation = 0.0;
                break;
            };
            violation = gap;
            if gap < tol {
                converged = true;
                break;
            }
            iterations += 1;

            let (old_i, old_j) = (alpha[i], alpha[j]);
            // curvature along the pair direction is the same in both branches
            let quad = (qd[i] + qd[j] - 2.0 * self.k(i, j)).max(TAU);
            if self.y[i] != self.y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }

            let di = alpha[i] - old_i;
            let dj = alpha[j] - old_j;
            if di == 0.0 && dj == 0.0 {
                continue;
            }
            let (yi, yj) = (self.y[i], self.y[j]);
            let (ri, rj) = (self.rows[i] * self.n, self.rows[j] * self.n);
            for t in 0..l {
                let yt = self.y[t];
                let r = self.rows[t];
                grad[t] += yt * (yi * self.kernel[ri + r] * di + yj * self.kernel[rj + r] * dj);
            }
        }

        let bias = -self.rho(&alpha, &grad);
        Solution { alpha, bias, iterations, converged, violation }
    }

    /// Returns the working pair and the current violation `m(a) - M(a)`, or
    /// `None` when no feasible direction exists.
    fn select(&self, alpha: &[f64], grad: &[f64], qd: &[f64]) -> Option<(usize, usize, f64)> {
        let l = alpha.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            let up = if self.y[t] > 0.0 { !self.upper(alpha[t]) } else { !self.lower(alpha[t]) };
            if up && -self.y[t] * grad[t] >= gmax {
                gmax = -self.y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let i = i_sel?;

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..l {
            let low = if self.y[t] > 0.0 { !self.lower(alpha[t]) } else { !self.upper(alpha[t]) };
            if !low {
                continue;
            }
            let yg = self.y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let grad_diff = gmax + yg;
            if grad_diff > 0.0 {
                let quad = (qd[i] + qd[t] - 2.0 * self.k(i, t)).max(TAU);
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        let gap = gmax + gmax2;
        match j_sel {
            Some(j) => Some((i, j, gap)),
            None if gap.is_finite() => Some((i, i, gap.min(0.0))),
            None => None,
        }
    }

    fn rho(&self, alpha: &[f64], grad: &[f64]) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut n_free = 0usize;
        let mut sum_free = 0.0;
        for t in 0..alpha.len() {
            let yg = self.y[t] * grad[t];
            if self.upper(alpha[t]) {
                if self.y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
            } else if self.lower(alpha[t]) {
                if self.y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        if n_free > 0 {
            sum_free / n_free as f64
        } else if ub.is_finite() && lb.is_finite() {
            (ub + lb) / 2.0
        } else if ub.is_finite() {
            ub
        } else if lb.is_finite() {
            lb
        } else {
            0.0
        }
    }
}
