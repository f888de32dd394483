//! Convex quadratic minimization over the capped simplex
//! `{α : 0 ≤ α_i ≤ u, Σ α_i = 1}`.
//!
//! Both SVDD's dual and the MAP objective of the Bayesian learner have this
//! form. The objective convention is `αᵀQα + qᵀα` (no factor ½).
//!
//! [`solve`] runs projected gradient with a fixed `1/L` step, where `L`
//! bounds the largest eigenvalue of `2Q`. Two additions keep desk-scale
//! problems fast without giving up monotone descent:
//!
//! - Nesterov momentum with a function-value restart. A candidate is only
//!   accepted when it does not raise the objective, so the accepted
//!   iterates are monotone.
//! - Periodic active-set polishing. Once the set of variables pinned at a
//!   bound stops changing, the equality-constrained problem on the free
//!   variables is solved directly and the result is accepted if it is
//!   feasible and no worse.
//!
//! Convergence is declared when the projected-gradient step
//! `‖α − P(α − ∇f(α)/L)‖_∞` falls to the tolerance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{largest_eigenvalue, Cholesky};
use crate::matrix::{dot, Matrix};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 50_000;

/// Slack allowed on `u·n ≥ 1` before the feasible set counts as empty.
const FEASIBILITY_SLACK: f64 = 1e-12;

/// Iterations between active-set polishing attempts.
const POLISH_INTERVAL: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    /// Symmetric quadratic term.
    pub quadratic: Matrix,
    pub linear: Vec<f64>,
    /// Per-coordinate cap `u`; values ≥ 1 leave only the simplex constraint.
    pub upper_bound: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl QpProblem {
    /// Validates and symmetrizes the input. Default tolerance and iteration
    /// cap apply; adjust the public fields afterwards if needed.
    pub fn new(mut quadratic: Matrix, linear: Vec<f64>, upper_bound: f64) -> Result<Self> {
        if !quadratic.is_square() {
            return Err(Error::DimensionMismatch {
                left: quadratic.rows(),
                right: quadratic.cols(),
            });
        }
        if quadratic.rows() != linear.len() {
            return Err(Error::DimensionMismatch {
                left: quadratic.rows(),
                right: linear.len(),
            });
        }
        if quadratic.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if !quadratic.is_finite() {
            return Err(Error::NonFinite {
                what: "quadratic term",
            });
        }
        if linear.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "linear term",
            });
        }
        check_bound(upper_bound, linear.len())?;
        quadratic.symmetrize();
        Ok(Self {
            quadratic,
            linear,
            upper_bound,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// Cap actually in force: `min(u, 1)`.
    pub fn effective_bound(&self) -> f64 {
        self.upper_bound.min(1.0)
    }

    pub fn objective(&self, alpha: &[f64]) -> f64 {
        self.quadratic.quadratic_form(alpha) + dot(&self.linear, alpha)
    }

    /// `2Qα + q`.
    pub fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        let mut g = self.quadratic.mul_vec(alpha);
        for (gi, qi) in g.iter_mut().zip(&self.linear) {
            *gi = 2.0 * *gi + qi;
        }
        g
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: "must be positive",
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iterations",
                reason: "must be positive",
            });
        }
        if !self.quadratic.is_finite() || self.linear.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "problem data",
            });
        }
        if self.quadratic.rows() != self.dim() || !self.quadratic.is_square() {
            return Err(Error::DimensionMismatch {
                left: self.quadratic.rows(),
                right: self.dim(),
            });
        }
        check_bound(self.upper_bound, self.dim())
    }
}

fn check_bound(upper_bound: f64, n: usize) -> Result<()> {
    if !(upper_bound > 0.0) || upper_bound.is_nan() {
        return Err(Error::InvalidParameter {
            name: "upper_bound",
            reason: "must be positive",
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if upper_bound.min(1.0) * (n as f64) < 1.0 - FEASIBILITY_SLACK {
        return Err(Error::Infeasible { upper_bound, n });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    /// `‖α − P(α − ∇f(α)/L)‖_∞` at the returned point.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Euclidean projection onto the capped simplex.
///
/// Finds the shift `τ` with `Σ clip(v_i − τ, 0, u) = 1` by locating the
/// bracketing pair of sorted breakpoints and solving the linear piece
/// exactly. Points that are already feasible are returned unchanged.
pub fn project_capped_simplex(v: &[f64], upper_bound: f64) -> Result<Vec<f64>> {
    check_bound(upper_bound, v.len())?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "vector" });
    }
    Ok(project_unchecked(v, upper_bound.min(1.0)))
}

fn project_unchecked(v: &[f64], u: f64) -> Vec<f64> {
    let n = v.len();
    if (u * n as f64) <= 1.0 + FEASIBILITY_SLACK && (u * n as f64) >= 1.0 - FEASIBILITY_SLACK {
        return vec![1.0 / n as f64; n];
    }
    let sum: f64 = v.iter().sum();
    let tol = 4.0 * f64::EPSILON * n as f64;
    if v.iter().all(|&x| (0.0..=u).contains(&x)) && libm::fabs(sum - 1.0) <= tol {
        return v.to_vec();
    }

    let mass = |tau: f64| -> f64 { v.iter().map(|&x| (x - tau).clamp(0.0, u)).sum() };

    let mut breaks: Vec<f64> = Vec::with_capacity(2 * n);
    breaks.extend(v.iter().copied());
    breaks.extend(v.iter().map(|&x| x - u));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // mass() is non-increasing in τ: n·u ≥ 1 at the first breakpoint and 0
    // at the last. Find the last breakpoint with mass ≥ 1.
    let (mut lo, mut hi) = (0usize, breaks.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if mass(breaks[mid]) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (breaks[lo], breaks[hi]);
    let mid = 0.5 * (a + b);

    // On (a, b) each coordinate is either pinned or free; solve exactly.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut capped = 0usize;
    for &x in v {
        if x - u >= mid {
            capped += 1;
        } else if x > mid {
            free_sum += x;
            free_count += 1;
        }
    }
    let tau = if free_count == 0 {
        mid
    } else {
        (free_sum + capped as f64 * u - 1.0) / free_count as f64
    };
    v.iter().map(|&x| (x - tau).clamp(0.0, u)).collect()
}

/// Solves the problem from `alpha0`, or from the uniform point `1/n`.
pub fn solve(problem: &QpProblem, alpha0: Option<&[f64]>) -> Result<QpSolution> {
    solve_observed(problem, alpha0, |_, _| {})
}

/// As [`solve`], calling `observe(iteration, objective)` after every
/// iteration with the objective of the accepted iterate.
pub fn solve_observed<F>(problem: &QpProblem, alpha0: Option<&[f64]>, mut observe: F) -> Result<QpSolution>
where
    F: FnMut(usize, f64),
{
    problem.validate()?;
    let n = problem.dim();
    let u = problem.effective_bound();

    let mut x = match alpha0 {
        Some(a) => {
            if a.len() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: a.len(),
                });
            }
            let sum: f64 = a.iter().sum();
            let feasible = a.iter().all(|&v| v.is_finite() && v >= 0.0 && v <= u + 1e-12)
                && libm::fabs(sum - 1.0) <= 1e-9;
            if !feasible {
                return Err(Error::InvalidParameter {
                    name: "alpha0",
                    reason: "starting point must lie in the capped simplex",
                });
            }
            a.to_vec()
        }
        None => vec![1.0 / n as f64; n],
    };

    let q = &problem.quadratic;
    let lin = &problem.linear;

    let mut lipschitz = 2.0 * largest_eigenvalue(q);
    if !(lipschitz > 0.0) {
        // Indefinite or zero Q: fall back to a Gershgorin bound on |2Q|.
        lipschitz = 2.0 * q.row_iter().map(|r| r.iter().map(|v| libm::fabs(*v)).sum::<f64>()).fold(0.0, f64::max);
    }
    if !(lipschitz > 0.0) {
        lipschitz = 1.0;
    }

    let eval = |qx: &[f64], x: &[f64]| dot(qx, x) + dot(lin, x);

    let mut qx = q.mul_vec(&x);
    let mut fx = eval(&qx, &x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut residual = residual_at(&x, &qx, lin, lipschitz, u);
    let mut iterations = 0usize;
    let mut last_pattern: Option<Vec<i8>> = None;

    if residual <= problem.tolerance {
        return Ok(QpSolution {
            alpha: x,
            objective: fx,
            kkt_residual: residual,
            iterations: 0,
            converged: true,
        });
    }

    while iterations < problem.max_iterations {
        iterations += 1;

        let qy = q.mul_vec(&y);
        let step: Vec<f64> = y
            .iter()
            .zip(qy.iter().zip(lin))
            .map(|(yi, (qyi, li))| yi - (2.0 * qyi + li) / lipschitz)
            .collect();
        let z = project_unchecked(&step, u);
        let qz = q.mul_vec(&z);
        let fz = eval(&qz, &z);

        let x_prev = x.clone();
        if fz <= fx {
            x = z;
            qx = qz;
            fx = fz;
            let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
            let beta = (t - 1.0) / t_next;
            y = x
                .iter()
                .zip(&x_prev)
                .map(|(xi, pi)| xi + beta * (xi - pi))
                .collect();
            t = t_next;
        } else if t > 1.0 {
            // Momentum overshot: restart from the accepted iterate.
            y = x.clone();
            t = 1.0;
        } else {
            // A plain step from x went uphill, so L was underestimated.
            lipschitz *= 2.0;
        }

        residual = residual_at(&x, &qx, lin, lipschitz, u);
        observe(iterations, fx);
        if residual <= problem.tolerance {
            break;
        }

        if iterations.is_multiple_of(POLISH_INTERVAL) {
            let pattern = bound_pattern(&x, u);
            let stable = last_pattern.as_ref() == Some(&pattern);
            last_pattern = Some(pattern);
            if stable {
                if let Some(candidate) = polish(problem, &x, u) {
                    let qc = q.mul_vec(&candidate);
                    let fc = eval(&qc, &candidate);
                    if fc <= fx {
                        let rc = residual_at(&candidate, &qc, lin, lipschitz, u);
                        if rc < residual {
                            x = candidate;
                            qx = qc;
                            fx = fc;
                            residual = rc;
                            y = x.clone();
                            t = 1.0;
                            if residual <= problem.tolerance {
                                break;
                            }
                        }
                    }
                }
            }
        }
    }

    // One last exact solve on the final active set tightens the answer well
    // below the stopping tolerance when the active set is right.
    if let Some(candidate) = polish(problem, &x, u) {
        let qc = q.mul_vec(&candidate);
        let fc = eval(&qc, &candidate);
        if fc <= fx {
            let rc = residual_at(&candidate, &qc, lin, lipschitz, u);
            if rc <= residual {
                x = candidate;
                fx = fc;
                residual = rc;
            }
        }
    }

    Ok(QpSolution {
        alpha: x,
        objective: fx,
        kkt_residual: residual,
        iterations,
        converged: residual <= problem.tolerance,
    })
}

fn residual_at(x: &[f64], qx: &[f64], lin: &[f64], lipschitz: f64, u: f64) -> f64 {
    let step: Vec<f64> = x
        .iter()
        .zip(qx.iter().zip(lin))
        .map(|(xi, (qxi, li))| xi - (2.0 * qxi + li) / lipschitz)
        .collect();
    let p = project_unchecked(&step, u);
    x.iter()
        .zip(&p)
        .map(|(a, b)| libm::fabs(a - b))
        .fold(0.0, f64::max)
}

/// -1 at zero, 1 at the cap, 0 free.
fn bound_pattern(x: &[f64], u: f64) -> Vec<i8> {
    x.iter()
        .map(|&v| {
            if v <= 0.0 {
                -1
            } else if u < 1.0 && v >= u {
                1
            } else {
                0
            }
        })
        .collect()
}

/// Solves the problem restricted to the currently free coordinates with the
/// others fixed at their bounds, via the KKT system
/// `2 Q_FF α_F + λ 1 = −q_F − 2 Q_FC α_C`, `Σ α_F = 1 − Σ α_C`.
fn polish(problem: &QpProblem, x: &[f64], u: f64) -> Option<Vec<f64>> {
    let pattern = bound_pattern(x, u);
    let free: Vec<usize> = (0..x.len()).filter(|&i| pattern[i] == 0).collect();
    if free.is_empty() {
        return None;
    }
    let capped: Vec<usize> = (0..x.len()).filter(|&i| pattern[i] == 1).collect();
    let q = &problem.quadratic;
    let k = free.len();

    let mut h = Matrix::zeros(k, k);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            h[(a, b)] = 2.0 * q[(i, j)];
        }
    }
    let scale = h.diagonal().iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let chol = Cholesky::new(&h).ok().or_else(|| {
        let mut reg = h.clone();
        for a in 0..k {
            reg[(a, a)] += 1e-12 * scale.max(1.0);
        }
        Cholesky::new(&reg).ok()
    })?;

    let rhs: Vec<f64> = free
        .iter()
        .map(|&i| {
            let c: f64 = capped.iter().map(|&j| 2.0 * q[(i, j)] * u).sum();
            -problem.linear[i] - c
        })
        .collect();
    let budget = 1.0 - capped.len() as f64 * u;

    let h_rhs = chol.solve_vec(&rhs);
    let h_one = chol.solve_vec(&vec![1.0; k]);
    let denom: f64 = h_one.iter().sum();
    if !(denom.is_finite() && libm::fabs(denom) > 0.0) {
        return None;
    }
    let lambda = (h_rhs.iter().sum::<f64>() - budget) / denom;

    let mut out = vec![0.0; x.len()];
    for &j in &capped {
        out[j] = u;
    }
    for (a, &i) in free.iter().enumerate() {
        let v = h_rhs[a] - lambda * h_one[a];
        if !v.is_finite() || v < 0.0 || v > u {
            return None;
        }
        out[i] = v;
    }
    Some(out)
}

/// Largest `n` accepted by [`brute_force_reference`].
pub const BRUTE_FORCE_MAX_DIM: usize = 4;

/// Exhaustive search over the grid `{α = k·h : Σ k_i = 1/h}` intersected with
/// the cap, where `h` is `resolution` rounded so that `1/h` is an integer.
/// Intended as a test oracle for small problems.
pub fn brute_force_reference(problem: &QpProblem, resolution: f64) -> Result<QpSolution> {
    problem.validate()?;
    let n = problem.dim();
    if n > BRUTE_FORCE_MAX_DIM {
        return Err(Error::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_DIM,
        });
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "resolution",
            reason: "must lie in (0, 1]",
        });
    }
    let steps = libm::ceil(1.0 / resolution - 1e-9) as usize;
    let h = 1.0 / steps as f64;
    let u = problem.effective_bound();
    let cap = (libm::floor(u / h + 1e-9) as usize).min(steps);

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut counts = vec![0usize; n];
    let mut alpha = vec![0.0; n];
    let mut visited = 0usize;
    enumerate(&mut counts, 0, steps, cap, &mut |c| {
        for (a, &k) in alpha.iter_mut().zip(c) {
            *a = k as f64 * h;
        }
        visited += 1;
        let f = problem.objective(&alpha);
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, alpha.clone()));
        }
    });
    let (objective, alpha) = best.ok_or(Error::Infeasible {
        upper_bound: problem.upper_bound,
        n,
    })?;
    Ok(QpSolution {
        alpha,
        objective,
        kkt_residual: 0.0,
        iterations: visited,
        converged: true,
    })
}

fn enumerate(counts: &mut [usize], pos: usize, remaining: usize, cap: usize, visit: &mut dyn FnMut(&[usize])) {
    let n = counts.len();
    if pos == n - 1 {
        if remaining <= cap {
            counts[pos] = remaining;
            visit(counts);
        }
        return;
    }
    for k in 0..=remaining.min(cap) {
        counts[pos] = k;
        enumerate(counts, pos + 1, remaining - k, cap, visit);
    }
}
