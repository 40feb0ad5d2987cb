//! Strictly convex separable QP with linear equalities and box bounds:
//!
//! ```text
//! minimize   Σ (x_i / s_i)²
//! subject to A x = b,   lo ≤ x ≤ hi
//! ```
//!
//! Solved in the dual. For a multiplier `λ` the Lagrangian minimizer is
//! `x_i(λ) = clamp(s_i² (Aᵀλ)_i / 2, lo_i, hi_i)`, so stationarity and bound
//! feasibility hold by construction and only `A x(λ) = b` is iterated on.
//! The dual is concave and piecewise quadratic; a damped Newton step over the
//! currently unclamped variables identifies the active set in a few
//! iterations, after which the step is exact.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SeparableQp {
    /// Per-variable scale `s_i`; the cost of variable `i` is `(x_i / s_i)²`.
    pub scales: Vec<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub objective: f64,
    /// ‖A x − b‖∞.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    pub max_iterations: usize,
    /// Equality residual target relative to `1 + ‖b‖∞`.
    pub tolerance: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            max_iterations: 200,
            tolerance: 1e-12,
        }
    }
}

impl SeparableQp {
    fn curvature(&self, i: usize) -> f64 {
        self.scales[i] * self.scales[i] / 2.0
    }

    /// Lagrangian minimizer and the free-variable mask.
    fn primal(&self, lambda: &DVector<f64>) -> (Vec<f64>, Vec<bool>) {
        let atl = self.a.tr_mul(lambda);
        let n = self.scales.len();
        let mut x = vec![0.0; n];
        let mut free = vec![false; n];
        for i in 0..n {
            let z = self.curvature(i) * atl[i];
            if z <= self.lower[i] {
                x[i] = self.lower[i];
            } else if z >= self.upper[i] {
                x[i] = self.upper[i];
            } else {
                x[i] = z;
                free[i] = true;
            }
        }
        (x, free)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.scales).map(|(xi, s)| (xi / s) * (xi / s)).sum()
    }

    fn residual(&self, x: &[f64]) -> DVector<f64> {
        let xv = DVector::from_column_slice(x);
        &self.b - &self.a * xv
    }

    fn dual_value(&self, lambda: &DVector<f64>) -> (f64, Vec<f64>, Vec<bool>, DVector<f64>) {
        let (x, free) = self.primal(lambda);
        let r = self.residual(&x);
        (self.objective(&x) + lambda.dot(&r), x, free, r)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.scales.len();
        if self.a.ncols() != n || self.lower.len() != n || self.upper.len() != n || self.a.nrows() != self.b.len() {
            return Err(Error::Domain("QP dimensions are inconsistent".into()));
        }
        if self.a.iter().chain(self.b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("QP data must be finite".into()));
        }
        for i in 0..n {
            if !(self.scales[i] > 0.0 && self.scales[i].is_finite()) {
                return Err(Error::Domain(format!("QP weight {} must be positive and finite", i)));
            }
            if !(self.lower[i] <= 0.0 && self.upper[i] >= 0.0) {
                return Err(Error::Domain(format!("QP bounds of variable {} must bracket zero", i)));
            }
        }
        Ok(())
    }

    pub fn solve(&self, options: &QpOptions) -> Result<QpSolution> {
        self.validate()?;
        let m = self.b.len();
        let tol = options.tolerance * (1.0 + self.b.amax());
        let mut lambda = DVector::zeros(m);
        let (_, mut x, mut free, mut r) = self.dual_value(&lambda);

        for iter in 0..options.max_iterations {
            let res = r.amax();
            if res <= tol {
                return Ok(QpSolution {
                    objective: self.objective(&x),
                    x,
                    multipliers: lambda.iter().copied().collect(),
                    residual: res,
                    iterations: iter,
                });
            }
            let step = self.newton_step(&free, &r)?;
            let t = self.line_search(&lambda, &step);
            lambda += &step * t;
            (_, x, free, r) = self.dual_value(&lambda);
        }
        Err(Error::NonConvergence {
            iterations: options.max_iterations,
            residual: r.amax(),
        })
    }

    /// Step length along `d` for the concave piecewise-quadratic dual.
    /// Works on the directional derivative `r(λ + t·d)·d`, which is
    /// monotone in `t`, rather than on dual values: with large weights the
    /// dual is tiny and its increments vanish in rounding.
    fn line_search(&self, lambda: &DVector<f64>, d: &DVector<f64>) -> f64 {
        let slope = |t: f64| {
            let (x, _) = self.primal(&(lambda + d * t));
            self.residual(&x).dot(d)
        };
        if slope(1.0) >= 0.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo > 0.0 {
            lo
        } else {
            hi
        }
    }

    /// Solves `(A_F D_F A_Fᵀ) Δ = r` with symmetric diagonal equilibration.
    fn newton_step(&self, free: &[bool], r: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.b.len();
        let mut h = DMatrix::zeros(m, m);
        for (i, _) in free.iter().enumerate().filter(|(_, f)| **f) {
            let col = self.a.column(i);
            let c = self.curvature(i);
            for p in 0..m {
                let ap = col[p] * c;
                if ap == 0.0 {
                    continue;
                }
                for q in 0..m {
                    h[(p, q)] += ap * col[q];
                }
            }
        }
        // Rows with no free variable get a small ridge so the step pushes
        // their multiplier until some variable unclamps.
        let max_diag = (0..m).map(|i| h[(i, i)]).fold(0.0, f64::max);
        let ridge = if max_diag > 0.0 { max_diag * 1e-14 } else { 1.0 };
        let mut scale = DVector::zeros(m);
        for i in 0..m {
            if h[(i, i)] <= ridge {
                h[(i, i)] += ridge;
            }
            scale[i] = 1.0 / h[(i, i)].sqrt();
        }
        let scaled = DMatrix::from_fn(m, m, |p, q| h[(p, q)] * scale[p] * scale[q]);
        let rhs = r.component_mul(&scale);
        let y = scaled
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NonConvergence { iterations: 0, residual: r.amax() })?;
        Ok(y.component_mul(&scale))
    }
}
