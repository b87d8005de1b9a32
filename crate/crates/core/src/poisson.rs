//! Dirichlet Poisson solves `Δu = f`, `u = 0` on `∂Ω`, for the 5-point
//! Laplacian `divergence ∘ gradient`.
//!
//! [`solve_fast`] diagonalizes the operator with a type-I discrete sine
//! transform along each axis. [`solve_dense_oracle`] assembles the matrix and
//! factors it; it exists to check the fast path.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use rustdct::{DctPlanner, Dst1};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Lattice, ScalarField};

/// Largest system [`solve_dense_oracle`] will assemble.
pub const DENSE_ORACLE_LIMIT: usize = 4096;

/// Sine-transform solver for one grid. Cheap to share behind an `Arc`.
pub struct PoissonSolver {
    spec: GridSpec,
    dst_x: Arc<dyn Dst1<f64>>,
    dst_y: Arc<dyn Dst1<f64>>,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

impl PoissonSolver {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = DctPlanner::new();
        let eig = |n: usize| -> Vec<f64> {
            let scale = 4.0 / (spec.h * spec.h);
            (1..=n)
                .map(|k| {
                    let s = (k as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin();
                    -scale * s * s
                })
                .collect()
        };
        Self {
            spec,
            dst_x: planner.plan_dst1(spec.nx),
            dst_y: planner.plan_dst1(spec.ny),
            eig_x: eig(spec.nx),
            eig_y: eig(spec.ny),
        }
    }

    /// Shared solver for `spec`, built on first use.
    pub fn cached(spec: &GridSpec) -> Arc<PoissonSolver> {
        type Key = (usize, usize, u64, u64, u64);
        static CACHE: OnceLock<RwLock<HashMap<Key, Arc<PoissonSolver>>>> = OnceLock::new();
        let key = (spec.nx, spec.ny, spec.h.to_bits(), spec.x0.to_bits(), spec.y0.to_bits());
        let cache = CACHE.get_or_init(Default::default);
        if let Some(s) = cache.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Arc::clone(s);
        }
        let mut w = cache.write().unwrap_or_else(|e| e.into_inner());
        Arc::clone(w.entry(key).or_insert_with(|| Arc::new(PoissonSolver::new(*spec))))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Solves `Δu = f` in place on a row-major `nx × ny` buffer.
    pub fn solve_in_place(&self, buf: &mut [f64]) {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        assert_eq!(buf.len(), nx * ny);

        self.transform_rows(buf);
        self.transform_cols(buf);
        // DST-I is its own inverse up to 2/(n+1) per axis.
        let norm = 4.0 / ((nx + 1) * (ny + 1)) as f64;
        for j in 0..ny {
            for i in 0..nx {
                buf[j * nx + i] *= norm / (self.eig_x[i] + self.eig_y[j]);
            }
        }
        self.transform_cols(buf);
        self.transform_rows(buf);
    }

    pub fn solve(&self, f: &ScalarField) -> ScalarField {
        assert!(self.spec.same_as(f.spec()), "solver built for a different grid");
        assert_eq!(f.lattice(), Lattice::Interior);
        let mut buf = f.values().to_vec();
        self.solve_in_place(&mut buf);
        ScalarField::from_values(self.spec, Lattice::Interior, buf)
            .expect("sine transform of finite data is finite")
    }

    fn transform_rows(&self, buf: &mut [f64]) {
        for row in buf.chunks_exact_mut(self.spec.nx) {
            self.dst_x.process_dst1(row);
        }
    }

    fn transform_cols(&self, buf: &mut [f64]) {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = buf[j * nx + i];
            }
            self.dst_y.process_dst1(&mut col);
            for j in 0..ny {
                buf[j * nx + i] = col[j];
            }
        }
    }
}

/// Solves `Δu = f` with zero boundary values using the cached sine-transform
/// solver for `f`'s grid.
pub fn solve_fast(f: &ScalarField) -> ScalarField {
    PoissonSolver::cached(f.spec()).solve(f)
}

/// Dense Cholesky solve of the same system; limited to
/// [`DENSE_ORACLE_LIMIT`] unknowns.
pub fn solve_dense_oracle(f: &ScalarField) -> Result<ScalarField> {
    if f.lattice() != Lattice::Interior {
        return Err(Error::Mismatch("Poisson right-hand side must be an interior field".into()));
    }
    let spec = *f.spec();
    let (nx, ny) = (spec.nx, spec.ny);
    let n = nx * ny;
    if n > DENSE_ORACLE_LIMIT {
        return Err(Error::TooLarge { got: n, limit: DENSE_ORACLE_LIMIT });
    }
    // −Δ is symmetric positive definite
    let inv_h2 = 1.0 / (spec.h * spec.h);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            a[(k, k)] = 4.0 * inv_h2;
            if i > 0 {
                a[(k, k - 1)] = -inv_h2;
            }
            if i + 1 < nx {
                a[(k, k + 1)] = -inv_h2;
            }
            if j > 0 {
                a[(k, k - nx)] = -inv_h2;
            }
            if j + 1 < ny {
                a[(k, k + nx)] = -inv_h2;
            }
        }
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Diagnostic("Dirichlet Laplacian not positive definite".into()))?;
    let rhs = DVector::from_iterator(n, f.values().iter().map(|v| -v));
    let u = chol.solve(&rhs);
    ScalarField::from_values(spec, Lattice::Interior, u.iter().copied().collect())
}
