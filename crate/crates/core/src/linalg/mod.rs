//! Self-contained sparse linear algebra: Jacobi-preconditioned conjugate
//! gradients with kernel deflation and a blocked shift-inverted iteration
//! with Rayleigh-Ritz extraction for the generalized symmetric problem
//! K v = lambda M v. Dense direct routines live in [`dense`] and serve as
//! independent oracles only.

pub mod dense;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sparse::{axpy, dot, norm2, SparseMatrixSym};

/// Seed for all iteration start vectors.
pub const START_VECTOR_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual in the deflated complement (plain relative
    /// residual when no kernel was supplied).
    pub final_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Error)]
pub enum LinalgError {
    #[error("no convergence after {iterations} iterations (residual {residual:.3e}, tol {tol:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },
    #[error("right-hand side has kernel component {fraction:.3e} of its norm")]
    IncompatibleRhs { fraction: f64 },
}

/// Inner product used when orthogonalizing against a deflation space.
#[derive(Debug, Clone, Copy, Default)]
pub enum InnerProduct<'a> {
    #[default]
    Euclidean,
    Weighted(&'a SparseMatrixSym),
}

/// An orthonormalized deflation space. `project` removes the spanned
/// components from a vector; the CG below runs on the projected operator.
pub struct Deflation<'a> {
    basis: Vec<Vec<f64>>,       // orthonormal w.r.t. the inner product
    weighted: Vec<Vec<f64>>,    // W * basis (equal to basis when Euclidean)
    metric: InnerProduct<'a>,
}

impl<'a> Deflation<'a> {
    pub fn new(vectors: &[Vec<f64>], metric: InnerProduct<'a>) -> Self {
        let apply_w = |v: &[f64]| -> Vec<f64> {
            match metric {
                InnerProduct::Euclidean => v.to_vec(),
                InnerProduct::Weighted(m) => m.matvec(v),
            }
        };
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut weighted: Vec<Vec<f64>> = Vec::new();
        for v in vectors {
            let mut w = v.clone();
            // modified Gram-Schmidt, two passes
            for _ in 0..2 {
                for (q, wq) in basis.iter().zip(&weighted) {
                    let c = dot(wq, &w);
                    axpy(&mut w, -c, q);
                }
            }
            let ww = apply_w(&w);
            let norm = dot(&w, &ww).sqrt();
            if norm > 1e-300 {
                let inv = 1.0 / norm;
                let mut q = w;
                for x in q.iter_mut() {
                    *x *= inv;
                }
                let mut wq = ww;
                for x in wq.iter_mut() {
                    *x *= inv;
                }
                basis.push(q);
                weighted.push(wq);
            }
        }
        Deflation {
            basis,
            weighted,
            metric,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// P v = v - sum_i q_i <q_i, v>_W
    pub fn project(&self, v: &mut [f64]) {
        for (q, wq) in self.basis.iter().zip(&self.weighted) {
            let c = dot(wq, v);
            axpy(v, -c, q);
        }
    }

    /// P^T v = v - sum_i (W q_i) <q_i, v>
    pub fn project_transposed(&self, v: &mut [f64]) {
        for (q, wq) in self.basis.iter().zip(&self.weighted) {
            let c = dot(q, v);
            axpy(v, -c, wq);
        }
    }

    /// Norm fraction of `v` inside the deflation space.
    pub fn component_fraction(&self, v: &[f64]) -> f64 {
        let n = norm2(v);
        if n == 0.0 {
            return 0.0;
        }
        let mut w = v.to_vec();
        self.project(&mut w);
        let mut inside = v.to_vec();
        for (i, x) in inside.iter_mut().enumerate() {
            *x -= w[i];
        }
        norm2(&inside) / n
    }

    pub fn metric(&self) -> InnerProduct<'a> {
        self.metric
    }
}

/// Iteration cap used by the solver: 50 sqrt(n), at least 100.
pub fn iteration_cap(n: usize) -> usize {
    (50.0 * (n as f64).sqrt()).ceil().max(100.0) as usize
}

/// Jacobi-preconditioned conjugate gradients on the (optionally deflated)
/// system. Returns the iterate and a report; never errors on its own — see
/// [`cg_solve`] for the checked variant.
pub fn cg_iterate(
    a: &SparseMatrixSym,
    b: &[f64],
    tol: f64,
    deflation: Option<&Deflation>,
) -> (Vec<f64>, SolveReport) {
    let n = a.n();
    let cap = iteration_cap(n);
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 1e-300 { 1.0 / d } else { 1.0 })
        .collect();

    let mut rhs = b.to_vec();
    if let Some(p) = deflation {
        p.project_transposed(&mut rhs);
    }
    let b_norm = norm2(&rhs);
    // A right-hand side that is (numerically) all kernel has the zero
    // solution on the complement.
    if b_norm <= 1e-14 * norm2(b) || b_norm == 0.0 {
        return (
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                final_residual: 0.0,
                converged: true,
            },
        );
    }

    let apply = |x: &[f64], buf: &mut Vec<f64>| {
        let mut v = x.to_vec();
        if let Some(p) = deflation {
            p.project(&mut v);
        }
        a.matvec_into(&v, buf);
        if let Some(p) = deflation {
            p.project_transposed(buf);
        }
    };

    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    if let Some(p) = deflation {
        p.project(&mut z);
    }
    let mut p_dir = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm2(&r) / b_norm;
    let mut iterations = 0;
    let mut work = vec![0.0; n];

    while res > tol && iterations < cap {
        apply(&p_dir, &mut work);
        let pq = dot(&p_dir, &work);
        if !(pq > 0.0) {
            break; // direction annihilated (numerically semi-definite)
        }
        let alpha = rz / pq;
        axpy(&mut x, alpha, &p_dir);
        axpy(&mut r, -alpha, &work);
        res = norm2(&r) / b_norm;
        iterations += 1;
        if res <= tol {
            break;
        }
        z = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
        if let Some(p) = deflation {
            p.project(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p_dir[i] = z[i] + beta * p_dir[i];
        }
    }
    if let Some(p) = deflation {
        p.project(&mut x);
    }
    (
        x,
        SolveReport {
            iterations,
            final_residual: res,
            converged: res <= tol,
        },
    )
}

/// Solve A x = b to relative residual `tol` (measured in the deflated
/// complement when a kernel is supplied). With `strict` set, a right-hand
/// side carrying a kernel fraction above 1e-8 is rejected.
pub fn cg_solve(
    a: &SparseMatrixSym,
    b: &[f64],
    tol: f64,
    kernel: Option<&Deflation>,
    strict: bool,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    if strict {
        if let Some(p) = kernel {
            let fraction = p.component_fraction(b);
            if fraction > 1e-8 {
                return Err(LinalgError::IncompatibleRhs { fraction });
            }
        }
    }
    let (x, report) = cg_iterate(a, b, tol, kernel);
    if !report.converged {
        return Err(LinalgError::NoConvergence {
            iterations: report.iterations,
            residual: report.final_residual,
            tol,
        });
    }
    Ok((x, report))
}

/// One generalized eigenpair.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// ||K v - lambda M v|| relative to the convergence denominator.
    pub residual: f64,
}

fn m_dot(m: &SparseMatrixSym, x: &[f64], y: &[f64]) -> f64 {
    m.bilinear_form(x, y)
}

fn m_orthonormalize(
    m: &SparseMatrixSym,
    fixed: &[Vec<f64>],
    block: &mut Vec<Vec<f64>>,
) {
    let mut kept = Vec::new();
    for mut v in block.drain(..) {
        for _ in 0..2 {
            for q in fixed.iter().chain(kept.iter()) {
                let c = m_dot(m, q, &v);
                axpy(&mut v, -c, q);
            }
        }
        let norm = m_dot(m, &v, &v).sqrt();
        if norm > 1e-140 {
            let inv = 1.0 / norm;
            for x in v.iter_mut() {
                *x *= inv;
            }
            kept.push(v);
        }
    }
    *block = kept;
}

/// The `count` smallest eigenpairs of K v = lambda M v (K symmetric
/// positive semidefinite, M symmetric positive definite), ascending, with
/// M-orthonormal vectors.
///
/// Blocked inverse iteration on K - sigma M with Rayleigh-Ritz extraction;
/// converged pairs are locked and deflated out of subsequent inner solves.
pub fn smallest_eigenpairs(
    k: &SparseMatrixSym,
    m: &SparseMatrixSym,
    count: usize,
    tol: f64,
) -> Result<Vec<EigenPair>, LinalgError> {
    let n = k.n();
    assert!(count >= 1);
    if count > n {
        panic!("requested {} eigenpairs of an n = {} problem", count, n);
    }
    let sigma = -1e-8 * k.trace() / n as f64;
    let shifted = k.add_scaled(m, -sigma); // K + |sigma| M, SPD
    let op_norm = k.max_abs_row_sum().max(1e-300);
    let kernel_floor = 1e-12 * op_norm;

    let mut block_size = (count + 2).min(n);
    let max_block = (count + 12).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(START_VECTOR_SEED);
    let mut block: Vec<Vec<f64>> = (0..block_size)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();

    let mut locked: Vec<EigenPair> = Vec::new();
    let inner_tol = (tol * 1e-3).clamp(1e-14, 1e-10);
    let max_outer = 400;
    // Stagnation tracking: a residual that stops improving usually means an
    // eigenvalue cluster wider than the active block; growing the block
    // brings the whole cluster inside the Rayleigh-Ritz space.
    let mut best_first_res = f64::MAX;
    let mut stall = 0usize;

    for outer in 0..max_outer {
        let locked_vecs: Vec<Vec<f64>> = locked.iter().map(|p| p.vector.clone()).collect();
        m_orthonormalize(m, &locked_vecs, &mut block);
        let active_target = block_size
            .saturating_sub(locked.len())
            .max(count - locked.len())
            .min(n - locked.len());
        while block.len() < active_target {
            // replenish directions lost to orthogonalization or added by
            // block growth
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut single = vec![std::mem::take(&mut v)];
            m_orthonormalize(m, &locked_vecs, &mut single);
            let joined = block.to_vec();
            m_orthonormalize(m, &joined, &mut single);
            match single.pop() {
                Some(v) => block.push(v),
                None => break,
            }
        }
        let deflation = Deflation::new(&locked_vecs, InnerProduct::Weighted(m));

        // Inverse iteration step.
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(block.len());
        for v in &block {
            let rhs = m.matvec(v);
            let (w, _report) = cg_iterate(&shifted, &rhs, inner_tol, Some(&deflation));
            next.push(w);
        }
        m_orthonormalize(m, &locked_vecs, &mut next);
        if next.is_empty() {
            break;
        }

        // Rayleigh-Ritz on the block.
        let bsz = next.len();
        let mut t = vec![vec![0.0; bsz]; bsz];
        let kw: Vec<Vec<f64>> = next.iter().map(|w| k.matvec(w)).collect();
        for i in 0..bsz {
            for j in i..bsz {
                let v = dot(&next[i], &kw[j]);
                t[i][j] = v;
                t[j][i] = v;
            }
        }
        let (ritz_values, ritz_vectors) = dense::jacobi_eigen(&t);
        let mut candidates: Vec<(f64, Vec<f64>)> = Vec::with_capacity(bsz);
        for (theta, s) in ritz_values.iter().zip(&ritz_vectors) {
            let mut y = vec![0.0; n];
            for (coeff, w) in s.iter().zip(&next) {
                axpy(&mut y, *coeff, w);
            }
            candidates.push((*theta, y));
        }

        // Lock converged pairs from the bottom of the spectrum.
        let debug = std::env::var_os("LOWDIM_EIGEN_DEBUG").is_some();
        let mut remaining: Vec<Vec<f64>> = Vec::new();
        let mut still_locking = true;
        let mut first_unlocked_res: Option<f64> = None;
        for (theta, y) in candidates {
            let ky = k.matvec(&y);
            let my = m.matvec(&y);
            let mut resid = ky.clone();
            axpy(&mut resid, -theta, &my);
            let res = norm2(&resid);
            let ky_norm = norm2(&ky);
            // Kernel modes have ||K y|| ~ 0, where a relative residual
            // criterion degenerates; the floor is an absolute backward-error
            // bound that only they can meet.
            let floor = (kernel_floor * norm2(&y)).max(1e-300);
            let denom = ky_norm.max(floor);
            let ok = res <= (tol * ky_norm).max(floor);
            if debug {
                eprintln!(
                    "eigen outer {}: theta={:.6e} res={:.3e} ky={:.3e} floor={:.3e} ok={} locked={}",
                    outer, theta, res, ky_norm, floor, ok, locked.len()
                );
            }
            if still_locking && ok && locked.len() < count {
                locked.push(EigenPair {
                    value: theta,
                    vector: y,
                    residual: res / denom,
                });
            } else {
                if still_locking && first_unlocked_res.is_none() {
                    first_unlocked_res = Some(res);
                }
                still_locking = false;
                remaining.push(y);
            }
        }
        if locked.len() >= count {
            let mut result = locked;
            result.truncate(count);
            result.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
            return Ok(result);
        }
        if let Some(res) = first_unlocked_res {
            if res < 0.5 * best_first_res {
                best_first_res = res;
                stall = 0;
            } else {
                stall += 1;
            }
        }
        if stall >= 4 && block_size < max_block {
            block_size = (block_size + 2).min(max_block);
            stall = 0;
            best_first_res = f64::MAX;
        }
        block = remaining;
        if block.is_empty() {
            // everything locked or lost; regenerate a fresh block
            block = (0..(count + 2 - locked.len()).min(n - locked.len()))
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
        }
    }
    Err(LinalgError::NoConvergence {
        iterations: max_outer,
        residual: f64::NAN,
        tol,
    })
}
