//! Dense direct routines used as internal oracles for sizes up to a few
//! hundred. These deliberately share no code with the iterative paths.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum DenseError {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
}

/// LDL^T factorization without pivoting; `a` is a full symmetric matrix.
pub struct Ldlt {
    n: usize,
    l: Vec<Vec<f64>>,
    d: Vec<f64>,
}

impl Ldlt {
    pub fn factor(a: &[Vec<f64>]) -> Result<Ldlt, DenseError> {
        let n = a.len();
        let mut l = vec![vec![0.0; n]; n];
        let mut d = vec![0.0; n];
        for j in 0..n {
            let mut dj = a[j][j];
            for k in 0..j {
                dj -= l[j][k] * l[j][k] * d[k];
            }
            if dj <= 0.0 {
                return Err(DenseError::NotPositiveDefinite { index: j, pivot: dj });
            }
            d[j] = dj;
            l[j][j] = 1.0;
            for i in (j + 1)..n {
                let mut v = a[i][j];
                for k in 0..j {
                    v -= l[i][k] * l[j][k] * d[k];
                }
                l[i][j] = v / dj;
            }
        }
        Ok(Ldlt { n, l, d })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.l[i][k] * x[k];
            }
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.l[k][i] * x[k];
            }
        }
        x
    }
}

/// Solve a symmetric positive semidefinite system whose kernel is spanned by
/// `kernel` (not necessarily orthonormal): the kernel directions are
/// completed with a rank-d term, which leaves the particular solution on the
/// orthogonal complement untouched for consistent right-hand sides.
pub fn solve_psd_with_kernel(
    a: &[Vec<f64>],
    b: &[f64],
    kernel: &[Vec<f64>],
) -> Result<Vec<f64>, DenseError> {
    let n = a.len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    for v in kernel {
        let mut w = v.clone();
        for prev in &q {
            let c: f64 = w.iter().zip(prev).map(|(x, y)| x * y).sum();
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= c * pi;
            }
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for wi in &mut w {
                *wi /= norm;
            }
            q.push(w);
        }
    }
    let scale = (0..n).map(|i| a[i][i]).sum::<f64>() / n.max(1) as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut completed = a.to_vec();
    for qv in &q {
        for i in 0..n {
            for j in 0..n {
                completed[i][j] += scale * qv[i] * qv[j];
            }
        }
    }
    let mut rhs = b.to_vec();
    for qv in &q {
        let c: f64 = rhs.iter().zip(qv).map(|(x, y)| x * y).sum();
        for (ri, qi) in rhs.iter_mut().zip(qv) {
            *ri -= c * qi;
        }
    }
    let f = Ldlt::factor(&completed)?;
    let mut x = f.solve(&rhs);
    // Remove any kernel component reintroduced by roundoff.
    for qv in &q {
        let c: f64 = x.iter().zip(qv).map(|(a, b)| a * b).sum();
        for (xi, qi) in x.iter_mut().zip(qv) {
            *xi -= c * qi;
        }
    }
    Ok(x)
}

/// Cyclic Jacobi eigenvalue iteration for a dense symmetric matrix.
/// Returns eigenvalues ascending with matching eigenvector columns.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    (values, vectors)
}

fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// Dense generalized symmetric eigenproblem K v = lambda M v with M SPD,
/// via a Cholesky congruence transform and Jacobi iteration. Vectors come
/// back M-orthonormal, eigenvalues ascending.
pub fn generalized_eigen_dense(
    k: &[Vec<f64>],
    m: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<Vec<f64>>), DenseError> {
    let n = k.len();
    // Cholesky M = L L^T
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[i][j];
            for p in 0..j {
                sum -= l[i][p] * l[j][p];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(DenseError::NotPositiveDefinite { index: i, pivot: sum });
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let forward = |b: &[f64]| -> Vec<f64> {
        let mut x = b.to_vec();
        for i in 0..n {
            for p in 0..i {
                x[i] -= l[i][p] * x[p];
            }
            x[i] /= l[i][i];
        }
        x
    };
    let backward = |b: &[f64]| -> Vec<f64> {
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            for p in (i + 1)..n {
                x[i] -= l[p][i] * x[p];
            }
            x[i] /= l[i][i];
        }
        x
    };
    // C = L^-1 K L^-T, built column by column.
    let mut c = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let linv_t_col = backward(&e); // column of L^-T
        let kcol: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| k[i][j] * linv_t_col[j]).sum())
            .collect();
        let ccol = forward(&kcol);
        for row in 0..n {
            c[row][col] = ccol[row];
        }
    }
    // Symmetrize roundoff.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (c[i][j] + c[j][i]);
            c[i][j] = avg;
            c[j][i] = avg;
        }
    }
    let (values, yvecs) = jacobi_eigen(&c);
    let vectors = yvecs.iter().map(|y| backward(y)).collect();
    Ok((values, vectors))
}
