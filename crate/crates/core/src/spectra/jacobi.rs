//! Hermitian eigenproblems by cyclic Jacobi on the real symmetric embedding `[[A, −B], [B, A]]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues ascending and the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

fn frob(h: &DMatrix<Complex64>) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest `|H_ij − conj(H_ji)|`.
pub fn hermiticity_defect(h: &DMatrix<Complex64>) -> f64 {
    let n = h.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    d
}

/// Cyclic Jacobi on a real symmetric matrix, in place. Returns the accumulated rotations.
pub fn jacobi_symmetric(a: &mut DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut v = DMatrix::identity(n, n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() < 1e-14 * scale {
            return Ok(v);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::NonConvergence("Jacobi sweeps exhausted".into()))
}

/// Connected components of the sparsity graph of `h`, each sorted; components ordered by first index.
pub fn blocks(h: &DMatrix<Complex64>) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let nx = p[i];
            p[i] = r;
            i = nx;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if h[(i, j)] != Complex64::new(0.0, 0.0) || h[(j, i)] != Complex64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn diagonalize_dense(h: &DMatrix<Complex64>) -> Result<Eigen> {
    let n = h.nrows();
    if n == 1 {
        return Ok(Eigen { values: vec![h[(0, 0)].re], vectors: DMatrix::identity(1, 1) });
    }
    let mut e = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            e[(i, j)] = z.re;
            e[(i + n, j + n)] = z.re;
            e[(i, j + n)] = -z.im;
            e[(i + n, j)] = z.im;
        }
    }
    let v = jacobi_symmetric(&mut e)?;
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| e[(a, a)].total_cmp(&e[(b, b)]).then(a.cmp(&b)));
    let tol = 1e-9 * frob(h).max(1.0);
    let mut values = Vec::with_capacity(n);
    let mut vecs: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(n);
    let mut cluster_start = 0;
    for (pos, &k) in order.iter().enumerate() {
        let lam = e[(k, k)];
        if pos > 0 && (lam - e[(order[pos - 1], order[pos - 1])]).abs() > tol {
            cluster_start = vecs.len();
        }
        let mut z = nalgebra::DVector::from_fn(n, |i, _| Complex64::new(v[(i, k)], v[(i + n, k)]));
        for _ in 0..2 {
            for u in &vecs[cluster_start..] {
                let c = u.dotc(&z);
                z -= u * c;
            }
        }
        let nz = z.norm();
        if nz > 0.5 && vecs.len() < n {
            vecs.push(z / Complex64::new(nz, 0.0));
            values.push(lam);
        }
    }
    if vecs.len() != n {
        return Err(Error::NonConvergence("eigenvector extraction from the real embedding".into()));
    }
    Ok(Eigen { values, vectors: DMatrix::from_columns(&vecs) })
}

/// Hermitian eigen-decomposition, splitting into decoupled blocks first.
pub fn diagonalize(h: &DMatrix<Complex64>) -> Result<Eigen> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch("square matrix required".into()));
    }
    let defect = hermiticity_defect(h);
    if defect > 1e-10 * frob(h).max(1.0) {
        return Err(Error::NonHermitian(defect));
    }
    let mut pairs: Vec<(f64, usize, nalgebra::DVector<Complex64>)> = Vec::with_capacity(n);
    for blk in blocks(h) {
        let sub = DMatrix::from_fn(blk.len(), blk.len(), |i, j| h[(blk[i], blk[j])]);
        let eig = diagonalize_dense(&sub)?;
        for (k, &lam) in eig.values.iter().enumerate() {
            let mut full = nalgebra::DVector::from_element(n, Complex64::new(0.0, 0.0));
            for (i, &gi) in blk.iter().enumerate() {
                full[gi] = eig.vectors[(i, k)];
            }
            pairs.push((lam, blk[0], full));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let values = pairs.iter().map(|p| p.0).collect();
    let cols: Vec<_> = pairs.into_iter().map(|p| p.2).collect();
    let vectors = if cols.is_empty() { DMatrix::zeros(0, 0) } else { DMatrix::from_columns(&cols) };
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only.
pub fn eigenvalues(h: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    Ok(diagonalize(h)?.values)
}
