//! Dense symmetric kernels: packed symmetric storage, cyclic Jacobi
//! eigendecomposition, numerical rank and Frobenius products.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[inline]
fn packed(r: usize, c: usize) -> usize {
    let (r, c) = if r >= c { (r, c) } else { (c, r) };
    r * (r + 1) / 2 + c
}

/// Symmetric matrix stored as its packed lower triangle (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![T::zero(); dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from `f(r, c)` evaluated on the lower triangle only.
    pub fn from_fn<F: FnMut(usize, usize) -> T>(dim: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        for r in 0..dim {
            for c in 0..=r {
                data.push(f(r, c));
            }
        }
        SymMatrix { dim, data }
    }

    /// Reads the lower triangle of a square row-major matrix.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Ok(Self::from_fn(dim, |r, c| rows[r][c]))
    }

    /// `u u^T`.
    pub fn outer(u: &[T]) -> Self {
        Self::from_fn(u.len(), |r, c| u[r] * u[c])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[packed(r, c)]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[packed(r, c)] = v;
    }

    #[inline]
    pub fn add_at(&mut self, r: usize, c: usize, v: T) {
        self.data[packed(r, c)] += v;
    }

    pub fn packed_data(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim;
        let mut out = vec![T::zero(); n * n];
        for r in 0..n {
            for c in 0..=r {
                let v = self.get(r, c);
                out[r * n + c] = v;
                out[c * n + r] = v;
            }
        }
        out
    }

    pub fn frob_norm(&self) -> T {
        self.frob_inner_unchecked(self).sqrt()
    }

    pub fn frob_inner(&self, other: &SymMatrix<T>) -> Result<T> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(self.frob_inner_unchecked(other))
    }

    pub(crate) fn frob_inner_unchecked(&self, other: &SymMatrix<T>) -> T {
        let two = T::lit(2.0);
        let mut acc = T::zero();
        let mut k = 0;
        for r in 0..self.dim {
            for c in 0..=r {
                let p = self.data[k] * other.data[k];
                acc += if r == c { p } else { two * p };
                k += 1;
            }
        }
        acc
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &SymMatrix<T>) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: T) -> SymMatrix<T> {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix<T>) -> SymMatrix<T> {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    pub fn add(&self, other: &SymMatrix<T>) -> SymMatrix<T> {
        let mut out = self.clone();
        out.axpy(T::one(), other);
        out
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Leading principal `k x k` submatrix.
    pub fn leading(&self, k: usize) -> SymMatrix<T> {
        assert!(k <= self.dim);
        SymMatrix {
            dim: k,
            data: self.data[..k * (k + 1) / 2].to_vec(),
        }
    }

    /// Principal submatrix on the given rows/columns.
    pub fn principal(&self, idx: &[usize]) -> SymMatrix<T> {
        Self::from_fn(idx.len(), |r, c| self.get(idx[r], idx[c]))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Sparse symmetric matrix given by lower-triangle triplets `(r, c, v)`, `r >= c`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym<T> {
    dim: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> SparseSym<T> {
    pub fn new(dim: usize) -> Self {
        SparseSym {
            dim,
            entries: Vec::new(),
        }
    }

    /// Accumulates `v` at `(r, c)` (and implicitly `(c, r)`).
    pub fn add(&mut self, r: usize, c: usize, v: T) {
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        debug_assert!(r < self.dim);
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == r && e.1 == c) {
            e.2 += v;
        } else {
            self.entries.push((r, c, v));
        }
    }

    /// Drops exact zeros and sorts entries by packed position.
    pub fn compact(&mut self) {
        self.entries.retain(|e| e.2 != T::zero());
        self.entries.sort_by_key(|e| packed(e.0, e.1));
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, T)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `<self, a>` in the Frobenius sense.
    pub fn inner_dense(&self, a: &SymMatrix<T>) -> T {
        let two = T::lit(2.0);
        self.entries
            .iter()
            .map(|&(r, c, v)| {
                let p = v * a.get(r, c);
                if r == c {
                    p
                } else {
                    two * p
                }
            })
            .sum()
    }

    /// `<self, self>`.
    pub fn norm_sq(&self) -> T {
        let two = T::lit(2.0);
        self.entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * v } else { two * v * v })
            .sum()
    }

    /// `a += s * self`.
    pub fn add_scaled_into(&self, s: T, a: &mut SymMatrix<T>) {
        for &(r, c, v) in &self.entries {
            a.add_at(r, c, s * v);
        }
    }

    pub fn to_dense(&self) -> SymMatrix<T> {
        let mut m = SymMatrix::zeros(self.dim);
        self.add_scaled_into(T::one(), &mut m);
        m
    }
}

/// Eigenpairs with eigenvalues in descending order and orthonormal vectors.
#[derive(Clone, Debug)]
pub struct EigDecomp<T> {
    dim: usize,
    values: Vec<T>,
    /// Column-major, `dim` rows by `values.len()` columns.
    vectors: Vec<T>,
}

impl<T: Real> EigDecomp<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn vector(&self, j: usize) -> &[T] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `sum_j f(lambda_j) v_j v_j^T` over the stored pairs.
    pub fn reconstruct_with<F: Fn(T) -> T>(&self, f: F) -> SymMatrix<T> {
        let mut m = SymMatrix::zeros(self.dim);
        for (j, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == T::zero() {
                continue;
            }
            let v = self.vector(j);
            for r in 0..self.dim {
                let vr = w * v[r];
                for (c, &vc) in v.iter().enumerate().take(r + 1) {
                    m.add_at(r, c, vr * vc);
                }
            }
        }
        m
    }

    pub fn reconstruct(&self) -> SymMatrix<T> {
        self.reconstruct_with(|l| l)
    }

    fn truncate(mut self, k: usize) -> Self {
        self.values.truncate(k);
        self.vectors.truncate(k * self.dim);
        self
    }
}

const MAX_SWEEPS: usize = 100;

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted descending with a stable sort, so equal eigenvalues
/// keep the column order the rotations left them in.
pub fn sym_eig<T: Real>(a: &SymMatrix<T>) -> Result<EigDecomp<T>> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.dim();
    let mut m = a.to_dense();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }

    let eps = T::epsilon();
    let total = a.frob_norm();
    let half = T::lit(0.5);

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off.sqrt() <= eps * total || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if apq.abs() <= eps * eps * (app.abs() + aqq.abs()) {
                    m[p * n + q] = T::zero();
                    m[q * n + p] = T::zero();
                    continue;
                }
                let theta = (aqq - app) * half / apq;
                let t = if theta >= T::zero() {
                    T::one() / (theta + theta.hypot(T::one()))
                } else {
                    -T::one() / (-theta + theta.hypot(T::one()))
                };
                let c = T::one() / t.hypot(T::one());
                let s = t * c;

                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = T::zero();
                m[q * n + p] = T::zero();
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let g = m[k * n + p];
                    let h = m[k * n + q];
                    let kp = c * g - s * h;
                    let kq = s * g + c * h;
                    m[k * n + p] = kp;
                    m[p * n + k] = kp;
                    m[k * n + q] = kq;
                    m[q * n + k] = kq;
                }
                for k in 0..n {
                    let g = v[k * n + p];
                    let h = v[k * n + q];
                    v[k * n + p] = c * g - s * h;
                    v[k * n + q] = s * g + c * h;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &j in &order {
        for k in 0..n {
            vectors.push(v[k * n + j]);
        }
    }
    Ok(EigDecomp {
        dim: n,
        values,
        vectors,
    })
}

/// The `k` algebraically largest eigenpairs, descending.
pub fn k_eigs<T: Real>(a: &SymMatrix<T>, k: usize) -> Result<EigDecomp<T>> {
    if k == 0 || k > a.dim() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} out of range for dimension {}",
            a.dim()
        )));
    }
    Ok(sym_eig(a)?.truncate(k))
}

/// Number of eigenvalues with `|lambda| > tau * max(1, max |lambda|)`.
pub fn numerical_rank<T: Real>(a: &SymMatrix<T>, tau: T) -> Result<usize> {
    if !(tau > T::zero()) {
        return Err(Error::InvalidArgument("rank tolerance must be positive".into()));
    }
    if a.dim() == 0 {
        return Ok(0);
    }
    let e = sym_eig(a)?;
    Ok(rank_of_values(e.values(), tau))
}

pub(crate) fn rank_of_values<T: Real>(values: &[T], tau: T) -> usize {
    let top = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let cut = tau * top.max(T::one());
    values.iter().filter(|v| v.abs() > cut).count()
}

/// `sqrt(lambda) * v`, the factor of `lambda v v^T`, signed so that its first
/// (constant-monomial) coordinate is non-negative.
pub fn rank1_factor<T: Real>(lambda: T, v: &[T]) -> Result<Vec<T>> {
    if lambda < T::zero() {
        return Err(Error::InvalidArgument(format!(
            "negative eigenvalue {lambda} has no real factor"
        )));
    }
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    let tol = T::lit(1e-9).max(T::lit(1e3) * T::epsilon());
    if (norm - T::one()).abs() > tol {
        return Err(Error::InvalidArgument(format!(
            "vector norm {norm} is not 1"
        )));
    }
    let root = lambda.sqrt();
    let sign = if v.first().is_some_and(|&v0| v0 < T::zero()) {
        -T::one()
    } else {
        T::one()
    };
    Ok(v.iter().map(|&x| sign * root * x).collect())
}

/// `tr(A^T B)`.
pub fn frob_inner<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>) -> Result<T> {
    a.frob_inner(b)
}

/// Smallest eigenvalue; `+inf` for an empty matrix.
pub fn min_eigenvalue<T: Real>(a: &SymMatrix<T>) -> Result<T> {
    let e = sym_eig(a)?;
    Ok(e.values().last().copied().unwrap_or_else(T::infinity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix<f64> {
        SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Random orthogonal matrix via Gram-Schmidt, columns returned.
    fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
        let mut cols: Vec<Vec<f64>> = Vec::new();
        while cols.len() < n {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= d * y;
                }
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nv > 1e-3 {
                cols.push(v.into_iter().map(|x| x / nv).collect());
            }
        }
        cols
    }

    fn check_decomp(a: &SymMatrix<f64>, e: &EigDecomp<f64>) {
        let n = a.dim();
        let rec = e.reconstruct();
        let err = a.sub(&rec).frob_norm();
        assert!(err <= 1e-9 * a.frob_norm().max(1.0), "reconstruction {err}");
        let mut ortho = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d: f64 = e.vector(i).iter().zip(e.vector(j)).map(|(a, b)| a * b).sum();
                let t = if i == j { 1.0 } else { 0.0 };
                ortho += (d - t) * (d - t);
            }
        }
        assert!(ortho.sqrt() <= 1e-9, "orthonormality {}", ortho.sqrt());
        for w in e.values().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn diagonal() {
        let a = SymMatrix::diag(&[3.0, -2.0]);
        let e = sym_eig(&a).unwrap();
        assert_eq!(e.values(), &[3.0, -2.0]);
        assert_eq!(e.vector(0), &[1.0, 0.0]);
        assert_eq!(e.vector(1), &[0.0, 1.0]);

        let e = sym_eig(&SymMatrix::diag(&[-2.0, 3.0])).unwrap();
        assert_eq!(e.values(), &[3.0, -2.0]);
        assert_eq!(e.vector(0), &[0.0, 1.0]);
    }

    #[test]
    fn swap_matrix() {
        let a = SymMatrix::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = sym_eig(&a).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.values()[0] - 1.0).abs() < 1e-15);
        assert!((e.values()[1] + 1.0).abs() < 1e-15);
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0] - h).abs() < 1e-15 && (v0[1] - h).abs() < 1e-15);
        assert!((v1[0] * v1[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn recovers_constructed_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = random_orthogonal(&mut rng, 6);
        let d = [5.0, 2.5, 1.0, 0.0, -0.5, -3.0];
        let a = SymMatrix::from_fn(6, |r, c| (0..6).map(|k| q[k][r] * d[k] * q[k][c]).sum());
        let e = sym_eig(&a).unwrap();
        for (got, want) in e.values().iter().zip(d) {
            assert!((got - want).abs() < 1e-9);
        }
        check_decomp(&a, &e);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..1000 {
            let n = 1 + i % 20;
            let a = random_sym(&mut rng, n);
            let e = sym_eig(&a).unwrap();
            check_decomp(&a, &e);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = SymMatrix::<f64>::identity(2);
        a.set(1, 0, f64::NAN);
        assert_eq!(sym_eig(&a).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn k_eigs_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_sym(&mut rng, 5);
        let full = sym_eig(&a).unwrap();
        let same = k_eigs(&a, 5).unwrap();
        assert_eq!(full.values(), same.values());
        for k in 1..=5 {
            let part = k_eigs(&a, k).unwrap();
            for (x, y) in part.values().iter().zip(full.values()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        assert!(k_eigs(&a, 0).is_err());
        assert!(k_eigs(&a, 6).is_err());

        let u = [0.6, 0.8, 0.0];
        let e = k_eigs(&SymMatrix::<f64>::outer(&u), 1).unwrap();
        assert!((e.values()[0] - 1.0).abs() < 1e-12);
        let v = e.vector(0);
        let dot: f64 = v.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-12);

        let m2 = SymMatrix::<f64>::from_rows(&[vec![1.0, 0.5], vec![0.5, 0.25]]).unwrap();
        let e = k_eigs(&m2, 1).unwrap();
        assert!((e.values()[0] - 1.25).abs() < 1e-12);
        let v = e.vector(0);
        assert!((v[0] / v[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&SymMatrix::<f64>::identity(3), 1e-6).unwrap(), 3);
        assert_eq!(numerical_rank(&SymMatrix::outer(&[1.0, 2.0, -1.0]), 1e-6).unwrap(), 1);
        let two_atom = SymMatrix::from_rows(&[
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(numerical_rank(&two_atom, 1e-6).unwrap(), 2);
        assert!(numerical_rank(&two_atom, 0.0).is_err());
    }

    #[test]
    fn rank_monotone_in_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_sym(&mut rng, 6);
            let mut prev = usize::MAX;
            for tau in [1e-12, 1e-6, 1e-3, 1e-1, 0.5, 0.9] {
                let r = numerical_rank(&a, tau).unwrap();
                assert!(r <= prev);
                prev = r;
            }
        }
    }

    #[test]
    fn rank1_factor_examples() {
        assert_eq!(rank1_factor(0.0, &[1.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let s5 = 5f64.sqrt();
        let u = rank1_factor(1.25, &[2.0 / s5, 1.0 / s5]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12 && (u[1] - 0.5).abs() < 1e-12);
        let u = rank1_factor(1.25, &[-2.0 / s5, -1.0 / s5]).unwrap();
        assert!(u[0] > 0.0);
        let rec = SymMatrix::outer(&u);
        let want = SymMatrix::outer(&[2.0 / s5, 1.0 / s5]).scaled(1.25);
        assert!(rec.sub(&want).frob_norm() < 1e-12);
        assert!(rank1_factor(-1.0, &[1.0]).is_err());
        assert!(rank1_factor(1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn frob_examples() {
        let i2 = SymMatrix::<f64>::identity(2);
        assert_eq!(frob_inner(&i2, &i2).unwrap(), 2.0);
        let a = SymMatrix::<f64>::from_rows(&[vec![1.0, -2.0], vec![-2.0, 3.0]]).unwrap();
        assert!((frob_inner(&a, &a).unwrap() - a.frob_norm().powi(2)).abs() < 1e-12);
        assert_eq!(frob_inner(&a, &a).unwrap(), 18.0);
        let d = SymMatrix::diag(&[1.0, 2.0]);
        let s = SymMatrix::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(frob_inner(&d, &s).unwrap(), 0.0);
        assert!(frob_inner(&d, &SymMatrix::identity(3)).is_err());
    }

    #[test]
    fn sparse_inner_matches_dense() {
        let mut s = SparseSym::new(3);
        s.add(0, 0, 1.0);
        s.add(2, 1, -2.0);
        s.add(1, 2, 0.5);
        s.compact();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_sym(&mut rng, 3);
        let d = s.to_dense();
        assert!((s.inner_dense(&a) - d.frob_inner(&a).unwrap()).abs() < 1e-14);
        assert!((s.norm_sq() - d.frob_inner(&d).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn works_in_f32() {
        let a = SymMatrix::<f32>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eig(&a).unwrap();
        assert!((e.values()[0] - 3.0).abs() < 1e-5);
        assert!((e.values()[1] - 1.0).abs() < 1e-5);
    }
}
