//! Rank-one point extraction from the order-one moment submatrix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{k_eigs, rank1_factor, SymMatrix};
use crate::poly::PopInstance;
use crate::scalar::Real;

/// Leading `(1+n) x (1+n)` block of the moment matrix, rows `1, x_1, .., x_n`.
pub fn second_order_submatrix<T: Real>(moment: &SymMatrix<T>, n: usize) -> Result<SymMatrix<T>> {
    if moment.dim() < n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            found: moment.dim(),
        });
    }
    Ok(moment.leading(n + 1))
}

/// `x = u[1..] / u[0]` for the top eigenpair `u = sqrt(lambda_1) v_1` of `m2`,
/// with the rank-one residual `||m2 - u u^T||_F / ||m2||_F`.
pub fn extract_point<T: Real>(m2: &SymMatrix<T>) -> Result<(Vec<T>, T)> {
    if m2.dim() < 2 {
        return Err(Error::InvalidArgument("need at least one variable".into()));
    }
    let top = k_eigs(m2, 1)?;
    let lambda = top.values()[0];
    if !(lambda > T::zero()) {
        return Err(Error::ExtractionDegenerate(format!(
            "top eigenvalue {lambda} is not positive"
        )));
    }
    let v = top.vector(0);
    if v[0].abs() < T::lit(1e-8) {
        return Err(Error::ExtractionDegenerate(format!(
            "leading component {} of the top eigenvector is zero",
            v[0]
        )));
    }
    let u = rank1_factor(lambda, v)?;
    let x = u[1..].iter().map(|&ui| ui / u[0]).collect();
    let norm = m2.frob_norm();
    let gap = if norm > T::zero() {
        m2.sub(&SymMatrix::outer(&u)).frob_norm() / norm
    } else {
        T::zero()
    };
    Ok((x, gap))
}

/// Constraints with `|min(f_k(x), 0)| > eps` and all violation magnitudes.
pub fn violated_constraints<T: Real>(
    inst: &PopInstance<T>,
    x: &[T],
    eps: T,
) -> Result<(Vec<usize>, Vec<T>)> {
    let mut idx = Vec::new();
    let mut mag = Vec::with_capacity(inst.num_constraints());
    for (k, c) in inst.constraints().iter().enumerate() {
        let v = (-c.poly.evaluate(x)?).max(T::zero());
        if v > eps {
            idx.push(k);
        }
        mag.push(v);
    }
    Ok((idx, mag))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate<T> {
    pub x: Vec<T>,
    /// `f_0(x)`.
    pub z_pop: T,
    /// `|min(f_k(x), 0)|` per constraint.
    pub violations: Vec<T>,
    pub rank1_gap: T,
}

impl<T: Real> Candidate<T> {
    pub fn max_violation(&self) -> T {
        self.violations.iter().fold(T::zero(), |m, &v| m.max(v))
    }
}

/// Extracts a candidate from the moment block and evaluates it on the instance.
pub fn extract_candidate<T: Real>(inst: &PopInstance<T>, moment: &SymMatrix<T>) -> Result<Candidate<T>> {
    let m2 = second_order_submatrix(moment, inst.nvars())?;
    let (x, rank1_gap) = extract_point(&m2)?;
    let z_pop = inst.objective().evaluate(&x)?;
    let (_, violations) = violated_constraints(inst, &x, T::zero())?;
    Ok(Candidate {
        x,
        z_pop,
        violations,
        rank1_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use proptest::prelude::*;

    #[test]
    fn submatrix_n1() {
        let m = SymMatrix::from_rows(&[
            vec![1.0, 2.0, 4.0],
            vec![2.0, 4.0, 8.0],
            vec![4.0, 8.0, 16.0],
        ])
        .unwrap();
        let want = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(second_order_submatrix(&m, 1).unwrap(), want);
        assert!(second_order_submatrix(&m, 3).is_err());
    }

    #[test]
    fn rank_one_examples() {
        let m = SymMatrix::<f64>::outer(&[1.0, 0.5, -0.25]);
        let (x, gap) = extract_point(&m).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] + 0.25).abs() < 1e-12);
        assert!(gap < 1e-12);

        let (x, _) = extract_point(&SymMatrix::<f64>::identity(2)).unwrap();
        assert_eq!(x, vec![0.0]);

        let m = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 0.5]]).unwrap();
        let (x, _) = extract_point(&m).unwrap();
        // top eigenvector of [[1, .5], [.5, .5]] is proportional to (1, 0.618..)
        assert!((x[0] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cases() {
        let m = SymMatrix::diag(&[0.0, 1.0]);
        assert!(matches!(extract_point(&m), Err(Error::ExtractionDegenerate(_))));
        let m = SymMatrix::diag(&[-1.0, -2.0]);
        assert!(matches!(extract_point(&m), Err(Error::ExtractionDegenerate(_))));
    }

    #[test]
    fn violations() {
        let f = Polynomial::from_terms(1, [(1.0, vec![0]), (-1.0, vec![2])]).unwrap();
        let inst = PopInstance::new(1, Polynomial::var(1, 0))
            .unwrap()
            .with_constraint(None, f)
            .unwrap();
        let (i, v) = violated_constraints(&inst, &[2.0], 1e-6).unwrap();
        assert_eq!(i, vec![0]);
        assert_eq!(v, vec![3.0]);
        let (i, v) = violated_constraints(&inst, &[0.5], 1e-6).unwrap();
        assert!(i.is_empty());
        assert_eq!(v, vec![0.0]);
    }

    proptest! {
        #[test]
        fn scale_invariant(x in prop::collection::vec(-5.0f64..5.0, 1..4), c in 0.01f64..100.0) {
            let mut u = vec![1.0];
            u.extend(&x);
            let m = SymMatrix::outer(&u);
            let (a, _) = extract_point(&m).unwrap();
            let (b, _) = extract_point(&m.scaled(c)).unwrap();
            for ((ai, bi), xi) in a.iter().zip(&b).zip(&x) {
                prop_assert!((ai - bi).abs() < 1e-9 * (1.0 + xi.abs()));
                prop_assert!((ai - xi).abs() < 1e-9 * (1.0 + xi.abs()));
            }
        }
    }
}
