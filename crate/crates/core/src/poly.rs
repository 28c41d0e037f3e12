//! Sparse multivariate polynomials, monomial index sets and the problem model.
//!
//! Monomials are ordered graded-lexicographically everywhere in the crate:
//! first by total degree, then lexicographically with `x1 > x2 > ... > xn`.
//! So for two variables the order is `1, x1, x2, x1^2, x1*x2, x2^2, ...`.
//! Because the order is graded, every degree-truncated basis is a prefix of
//! the larger ones, which the moment construction relies on.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Exponent vector of a monomial `x^alpha`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(expo: Vec<u32>) -> Self {
        Monomial(expo)
    }

    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    /// The monomial `x_i` (0-based variable index).
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn expo(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Product of monomials, i.e. the sum of exponent vectors.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        self.0
            .iter()
            .zip(x)
            .fold(T::one(), |acc, (&e, &xi)| acc * xi.powi(e as i32))
    }

    /// Indices of variables with a nonzero exponent.
    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial: monomial to coefficient, no stored zeros.
#[derive(Clone, PartialEq)]
pub struct Polynomial<T> {
    n: usize,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Real> Polynomial<T> {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: T) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::one(n), c);
        p
    }

    /// The polynomial `x_i` (0-based).
    pub fn var(n: usize, i: usize) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::var(n, i), T::one());
        p
    }

    /// Builds a polynomial from `(coef, exponents)` pairs. Repeated monomials
    /// are summed.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, Vec<u32>)>,
    {
        let mut p = Self::zero(n);
        for (c, e) in terms {
            if e.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: e.len(),
                });
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    /// Adds `c * m` in place, pruning the term if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: T) {
        debug_assert_eq!(m.nvars(), self.n);
        if c == T::zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == T::zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    /// Terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, T)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> T {
        self.terms.get(m).copied().unwrap_or_else(T::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &Monomial> + '_ {
        self.terms.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree over the support; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Variables that occur with a nonzero exponent in some term, ascending.
    pub fn variables(&self) -> Vec<usize> {
        let mut used = vec![false; self.n];
        for m in self.terms.keys() {
            for i in m.variables() {
                used[i] = true;
            }
        }
        (0..self.n).filter(|&i| used[i]).collect()
    }

    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self.terms.iter().map(|(m, &c)| c * m.eval(x)).sum())
    }

    pub fn multiply(&self, other: &Polynomial<T>) -> Result<Polynomial<T>> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.n);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Polynomial<T>) -> Result<Polynomial<T>> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: T) -> Polynomial<T> {
        let mut out = Polynomial::zero(self.n);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Applies `f` to every coefficient (used for perturbation probes).
    pub fn map_coeffs<F: FnMut(&Monomial, T) -> T>(&self, mut f: F) -> Polynomial<T> {
        let mut out = Polynomial::zero(self.n);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), f(m, c));
        }
        out
    }

    /// Converts the coefficient type.
    pub fn cast<U: Real>(&self) -> Polynomial<U> {
        let mut out = Polynomial::zero(self.n);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), U::lit(c.as_f64()));
        }
        out
    }

    fn check_dim(&self, other: &Polynomial<T>) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

impl<T: fmt::Debug> fmt::Debug for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{:?}*{:?}", c, m)?;
        }
        Ok(())
    }
}

/// The index set `{alpha : alpha_i = 0 for i not in C, sum_{i in C} alpha_i <= w}`
/// in graded-lex order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    n: usize,
    support: Vec<usize>,
    order: u32,
    monomials: Vec<Monomial>,
}

impl MonomialBasis {
    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    /// The vector `u(x) = (x^alpha)_alpha` over the basis.
    pub fn eval<T: Real>(&self, x: &[T]) -> Vec<T> {
        self.monomials.iter().map(|m| m.eval(x)).collect()
    }
}

/// Builds the graded-lex basis over variables `support` (0-based) up to degree `w`.
pub fn basis(n: usize, support: &[usize], w: u32) -> MonomialBasis {
    let mut support: Vec<usize> = support.iter().copied().filter(|&i| i < n).collect();
    support.sort_unstable();
    support.dedup();

    let mut monomials = Vec::new();
    let mut expo = vec![0u32; n];
    fn rec(
        pos: usize,
        left: u32,
        support: &[usize],
        expo: &mut Vec<u32>,
        out: &mut Vec<Monomial>,
    ) {
        if pos == support.len() {
            out.push(Monomial(expo.clone()));
            return;
        }
        for e in 0..=left {
            expo[support[pos]] = e;
            rec(pos + 1, left - e, support, expo, out);
        }
        expo[support[pos]] = 0;
    }
    rec(0, w, &support, &mut expo, &mut monomials);
    monomials.sort();

    MonomialBasis {
        n,
        support,
        order: w,
        monomials,
    }
}

/// Basis over all `n` variables.
/// `C(n + w, w)`, the number of monomials in `n` variables of degree `<= w`.
pub fn basis_size(n: usize, w: u32) -> usize {
    let w = w as usize;
    (1..=w).fold(1usize, |acc, k| acc * (n + k) / k)
}

pub fn full_basis(n: usize, w: u32) -> MonomialBasis {
    let all: Vec<usize> = (0..n).collect();
    basis(n, &all, w)
}

/// One inequality `f(x) >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    pub name: Option<String>,
    pub poly: Polynomial<T>,
}

/// Polynomial optimization problem: minimize `objective` subject to
/// `constraints[k](x) >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PopInstance<T> {
    n: usize,
    objective: Polynomial<T>,
    constraints: Vec<Constraint<T>>,
    bounds: Option<Vec<(T, T)>>,
}

impl<T: Real> PopInstance<T> {
    pub fn new(n: usize, objective: Polynomial<T>) -> Result<Self> {
        if objective.nvars() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: objective.nvars(),
            });
        }
        Ok(PopInstance {
            n,
            objective,
            constraints: Vec::new(),
            bounds: None,
        })
    }

    pub fn with_constraint(mut self, name: Option<&str>, poly: Polynomial<T>) -> Result<Self> {
        if poly.nvars() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: poly.nvars(),
            });
        }
        self.constraints.push(Constraint {
            name: name.map(str::to_owned),
            poly,
        });
        Ok(self)
    }

    /// Per-variable box, used only by the grid oracle.
    pub fn with_box(mut self, bounds: Vec<(T, T)>) -> Result<Self> {
        if bounds.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: bounds.len(),
            });
        }
        if bounds.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidArgument("box bound with lo > hi".into()));
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn objective(&self) -> &Polynomial<T> {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn bounds(&self) -> Option<&[(T, T)]> {
        self.bounds.as_deref()
    }

    /// Largest degree over the objective and all constraints.
    pub fn max_degree(&self) -> u32 {
        self.constraints
            .iter()
            .map(|c| c.poly.degree())
            .fold(self.objective.degree(), u32::max)
    }

    /// Smallest admissible relaxation level, `ceil(D / 2)`, at least 1.
    pub fn min_level(&self) -> u32 {
        self.max_degree().div_ceil(2).max(1)
    }

    pub fn cast<U: Real>(&self) -> PopInstance<U> {
        PopInstance {
            n: self.n,
            objective: self.objective.cast(),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint {
                    name: c.name.clone(),
                    poly: c.poly.cast(),
                })
                .collect(),
            bounds: self.bounds.as_ref().map(|b| {
                b.iter()
                    .map(|&(lo, hi)| (U::lit(lo.as_f64()), U::lit(hi.as_f64())))
                    .collect()
            }),
        }
    }
}

/// Localizing order offset `ceil(deg(f) / 2)`.
pub fn half_degree<T: Real>(p: &Polynomial<T>) -> u32 {
    p.degree().div_ceil(2)
}
