//! Brute-force reference optima for small instances and point-measure moments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moment::MomentIndex;
use crate::poly::{Polynomial, PopInstance};
use crate::scalar::Real;

/// Feasibility tolerance for `f_k(x) >= -FEAS_TOL`.
pub const FEAS_TOL: f64 = 1e-9;
const MAX_GRID_POINTS: usize = 50_000_000;
const STARTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub grid_resolution: usize,
    /// Accepted refinement moves over all starts.
    pub refinements: usize,
}

/// `y_alpha = x^alpha` over the index.
pub fn dirac_moments<T: Real>(x: &[T], idx: &MomentIndex) -> Vec<T> {
    idx.monomials().iter().map(|m| m.eval(x)).collect()
}

// r^2 - a * sum x_i^2 with a > 0, r^2 > 0 gives radius sqrt(r^2 / a)
fn ball_radius(p: &Polynomial<f64>) -> Option<f64> {
    let n = p.nvars();
    if p.num_terms() != n + 1 {
        return None;
    }
    let mut c0 = None;
    let mut a = None;
    for (m, c) in p.terms() {
        if m.is_one() {
            c0 = Some(c);
        } else if m.degree() == 2 && m.expo().contains(&2) {
            match a {
                None => a = Some(-c),
                Some(v) if v == -c => {}
                _ => return None,
            }
        } else {
            return None;
        }
    }
    match (c0, a) {
        (Some(c0), Some(a)) if c0 > 0.0 && a > 0.0 => Some((c0 / a).sqrt()),
        _ => None,
    }
}

/// The instance's box, or the bounding box of a ball constraint.
pub fn search_box(inst: &PopInstance<f64>) -> Result<Vec<(f64, f64)>> {
    if let Some(b) = inst.bounds() {
        return Ok(b.to_vec());
    }
    inst.constraints()
        .iter()
        .filter_map(|c| ball_radius(&c.poly))
        .reduce(f64::min)
        .map(|r| vec![(-r, r); inst.nvars()])
        .ok_or_else(|| Error::NoBox("instance has neither a box nor a ball constraint".into()))
}

fn evaluate(inst: &PopInstance<f64>, x: &[f64]) -> Option<f64> {
    for c in inst.constraints() {
        if c.poly.evaluate(x).ok()? < -FEAS_TOL {
            return None;
        }
    }
    inst.objective().evaluate(x).ok().filter(|v| v.is_finite())
}

fn inside(x: &[f64], bounds: &[(f64, f64)]) -> bool {
    x.iter().zip(bounds).all(|(&v, &(lo, hi))| v >= lo && v <= hi)
}

// Pattern search over a (2r+1)^n stencil, halving the step whenever the
// best stencil point is interior.
fn refine(inst: &PopInstance<f64>, bounds: &[(f64, f64)], x0: &[f64], f0: f64, h0: &[f64]) -> (Vec<f64>, f64, usize) {
    const R: i64 = 2;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut f = f0;
    let mut h = h0.to_vec();
    let mut moves = 0;
    let side = (2 * R + 1) as usize;
    let count = side.pow(n as u32);
    for _ in 0..400 {
        if h.iter().zip(bounds).all(|(&s, &(lo, hi))| s <= 1e-13 * (1.0 + lo.abs().max(hi.abs()))) {
            break;
        }
        let mut best: Option<(f64, Vec<f64>, bool)> = None;
        let mut p = vec![0.0; n];
        for code in 0..count {
            let mut rem = code;
            let mut edge = false;
            for i in 0..n {
                let k = (rem % side) as i64 - R;
                rem /= side;
                edge |= k.abs() == R;
                p[i] = x[i] + k as f64 * h[i];
            }
            if !inside(&p, bounds) {
                continue;
            }
            if let Some(v) = evaluate(inst, &p) {
                if v < f && best.as_ref().is_none_or(|(bv, _, _)| v < *bv) {
                    best = Some((v, p.clone(), edge));
                }
            }
        }
        match best {
            Some((v, p, edge)) => {
                x = p;
                f = v;
                moves += 1;
                if !edge {
                    h.iter_mut().for_each(|s| *s *= 0.5);
                }
            }
            None => h.iter_mut().for_each(|s| *s *= 0.5),
        }
    }
    (x, f, moves)
}

/// Minimizes `f_0` over the feasible points of a uniform grid with
/// `resolution` points per axis, then refines the best starts locally.
/// `bounds` overrides the instance's search box.
pub fn grid_multistart(
    inst: &PopInstance<f64>,
    bounds: Option<&[(f64, f64)]>,
    resolution: usize,
) -> Result<OracleResult> {
    let n = inst.nvars();
    if n > 4 {
        return Err(Error::InvalidArgument(format!("grid oracle supports n <= 4, got {n}")));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2".into()));
    }
    let bounds = match bounds {
        Some(b) => b.to_vec(),
        None => search_box(inst)?,
    };
    if bounds.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bounds.len(),
        });
    }
    if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::InvalidArgument("box must be finite with lo <= hi".into()));
    }
    let total = resolution
        .checked_pow(n as u32)
        .filter(|&t| t <= MAX_GRID_POINTS)
        .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
    let step: Vec<f64> = bounds
        .iter()
        .map(|&(lo, hi)| (hi - lo) / (resolution - 1) as f64)
        .collect();

    // best STARTS points by (f, lexicographic grid index)
    let mut starts: Vec<(f64, usize, Vec<f64>)> = Vec::with_capacity(STARTS + 1);
    let mut x = vec![0.0; n];
    for code in 0..total {
        let mut rem = code;
        for i in (0..n).rev() {
            let k = rem % resolution;
            rem /= resolution;
            x[i] = if k == resolution - 1 {
                bounds[i].1
            } else {
                bounds[i].0 + k as f64 * step[i]
            };
        }
        let Some(v) = evaluate(inst, &x) else { continue };
        if starts.len() == STARTS && v >= starts[STARTS - 1].0 {
            continue;
        }
        let pos = starts.partition_point(|(sv, _, _)| *sv <= v);
        starts.insert(pos, (v, code, x.clone()));
        starts.truncate(STARTS);
    }
    if starts.is_empty() {
        return Err(Error::NoFeasiblePoint);
    }

    let mut best = (starts[0].0, starts[0].2.clone());
    let mut refinements = 0;
    for (v, _, p) in &starts {
        let (rx, rf, moves) = refine(inst, &bounds, p, *v, &step);
        refinements += moves;
        if rf < best.0 {
            best = (rf, rx);
        }
    }
    Ok(OracleResult {
        x_best: best.1,
        f_best: best.0,
        grid_resolution: resolution,
        refinements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, terms: &[(f64, &[u32])]) -> Polynomial<f64> {
        Polynomial::from_terms(n, terms.iter().map(|(c, e)| (*c, e.to_vec()))).unwrap()
    }

    #[test]
    fn dirac_examples() {
        let idx = MomentIndex::new(1, 2);
        assert_eq!(dirac_moments(&[2.0], &idx), vec![1.0, 2.0, 4.0, 8.0, 16.0]);
        assert_eq!(dirac_moments(&[0.0], &idx), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let a = dirac_moments(&[1.0], &idx);
        let b = dirac_moments(&[-1.0], &idx);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(u, v)| 0.5 * (u + v)).collect();
        assert_eq!(mix, vec![1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn boundary_minimum() {
        let inst = PopInstance::new(1, poly(1, &[(1.0, &[2])]))
            .unwrap()
            .with_constraint(None, poly(1, &[(-1.0, &[0]), (1.0, &[1])]))
            .unwrap();
        let r = grid_multistart(&inst, Some(&[(-3.0, 3.0)]), 601).unwrap();
        assert!((r.f_best - 1.0).abs() < 1e-4);
    }

    #[test]
    fn trust_region_ball_box() {
        let inst = PopInstance::new(2, poly(2, &[(-1.0, &[1, 0]), (-1.0, &[0, 1])]))
            .unwrap()
            .with_constraint(None, poly(2, &[(1.0, &[0, 0]), (-1.0, &[2, 0]), (-1.0, &[0, 2])]))
            .unwrap();
        assert_eq!(search_box(&inst).unwrap(), vec![(-1.0, 1.0); 2]);
        let r = grid_multistart(&inst, None, 101).unwrap();
        assert!((r.f_best + 2f64.sqrt()).abs() < 1e-4, "{r:?}");
        let g = grid_multistart(&inst, None, 101).unwrap();
        assert_eq!(r, g);
    }

    #[test]
    fn infeasible_and_missing_box() {
        let inst = PopInstance::new(1, poly(1, &[(1.0, &[1])]))
            .unwrap()
            .with_constraint(None, poly(1, &[(-1.0, &[0]), (1.0, &[1])]))
            .unwrap()
            .with_constraint(None, poly(1, &[(-1.0, &[1])]))
            .unwrap();
        assert_eq!(
            grid_multistart(&inst, Some(&[(-3.0, 3.0)]), 101),
            Err(Error::NoFeasiblePoint)
        );
        assert!(matches!(grid_multistart(&inst, None, 101), Err(Error::NoBox(_))));
    }

    #[test]
    fn refinement_never_worsens() {
        let inst = PopInstance::new(2, poly(2, &[(1.0, &[4, 0]), (-2.0, &[1, 1]), (1.0, &[0, 2])]))
            .unwrap()
            .with_box(vec![(-2.0, 2.0); 2])
            .unwrap();
        let coarse = grid_multistart(&inst, None, 9).unwrap();
        let bounds = search_box(&inst).unwrap();
        let mut grid_best = f64::INFINITY;
        for i in 0..9 {
            for j in 0..9 {
                let x = [-2.0 + 0.5 * i as f64, -2.0 + 0.5 * j as f64];
                grid_best = grid_best.min(inst.objective().evaluate(&x).unwrap());
            }
        }
        assert!(coarse.f_best <= grid_best);
        assert!(inside(&coarse.x_best, &bounds));
    }
}
