//! Moment and localizing blocks of the relaxation, the block registry with its
//! block-to-constraint (`F`) and constraint-to-variable (`G`) maps, the
//! assembled affine operator, and the lift between levels.
//!
//! Every block is an affine function of the pseudo-moment vector `y`:
//!
//! ```text
//! Mbar_b(y) = sum_{alpha >= 1} M_alpha^b y_alpha - M0^b
//! ```
//!
//! where the coefficient of `y_0` is folded into `-M0^b` using `y_0 = 1`.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::admm::BlockDiagState;
use crate::error::{Error, Result};
use crate::linalg::{SparseSym, SymMatrix};
use crate::poly::{full_basis, half_degree, Monomial, Polynomial, PopInstance};
use crate::scalar::Real;

/// Coordinate system of `y`: all monomials of degree `<= 2w`, graded-lex.
#[derive(Clone, Debug)]
pub struct MomentIndex {
    n: usize,
    level: u32,
    monomials: Vec<Monomial>,
    lookup: HashMap<Monomial, usize>,
}

impl MomentIndex {
    pub fn new(n: usize, level: u32) -> Self {
        let monomials = full_basis(n, 2 * level).monomials().to_vec();
        let lookup = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        MomentIndex {
            n,
            level,
            monomials,
            lookup,
        }
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.lookup.get(m).copied()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn max_degree(&self) -> u32 {
        2 * self.level
    }

    pub fn nvars(&self) -> usize {
        self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Moment,
    /// Localizing block of constraint `k` (0-based).
    Localizing(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BlockId {
    pub kind: BlockKind,
    pub order: u32,
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            BlockKind::Moment => write!(f, "moment[{}]", self.order),
            BlockKind::Localizing(k) => write!(f, "localizing{}[{}]", k + 1, self.order),
        }
    }
}

/// One PSD block: its row basis and per-coordinate coefficient matrices.
#[derive(Clone, Debug)]
pub struct BlockSpec<T> {
    id: BlockId,
    dim: usize,
    row_basis: Vec<Monomial>,
    coeffs: BTreeMap<usize, SparseSym<T>>,
    const_part: SparseSym<T>,
}

impl<T: Real> BlockSpec<T> {
    /// A block given directly by its coefficient matrices. `coeffs` must not
    /// contain coordinate 0; its contribution belongs in `const_part` (`M0`,
    /// entering with a minus sign).
    pub fn from_parts(
        id: BlockId,
        dim: usize,
        coeffs: BTreeMap<usize, SparseSym<T>>,
        const_part: SparseSym<T>,
    ) -> Result<Self> {
        if coeffs.contains_key(&0) {
            return Err(Error::InvalidArgument(
                "coordinate 0 is pinned; use const_part".into(),
            ));
        }
        if coeffs.values().chain([&const_part]).any(|m| m.dim() != dim) {
            return Err(Error::InvalidArgument("coefficient dimension mismatch".into()));
        }
        let coeffs = coeffs.into_iter().filter(|(_, m)| !m.is_empty()).collect();
        Ok(BlockSpec {
            id,
            dim,
            row_basis: Vec::new(),
            coeffs,
            const_part,
        })
    }

    pub fn id(&self) -> BlockId {
        self.id
    }

    pub fn kind(&self) -> BlockKind {
        self.id.kind
    }

    pub fn order(&self) -> u32 {
        self.id.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row_basis(&self) -> &[Monomial] {
        &self.row_basis
    }

    /// Coordinates (excluding 0) with a nonzero coefficient matrix, ascending.
    pub fn coords(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn coeff(&self, alpha: usize) -> Option<&SparseSym<T>> {
        self.coeffs.get(&alpha)
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, SparseSym<T>> {
        &self.coeffs
    }

    /// `M0^b`.
    pub fn const_part(&self) -> &SparseSym<T> {
        &self.const_part
    }

    pub fn max_coord(&self) -> usize {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    /// `Mbar_b(y)`.
    pub fn value(&self, y: &[T]) -> SymMatrix<T> {
        let mut m = SymMatrix::zeros(self.dim);
        self.const_part.add_scaled_into(-T::one(), &mut m);
        for (&alpha, c) in &self.coeffs {
            c.add_scaled_into(y[alpha], &mut m);
        }
        m
    }

    fn from_entries(
        id: BlockId,
        row_basis: Vec<Monomial>,
        mut entry: impl FnMut(&Monomial, &Monomial) -> Vec<(Monomial, T)>,
        idx: &MomentIndex,
    ) -> Result<Self> {
        let dim = row_basis.len();
        let mut coeffs: BTreeMap<usize, SparseSym<T>> = BTreeMap::new();
        let mut const_part = SparseSym::new(dim);
        for r in 0..dim {
            for c in 0..=r {
                for (m, v) in entry(&row_basis[r], &row_basis[c]) {
                    let pos = idx.position(&m).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "monomial {m:?} outside the moment index of degree {}",
                            idx.max_degree()
                        ))
                    })?;
                    if pos == 0 {
                        const_part.add(r, c, -v);
                    } else {
                        coeffs
                            .entry(pos)
                            .or_insert_with(|| SparseSym::new(dim))
                            .add(r, c, v);
                    }
                }
            }
        }
        const_part.compact();
        for m in coeffs.values_mut() {
            m.compact();
        }
        coeffs.retain(|_, m| !m.is_empty());
        Ok(BlockSpec {
            id,
            dim,
            row_basis,
            coeffs,
            const_part,
        })
    }
}

/// Moment block `M_w(y)`: entry `(beta, gamma)` is `y_{beta+gamma}`.
pub fn build_moment_block<T: Real>(n: usize, w: u32, idx: &MomentIndex) -> Result<BlockSpec<T>> {
    if idx.nvars() != n {
        return Err(Error::DimensionMismatch {
            expected: idx.nvars(),
            found: n,
        });
    }
    let basis = full_basis(n, w).monomials().to_vec();
    BlockSpec::from_entries(
        BlockId {
            kind: BlockKind::Moment,
            order: w,
        },
        basis,
        |b, g| vec![(b.mul(g), T::one())],
        idx,
    )
}

/// Localizing block of `f_k` at level `w`, over the basis of order
/// `w - ceil(deg f_k / 2)`: entry `(beta, gamma)` is
/// `sum_delta c_k(delta) y_{beta+gamma+delta}`.
pub fn build_localizing_block<T: Real>(
    f: &Polynomial<T>,
    k: usize,
    w: u32,
    idx: &MomentIndex,
) -> Result<BlockSpec<T>> {
    let v = half_degree(f);
    if w < v {
        return Err(Error::BlockUnavailable {
            constraint: k,
            level: w as usize,
        });
    }
    let order = w - v;
    let basis = full_basis(f.nvars(), order).monomials().to_vec();
    let terms: Vec<(Monomial, T)> = f.terms().map(|(m, c)| (m.clone(), c)).collect();
    BlockSpec::from_entries(
        BlockId {
            kind: BlockKind::Localizing(k),
            order,
        },
        basis,
        |b, g| {
            let bg = b.mul(g);
            terms.iter().map(|(d, c)| (bg.mul(d), *c)).collect()
        },
        idx,
    )
}

/// All blocks of one level with the `F` and `G` maps.
#[derive(Clone, Debug)]
pub struct BlockSet<T> {
    pub level: u32,
    pub blocks: Vec<BlockSpec<T>>,
    /// Block to constraint; the moment block has no entry.
    pub f_map: BTreeMap<BlockId, usize>,
    /// Constraint to the variables it involves.
    pub g_map: Vec<Vec<usize>>,
}

fn level_blocks<T: Real>(inst: &PopInstance<T>, w: u32, idx: &MomentIndex) -> Result<Vec<BlockSpec<T>>> {
    let mut out = vec![build_moment_block(inst.nvars(), w, idx)?];
    for (k, c) in inst.constraints().iter().enumerate() {
        match build_localizing_block(&c.poly, k, w, idx) {
            Ok(b) => out.push(b),
            Err(Error::BlockUnavailable { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Enumerates the blocks of level `w`. With a seed, the deterministic `F` map
/// is cross-checked against the randomized perturbation probe.
pub fn blocks<T: Real>(
    inst: &PopInstance<T>,
    w: u32,
    idx: &MomentIndex,
    seed: Option<u64>,
) -> Result<BlockSet<T>> {
    if w == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let blocks = level_blocks(inst, w, idx)?;
    let f_map: BTreeMap<BlockId, usize> = blocks
        .iter()
        .filter_map(|b| match b.kind() {
            BlockKind::Localizing(k) => Some((b.id(), k)),
            BlockKind::Moment => None,
        })
        .collect();
    let g_map = inst.constraints().iter().map(|c| c.poly.variables()).collect();

    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probed = probe_block_map(inst, w, idx, &mut rng)?;
        for (j, found) in probed {
            let expected: Vec<BlockId> = f_map
                .iter()
                .filter(|(_, &k)| k == j)
                .map(|(id, _)| *id)
                .collect();
            if found != expected {
                return Err(Error::ProbeMismatch(j));
            }
        }
    }

    Ok(BlockSet {
        level: w,
        blocks,
        f_map,
        g_map,
    })
}

/// Randomized recovery of `F`: perturb the coefficients of `f_j` by a factor
/// `1 + u`, `u ~ U[0.1, 0.2]`, evaluate all blocks at a random `y` and report
/// the blocks whose value changed.
pub fn probe_block_map<T: Real, R: Rng>(
    inst: &PopInstance<T>,
    w: u32,
    idx: &MomentIndex,
    rng: &mut R,
) -> Result<BTreeMap<usize, Vec<BlockId>>> {
    let base = level_blocks(inst, w, idx)?;
    let mut out = BTreeMap::new();
    for j in 0..inst.num_constraints() {
        let mut perturbed = PopInstance::new(inst.nvars(), inst.objective().clone())?;
        for (k, c) in inst.constraints().iter().enumerate() {
            let poly = if k == j {
                c.poly
                    .map_coeffs(|_, v| v * (T::one() + T::lit(rng.gen_range(0.1..=0.2))))
            } else {
                c.poly.clone()
            };
            perturbed = perturbed.with_constraint(c.name.as_deref(), poly)?;
        }
        let other = level_blocks(&perturbed, w, idx)?;
        let mut y: Vec<T> = (0..idx.len()).map(|_| T::lit(rng.gen::<f64>())).collect();
        y[0] = T::one();
        let mut hit = Vec::new();
        for (a, b) in base.iter().zip(&other) {
            debug_assert_eq!(a.id(), b.id());
            if a.value(&y).sub(&b.value(&y)).max_abs() > T::zero() {
                hit.push(a.id());
            }
        }
        out.insert(j, hit);
    }
    Ok(out)
}

/// Active (`B_q`) and pending (`Bbar_q`) blocks of the current level.
#[derive(Clone, Debug)]
pub struct BlockRegistry<T> {
    level: u32,
    active: Vec<BlockSpec<T>>,
    pending: Vec<BlockSpec<T>>,
    f_map: BTreeMap<BlockId, usize>,
    g_map: Vec<Vec<usize>>,
    total: usize,
}

impl<T: Real> BlockRegistry<T> {
    /// Every block of the level active.
    pub fn all_active(set: BlockSet<T>) -> Self {
        let total = set.blocks.len();
        BlockRegistry {
            level: set.level,
            active: set.blocks,
            pending: Vec::new(),
            f_map: set.f_map,
            g_map: set.g_map,
            total,
        }
    }

    /// Only the moment block active; localizing blocks pending.
    pub fn moment_only(set: BlockSet<T>) -> Self {
        let total = set.blocks.len();
        let (active, pending) = set
            .blocks
            .into_iter()
            .partition(|b| b.kind() == BlockKind::Moment);
        BlockRegistry {
            level: set.level,
            active,
            pending,
            f_map: set.f_map,
            g_map: set.g_map,
            total,
        }
    }

    /// Moves to the next level with the moment block replaced by its
    /// higher-order version and the active localizing blocks kept at their
    /// current order. The level's localizing blocks become pending, except
    /// those already active.
    pub fn advance(&self, set: BlockSet<T>) -> Self {
        let mut active = Vec::with_capacity(self.active.len());
        let mut pending = Vec::new();
        let total = set.blocks.len();
        let mut next = set.blocks.into_iter();
        for b in next.by_ref() {
            if b.kind() == BlockKind::Moment {
                active.push(b);
                break;
            }
            pending.push(b);
        }
        for b in &self.active {
            if b.kind() != BlockKind::Moment {
                active.push(b.clone());
            }
        }
        let pending = pending
            .into_iter()
            .chain(next)
            .filter(|b| !active.iter().any(|a| a.id() == b.id()))
            .collect();
        let f_map = self
            .f_map
            .iter()
            .map(|(k, v)| (*k, *v))
            .chain(set.f_map)
            .collect();
        BlockRegistry {
            level: set.level,
            active,
            pending,
            f_map,
            g_map: set.g_map,
            total,
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn active(&self) -> &[BlockSpec<T>] {
        &self.active
    }

    pub fn pending(&self) -> &[BlockSpec<T>] {
        &self.pending
    }

    /// Number of blocks in the full relaxation of this level.
    pub fn total(&self) -> usize {
        self.total
    }

    /// `F(b)`.
    pub fn constraint_of(&self, id: BlockId) -> Option<usize> {
        self.f_map.get(&id).copied()
    }

    /// `G(k)`.
    pub fn variables_of(&self, k: usize) -> &[usize] {
        &self.g_map[k]
    }

    pub fn num_constraints(&self) -> usize {
        self.g_map.len()
    }

    pub fn pending_for_constraint(&self, k: usize) -> Option<BlockId> {
        self.pending
            .iter()
            .find(|b| b.kind() == BlockKind::Localizing(k))
            .map(BlockSpec::id)
    }

    pub fn moment_position(&self) -> Option<usize> {
        self.active.iter().position(|b| b.kind() == BlockKind::Moment)
    }

    /// Moves a pending block into the active list. An active block of the same
    /// kind (a lower-order version) is replaced in place; otherwise the block
    /// is appended. Returns `false` when `id` is not pending.
    pub fn activate(&mut self, id: BlockId) -> bool {
        let Some(pos) = self.pending.iter().position(|b| b.id() == id) else {
            return false;
        };
        let b = self.pending.remove(pos);
        if let Some(slot) = self.active.iter_mut().find(|a| a.kind() == b.kind()) {
            *slot = b;
        } else {
            self.active.push(b);
        }
        true
    }
}

/// The relaxation restricted to the active blocks: cost vector `c` over the
/// moment index and the per-coordinate block incidence.
#[derive(Clone, Debug)]
pub struct AggregateOperator<T> {
    cost: Vec<T>,
    blocks: Vec<BlockSpec<T>>,
    occurrences: Vec<Vec<usize>>,
    coord_norm_sq: Vec<T>,
}

impl<T: Real> AggregateOperator<T> {
    pub fn from_parts(cost: Vec<T>, blocks: Vec<BlockSpec<T>>) -> Result<Self> {
        if cost.is_empty() {
            return Err(Error::InvalidArgument("empty moment vector".into()));
        }
        let len = cost.len();
        let mut occurrences = vec![Vec::new(); len];
        let mut coord_norm_sq = vec![T::zero(); len];
        for (p, b) in blocks.iter().enumerate() {
            if b.max_coord() >= len {
                return Err(Error::InvalidArgument(format!(
                    "block {} references coordinate {} beyond {len}",
                    b.id(),
                    b.max_coord()
                )));
            }
            for (&alpha, c) in b.coeffs() {
                occurrences[alpha].push(p);
                coord_norm_sq[alpha] += c.norm_sq();
            }
        }
        Ok(AggregateOperator {
            cost,
            blocks,
            occurrences,
            coord_norm_sq,
        })
    }

    pub fn len(&self) -> usize {
        self.cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost.is_empty()
    }

    pub fn cost(&self) -> &[T] {
        &self.cost
    }

    pub fn blocks(&self) -> &[BlockSpec<T>] {
        &self.blocks
    }

    /// Positions of the blocks that contain coordinate `i`.
    pub fn blocks_with(&self, i: usize) -> &[usize] {
        &self.occurrences[i]
    }

    /// `sum_b <M_i^b, M_i^b>`.
    pub fn coord_norm_sq(&self, i: usize) -> T {
        self.coord_norm_sq[i]
    }

    /// `c^T y`.
    pub fn objective(&self, y: &[T]) -> T {
        self.cost.iter().zip(y).map(|(&c, &v)| c * v).sum()
    }

    pub fn block_values(&self, y: &[T]) -> Vec<SymMatrix<T>> {
        self.blocks.iter().map(|b| b.value(y)).collect()
    }

    pub fn moment_position(&self) -> Option<usize> {
        self.blocks.iter().position(|b| b.kind() == BlockKind::Moment)
    }
}

/// Objective coefficients laid out over the moment index.
pub fn cost_vector<T: Real>(objective: &Polynomial<T>, idx: &MomentIndex) -> Result<Vec<T>> {
    let mut cost = vec![T::zero(); idx.len()];
    for (m, c) in objective.terms() {
        let pos = idx.position(m).ok_or(Error::ObjectiveOutOfRange {
            degree: m.degree(),
            max_degree: idx.max_degree(),
        })?;
        cost[pos] += c;
    }
    Ok(cost)
}

/// Builds the operator of `R(w, B_q)` from the registry's active blocks.
pub fn assemble<T: Real>(
    inst: &PopInstance<T>,
    registry: &BlockRegistry<T>,
    idx: &MomentIndex,
) -> Result<AggregateOperator<T>> {
    let cost = cost_vector(inst.objective(), idx)?;
    AggregateOperator::from_parts(cost, registry.active().to_vec())
}

fn embed<T: Real>(m: &SymMatrix<T>, dim: usize, fill_diag: T) -> SymMatrix<T> {
    let old = m.dim();
    SymMatrix::from_fn(dim, |r, c| {
        if r < old && c < old {
            m.get(r, c)
        } else if r == c {
            fill_diag
        } else {
            T::zero()
        }
    })
}

/// Re-aligns a solver state with a new active block list over a moment index
/// of length `new_len`.
///
/// `y` is extended with zeros. A block whose kind was active before keeps its
/// `X`, `Z` as the leading principal submatrix; new diagonal entries of `X`
/// are 1 and of `Z` are 0. Blocks without a predecessor start at `X = I`,
/// `Z = 0`.
pub fn lift<T: Real>(
    state: &BlockDiagState<T>,
    old_blocks: &[BlockSpec<T>],
    new_blocks: &[BlockSpec<T>],
    new_len: usize,
) -> Result<BlockDiagState<T>> {
    if state.x.len() != old_blocks.len() || state.z.len() != old_blocks.len() {
        return Err(Error::ShapeMismatch(format!(
            "state has {} blocks, block list has {}",
            state.x.len(),
            old_blocks.len()
        )));
    }
    if new_len < state.y.len() {
        return Err(Error::ShapeMismatch(format!(
            "cannot shrink y from {} to {new_len}",
            state.y.len()
        )));
    }
    let mut y = state.y.clone();
    y.resize(new_len, T::zero());
    let mut x = Vec::with_capacity(new_blocks.len());
    let mut z = Vec::with_capacity(new_blocks.len());
    for b in new_blocks {
        match old_blocks.iter().position(|o| o.kind() == b.kind()) {
            Some(p) => {
                if old_blocks[p].dim() > b.dim() {
                    return Err(Error::ShapeMismatch(format!(
                        "block {} shrinks from {} to {}",
                        b.id(),
                        old_blocks[p].dim(),
                        b.dim()
                    )));
                }
                x.push(embed(&state.x[p], b.dim(), T::one()));
                z.push(embed(&state.z[p], b.dim(), T::zero()));
            }
            None => {
                x.push(SymMatrix::identity(b.dim()));
                z.push(SymMatrix::zeros(b.dim()));
            }
        }
    }
    Ok(BlockDiagState { y, x, z, k: state.k })
}
