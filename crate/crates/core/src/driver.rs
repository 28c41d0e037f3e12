//! The fine-grained hierarchy: per level, solve the active sub-relaxation,
//! activate the pending localizing blocks touched by violated constraints,
//! re-solve warm, and stop on the flat-extension or objective-gap tests.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::admm::{solve_relaxation, solve_relaxation_observed, BlockDiagState, SolveStats, SolverConfig};
use crate::error::{Error, Result};
use crate::extraction::{extract_candidate, violated_constraints, Candidate};
use crate::linalg::{numerical_rank, SymMatrix};
use crate::moment::{assemble, blocks, cost_vector, lift, BlockId, BlockRegistry, MomentIndex};
use crate::poly::{basis_size, PopInstance};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    FineGrained,
    /// Every block of each level active from the start.
    FullLevel,
}

/// Blocks active in the first solve at the lowest level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StartMode {
    #[default]
    AllBlocks,
    /// Only the moment block; localizing blocks enter through the violation rule.
    MomentOnly,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriverConfig {
    pub eps_feas: f64,
    pub eps_obj: f64,
    pub rank_tau: f64,
    /// Highest level solved; `None` means two above the lowest level.
    pub w_max: Option<u32>,
    pub solver: SolverConfig,
    pub strategy: Strategy,
    pub start: StartMode,
    /// Seed of the randomized block-map probe; `None` skips the probe.
    pub seed: Option<u64>,
    /// Also solve each new level cold and record its iteration count.
    pub compare_cold: bool,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            eps_feas: 1e-5,
            eps_obj: 1e-5,
            rank_tau: 1e-6,
            w_max: None,
            solver: SolverConfig::default(),
            strategy: Strategy::FineGrained,
            start: StartMode::AllBlocks,
            seed: Some(0),
            compare_cold: false,
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.eps_feas, "eps_feas"),
            (self.eps_obj, "eps_obj"),
            (self.rank_tau, "rank_tau"),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        self.solver.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    FlatExtension,
    ObjectiveGap,
    LevelCap,
    Diverged,
    /// Single-level solve that met the ADMM stopping test.
    Solved,
    /// Single-level solve that hit the iteration cap.
    NotConverged,
}

impl Status {
    pub fn is_success(self) -> bool {
        matches!(self, Status::FlatExtension | Status::ObjectiveGap | Status::Solved)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub w: u32,
    pub q_iterations: usize,
    pub blocks_active: usize,
    pub blocks_total: usize,
    pub s_history: Vec<usize>,
    /// `c^T y` after the last solve of the level.
    pub bound: f64,
    /// `c^T y` after each solve of the level.
    pub bound_history: Vec<f64>,
    pub dual_objective: f64,
    pub admm_iterations: Vec<usize>,
    /// Iterations of the level's first (warm-started) solve.
    pub warm_iterations: usize,
    /// Iterations of the same first solve from a cold start, when requested.
    pub cold_iterations: Option<usize>,
    pub added_blocks: Vec<String>,
    pub degenerate_extractions: usize,
    pub moment_ranks: Vec<usize>,
    pub flat_extension: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: Status,
    pub lower_bound: f64,
    pub dual_objective: f64,
    /// `|c^T y - dual objective|` of the final solve.
    pub gap: f64,
    /// `|z_SDP - z_POP|` at the final candidate.
    pub objective_gap: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub z_pop: Option<f64>,
    pub violations: Option<Vec<f64>>,
    /// The objective-gap test held at a point where no pending block was left.
    pub gap_test_passed_when_exhausted: bool,
    pub levels: Vec<LevelRecord>,
    pub iterations_total: usize,
    pub time_seconds: f64,
}

/// One row per ADMM outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub level: u32,
    pub q: usize,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub max_violation: f64,
    pub elapsed_s: f64,
}

/// Where the run stopped.
#[derive(Clone, Debug)]
pub struct HierarchyState<T> {
    pub w: u32,
    pub q: usize,
    pub idx: MomentIndex,
    pub registry: BlockRegistry<T>,
    pub state: BlockDiagState<T>,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome<T> {
    pub report: SolveReport,
    pub trace: Vec<TraceRow>,
    pub hierarchy: HierarchyState<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AddOutcome<T> {
    pub s: usize,
    pub added: Vec<BlockId>,
    pub violated: Vec<usize>,
    pub candidate: Option<Candidate<T>>,
}

/// The violation rule: extract a candidate from `moment`, collect the
/// constraints it violates beyond `eps`, and activate the pending block of
/// every constraint sharing a variable with one of them. A degenerate
/// extraction activates everything pending.
pub fn add_blocks<T: Real>(
    moment: &SymMatrix<T>,
    registry: &mut BlockRegistry<T>,
    inst: &PopInstance<T>,
    eps: T,
) -> Result<AddOutcome<T>> {
    let candidate = match extract_candidate(inst, moment) {
        Ok(c) => c,
        Err(Error::ExtractionDegenerate(_)) => {
            let ids: Vec<BlockId> = registry.pending().iter().map(|b| b.id()).collect();
            for &id in &ids {
                registry.activate(id);
            }
            return Ok(AddOutcome {
                s: ids.len(),
                added: ids,
                violated: Vec::new(),
                candidate: None,
            });
        }
        Err(e) => return Err(e),
    };
    let (violated, _) = violated_constraints(inst, &candidate.x, eps)?;
    let mut vars = vec![false; inst.nvars()];
    for &k in &violated {
        for &i in registry.variables_of(k) {
            vars[i] = true;
        }
    }
    let mut added = Vec::new();
    for j in 0..registry.num_constraints() {
        if !registry.variables_of(j).iter().any(|&i| vars[i]) {
            continue;
        }
        if let Some(id) = registry.pending_for_constraint(j) {
            registry.activate(id);
            added.push(id);
        }
    }
    Ok(AddOutcome {
        s: added.len(),
        added,
        violated,
        candidate: Some(candidate),
    })
}

/// Ranks of the nested leading blocks `M_0, .., M_w` of an order-`w` moment matrix.
pub fn moment_ranks<T: Real>(moment: &SymMatrix<T>, n: usize, w: u32, tau: T) -> Result<Vec<usize>> {
    let dim = basis_size(n, w);
    if moment.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: moment.dim(),
        });
    }
    (0..=w)
        .map(|t| {
            let k = basis_size(n, t);
            numerical_rank(&moment.leading(k), tau)
        })
        .collect()
}

/// `(D <= w and rk M_w = rk M_{w-1}) or (d <= w and rk M_w = rk M_{w-d})`.
pub fn flat_extension<T: Real>(
    moment: &SymMatrix<T>,
    n: usize,
    big_d: u32,
    d: u32,
    w: u32,
    tau: T,
) -> Result<bool> {
    if w == 0 {
        return Ok(false);
    }
    let ranks = moment_ranks(moment, n, w, tau)?;
    let rw = ranks[w as usize];
    let first = big_d <= w && rw == ranks[w as usize - 1];
    let second = d <= w && rw == ranks[(w - d) as usize];
    Ok(first || second)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveTest<T> {
    pub z_sdp: T,
    pub candidate: Option<Candidate<T>>,
    pub passed: bool,
}

impl<T: Real> ObjectiveTest<T> {
    pub fn gap(&self) -> Option<T> {
        self.candidate.as_ref().map(|c| (self.z_sdp - c.z_pop).abs())
    }
}

/// `|c^T y - f_0(x)| <= eps` for the candidate extracted from `moment`.
pub fn approximate_obj<T: Real>(
    inst: &PopInstance<T>,
    idx: &MomentIndex,
    y: &[T],
    moment: &SymMatrix<T>,
    eps: T,
) -> Result<ObjectiveTest<T>> {
    let cost = cost_vector(inst.objective(), idx)?;
    if y.len() != cost.len() {
        return Err(Error::DimensionMismatch {
            expected: cost.len(),
            found: y.len(),
        });
    }
    let z_sdp: T = cost.iter().zip(y).map(|(&c, &v)| c * v).sum();
    let candidate = match extract_candidate(inst, moment) {
        Ok(c) => Some(c),
        Err(Error::ExtractionDegenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let passed = candidate
        .as_ref()
        .is_some_and(|c| (z_sdp - c.z_pop).abs() <= eps);
    Ok(ObjectiveTest {
        z_sdp,
        candidate,
        passed,
    })
}

enum LevelEnd {
    Done,
    EarlyReturn,
    Diverged,
}

struct Run<'a, T: Real> {
    inst: &'a PopInstance<T>,
    cfg: &'a DriverConfig,
    start: Instant,
    trace: Vec<TraceRow>,
    levels: Vec<LevelRecord>,
    iterations: usize,
    last_stats: Option<SolveStats>,
    gap_when_exhausted: bool,
}

impl<'a, T: Real> Run<'a, T> {
    fn new(inst: &'a PopInstance<T>, cfg: &'a DriverConfig) -> Self {
        Run {
            inst,
            cfg,
            start: Instant::now(),
            trace: Vec::new(),
            levels: Vec::new(),
            iterations: 0,
            last_stats: None,
            gap_when_exhausted: false,
        }
    }

    fn solve_once(
        &mut self,
        registry: &BlockRegistry<T>,
        idx: &MomentIndex,
        warm: Option<BlockDiagState<T>>,
        q: usize,
    ) -> Result<(BlockDiagState<T>, SolveStats)> {
        let op = assemble(self.inst, registry, idx)?;
        let mpos = op.moment_position();
        let inst = self.inst;
        let start = self.start;
        let base = self.iterations;
        let level = registry.level();
        let trace = &mut self.trace;
        let (state, stats) = solve_relaxation_observed(&op, warm, &self.cfg.solver, &mut |rec, st| {
            let max_violation = mpos
                .and_then(|p| extract_candidate(inst, &st.x[p]).ok())
                .map_or(f64::NAN, |c| c.max_violation().as_f64());
            trace.push(TraceRow {
                iter: base + rec.iteration,
                level,
                q,
                objective: rec.objective,
                dual_objective: rec.dual_objective,
                primal_residual: rec.primal_residual,
                max_violation,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        })?;
        self.iterations += stats.iterations;
        self.last_stats = Some(stats.clone());
        Ok((state, stats))
    }

    fn run_level(
        &mut self,
        registry: &mut BlockRegistry<T>,
        state: &mut Option<BlockDiagState<T>>,
        idx: &MomentIndex,
        compare_cold: bool,
    ) -> Result<LevelEnd> {
        let eps_feas = T::lit(self.cfg.eps_feas);
        let eps_obj = T::lit(self.cfg.eps_obj);
        let mut rec = LevelRecord {
            w: registry.level(),
            q_iterations: 0,
            blocks_active: 0,
            blocks_total: registry.total(),
            s_history: Vec::new(),
            bound: f64::NAN,
            bound_history: Vec::new(),
            dual_objective: f64::NAN,
            admm_iterations: Vec::new(),
            warm_iterations: 0,
            cold_iterations: None,
            added_blocks: Vec::new(),
            degenerate_extractions: 0,
            moment_ranks: Vec::new(),
            flat_extension: None,
        };
        let mut q = 0;
        let end = loop {
            if q == 0 && compare_cold {
                let op = assemble(self.inst, registry, idx)?;
                let (_, cold) = solve_relaxation(&op, None, &self.cfg.solver)?;
                rec.cold_iterations = Some(cold.iterations);
            }
            let (st, stats) = self.solve_once(registry, idx, state.take(), q)?;
            if q == 0 {
                rec.warm_iterations = stats.iterations;
            }
            rec.admm_iterations.push(stats.iterations);
            rec.bound = stats.objective;
            rec.bound_history.push(stats.objective);
            rec.dual_objective = stats.dual_objective;

            let mpos = registry
                .moment_position()
                .ok_or_else(|| Error::InvalidArgument("no active moment block".into()))?;
            let old_active = registry.active().to_vec();
            let added = add_blocks(&st.x[mpos], registry, self.inst, eps_feas)?;
            q += 1;
            rec.s_history.push(added.s);
            if added.candidate.is_none() {
                rec.degenerate_extractions += 1;
            }
            rec.added_blocks.extend(added.added.iter().map(|id| id.to_string()));

            if added.s > 0 {
                let fresh = !stats.converged;
                *state = Some(if fresh {
                    let op = assemble(self.inst, registry, idx)?;
                    BlockDiagState::cold(&op)
                } else {
                    lift(&st, &old_active, registry.active(), idx.len())?
                });
                continue;
            }
            if stats.diverged {
                *state = Some(st);
                break LevelEnd::Diverged;
            }
            let test = approximate_obj(self.inst, idx, &st.y, &st.x[mpos], eps_obj)?;
            let exhausted = registry.pending().is_empty();
            *state = Some(st);
            if test.passed && !exhausted {
                break LevelEnd::EarlyReturn;
            }
            if test.passed && exhausted {
                self.gap_when_exhausted = true;
            }
            break LevelEnd::Done;
        };
        rec.q_iterations = q;
        rec.blocks_active = registry.active().len();
        self.levels.push(rec);
        Ok(end)
    }

    fn finish(
        mut self,
        status: Status,
        idx: MomentIndex,
        registry: BlockRegistry<T>,
        state: BlockDiagState<T>,
        q: usize,
    ) -> Result<SolveOutcome<T>> {
        let stats = self.last_stats.take().expect("at least one solve");
        let mpos = registry.moment_position().expect("moment block active");
        let test = approximate_obj(self.inst, &idx, &state.y, &state.x[mpos], T::lit(self.cfg.eps_obj))?;
        let objective_gap = test.gap().map(|g| g.as_f64());
        let cand = test.candidate;
        let report = SolveReport {
            status,
            lower_bound: stats.objective,
            dual_objective: stats.dual_objective,
            gap: stats.gap,
            objective_gap,
            x: cand.as_ref().map(|c| c.x.iter().map(|v| v.as_f64()).collect()),
            z_pop: cand.as_ref().map(|c| c.z_pop.as_f64()),
            violations: cand
                .as_ref()
                .map(|c| c.violations.iter().map(|v| v.as_f64()).collect()),
            gap_test_passed_when_exhausted: self.gap_when_exhausted,
            levels: self.levels,
            iterations_total: self.iterations,
            time_seconds: self.start.elapsed().as_secs_f64(),
        };
        Ok(SolveOutcome {
            report,
            trace: self.trace,
            hierarchy: HierarchyState {
                w: registry.level(),
                q,
                idx,
                registry,
                state,
            },
        })
    }
}

/// Runs the hierarchy and returns the report.
pub fn solve<T: Real>(inst: &PopInstance<T>, cfg: &DriverConfig) -> Result<SolveReport> {
    solve_detailed(inst, cfg).map(|o| o.report)
}

/// Runs the hierarchy, keeping the per-iteration trace and the final state.
pub fn solve_detailed<T: Real>(inst: &PopInstance<T>, cfg: &DriverConfig) -> Result<SolveOutcome<T>> {
    cfg.validate()?;
    let n = inst.nvars();
    let d = inst.min_level();
    let big_d = inst.max_degree();
    let w_max = cfg.w_max.unwrap_or(d + 2);
    if w_max < d {
        return Err(Error::InvalidArgument(format!(
            "w_max = {w_max} is below the lowest level {d}"
        )));
    }
    let tau = T::lit(cfg.rank_tau);
    let mut run = Run::new(inst, cfg);
    let mut idx = MomentIndex::new(n, d);
    let set = blocks(inst, d, &idx, cfg.seed)?;
    let mut registry = match (cfg.strategy, cfg.start) {
        (Strategy::FineGrained, StartMode::MomentOnly) => BlockRegistry::moment_only(set),
        _ => BlockRegistry::all_active(set),
    };
    let mut state: Option<BlockDiagState<T>> = None;
    let mut w = d;
    let status = loop {
        match run.run_level(&mut registry, &mut state, &idx, cfg.compare_cold && w > d)? {
            LevelEnd::EarlyReturn => break Status::ObjectiveGap,
            LevelEnd::Diverged => break Status::Diverged,
            LevelEnd::Done => {}
        }
        let st = state.as_ref().expect("level solved");
        let mpos = registry.moment_position().expect("moment block active");
        let rec = run.levels.last_mut().expect("level recorded");
        rec.moment_ranks = moment_ranks(&st.x[mpos], n, w, tau)?;
        if w > d {
            let flat = flat_extension(&st.x[mpos], n, big_d, d, w, tau)?;
            rec.flat_extension = Some(flat);
            if flat {
                break Status::FlatExtension;
            }
        }
        if w + 1 > w_max {
            break Status::LevelCap;
        }
        let next_idx = MomentIndex::new(n, w + 1);
        let set = blocks(inst, w + 1, &next_idx, cfg.seed)?;
        let next = match cfg.strategy {
            Strategy::FineGrained => registry.advance(set),
            Strategy::FullLevel => BlockRegistry::all_active(set),
        };
        let lifted = lift(st, registry.active(), next.active(), next_idx.len())?;
        state = Some(lifted);
        registry = next;
        idx = next_idx;
        w += 1;
    };
    let q = run.levels.last().map_or(0, |l| l.q_iterations);
    let state = state.expect("solved at least once");
    run.finish(status, idx, registry, state, q)
}

/// One solve of the full relaxation at level `w`.
pub fn run_full_level<T: Real>(inst: &PopInstance<T>, w: u32, cfg: &DriverConfig) -> Result<SolveOutcome<T>> {
    cfg.validate()?;
    let d = inst.min_level();
    if w < d {
        return Err(Error::InvalidArgument(format!("level {w} is below the lowest level {d}")));
    }
    let mut run = Run::new(inst, cfg);
    let idx = MomentIndex::new(inst.nvars(), w);
    let registry = BlockRegistry::all_active(blocks(inst, w, &idx, cfg.seed)?);
    let (state, stats) = run.solve_once(&registry, &idx, None, 0)?;
    let mpos = registry.moment_position().expect("moment block active");
    let status = if stats.diverged {
        Status::Diverged
    } else if stats.converged {
        Status::Solved
    } else {
        Status::NotConverged
    };
    run.levels.push(LevelRecord {
        w,
        q_iterations: 1,
        blocks_active: registry.active().len(),
        blocks_total: registry.total(),
        s_history: vec![0],
        bound: stats.objective,
        bound_history: vec![stats.objective],
        dual_objective: stats.dual_objective,
        admm_iterations: vec![stats.iterations],
        warm_iterations: stats.iterations,
        cold_iterations: None,
        added_blocks: Vec::new(),
        degenerate_extractions: 0,
        moment_ranks: moment_ranks(&state.x[mpos], inst.nvars(), w, T::lit(cfg.rank_tau))?,
        flat_extension: None,
    });
    run.finish(status, idx, registry, state, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::dirac_moments;
    use crate::poly::Polynomial;

    fn poly(n: usize, terms: &[(f64, &[u32])]) -> Polynomial<f64> {
        Polynomial::from_terms(n, terms.iter().map(|(c, e)| (*c, e.to_vec()))).unwrap()
    }

    fn moment_of(y: &[f64], n: usize, w: u32) -> SymMatrix<f64> {
        let idx = MomentIndex::new(n, w);
        crate::moment::build_moment_block::<f64>(n, w, &idx).unwrap().value(y)
    }

    #[test]
    fn flat_extension_fixtures() {
        let y = [1.0, 2.0, 4.0, 8.0, 16.0];
        assert!(flat_extension(&moment_of(&y, 1, 2), 1, 2, 1, 2, 1e-6).unwrap());
        let two = [1.0, 0.0, 1.0];
        assert!(!flat_extension(&moment_of(&two, 1, 1), 1, 2, 1, 1, 1e-6).unwrap());
        let two = [1.0, 0.0, 1.0, 0.0, 1.0];
        assert!(flat_extension(&moment_of(&two, 1, 2), 1, 2, 1, 2, 1e-6).unwrap());
    }

    fn box_instance() -> PopInstance<f64> {
        // min x  s.t.  x - 1 >= 0,  3 - x >= 0,  y free in a second constraint
        PopInstance::new(2, poly(2, &[(1.0, &[1, 0])]))
            .unwrap()
            .with_constraint(None, poly(2, &[(-1.0, &[0, 0]), (1.0, &[1, 0])]))
            .unwrap()
            .with_constraint(None, poly(2, &[(3.0, &[0, 0]), (-1.0, &[1, 0]), (1.0, &[0, 1])]))
            .unwrap()
            .with_constraint(None, poly(2, &[(1.0, &[0, 2])]))
            .unwrap()
    }

    #[test]
    fn add_blocks_rule() {
        let inst = box_instance();
        let idx = MomentIndex::new(2, 1);
        let set = blocks(&inst, 1, &idx, None).unwrap();
        // candidate (0.5, 2) violates constraint 0 only; constraint 1 shares x1
        let y = dirac_moments(&[0.5, 2.0], &idx);
        let m = moment_of(&y, 2, 1);
        let mut reg = BlockRegistry::moment_only(set.clone());
        let out = add_blocks(&m, &mut reg, &inst, 1e-6).unwrap();
        assert_eq!(out.violated, vec![0]);
        assert_eq!(out.s, 2);
        assert_eq!(reg.pending().len(), 1);

        let y = dirac_moments(&[2.0, 2.0], &idx);
        let m = moment_of(&y, 2, 1);
        let mut reg = BlockRegistry::moment_only(set);
        let out = add_blocks(&m, &mut reg, &inst, 1e-6).unwrap();
        assert_eq!(out.s, 0);
        assert_eq!(reg.pending().len(), 3);
    }

    #[test]
    fn add_blocks_degenerate_adds_all() {
        let inst = box_instance();
        let idx = MomentIndex::new(2, 1);
        let mut reg = BlockRegistry::moment_only(blocks(&inst, 1, &idx, None).unwrap());
        let m = SymMatrix::diag(&[0.0, 1.0, 1.0]);
        let out = add_blocks(&m, &mut reg, &inst, 1e-6).unwrap();
        assert_eq!(out.s, 3);
        assert!(out.candidate.is_none());
        assert!(reg.pending().is_empty());
    }

    #[test]
    fn objective_test_point_measure() {
        let inst = box_instance();
        let idx = MomentIndex::new(2, 1);
        let y = dirac_moments(&[1.5, 0.25], &idx);
        let t = approximate_obj(&inst, &idx, &y, &moment_of(&y, 2, 1), 1e-12).unwrap();
        assert!(t.passed);
        assert!(t.gap().unwrap() < 1e-14);
    }

    #[test]
    fn bound_instance_x_squared() {
        let inst = PopInstance::new(1, poly(1, &[(1.0, &[2])]))
            .unwrap()
            .with_constraint(None, poly(1, &[(-1.0, &[0]), (1.0, &[1])]))
            .unwrap();
        let cfg = DriverConfig {
            solver: SolverConfig {
                tol_admm: 1e-7,
                tol_coord: 1e-8,
                ..SolverConfig::default()
            },
            ..DriverConfig::default()
        };
        let r = solve(&inst, &cfg).unwrap();
        assert!((r.lower_bound - 1.0).abs() < 1e-3, "{r:?}");
        assert!((r.x.as_ref().unwrap()[0] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn unconstrained_fine_equals_full() {
        let inst = PopInstance::new(1, poly(1, &[(1.0, &[2]), (-2.0, &[1]), (3.0, &[0])])).unwrap();
        let a = solve(&inst, &DriverConfig::default()).unwrap();
        let b = solve(
            &inst,
            &DriverConfig {
                strategy: Strategy::FullLevel,
                ..DriverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(a.lower_bound, b.lower_bound);
        assert_eq!(a.levels.len(), b.levels.len());
    }

    #[test]
    fn bad_config() {
        let inst = PopInstance::new(1, poly(1, &[(1.0, &[2])])).unwrap();
        let cfg = DriverConfig {
            eps_feas: 0.0,
            ..DriverConfig::default()
        };
        assert!(solve(&inst, &cfg).is_err());
        let cfg = DriverConfig {
            w_max: Some(0),
            ..DriverConfig::default()
        };
        assert!(solve(&inst, &cfg).is_err());
        assert!(run_full_level(&inst, 0, &DriverConfig::default()).is_err());
    }
}
