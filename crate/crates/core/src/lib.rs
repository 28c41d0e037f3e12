//! Fine-grained moment relaxations of polynomial optimization problems,
//! solved with a warm-startable ADMM.
//!
//! ```
//! use polyhier::{parse_instance, solve, DriverConfig, PopInstanceF64};
//!
//! let inst: PopInstanceF64 = parse_instance(r#"{
//!     "n": 1,
//!     "objective": [{"coef": 1.0, "expo": [2]}],
//!     "constraints": [{"terms": [{"coef": 1.0, "expo": [1]}, {"coef": -1.0, "expo": [0]}]}]
//! }"#).unwrap();
//! let report = solve(&inst, &DriverConfig::default()).unwrap();
//! assert!((report.lower_bound - 1.0).abs() < 1e-2);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod driver;
pub mod error;
pub mod extraction;
pub mod instance;
pub mod linalg;
pub mod moment;
pub mod oracle;
pub mod poly;
pub mod scalar;

pub use admm::{
    augmented_lagrangian, coord_coefficients, coord_update, dual_objective, psd_project,
    solve_relaxation, solve_relaxation_observed, BlockDiagState, CoordMode, IterationRecord,
    SolveStats, SolverConfig, ZUpdate,
};
pub use driver::{
    add_blocks, approximate_obj, flat_extension, run_full_level, solve, solve_detailed,
    DriverConfig, LevelRecord, SolveOutcome, SolveReport, StartMode, Status, Strategy, TraceRow,
};
pub use error::{Error, Result};
pub use extraction::{extract_candidate, second_order_submatrix, violated_constraints, Candidate};
pub use instance::{parse_instance, serialize_instance};
pub use linalg::{k_eigs, numerical_rank, sym_eig, SparseSym, SymMatrix};
pub use moment::{
    assemble, blocks, build_localizing_block, build_moment_block, lift, AggregateOperator,
    BlockId, BlockKind, BlockRegistry, BlockSpec, MomentIndex,
};
pub use oracle::{dirac_moments, grid_multistart, OracleResult};
pub use poly::{Monomial, Polynomial, PopInstance};
pub use scalar::Real;

pub type PolynomialF64 = Polynomial<f64>;
pub type PolynomialF32 = Polynomial<f32>;
pub type PopInstanceF64 = PopInstance<f64>;
pub type PopInstanceF32 = PopInstance<f32>;
pub type SymMatrixF64 = SymMatrix<f64>;
pub type SymMatrixF32 = SymMatrix<f32>;
pub type BlockDiagStateF64 = BlockDiagState<f64>;
pub type BlockDiagStateF32 = BlockDiagState<f32>;
