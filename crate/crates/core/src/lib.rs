//! Information-bottleneck quadtree abstractions of probabilistic grid worlds.
//!
//! A [`GridWorld`] holds a prior `p(x)` over the cells of a `2^ℓ × 2^ℓ`
//! grid and a relevance distribution `p(y|x)` per cell. An abstraction is a
//! pruned quadtree ([`TreeSelection`]); its information about `X` and `Y`
//! decomposes into per-node increments ([`NodeInfoTable`]), which the
//! solvers in [`solver`] trade off against each other.
//!
//! ```
//! use ibqt::{build_node_table, solver, GridWorld, SolveConfig};
//! use ibqt::solver::{BudgetKind, Mode};
//!
//! let world = GridWorld::from_binary(1, &[0.0, 1.0, 0.0, 1.0]).unwrap();
//! let table = build_node_table(&world);
//! let cfg = SolveConfig::new(Mode::Milp, BudgetKind::MaxIx, 2.0);
//! let r = solver::solve(&table, &cfg).unwrap();
//! assert!((r.info.i_y - std::f64::consts::LN_2).abs() < 1e-12);
//! ```

pub mod abstraction;
pub mod error;
pub mod grid;
pub mod info;
pub mod pnm;
pub mod quadtree;
pub mod solver;
pub mod sweep;
pub mod synthetic;
pub mod validate;

pub use abstraction::{AbstractCell, AbstractionOutput, RenderOptions};
pub use error::{Error, Result};
pub use grid::{load_grid, GridFormat, GridWorld, LoadOptions, RelevanceAlphabet};
pub use info::{build_node_table, direct_mi, tree_info, InfoValue, NodeInfoTable};
pub use quadtree::{NodeId, TreeSelection};
pub use solver::{SolveConfig, SolveResult};
pub use sweep::InfoPlanePoint;
