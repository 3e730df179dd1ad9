pub mod edges;
pub mod grid;
pub mod kernel;
pub mod measure;

pub use edges::{solve_edges, Cut};
pub use grid::{minimize_energy_on_grid, DiscreteMeasure, GridOptions, Initialization};
pub use kernel::smoothed_log_kernel;
pub use measure::{Constancy, Contour, EquilibriumMeasure, SolveOptions};
