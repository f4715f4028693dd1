//! Q1 finite element machinery on quadtree meshes.

pub mod assembly;
pub mod dofs;
pub mod field;
pub mod quadrature;
pub mod solver;
pub mod sparse;

use std::sync::OnceLock;

pub use assembly::{assemble, assemble_vector, LocalSystem};
pub use dofs::{Constraints, DofMap, FieldKind};
pub use quadrature::{QuadratureTable, ShapeEval};
pub use solver::DirectSolver;
pub use sparse::{CsrMatrix, SparsityPattern};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "LIMITFRAC_THREADS";

/// Worker threads for assembly and factorization (`LIMITFRAC_THREADS`,
/// default 1). Configures rayon and faer on first call.
pub fn threads() -> usize {
    static THREADS: OnceLock<usize> = OnceLock::new();
    *THREADS.get_or_init(|| {
        let n = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(1);
        if n > 1 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            faer::set_global_parallelism(faer::Par::rayon(n));
        } else {
            faer::set_global_parallelism(faer::Par::Seq);
        }
        n
    })
}
