//! Simple random walks on the level-m grid graphs, their exact kernels and
//! hitting laws, the folded (reflected) walk on `K^{<M>}`, and Monte Carlo
//! simulation.
//!
//! The walk on every grid is the simple random walk. That is the decimation
//! walk of the diffusion for the gasket; for other specs it is the standard
//! graph approximation, not the walk induced by the renormalized weights.

mod chain;
mod grid;
mod hitting;
mod kernel;
mod quotient;
mod simulate;

pub use grid::{build_grid, fold_table, GridGraph};
pub use hitting::{
    estimate_gamma, expected_hitting_steps, hitting_law, min_vertex_distance, HittingLaw,
    MinVertexDistance,
};
pub use kernel::{kernel, KernelTable, Mode, EXACT_MAX_HORIZON, EXACT_MAX_VERTICES};
pub use quotient::{
    build_quotient, fiber_invariance, folded_kernel, ExactMatrix, FiberInvariance, FoldedKernel,
    QuotientWalk,
};
pub use simulate::{
    simulate_histogram, simulate_paths, McHistogram, PathArchive, PathRecord, SimConfig,
};

use crate::field::Rational;
use num::{BigInt, One, Zero};

/// Exact probability `num / lambda^t`.
pub(crate) fn scaled(num: &BigInt, pow: &BigInt) -> Rational {
    Rational::new(num.clone(), pow.clone())
}

/// `lambda^0..=lambda^n`.
pub(crate) fn powers(lambda: u64, n: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = BigInt::one();
    for _ in 0..=n {
        out.push(p.clone());
        p *= lambda;
    }
    out
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn total_variation(a: &[Rational], b: &[Rational]) -> Rational {
    let mut s = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += if d < Rational::zero() { -d } else { d };
    }
    s / Rational::from_integer(BigInt::from(2))
}
