//! Small numerical building blocks shared by the analysis modules.

pub mod dd;
pub mod fit;
pub mod quadrature;
pub mod sum;

pub use dd::Dd;
pub use fit::{fit_log2_slope, SlopeFit};
pub use quadrature::GaussLegendre;
pub use sum::pairwise_sum;

/// Japanese bracket `⟨x⟩ = (1 + x²)^{1/2}`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    x.hypot(1.0)
}
