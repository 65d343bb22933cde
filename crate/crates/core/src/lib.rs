//! Nash-equilibrium import tariffs and exchange rates for a two-nation
//! trade game driven by currency-demand functions.
//!
//! Every solver is generic over the floating point type through
//! [`Scalar`]; the `*F64` / `*F32` aliases below fix the common choices.

// `!(x > 0)` also rejects NaN; quadrature nodes are quoted to full precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod demand;
pub mod equilibrium;
pub mod error;
pub mod gains;
pub mod montecarlo;
pub mod nash;
pub mod quadrature;
pub mod roots;
pub mod scalar;

pub use demand::{DemandFunction, Family, FamilySpec, MarketModel, ModelSpec, MonotoneReport, Role, StepFunction};
pub use equilibrium::{RateSensitivities, RateSolution, RootMultiplicity, TariffPair};
pub use error::{Error, Result};
pub use gains::{GainMethod, GainReport};
pub use montecarlo::{CommoditySample, Law, ScenarioSpec};
pub use nash::{EquilibriumTriple, Side, SolverConfig};
pub use scalar::Scalar;

pub type MarketModelF64 = MarketModel<f64>;
pub type MarketModelF32 = MarketModel<f32>;
pub type TariffPairF64 = TariffPair<f64>;
pub type TariffPairF32 = TariffPair<f32>;
pub type SolverConfigF64 = SolverConfig<f64>;
pub type SolverConfigF32 = SolverConfig<f32>;
pub type EquilibriumTripleF64 = EquilibriumTriple<f64>;
pub type EquilibriumTripleF32 = EquilibriumTriple<f32>;
pub type RateSolutionF64 = RateSolution<f64>;
pub type GainReportF64 = GainReport<f64>;
