//! Numerical companion to a parity obstruction for square roots of contact
//! and symplectic diffeomorphisms.
//!
//! A radial Hamiltonian h = β(z)·ρ(e) on ℝ²ⁿ⁺¹ (or ρ(e) on ℝ²ⁿ) rotates the
//! circle e = a by π/k, so its time-one map has a whole circle of
//! 2k-periodic points. A small cut-off perturbation leaves exactly one
//! 2k-periodic class. One class is an odd count, and a map with a square
//! root always has an even count, so the perturbed map has no square root.
//!
//! Modules follow that chain: [`profiles`] builds ρ, β and the cut-off,
//! [`geometry`] turns Hamiltonians into vector fields, [`flows`] integrates
//! them into time-one maps, [`orbits`] finds periodic classes, [`milnor`]
//! draws the parity conclusion and [`experiment`] runs configured scenarios.
//!
//! The numerical core is generic over [`Real`]; the aliases below fix the
//! scalar type.

pub mod experiment;
pub mod flows;
pub mod geometry;
pub mod linalg;
pub mod milnor;
pub mod orbits;
mod poly;
pub mod profiles;
pub mod scalar;

pub use experiment::{run_scenario, RunReport, Scenario};
pub use flows::{FlowDiagnostics, FlowError, TimeOneMap};
pub use geometry::{PhasePoint, ScalarHamiltonian, Structure};
pub use milnor::{parity_conclude, ParityReport, Permutation};
pub use orbits::{find_periodic_classes, Isolation, OrbitClass, OrbitSearch, SearchConfig};
pub use profiles::{BetaProfile, EtaCutoff, RhoProfile};
pub use scalar::Real;

pub type PhasePointF64 = PhasePoint<f64>;
pub type PhasePointF32 = PhasePoint<f32>;
pub type TimeOneMapF64 = TimeOneMap<f64>;
pub type TimeOneMapF32 = TimeOneMap<f32>;
pub type RhoProfileF64 = RhoProfile<f64>;
pub type RhoProfileF32 = RhoProfile<f32>;
pub type BetaProfileF64 = BetaProfile<f64>;
pub type BetaProfileF32 = BetaProfile<f32>;
pub type EtaCutoffF64 = EtaCutoff<f64>;
pub type EtaCutoffF32 = EtaCutoff<f32>;
pub type ScalarHamiltonianF64 = ScalarHamiltonian<f64>;
pub type ScalarHamiltonianF32 = ScalarHamiltonian<f32>;
pub type OrbitClassF64 = OrbitClass<f64>;
pub type OrbitClassF32 = OrbitClass<f32>;
