//! Equilibria of a CARA-normal market with one strategic insider, a
//! price-taking uninformed mass and Gaussian noise traders.
//!
//! The insider either internalizes her price impact (PI) or takes prices as
//! given (PT); the no-signal variants (NS_PI, NS_PT) are the `p_I -> 0`
//! limits. Every object is an explicit affine map, so prices, demands and
//! certainty equivalents are closed forms that the [`mc`] module verifies by
//! simulation.
//!
//! ```
//! use strategic_insider::{equilibrium, MarketParams};
//!
//! let params = MarketParams::new(1.0, 1.0, 1.0, 1.0, 0.0);
//! let pi = equilibrium::solve_pi(&params).unwrap();
//! let pt = equilibrium::solve_pt(&params).unwrap();
//! assert!(pi.p_pub < pt.p_pub);
//! ```

pub mod cli;
pub mod cubic;
pub mod equilibrium;
pub mod error;
pub mod mc;
pub mod model;
pub mod multiasset;
pub mod spd;
pub mod welfare;

pub use cubic::{solve_cubic, Cubic, CubicSolution};
pub use equilibrium::{Equilibrium, EquilibriumKind};
pub use error::{Error, Result};
pub use model::{DerivedParams, MarketParams};
