//! Truncated Fock-space simulation of multi-mode bright squeezed vacuum
//! measured behind pairs of mutually unbiased multiport interferometers.
//!
//! The crate builds the multiport unitaries for prime mode counts, the
//! squeezed-vacuum state and its photon-count statistics under detector loss,
//! and evaluates rate- and intensity-based separability criteria together with
//! the operator identities and complementarity bounds behind them.
//!
//! ```
//! use multiport_witness::bsv::BsvSpec;
//! use multiport_witness::witness::{critical_eta, CriterionKind};
//!
//! let spec = BsvSpec::new(3, 1.0).unwrap();
//! let eta_c = critical_eta(CriterionKind::IntensityD3, &spec).unwrap();
//! assert!((eta_c.eta - 0.25).abs() < 1e-3);
//! ```

pub mod bsv;
pub mod cli;
pub mod error;
pub mod fock;
pub mod linop;
pub mod loss;
pub mod mub;
pub mod par;
pub mod verify;
pub mod witness;

pub use error::{Error, Result};
