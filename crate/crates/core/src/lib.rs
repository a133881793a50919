//! Store-carry-and-forward data delivery over a grid of roadside units.
//!
//! Data rides on vehicles from one RSU's road segment to the next. At every
//! hop the courier either heads the right way itself, hands the data to a
//! candidate vehicle found during a discovery window of length `t`, or falls
//! back to the RSU. The crate models the expected end-to-end latency and
//! rate of a route, picks the discovery window(s) and route that maximize a
//! normalized weighted sum of the two, and checks all of it by simulation.
//!
//! ```
//! use v2x_delivery::routing::global_routing;
//! use v2x_delivery::scenario::Scenario;
//!
//! let s = Scenario::default();
//! let best = global_routing(&s.routes()?, &s.params, 0.5)?;
//! assert!(best.outcome.t_star().unwrap() <= s.params.hop_duration);
//! # Ok::<(), v2x_delivery::Error>(())
//! ```

pub mod cli;
pub mod closed_form;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod params;
pub mod quadrature;
pub mod report;
pub mod routing;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
pub use params::{Hop, NodeId, Route, SystemParams};
