//! Mean-field simulation and fitting toolkit for spin ensembles coupled to a
//! microwave resonator.
//!
//! The crate covers both coupling regimes of the Tavis–Cummings system:
//! superradiant decay with the cavity on resonance, and cavity-mediated
//! spin exchange (one-axis twisting and many-body gap protection) in the
//! dispersive regime. It also provides the transmission model and the
//! nonlinear least-squares machinery used to calibrate and analyze runs.
//!
//! Frequencies are ordinary frequencies in Hz throughout the public API.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod io;
pub mod lineshape;
pub mod params;

pub use error::{Error, Result};
pub use lineshape::{free_dephasing_coherence, sample_offsets, Lineshape, LineshapeKind, OffsetSet, SamplingStrategy};
pub use params::{derive_rates, n0_from_coupling, single_ion_coupling, DerivedRates, PhysicalParams};
