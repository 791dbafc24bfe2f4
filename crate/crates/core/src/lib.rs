//! Simulation and analysis of a photonic linear cluster-state source probed
//! passively: photons are routed at random to X, Y or Z detectors, the click
//! record is mined for fixed measurement templates, and the resulting
//! correlators bound the localizable entanglement length.
//!
//! Layers, bottom up:
//!
//! * [`pauli`] and [`frame`]: Pauli algebra and a narrow-window stabilizer
//!   engine for the growing chain.
//! * [`sim`] and [`record`]: the noisy source, routing, loss and the binary
//!   click-record format.
//! * [`template`] and [`scan`]: the Γ₁/Γ₂ templates, their verification, and
//!   streaming instance counting.
//! * [`analysis`] and [`report`]: bounds, error-model fits, planning and
//!   output tables.
//!
//! The analysis layer is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod analysis;
pub mod frame;
pub mod pauli;
pub mod record;
pub mod report;
pub mod scalar;
pub mod scan;
pub mod sim;
pub mod template;

pub use analysis::AnalysisError;
pub use frame::{Basis, FrameError, Outcome, StabilizerFrame};
pub use pauli::{PauliLetter, PauliString, Phase};
pub use record::{ClickRecord, Event, RecordError, RecordReader};
pub use scalar::Scalar;
pub use scan::{scan, scan_chunked, simulate_and_scan, CorrelatorEstimate, ScanMode, ScanOptions, Scanner};
pub use sim::{simulate, ConfigError, ExperimentConfig, Simulator};
pub use template::{Family, Template, TemplateError, TemplateId};

pub type Moments = analysis::TwoQubitMoments<f64>;
pub type Fit = analysis::ErrorModelFit<f64>;
pub type Xi = analysis::XiEstimate<f64>;
pub type BoundRow = analysis::LeBoundRow<f64>;
pub type BoundTable = analysis::LeBoundTable<f64>;
pub type Point = analysis::DecayPoint<f64>;
