//! Conferencing-based distributed channel quantizers for two-user
//! interference networks, together with the conventional separate-quantizer
//! baseline and a reproducible Monte-Carlo outage engine.

pub mod baseline;
pub mod channel;
pub mod conferencing;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod rates;

pub use channel::{ChannelState, FadingParams, LocalCsi, Receiver, TrialStreams};
pub use error::{Error, Result};
pub use rates::{Metric, RateReport, Strategy, TransmissionPair};
