//! Simulation and benchmark harness for four quantum key distribution
//! protocols (BB84, B92, E91, SARG04) applied to six-field SCADA telemetry
//! records.
//!
//! Per record, a key is exchanged over a simulated quantum channel (optionally
//! with an intercept-resend eavesdropper), Alice masks the normalized features
//! with her key, Bob unmasks with his, and the two sides are compared. The
//! comparison feeds QBER, key match rate, feature-difference and CHSH metrics
//! and a composite index across protocols.

pub mod codec;
pub mod error;
pub mod ingest;
pub mod key;
pub mod metrics;
pub mod pipeline;
pub mod plots;
pub mod protocols;
pub mod rng;
pub mod statevec;

pub use error::{Error, Result};
pub use key::BitString;
