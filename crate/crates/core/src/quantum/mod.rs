//! Quantum object model: states, effects, assemblages, channels, filters.

pub mod assemblage;
pub mod channel;
pub mod diamond;
pub mod effect;
pub mod filter;
pub mod random;
pub mod state;

pub use assemblage::MeasurementAssemblage;
pub use channel::{Channel, channel_of_choi, choi_of_channel};
pub use diamond::diamond_distance;
pub use effect::Effect;
pub use filter::{Filter, FilterKind};
pub use state::QState;
