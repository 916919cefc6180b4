//! Budget-feasible procurement mechanisms with exact small-scale oracles.

pub mod bayesian;
pub mod error;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod lpcore;
pub mod mechanisms;
pub mod schema;
pub mod subset;
pub mod tape;
pub mod tolerance;
pub mod valuations;

pub use error::{Error, Result};
pub use instance::Instance;
pub use subset::AgentSet;
pub use tape::{CoinTape, Coins, FixedTape};
pub use valuations::{SetFunction, Valuation, ValueTable};
