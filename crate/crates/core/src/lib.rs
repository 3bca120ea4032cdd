//! Resource theory of coherence for quantum channels.

pub mod channels;
pub mod error;
pub mod io;
pub mod measures;
pub mod numerics;
pub mod optimize;
pub mod power;
pub mod random;
pub mod simulate;
pub mod states;

pub use error::{CoherenceError, Result};
