//! Model builders for the worked application examples.

pub mod bandit;
pub mod machine;
pub mod presets;
pub mod quickest;
pub mod sampling;
pub mod search;
pub mod social;
pub mod transmission;
