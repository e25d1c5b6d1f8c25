pub mod cli;
pub mod decoherence;
pub mod error;
pub mod histories;
pub mod logic;
pub mod numerics;
pub mod quantum;
