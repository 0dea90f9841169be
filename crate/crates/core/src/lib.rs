pub mod bounds;
pub mod chain;
pub mod cli;
pub mod decoherence;
pub mod pulse;
pub mod species;
