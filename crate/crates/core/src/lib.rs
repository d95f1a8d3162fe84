pub mod baseline;
pub mod bench;
pub mod engine;
pub mod gp;
pub mod grid;
pub mod losbo;
pub mod safe;
pub mod vehicle;
