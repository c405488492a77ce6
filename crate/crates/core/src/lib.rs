pub mod error;
pub mod geometry;
pub mod linalg;
pub mod quantum;
pub mod report;
pub mod causality;
pub mod random;
pub mod lattice;
pub mod conditional;
pub mod serial;
pub mod scenario;
