pub mod check;
pub mod orthogonalize;
pub mod probe;
pub mod train;
