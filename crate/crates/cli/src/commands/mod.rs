pub mod bench;
pub mod eval;
pub mod flops;
pub mod train;
