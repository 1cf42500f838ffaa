pub mod compare;
pub mod eval;
pub mod gen;
pub mod rules;
pub mod stream;
pub mod train;
