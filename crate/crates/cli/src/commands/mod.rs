pub mod basis;
pub mod evaluate;
pub mod infer;
pub mod preprocess;
pub mod synth;
pub mod train;
