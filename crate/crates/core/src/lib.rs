pub mod autodiff;
pub mod cli;
pub mod dataset;
pub mod dsp;
pub mod models;
pub mod training;
pub mod verification;
