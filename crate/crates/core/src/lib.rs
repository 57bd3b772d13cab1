pub mod al;
pub mod datagen;
pub mod harness;
pub mod lp;
pub mod nn;
pub mod opf;
pub mod rng;
