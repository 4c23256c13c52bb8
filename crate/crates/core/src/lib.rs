//! A numerical laboratory for graphons: exact dyadic geometry, the
//! hypercubical graphon, density estimation, a constraint language and the
//! checks built on top of them.

pub mod battery;
pub mod density;
pub mod dsl;
pub mod estimate;
pub mod geometry;
pub mod graphon;
pub mod graphon_spec;
pub mod hypercube;
pub mod recipe;
pub mod sampler;
pub mod typical;
