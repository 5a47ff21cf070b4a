pub mod cones;
pub mod dynamics;
pub mod engagement;
pub mod hull;
pub mod sampling;
pub mod scenario;
pub mod strategies;
pub mod tables;
pub mod validation;
pub mod vector;
