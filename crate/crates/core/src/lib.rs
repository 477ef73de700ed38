//! Limit-point / limit-circle classification for complex Sturm-Liouville
//! problems on a ray.

pub mod asymptotics;
pub mod classify;
pub mod cli;
pub mod expr;
pub mod geometry;
pub mod numerics;
pub mod oracle;
pub mod problem;
