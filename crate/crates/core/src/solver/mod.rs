//! Elliptic and parabolic solvers for the chart Monge-Ampère problem.

pub mod elliptic;
pub mod flow;
pub mod linsys;
