//! Moment/sum-of-squares relaxations of polynomial programs together with
//! their SDSOS (second-order cone) and DSOS (linear) restrictions, a small
//! dense interior-point solver for the resulting conic programs, and exact
//! certificate checking over Q(√2).

pub mod algebra;
pub mod moments;
pub mod relaxations;
pub mod solver;
pub mod certificates;
pub mod counterexample;
pub mod cli;
