#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Pedestrian dynamic assignment: topologically distinct routes through a walking
//! geometry, social-force simulation along those routes, and an iterative
//! travel-time user equilibrium over route-choice ratios.

pub mod assign;
pub mod experiment;
pub mod geometry;
pub mod par;
pub mod routes;
pub mod simulate;
