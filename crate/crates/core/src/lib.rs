//! Certified evaluation of continuous-logic sentences over finite-dimensional
//! dynamical Hilbert spaces.

pub mod automata;
pub mod degree;
pub mod evaluator;
pub mod formula;
pub mod groups;
pub mod interp;
pub mod model;
pub mod numeric;
pub mod parser;
