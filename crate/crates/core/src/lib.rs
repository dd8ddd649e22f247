//! Conformal moduli of polygonal quadrilaterals.
//!
//! Two independent solvers compute `M(Q; a, b, c, d)`: a Schwarz–Christoffel
//! parameter solver ([`sc_solver`]) and a finite-element energy minimizer
//! ([`pde_oracle`]) that brackets the modulus from both sides. [`verify`]
//! uses them to test modulus inequalities numerically.

pub mod cli;
pub mod geometry;
pub mod io;
pub mod pde_oracle;
pub mod sc_solver;
pub mod special_functions;
pub mod transforms;
pub mod verify;

use std::fmt;

use serde::Serialize;

/// Which solver produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sc,
    Fem,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sc => "sc",
            Method::Fem => "fem",
        })
    }
}

/// A modulus value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusEstimate {
    pub value: f64,
    pub method: Method,
    pub err: f64,
}

impl ModulusEstimate {
    /// Moduli outside `[1e-3, 1e3]` are accepted but less trustworthy.
    pub fn is_extreme(&self) -> bool {
        !(1e-3..=1e3).contains(&self.value)
    }
}
