//! Exact algebra of polynomial-coefficient differential operators.

pub mod eckart;
pub mod gaugeops;
pub mod operator;
pub mod spin;
pub mod surd;

pub use gaugeops::{ExactSpec, random_rational_spec};
pub use operator::{weyl_symmetrize, DiffOperator, Key};
pub use spin::AngularSector;
pub use surd::{Coef, Surd};
