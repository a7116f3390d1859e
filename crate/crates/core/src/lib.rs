//! Numerical laboratory for non-uniqueness of the zero solution of
//! `u_t = Lu + q(x) f(u)`, `Bu = 0`, `u(·, 0) = 0` when the Osgood integral of
//! `f` converges.

pub mod domain;
pub mod export;
pub mod field;
pub mod lemmas;
pub mod nonlinearity;
pub mod nonuniqueness;
pub mod ode;
pub mod osgood;
pub mod problem;
pub mod quadrature;
pub mod semigroup;
