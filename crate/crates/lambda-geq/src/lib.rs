//! Λ-words over right-lexicographically ordered `ℤⁿ`, Lyndon length
//! functions, combinatorial generalized equations and their elimination.

pub mod abelian;
pub mod diagram;
pub mod elimination;
pub mod error;
pub mod geq;
pub mod lenfun;
pub mod ordered;
pub mod sample;
pub mod transform;
pub mod words;

pub use error::{Error, Result};
pub use geq::{Base, Connection, GenEq, Section, Solution};
pub use ordered::{Height, LambdaRational, LambdaScalar};
pub use words::{Letter, LambdaWord};
