//! Integer sets and relations with quasi-affine constraints, and symbolic
//! counting of their points.

mod constraint;
mod count;
mod error;
mod expr;
mod int;
mod lp;
mod map;
mod piece;
mod poly;
mod qpoly;
mod scan;
mod set;
mod space;
mod text;

pub use constraint::{Constraint, ConstraintKind};
pub use count::{fallback_count, CountBudget};
pub use error::PolyError;
pub use expr::{AffineExpr, Div};
pub use map::{eval_pieces, BasicMap, Map};
pub use piece::Piece;
pub use poly::Polyhedron;
pub use qpoly::{Atom, Monomial, QuasiPolynomial};
pub use set::{BasicSet, NamedPoint, Set};
pub use space::Space;
pub use text::{format_map, format_set, parse_map, parse_set};

