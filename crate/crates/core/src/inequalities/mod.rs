//! Numerical experiments for the isoperimetric inequalities of the composite
//! membrane problem and the product identity behind the Lieb-type bound.

mod faber_krahn;
mod identity;
mod lieb;

pub use faber_krahn::{faber_krahn_experiment, FKReport, DEFAULT_FK_SLACK};
pub use identity::{pair_seminorm_sq, product_identity_check, IdentityReport, DEFAULT_WINDOW};
pub use lieb::{lieb_experiment, LiebConfig, LiebReport, ShiftRecord, ShiftSet, WuTerm};
