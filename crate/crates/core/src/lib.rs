//! Exact computations with lattices in the affine Bruhat-Tits building of
//! `SL_n` over the field of formal Laurent series, and their use for
//! manipulating Fuchsian systems on the projective line.
//!
//! The base field is the Gaussian rationals `Q(i)`, so every computation is
//! exact and every comparison decidable. Formal series are truncated and
//! carry their precision; matrices of series support the membership
//! predicates (lattice gauges, monopoles, parabolic subgroups) that the
//! lattice and bundle layers are built on.
//!
//! The layers, bottom up:
//!
//! * [`scalar`], [`series`] — exact scalars and truncated Laurent series;
//! * [`cmat`], [`smat`], [`eigen`] — constant and series matrices, exact
//!   Jordan data;
//! * [`lattice`] — lattices, Smith decompositions, distance and index,
//!   quotients and relative flags;
//! * [`building`] — geodesics, forms, the abacus;
//! * [`bg`] — bundle types, Birkhoff-Grothendieck trivialisations, the
//!   permutation lemma, the Birkhoff factorization oracle;
//! * [`connection`] — local meromorphic connections, logarithmic lattices,
//!   the Gantmacher recursion;
//! * [`rh`] — Fuchsian systems and the weak-solution search.
//!
//! See the book under `book/` for a guided tour.

pub mod error;
pub mod scalar;
pub mod series;

pub mod cmat;
pub mod eigen;
pub mod smat;

pub mod lattice;

pub mod building;

pub mod bg;

pub mod connection;

pub mod rh;

pub mod fixtures;
pub mod json;

pub use error::{Error, Result};
pub use scalar::GaussianRational;
pub use series::LaurentSeries;
pub use smat::SeriesMatrix;
