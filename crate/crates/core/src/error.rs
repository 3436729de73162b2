//! Error type shared by all layers.
//!
//! Variant names follow the domain operations that raise them; the CLI maps
//! them onto exit code 2 with the variant name in the report.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("non-unit: {0}")]
    NonUnit(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("zero at precision: {0}")]
    ZeroAtPrecision(String),
    #[error("comparison undecidable at current precision: {0}")]
    Undecidable(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("characteristic polynomial does not split over Q(i): {0}")]
    CharPolyDoesNotSplit(String),
    #[error("lattices not nested: {0}")]
    NotNested(String),
    #[error("sequence not normalized: {0}")]
    NotNormalized(String),
    #[error("flag not admissible: {0}")]
    FlagNotAdmissible(String),
    #[error("combinatorial blowup: {0}")]
    CombinatorialBlowup(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("lattice is not trivialising: {0}")]
    NotTrivialising(String),
    #[error("not factorable: {0}")]
    NotFactorable(String),
    #[error("determinant mismatch: {0}")]
    DeterminantMismatch(String),
    #[error("resonant residue: {0}")]
    ResonantResidue(String),
    #[error("flag not stable under the residue (component {component}): {detail}")]
    FlagNotStable { component: usize, detail: String },
    #[error("residue at infinity is not semisimple with integer eigenvalues: {0}")]
    NotLogarithmicAtInfinity(String),
    #[error("subspace not stable under the residue: {0}")]
    SubspaceNotStable(String),
    #[error("residue not diagonalizable: {0}")]
    NotDiagonalizable(String),
    #[error("no strong solution found within bound {bound}")]
    NotFound { bound: String },
    #[error("reducibility certificate inconsistent: {0}")]
    CertificateInconsistent(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("input outside desk scale: {0}")]
    DeskScaleExceeded(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine name of the variant, used in CLI reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonUnit(_) => "NonUnit",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::ZeroAtPrecision(_) => "ZeroAtPrecision",
            Error::Undecidable(_) => "Undecidable",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::CharPolyDoesNotSplit(_) => "CharPolyDoesNotSplit",
            Error::NotNested(_) => "NotNested",
            Error::NotNormalized(_) => "NotNormalized",
            Error::FlagNotAdmissible(_) => "FlagNotAdmissible",
            Error::CombinatorialBlowup(_) => "CombinatorialBlowup",
            Error::SignatureMismatch(_) => "SignatureMismatch",
            Error::NotTrivialising(_) => "NotTrivialising",
            Error::NotFactorable(_) => "NotFactorable",
            Error::DeterminantMismatch(_) => "DeterminantMismatch",
            Error::ResonantResidue(_) => "ResonantResidue",
            Error::FlagNotStable { .. } => "FlagNotStable",
            Error::NotLogarithmicAtInfinity(_) => "NotLogarithmicAtInfinity",
            Error::SubspaceNotStable(_) => "SubspaceNotStable",
            Error::NotDiagonalizable(_) => "NotDiagonalizable",
            Error::NotFound { .. } => "NotFound",
            Error::CertificateInconsistent(_) => "CertificateInconsistent",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::DeskScaleExceeded(_) => "DeskScaleExceeded",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}
