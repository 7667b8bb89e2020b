use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unsupported field order {0}")]
    UnsupportedOrder(usize),
    #[error("modulus for GF({0}) is reducible")]
    ReducibleModulus(usize),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different fields")]
    SpecMismatch,
    #[error("element code {code} out of range for GF({q})")]
    InvalidElement { code: usize, q: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("singular matrix")]
    SingularMatrix,
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("subspaces live in different ambient spaces")]
    AmbientMismatch,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("subspace dimension equals plane dimension {0}")]
    EqualDimension(usize),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("form is singular")]
    SingularForm,
    #[error("form is not symplectic")]
    NotSymplectic,
    #[error("form is not nonsingular")]
    NotNonsingular,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("map has a non-identity automorphism")]
    NonIdentityAutomorphism,
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("plane set is not regular")]
    NotRegular,
    #[error("plane set is not irregular")]
    NotIrregular,
    #[error("plane set is not a subset of the given maximal regular set")]
    NotASuperset,
    #[error("coordinate system is not associated with the plane set")]
    NotAssociated,
    #[error("subspaces are not transverse")]
    NotTransverse,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("map is not independence preserving (hyperplane {hyperplane}, inverse: {inverse})")]
    NotIndependencePreserving { hyperplane: u32, inverse: bool },
    #[error("recovered field map is not an automorphism")]
    AutomorphismMismatch,
    #[error("adjacency not preserved for planes {a} and {b}")]
    NotDistancePreserving { a: u32, b: u32 },
    #[error("star images mix stars and tops")]
    DichotomyViolated,
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("not a bijection: {0}")]
    NotBijective(String),
}
