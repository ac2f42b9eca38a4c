use thiserror::Error;

/// Errors raised while building, reading or validating a mesh.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("tetrahedron {tet} references vertex {vertex}, but only {nv} vertices exist")]
    VertexOutOfRange { tet: usize, vertex: usize, nv: usize },
    #[error("tetrahedron {tet} repeats a vertex")]
    RepeatedVertex { tet: usize },
    #[error("tetrahedron {tet} has non-positive signed volume {volume:e}")]
    Inverted { tet: usize, volume: f64 },
    #[error("face {face:?} is shared by more than two tetrahedra")]
    OvershotFace { face: [usize; 3] },
    #[error("vertex {vertex} hangs on boundary face {face:?}")]
    HangingVertex { vertex: usize, face: [usize; 3] },
    #[error("degenerate face {face:?} (zero area)")]
    DegenerateFace { face: [usize; 3] },
    #[error("mesh has no tetrahedra")]
    Empty,
}

/// Errors from the dense and sparse linear solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: matrix has {expected} rows, right-hand side has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("pivot {pivot} of magnitude {magnitude:e} is below the singularity threshold")]
    Singular { pivot: usize, magnitude: f64 },
    #[error("factor needs {required} bytes, above the budget of {budget} bytes")]
    MemoryBudget { required: usize, budget: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
}

/// Errors from polynomial space construction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("quadrature degree {0} outside the supported range 0..=20")]
    QuadratureDegree(usize),
    #[error("polynomial degree {0} outside the supported range 0..=6")]
    PolynomialDegree(usize),
    #[error("rank deficiency while orthonormalizing ({what}): diagonal {value:e}")]
    RankDeficient { what: &'static str, value: f64 },
}

/// Top level error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("invalid scheme parameters: {0}")]
    Params(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("level n={level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("sanity check failed: {0}")]
    Sanity(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
