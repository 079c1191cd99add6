use thiserror::Error;

use crate::expr::ExprError;
use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid problem at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("oracle failure: {0}")]
    OracleFailure(String),
    #[error("no usable samples: {0}")]
    NoSamples(String),
    #[error("the asymptotic cone has no rays; the set looks bounded")]
    EmptyRaySet,
    #[error("the kernel is empty, so its polar is undefined here")]
    KernelEmpty,
    #[error("parametric analysis needs alpha > 1 (alpha = {alpha})")]
    DegreeTooSmall { alpha: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("the constraint set must be a cone for this check")]
    ConePrecondition,
    #[error("no feasible seed point found")]
    NoFeasibleSeed,
    #[error("no feasible grid point")]
    NoFeasiblePoint,
    #[error("search inconclusive for ray {ray:?}: best margin {best_margin}")]
    SearchInconclusive { ray: Vec<f64>, best_margin: f64 },
}

impl Error {
    pub(crate) fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
