use thiserror::Error;

use crate::algos::AlgorithmError;
use crate::analysis::AnalysisError;
use crate::engine::EngineError;
use crate::gen::GenError;
use crate::model::ModelError;
use crate::oracle::OracleError;
use crate::wire::WireError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Gen(#[from] GenError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
