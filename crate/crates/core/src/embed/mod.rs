//! Second reduction: two-dimensional embeddings of the rows of Y.

mod linear;
mod neighbor;
mod quality;

pub use linear::{embed_linear, principal_scores};
pub use neighbor::{embed_neighbor, fit_curve_params, NeighborParams};
pub use quality::trustworthiness;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stage1::ModeCombo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage2Method {
    Linear,
    #[default]
    Neighbor,
}

impl std::str::FromStr for Stage2Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "neighbor" => Ok(Self::Neighbor),
            other => Err(Error::Parse(format!("unknown second-stage method '{other}'"))),
        }
    }
}

/// Two coordinates per input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub z: Array2<f64>,
    /// Set when produced by the two-step pipeline; flat unfoldings have none.
    pub combo: Option<ModeCombo>,
    pub method: Stage2Method,
    pub params: Option<NeighborParams>,
    /// The linear projection found fewer than two nonzero components.
    pub rank_deficient: bool,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.z.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.nrows() == 0
    }
}
