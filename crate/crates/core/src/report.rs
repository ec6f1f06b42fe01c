//! Serializable documents for results, embeddings, and reports.

use base64::Engine;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::embed::{Embedding, NeighborParams, Stage2Method};
use crate::error::{Error, Result};
use crate::session::{AnalysisResult, Baseline, BaselineReport};
use crate::stage1::{CompressedMatrix, ModeCombo, Stage1Method};
use crate::tensor::{Mode, Tensor3};

/// Matrices with more rows than this are base64-encoded.
pub const INLINE_ROW_LIMIT: usize = 10_000;

/// Row-major matrix, either inline or as base64 little-endian `f64`s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base64: Option<String>,
}

impl MatrixDoc {
    pub fn inline(m: &Array2<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: Some(m.iter().copied().collect()),
            base64: None,
        }
    }

    pub fn encoded(m: &Array2<f64>) -> Self {
        let bytes: Vec<u8> = m.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: None,
            base64: Some(base64::engine::general_purpose::STANDARD.encode(bytes)),
        }
    }

    /// Inline up to [`INLINE_ROW_LIMIT`] rows, encoded above.
    pub fn auto(m: &Array2<f64>) -> Self {
        if m.nrows() > INLINE_ROW_LIMIT {
            Self::encoded(m)
        } else {
            Self::inline(m)
        }
    }

    pub fn to_array(&self) -> Result<Array2<f64>> {
        let data = match (&self.data, &self.base64) {
            (Some(d), _) => d.clone(),
            (None, Some(b)) => {
                let bytes = base64::engine::general_purpose::STANDARD
                    .decode(b)
                    .map_err(|e| Error::Parse(format!("base64 matrix: {e}")))?;
                bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            }
            (None, None) => return Err(Error::Parse("matrix has no data".into())),
        };
        Array2::from_shape_vec((self.rows, self.cols), data).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedDoc {
    pub dataset: String,
    pub combo: ModeCombo,
    pub method: Stage1Method,
    pub quality: f64,
    pub w: Vec<f64>,
    pub y: MatrixDoc,
}

impl CompressedDoc {
    pub fn new(dataset: &str, c: &CompressedMatrix) -> Self {
        Self {
            dataset: dataset.to_string(),
            combo: c.combo,
            method: c.method,
            quality: c.quality,
            w: c.w.to_vec(),
            y: MatrixDoc::inline(&c.y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDoc {
    pub combo: Option<ModeCombo>,
    pub method: Stage2Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<NeighborParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub z: MatrixDoc,
    pub trustworthiness: Option<f64>,
    pub trustworthiness_k: Option<usize>,
    pub rank_deficient: bool,
}

impl EmbeddingDoc {
    pub fn new(e: &Embedding, trust: Option<(usize, f64)>) -> Self {
        Self {
            combo: e.combo,
            method: e.method,
            params: e.params,
            seed: e.params.map(|p| p.seed),
            z: MatrixDoc::auto(&e.z),
            trustworthiness: trust.map(|t| t.1),
            trustworthiness_k: trust.map(|t| t.0),
            rank_deficient: e.rank_deficient,
        }
    }
}

/// One pipeline result with the labels a viewer needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDoc {
    pub dataset: String,
    pub combo: ModeCombo,
    pub point_mode: Mode,
    pub point_labels: Vec<String>,
    pub feature_labels: Vec<String>,
    pub compressed_labels: Vec<String>,
    pub compressed: CompressedDoc,
    pub embedding: EmbeddingDoc,
}

impl AnalysisDoc {
    pub fn new(dataset: &str, tensor: &Tensor3, r: &AnalysisResult) -> Self {
        Self {
            dataset: dataset.to_string(),
            combo: r.combo,
            point_mode: r.point_mode,
            point_labels: tensor.labels(r.point_mode).to_vec(),
            feature_labels: tensor.labels(r.combo.second()).to_vec(),
            compressed_labels: tensor.labels(r.combo.first()).to_vec(),
            compressed: CompressedDoc::new(dataset, &r.compressed),
            embedding: EmbeddingDoc::new(&r.embedding, r.trustworthiness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntryDoc {
    pub baseline: Baseline,
    pub feature_count: usize,
    pub purity: Option<f64>,
    pub embedding: EmbeddingDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineDoc {
    pub dataset: String,
    pub point_mode: Mode,
    pub combo: ModeCombo,
    pub entries: Vec<BaselineEntryDoc>,
}

impl BaselineDoc {
    pub fn new(dataset: &str, r: &BaselineReport) -> Self {
        Self {
            dataset: dataset.to_string(),
            point_mode: r.point_mode,
            combo: r.combo,
            entries: r
                .entries
                .iter()
                .map(|e| BaselineEntryDoc {
                    baseline: e.baseline,
                    feature_count: e.feature_count,
                    purity: e.purity,
                    embedding: EmbeddingDoc::new(&e.embedding, e.trustworthiness),
                })
                .collect(),
        }
    }
}
