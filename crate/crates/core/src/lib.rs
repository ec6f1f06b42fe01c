//! Two-step dimensionality reduction for third-order tensors
//! (time × instance × variable) with contrastive cluster explanation.
//!
//! The first stage compresses one mode of the tensor to a single value per
//! fiber, producing a matrix `Y` plus the weight vector used for the
//! compression. The second stage embeds the rows of `Y` in 2-D. Selected
//! clusters of embedded points are explained by contrastive feature
//! contributions over the columns of `Y`.

pub mod contrastive;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod job;
pub mod knn;
pub mod linalg;
pub mod metrics;
pub mod protocol;
pub mod report;
pub mod session;
pub mod stage1;
pub mod synthetic;
pub mod tensor;

pub use contrastive::{
    adjust_signs, explain_cluster, feature_contributions, scale_contributions, ClusterSelection,
    FeatureContributions,
};
pub use dataset::{load_dataset, load_tensor, Dataset, DatasetDescriptor};
pub use embed::{embed_linear, embed_neighbor, trustworthiness, Embedding, NeighborParams, Stage2Method};
pub use error::{Error, Result};
pub use job::JobControl;
pub use session::{
    compare_baselines, compute_histograms, results_for_point_mode, run_pipeline, AnalysisResult,
    HistogramSet, PipelineConfig, Session,
};
pub use stage1::{compress, pca_fit_1d, CompressedMatrix, ModeCombo, Stage1Method};
pub use tensor::{fold, standardize, unfold, Mode, Tensor3, UnfoldedMatrix};
