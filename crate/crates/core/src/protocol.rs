//! Wire protocol between the analysis server and its viewer.
//!
//! Every message is a JSON document `{kind, request_id, payload}`. Clients
//! send `load_dataset`, `request_results`, `select_cluster`,
//! `remove_cluster`, `request_histograms`, and `request_baselines`; the
//! server answers each with exactly one `result` or `error` carrying the
//! same `request_id`, preceded by any number of `progress` messages whose
//! `fraction` never decreases.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::{load_dataset, Dataset};
use crate::error::{Error, Result};
use crate::job::JobControl;
use crate::report::{AnalysisDoc, BaselineDoc};
use crate::session::{BaselineOptions, PipelineConfig, Session, DEFAULT_BINS};
use crate::stage1::ModeCombo;
use crate::tensor::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    LoadDataset,
    RequestResults,
    SelectCluster,
    RemoveCluster,
    RequestHistograms,
    RequestBaselines,
    Progress,
    Result,
    Error,
}

impl MessageKind {
    /// Requests whose running job is cancelled by a newer one of the same
    /// kind.
    pub fn is_supersedable(self) -> bool {
        matches!(
            self,
            MessageKind::RequestResults | MessageKind::RequestHistograms | MessageKind::RequestBaselines
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolMessage {
    pub kind: MessageKind,
    pub request_id: String,
    #[serde(default)]
    pub payload: Value,
}

impl ProtocolMessage {
    pub fn new(kind: MessageKind, request_id: impl Into<String>, payload: Value) -> Self {
        Self {
            kind,
            request_id: request_id.into(),
            payload,
        }
    }

    pub fn progress(request_id: &str, fraction: f64) -> Self {
        Self::new(MessageKind::Progress, request_id, json!({ "fraction": fraction }))
    }

    pub fn error(request_id: &str, code: &str, message: impl Into<String>) -> Self {
        Self::new(
            MessageKind::Error,
            request_id,
            json!({ "code": code, "message": message.into() }),
        )
    }

    fn from_error(request_id: &str, e: &Error) -> Self {
        let code = match e {
            Error::Cancelled => "cancelled",
            e if e.is_input_error() => "invalid_request",
            _ => "numerical",
        };
        Self::error(request_id, code, e.to_string())
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }

    /// Parses a client message. A malformed one yields the error reply,
    /// carrying whatever `request_id` could be recovered.
    pub fn parse(text: &str) -> std::result::Result<Self, Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Self::error("", "malformed", format!("not a JSON document: {e}")))?;
        let request_id = value
            .get("request_id")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let msg: Self = serde_json::from_value(value)
            .map_err(|e| Self::error(&request_id, "malformed", e.to_string()))?;
        if matches!(msg.kind, MessageKind::Progress | MessageKind::Result | MessageKind::Error) {
            return Err(Self::error(&request_id, "malformed", format!("{:?} is a server message", msg.kind)));
        }
        Ok(msg)
    }
}

/// Locates datasets by name.
pub trait DatasetResolver: Send + Sync {
    fn resolve(&self, name: &str) -> Result<Dataset>;
}

/// Resolves `name` to `<root>/<name>.json`.
#[derive(Debug, Clone)]
pub struct DirectoryResolver {
    root: PathBuf,
}

impl DirectoryResolver {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl DatasetResolver for DirectoryResolver {
    fn resolve(&self, name: &str) -> Result<Dataset> {
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(Error::InvalidDataset(format!("invalid dataset name '{name}'")));
        }
        load_dataset(&self.root.join(format!("{name}.json")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadPayload {
    dataset: String,
    #[serde(default)]
    config: Option<PipelineConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultsPayload {
    point_mode: Mode,
    #[serde(default)]
    config: Option<PipelineConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectPayload {
    point_ids: Vec<usize>,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RemovePayload {
    cluster_id: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HistogramPayload {
    combo: ModeCombo,
    feature_index: usize,
    #[serde(default)]
    bins: Option<usize>,
}

fn payload<T: serde::de::DeserializeOwned>(value: &Value) -> Result<T> {
    serde_json::from_value(value.clone()).map_err(|e| Error::Parse(format!("payload: {e}")))
}

/// Per-connection message dispatcher owning one session.
pub struct SessionHandler<R> {
    resolver: R,
    session: Option<Session>,
}

impl<R: DatasetResolver> SessionHandler<R> {
    pub fn new(resolver: R) -> Self {
        Self {
            resolver,
            session: None,
        }
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    /// Handles one request and returns its `result` or `error` reply.
    pub fn handle(&mut self, msg: &ProtocolMessage, job: &JobControl) -> ProtocolMessage {
        match self.dispatch(msg, job) {
            Ok(payload) => ProtocolMessage::new(MessageKind::Result, msg.request_id.clone(), payload),
            Err(e) => ProtocolMessage::from_error(&msg.request_id, &e),
        }
    }

    fn session_mut(&mut self) -> Result<&mut Session> {
        self.session
            .as_mut()
            .ok_or_else(|| Error::InvalidSelection("no dataset loaded".into()))
    }

    fn dispatch(&mut self, msg: &ProtocolMessage, job: &JobControl) -> Result<Value> {
        match msg.kind {
            MessageKind::LoadDataset => {
                let p: LoadPayload = payload(&msg.payload)?;
                let dataset = self.resolver.resolve(&p.dataset)?;
                let session = Session::new(p.dataset.clone(), dataset.tensor, p.config.unwrap_or_default());
                let t = session.tensor();
                let reply = json!({
                    "dataset": p.dataset,
                    "name": dataset.name,
                    "dims": t.dims(),
                    "labels": {
                        "time": t.labels(Mode::Time),
                        "instance": t.labels(Mode::Instance),
                        "variable": t.labels(Mode::Variable),
                    },
                    "aux": t.aux(),
                });
                self.session = Some(session);
                Ok(reply)
            }
            MessageKind::RequestResults => {
                let p: ResultsPayload = payload(&msg.payload)?;
                let session = self.session_mut()?;
                let config = p.config.unwrap_or(*session.config());
                session.configure(p.point_mode, config);
                let results = session.active_results(job);
                let name = session.dataset().to_string();
                let tensor = session.tensor();
                let docs: Vec<Value> = results
                    .iter()
                    .map(|(combo, r)| match r {
                        Ok(r) => serde_json::to_value(AnalysisDoc::new(&name, tensor, r)).expect("serializable"),
                        Err(e) => json!({ "combo": combo, "error": e.to_string() }),
                    })
                    .collect();
                if let Some((_, Err(Error::Cancelled))) = results.iter().find(|(_, r)| matches!(r, Err(Error::Cancelled))) {
                    return Err(Error::Cancelled);
                }
                Ok(json!({ "point_mode": p.point_mode, "results": docs }))
            }
            MessageKind::SelectCluster => {
                let p: SelectPayload = payload(&msg.payload)?;
                let session = self.session_mut()?;
                let cluster = session.select_cluster(&p.point_ids, p.label, job)?;
                Ok(json!({ "cluster": cluster, "contributions": contributions(session, job)? }))
            }
            MessageKind::RemoveCluster => {
                let p: RemovePayload = payload(&msg.payload)?;
                let session = self.session_mut()?;
                session.remove_cluster(p.cluster_id, job)?;
                Ok(json!({
                    "removed": p.cluster_id,
                    "clusters": session.clusters(),
                    "contributions": contributions(session, job)?,
                }))
            }
            MessageKind::RequestHistograms => {
                let p: HistogramPayload = payload(&msg.payload)?;
                let session = self.session_mut()?;
                let h = session.histograms(p.combo, p.feature_index, p.bins.unwrap_or(DEFAULT_BINS), job)?;
                Ok(json!({ "combo": p.combo, "histograms": h }))
            }
            MessageKind::RequestBaselines => {
                let options: BaselineOptions = if msg.payload.is_null() {
                    BaselineOptions::default()
                } else {
                    payload(&msg.payload)?
                };
                let session = self.session_mut()?;
                let report = session.baselines(&options, job)?;
                Ok(serde_json::to_value(BaselineDoc::new(session.dataset(), &report)).expect("serializable"))
            }
            MessageKind::Progress | MessageKind::Result | MessageKind::Error => Err(Error::Parse(format!(
                "{:?} is a server message",
                msg.kind
            ))),
        }
    }
}

fn contributions(session: &mut Session, job: &JobControl) -> Result<Value> {
    let mut out = Vec::new();
    for combo in session.active_combos() {
        let fcs = session.contributions(combo, job)?;
        out.push(json!({ "combo": combo, "clusters": *fcs }));
    }
    Ok(Value::Array(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_messages_keep_request_id() {
        let err = ProtocolMessage::parse(r#"{"kind":"nonsense","request_id":"r7"}"#).unwrap_err();
        assert_eq!(err.kind, MessageKind::Error);
        assert_eq!(err.request_id, "r7");
        let err = ProtocolMessage::parse("{{{").unwrap_err();
        assert_eq!(err.request_id, "");
        let err = ProtocolMessage::parse(r#"{"kind":"result","request_id":"x"}"#).unwrap_err();
        assert_eq!(err.payload["code"], "malformed");
    }

    #[test]
    fn requests_before_load_fail_cleanly() {
        struct Nothing;
        impl DatasetResolver for Nothing {
            fn resolve(&self, name: &str) -> Result<Dataset> {
                Err(Error::InvalidDataset(name.into()))
            }
        }
        let mut h = SessionHandler::new(Nothing);
        let msg = ProtocolMessage::new(MessageKind::RequestResults, "a", json!({"point_mode": "time"}));
        let reply = h.handle(&msg, &JobControl::new());
        assert_eq!(reply.kind, MessageKind::Error);
        assert_eq!(reply.request_id, "a");
        let msg = ProtocolMessage::new(MessageKind::LoadDataset, "b", json!({"dataset": "x"}));
        assert_eq!(h.handle(&msg, &JobControl::new()).kind, MessageKind::Error);
    }

    #[test]
    fn directory_resolver_rejects_paths() {
        let r = DirectoryResolver::new("/tmp");
        assert!(r.resolve("../etc/passwd").is_err());
        assert!(r.resolve("a/b").is_err());
    }
}
