//! Cooperative cancellation and progress reporting for long-running jobs.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

type ProgressFn = dyn Fn(f64) + Send + Sync;

/// Handle shared between a job and whoever started it.
#[derive(Clone, Default)]
pub struct JobControl {
    cancelled: Arc<AtomicBool>,
    progress: Option<Arc<ProgressFn>>,
    last: Arc<Mutex<f64>>,
}

impl std::fmt::Debug for JobControl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JobControl")
            .field("cancelled", &self.is_cancelled())
            .finish()
    }
}

impl JobControl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_progress(callback: impl Fn(f64) + Send + Sync + 'static) -> Self {
        Self {
            progress: Some(Arc::new(callback)),
            ..Self::default()
        }
    }

    pub fn cancel(&self) {
        self.cancelled.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancelled.load(Ordering::SeqCst)
    }

    pub fn checkpoint(&self) -> Result<()> {
        if self.is_cancelled() {
            Err(Error::Cancelled)
        } else {
            Ok(())
        }
    }

    /// Reports a fraction in [0, 1]. Values below the last report are
    /// ignored so observers see a non-decreasing sequence.
    pub fn report(&self, fraction: f64) {
        let Some(cb) = &self.progress else { return };
        let fraction = fraction.clamp(0.0, 1.0);
        let mut last = self.last.lock().expect("progress lock");
        if fraction > *last || (fraction == 0.0 && *last == 0.0) {
            *last = fraction;
            drop(last);
            cb(fraction);
        }
    }

    /// A view of this job covering `[start, end]` of its progress range.
    pub fn subrange(&self, start: f64, end: f64) -> JobControl {
        let parent = self.clone();
        let mut child = JobControl {
            cancelled: self.cancelled.clone(),
            progress: None,
            last: Arc::new(Mutex::new(0.0)),
        };
        if self.progress.is_some() {
            child.progress = Some(Arc::new(move |f| parent.report(start + (end - start) * f)));
        }
        child
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn progress_is_monotone() {
        let seen = Arc::new(Mutex::new(Vec::new()));
        let s = seen.clone();
        let job = JobControl::with_progress(move |f| s.lock().unwrap().push(f));
        for f in [0.1, 0.3, 0.2, 0.5, 2.0] {
            job.report(f);
        }
        assert_eq!(*seen.lock().unwrap(), vec![0.1, 0.3, 0.5, 1.0]);
    }

    #[test]
    fn subrange_maps_into_parent() {
        let seen = Arc::new(Mutex::new(Vec::new()));
        let s = seen.clone();
        let job = JobControl::with_progress(move |f| s.lock().unwrap().push(f));
        let half = job.subrange(0.5, 1.0);
        half.report(0.5);
        assert_eq!(*seen.lock().unwrap(), vec![0.75]);
        half.cancel();
        assert!(job.checkpoint().is_err());
    }
}
