use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use once_cell::sync::OnceCell;
use sha2::{Digest, Sha256};

use super::{Judge, JudgeError};

type Scores = BTreeMap<String, f64>;

/// Memoizing wrapper: each distinct (source, targets, context) request
/// reaches the inner judge at most once, even under concurrent callers.
pub struct CachedJudge<J> {
    inner: J,
    entries: Mutex<HashMap<String, Arc<OnceCell<Scores>>>>,
    calls: AtomicUsize,
}

impl<J: Judge> CachedJudge<J> {
    pub fn new(inner: J) -> Self {
        CachedJudge { inner, entries: Mutex::new(HashMap::new()), calls: AtomicUsize::new(0) }
    }

    pub fn key(source: &str, targets: &[String], context: &str) -> String {
        let mut h = Sha256::new();
        h.update(source.as_bytes());
        h.update([0u8]);
        for t in targets {
            h.update(t.as_bytes());
            h.update([0x1f]);
        }
        h.update([0u8]);
        h.update(context.as_bytes());
        hex::encode(h.finalize())
    }

    /// Number of requests forwarded to the inner judge.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().values().filter(|c| c.get().is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inner(&self) -> &J {
        &self.inner
    }

    /// Loads entries from a JSON map written by [`CachedJudge::save`].
    pub fn load(&self, path: &Path) -> Result<usize, JudgeError> {
        let text = std::fs::read_to_string(path).map_err(|e| JudgeError::Config(format!("{}: {e}", path.display())))?;
        let map: BTreeMap<String, Scores> =
            serde_json::from_str(&text).map_err(|e| JudgeError::Config(format!("{}: {e}", path.display())))?;
        let mut entries = self.entries.lock().unwrap();
        let n = map.len();
        for (k, v) in map {
            let cell = OnceCell::new();
            let _ = cell.set(v);
            entries.insert(k, Arc::new(cell));
        }
        Ok(n)
    }

    pub fn save(&self, path: &Path) -> Result<(), JudgeError> {
        let map: BTreeMap<String, Scores> =
            self.entries.lock().unwrap().iter().filter_map(|(k, c)| c.get().map(|v| (k.clone(), v.clone()))).collect();
        let text = serde_json::to_string(&map).map_err(|e| JudgeError::Config(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| JudgeError::Config(format!("{}: {e}", path.display())))
    }
}

impl<J: Judge> Judge for CachedJudge<J> {
    fn score(&self, source: &str, targets: &[String], context: &str) -> Result<Scores, JudgeError> {
        let key = Self::key(source, targets, context);
        let cell = self.entries.lock().unwrap().entry(key).or_default().clone();
        cell.get_or_try_init(|| {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.score(source, targets, context)
        })
        .cloned()
    }
}
