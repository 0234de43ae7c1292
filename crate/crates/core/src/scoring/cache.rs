use std::collections::HashMap;
use std::sync::RwLock;

use super::{Capability, Output, Request};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub backend_id: String,
    pub function: Capability,
    pub request: Request,
}

/// Concurrent memo of validated outputs keyed by backend, function and
/// normalized request. Backends are pure, so racing writers store equal values.
#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: RwLock<HashMap<CacheKey, Output>>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, backend_id: &str, function: Capability, request: &Request) -> Option<Output> {
        let key = CacheKey {
            backend_id: backend_id.to_string(),
            function,
            request: request.clone(),
        };
        self.entries.read().expect("cache lock poisoned").get(&key).copied()
    }

    pub fn insert(&self, backend_id: &str, function: Capability, request: &Request, output: Output) {
        let key = CacheKey {
            backend_id: backend_id.to_string(),
            function,
            request: request.clone(),
        };
        self.entries.write().expect("cache lock poisoned").insert(key, output);
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
