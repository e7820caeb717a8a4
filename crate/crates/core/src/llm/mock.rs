//! Scriptable offline model client.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{Generation, GenerationParams, LlmError, ModelClient};
use crate::context::prompt_target;

type Responder = dyn Fn(&str, &GenerationParams) -> Result<String, LlmError> + Send + Sync;

pub struct MockClient {
    respond: Box<Responder>,
    calls: AtomicUsize,
}

impl MockClient {
    pub fn from_fn(
        f: impl Fn(&str, &GenerationParams) -> Result<String, LlmError> + Send + Sync + 'static,
    ) -> Self {
        MockClient {
            respond: Box::new(f),
            calls: AtomicUsize::new(0),
        }
    }

    /// Always answers `text`.
    pub fn constant(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::from_fn(move |_, _| Ok(text.clone()))
    }

    /// Answers from a queue, one entry per call, then fails.
    pub fn scripted(script: Vec<Result<String, LlmError>>) -> Self {
        let queue = Mutex::new(VecDeque::from(script));
        Self::from_fn(move |_, _| {
            queue
                .lock()
                .expect("mock script lock")
                .pop_front()
                .unwrap_or_else(|| Err(LlmError::provider("mock script exhausted")))
        })
    }

    /// Answers by the prompt's target assembly. Unknown targets get a
    /// provider error.
    pub fn by_target(responses: HashMap<String, String>) -> Self {
        Self::from_fn(move |prompt, _| {
            let target = prompt_target(prompt).ok_or_else(|| LlmError::provider("prompt has no target block"))?;
            responses
                .get(target)
                .cloned()
                .ok_or_else(|| LlmError::provider("no scripted response for this target"))
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ModelClient for MockClient {
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Generation, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.respond)(prompt, params).map(Generation::from)
    }
}
