//! Candidate sampling: model profiles, cost accounting and the three
//! backends (live chat-completion endpoint, mock corpus, replay store).
//!
//! Backends hand back the model's text untouched. Fence stripping exists
//! only as an opt-in salvage step ([`strip_fences`]) applied by callers.

mod live;
mod mock;
mod replay;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::promptkit::{PromptBundle, PromptMode};
use crate::routine::Routine;

pub use live::{parse_response, request_body, LiveBackend, LiveConfig};
pub use mock::MockBackend;
pub use replay::{ReplayMeta, ReplayStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub model_id: String,
    pub context_window: u64,
    pub max_output_tokens: u64,
    /// USD per 1M input tokens.
    pub price_in: f64,
    /// USD per 1M output tokens.
    pub price_out: f64,
    pub reasoning: bool,
}

impl ModelProfile {
    pub fn gpt_4_1() -> Self {
        ModelProfile {
            model_id: "gpt-4.1".into(),
            context_window: 1_047_576,
            max_output_tokens: 32_768,
            price_in: 2.00,
            price_out: 8.00,
            reasoning: false,
        }
    }

    pub fn o4_mini() -> Self {
        ModelProfile {
            model_id: "o4-mini".into(),
            context_window: 200_000,
            max_output_tokens: 100_000,
            price_in: 1.10,
            price_out: 4.40,
            reasoning: true,
        }
    }

    pub fn builtin() -> Vec<ModelProfile> {
        vec![Self::gpt_4_1(), Self::o4_mini()]
    }

    pub fn lookup(id: &str) -> Option<ModelProfile> {
        Self::builtin().into_iter().find(|p| p.model_id == id)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.model_id.is_empty() {
            return Err("model_id is empty".into());
        }
        if self.context_window == 0 || self.max_output_tokens == 0 || !(self.price_in > 0.0) || !(self.price_out > 0.0) {
            return Err(format!("{}: numeric fields must be positive", self.model_id));
        }
        Ok(())
    }

    pub fn cost(&self, tokens_in: u64, tokens_out: u64) -> f64 {
        tokens_in as f64 * self.price_in / 1e6 + tokens_out as f64 * self.price_out / 1e6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    pub n_samples: usize,
    pub temperature: f64,
    pub top_p: f64,
    /// Send temperature/top_p at all. Ignored for reasoning models.
    pub send_sampling_params: bool,
    /// Requests in flight per prompt.
    pub max_in_flight: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { n_samples: 10, temperature: 1.0, top_p: 1.0, send_sampling_params: true, max_in_flight: 4 }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_samples == 0 {
            return Err("n_samples must be at least 1".into());
        }
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".into());
        }
        Ok(())
    }

    /// The (temperature, top_p) pair to put on the wire, if any.
    pub fn wire_params(&self, profile: &ModelProfile) -> Option<(f64, f64)> {
        (self.send_sampling_params && !profile.reasoning).then_some((self.temperature, self.top_p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCandidate {
    pub routine: Routine,
    pub mode: PromptMode,
    pub model_id: String,
    pub sample_index: usize,
    pub source: String,
    pub tokens_in: u64,
    /// Billed output tokens, reasoning included.
    pub tokens_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_tokens: Option<u64>,
    pub cost_usd: f64,
    /// Set when sampling failed for good; `source` is then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl KernelCandidate {
    pub fn key(&self) -> SampleKey {
        SampleKey { routine: self.routine, mode: self.mode, model_id: self.model_id.clone(), index: self.sample_index }
    }
}

/// Identity of one sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleKey {
    pub routine: Routine,
    pub mode: PromptMode,
    pub model_id: String,
    pub index: usize,
}

impl fmt::Display for SampleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.routine, self.mode, self.model_id, self.index)
    }
}

/// What a backend returns for one sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawSample {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub reasoning_tokens: Option<u64>,
    /// Stored cost (replay); recomputed from the profile when absent.
    pub cost_usd: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    /// Authentication, quota or configuration problems; the run stops.
    #[error("{0}")]
    Terminal(String),
    #[error("replay miss: no stored candidate for {0}")]
    ReplayMiss(SampleKey),
    /// This sample failed after retries; recorded, run continues.
    #[error("{0}")]
    Failed(String),
}

pub struct SampleRequest<'a> {
    pub bundle: &'a PromptBundle,
    pub profile: &'a ModelProfile,
    pub cfg: &'a SamplingConfig,
    pub index: usize,
}

impl SampleRequest<'_> {
    pub fn key(&self) -> SampleKey {
        SampleKey {
            routine: self.bundle.routine,
            mode: self.bundle.mode,
            model_id: self.profile.model_id.clone(),
            index: self.index,
        }
    }
}

pub trait Backend: Sync {
    fn name(&self) -> String;
    fn sample(&self, req: &SampleRequest<'_>) -> Result<RawSample, SampleError>;
}

/// Crude token estimate used by offline backends (4 bytes per token).
pub fn estimate_tokens(text: &str) -> u64 {
    (text.len() as u64).div_ceil(4)
}

fn to_candidate(req: &SampleRequest<'_>, raw: RawSample) -> KernelCandidate {
    let cost = raw.cost_usd.unwrap_or_else(|| req.profile.cost(raw.tokens_in, raw.tokens_out));
    let (source, failure) = match raw.failure {
        Some(f) => (String::new(), Some(f)),
        None => (raw.text, None),
    };
    KernelCandidate {
        routine: req.bundle.routine,
        mode: req.bundle.mode,
        model_id: req.profile.model_id.clone(),
        sample_index: req.index,
        source,
        tokens_in: raw.tokens_in,
        tokens_out: raw.tokens_out,
        reasoning_tokens: raw.reasoning_tokens,
        cost_usd: cost,
        failure,
    }
}

/// Samples the given indices; results follow `indices` order.
pub fn sample_indices(
    backend: &dyn Backend,
    bundle: &PromptBundle,
    profile: &ModelProfile,
    cfg: &SamplingConfig,
    indices: &[usize],
) -> Result<Vec<KernelCandidate>, SampleError> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(cfg.max_in_flight.max(1)) {
        let results: Vec<Result<KernelCandidate, SampleError>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&index| {
                    s.spawn(move || {
                        let req = SampleRequest { bundle, profile, cfg, index };
                        match backend.sample(&req) {
                            Ok(raw) => Ok(to_candidate(&req, raw)),
                            Err(SampleError::Failed(msg)) => {
                                Ok(to_candidate(&req, RawSample { failure: Some(msg), ..RawSample::default() }))
                            }
                            Err(e) => Err(e),
                        }
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("sampler thread panicked")).collect()
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

/// Exactly `cfg.n_samples` candidates in index order.
pub fn sample_candidates(
    backend: &dyn Backend,
    bundle: &PromptBundle,
    profile: &ModelProfile,
    cfg: &SamplingConfig,
) -> Result<Vec<KernelCandidate>, SampleError> {
    let indices: Vec<usize> = (0..cfg.n_samples).collect();
    sample_indices(backend, bundle, profile, cfg, &indices)
}

/// Salvage step for replies wrapped in Markdown fences: keeps the body of
/// the first fenced block. `None` when there is no fence.
pub fn strip_fences(text: &str) -> Option<String> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
    let body = &after[body_start..];
    let end = body.find("```").unwrap_or(body.len());
    Some(body[..end].to_string())
}
