//! HTTP backend for real model checkpoints.
//!
//! `POST <endpoint>/generate` with `{"prompt", "beam_size", "checkpoint"}`;
//! the reply is `{"candidates": [{"text", "score"}, ...]}`. Any non-200
//! status or transport failure means the backend is unavailable; more
//! candidates than the beam size, or an unparsable body, is malformed.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_beam, GenerateError, GenerationRequest, Generator, RawCandidate};

#[derive(Debug, Serialize)]
struct GenerateBody<'a> {
    prompt: &'a str,
    beam_size: usize,
    checkpoint: usize,
}

#[derive(Debug, Deserialize)]
struct GenerateReply {
    candidates: Vec<RawCandidate>,
}

pub struct RemoteGenerator {
    url: String,
    agent: ureq::Agent,
}

impl RemoteGenerator {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteGenerator { url: format!("{}/generate", endpoint.trim_end_matches('/')), agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Generator for RemoteGenerator {
    fn propose(&self, request: &GenerationRequest<'_>) -> Result<Vec<RawCandidate>, GenerateError> {
        let body = GenerateBody {
            prompt: &request.prompt.rendered,
            beam_size: request.beam_size,
            checkpoint: request.checkpoint,
        };
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .map_err(|e| GenerateError::Unavailable(format!("{}: {e}", self.url)))?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(GenerateError::Unavailable(format!("{} answered HTTP {status}", self.url)));
        }
        let reply: GenerateReply = response
            .body_mut()
            .read_json()
            .map_err(|e| GenerateError::Malformed(e.to_string()))?;
        check_beam(&reply.candidates, request.beam_size)?;
        Ok(reply.candidates)
    }
}
