//! Inference prompt rendering and budget fitting.
//!
//! Layout: `<prefix> <hunk> : <retrieved lines...> <context>`, flattened to
//! one line. When the prompt is over budget, tokens come off the end of
//! the context first; retrieved lines are only dropped (last first) once
//! the context is gone. The head (`<prefix> <hunk> :`) is never touched.

use serde::{Deserialize, Serialize};

use crate::context::ContextSpan;
use crate::corpus::SEPARATOR;
use crate::retrieval::RetrievedLine;
use crate::text::flatten_lines;
use crate::tokenize::{SimpleTokenizer, TokenBudget, Tokenizer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("prefix, hunk and separator need {needed} tokens but the input limit is {limit}")]
    HunkExceedsBudget { needed: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub language_prefix: String,
    pub hunk_text: String,
    pub retrieved: Vec<String>,
    pub context_text: String,
    pub rendered: String,
    pub token_count: usize,
}

impl Prompt {
    /// The part of the rendered prompt that truncation never changes.
    pub fn head(&self) -> String {
        render_head(&self.language_prefix, &self.hunk_text)
    }
}

fn render_head(prefix: &str, hunk: &str) -> String {
    format!("{prefix} {hunk} {SEPARATOR}")
}

fn render(prefix: &str, hunk: &str, retrieved: &[String], context: &str) -> String {
    let mut out = render_head(prefix, hunk);
    for seg in retrieved.iter().map(String::as_str).chain(std::iter::once(context)) {
        if !seg.is_empty() {
            out.push(' ');
            out.push_str(seg);
        }
    }
    out
}

/// Builds a prompt, counting tokens with `tokenizer`. `retrieved` is
/// expected most-similar first and keeps that order.
pub fn build_prompt_with(
    tokenizer: &dyn Tokenizer,
    prefix: &str,
    hunk: &str,
    retrieved: &[RetrievedLine],
    context: &ContextSpan,
) -> Prompt {
    let hunk_text = flatten_lines(hunk);
    let retrieved: Vec<String> = retrieved.iter().map(|r| flatten_lines(&r.text)).filter(|s| !s.is_empty()).collect();
    let context_text = flatten_lines(&context.text);
    let rendered = render(prefix, &hunk_text, &retrieved, &context_text);
    Prompt {
        language_prefix: prefix.to_string(),
        token_count: tokenizer.count(&rendered),
        hunk_text,
        retrieved,
        context_text,
        rendered,
    }
}

pub fn build_prompt(prefix: &str, hunk: &str, retrieved: &[RetrievedLine], context: &ContextSpan) -> Prompt {
    build_prompt_with(&SimpleTokenizer, prefix, hunk, retrieved, context)
}

/// Trims `prompt` to `budget.input_limit` tokens.
pub fn fit_to_budget(prompt: &Prompt, budget: TokenBudget, tokenizer: &dyn Tokenizer) -> Result<Prompt, EncodeError> {
    let limit = budget.input_limit;
    let head = prompt.head();
    let needed = tokenizer.count(&head);
    if needed > limit {
        return Err(EncodeError::HunkExceedsBudget { needed, limit });
    }
    let rebuild = |retrieved: Vec<String>, context: String| {
        let rendered = render(&prompt.language_prefix, &prompt.hunk_text, &retrieved, &context);
        Prompt {
            language_prefix: prompt.language_prefix.clone(),
            hunk_text: prompt.hunk_text.clone(),
            token_count: tokenizer.count(&rendered),
            retrieved,
            context_text: context,
            rendered,
        }
    };

    let current = rebuild(prompt.retrieved.clone(), prompt.context_text.clone());
    if current.token_count <= limit {
        return Ok(current);
    }

    // Cut the context tail.
    let without_context = tokenizer.count(&render(&prompt.language_prefix, &prompt.hunk_text, &prompt.retrieved, ""));
    if without_context < limit {
        let mut allowance = limit - without_context;
        loop {
            let context = tokenizer.truncate(&prompt.context_text, allowance).trim_end().to_string();
            let candidate = rebuild(prompt.retrieved.clone(), context);
            if candidate.token_count <= limit {
                return Ok(candidate);
            }
            if allowance == 0 {
                break;
            }
            allowance -= 1;
        }
    }

    // Context is gone; drop retrieved lines from the least similar end.
    let mut retrieved = prompt.retrieved.clone();
    loop {
        let candidate = rebuild(retrieved.clone(), String::new());
        if candidate.token_count <= limit || retrieved.is_empty() {
            return Ok(candidate);
        }
        retrieved.pop();
    }
}
