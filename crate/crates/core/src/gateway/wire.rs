//! Chat-completion JSON bodies.

use serde_json::{json, Value};

use super::{CompletionRequest, Usage};

pub fn request_body(model: &str, req: &CompletionRequest) -> Value {
    let mut body = json!({
        "model": model,
        "messages": [{ "role": "user", "content": req.prompt }],
        "temperature": req.sampling.temperature,
        "max_tokens": req.sampling.max_tokens,
    });
    if let Some(seed) = req.sampling.seed {
        body["seed"] = json!(seed);
    }
    body
}

pub fn response_body(model: &str, text: &str, finish_reason: &str, usage: Usage) -> Value {
    json!({
        "object": "chat.completion",
        "model": model,
        "choices": [{
            "index": 0,
            "message": { "role": "assistant", "content": text },
            "finish_reason": finish_reason,
        }],
        "usage": {
            "prompt_tokens": usage.prompt_tokens,
            "completion_tokens": usage.completion_tokens,
            "total_tokens": usage.prompt_tokens + usage.completion_tokens,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub text: String,
    pub finish_reason: Option<String>,
    pub usage: Usage,
}

/// Pulls the first choice out of a chat-completion response.
pub fn parse_response(body: &Value) -> Result<ParsedResponse, String> {
    let choice = body
        .get("choices")
        .and_then(Value::as_array)
        .and_then(|c| c.first())
        .ok_or("response has no choices")?;
    let content = &choice["message"]["content"];
    let text = match content {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        _ => return Err("message content is not a string".into()),
    };
    let finish_reason = choice["finish_reason"].as_str().map(str::to_string);
    let count = |k: &str| body["usage"][k].as_u64().unwrap_or(0);
    Ok(ParsedResponse {
        text,
        finish_reason,
        usage: Usage {
            prompt_tokens: count("prompt_tokens"),
            completion_tokens: count("completion_tokens"),
        },
    })
}
