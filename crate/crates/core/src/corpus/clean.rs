//! Heuristic removal of URLs, e-mail addresses and stack-trace/code blocks.

use std::sync::OnceLock;

use regex::Regex;

/// Minimum share of non-alphabetic characters that makes a line code-like.
const CODE_LINE_NON_ALPHA_SHARE: f64 = 0.4;
/// Consecutive code-like lines needed before a block is dropped.
const MIN_CODE_RUN: usize = 2;

fn frame_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"^(?:#\d+|at [A-Za-z_$][\w$.<>]*\(|File "[^"]*")"#).expect("valid regex")
    })
}

fn url_token() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:[a-z][a-z0-9+.-]*://|www\.)").expect("valid regex"))
}

fn email_token() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)+").expect("valid regex")
    })
}

/// Whether a single line looks like a stack frame or code.
pub fn is_code_line(line: &str) -> bool {
    let line = line.trim();
    if line.is_empty() {
        return false;
    }
    if frame_pattern().is_match(line) {
        return true;
    }
    let total = line.chars().count();
    let non_alpha = line.chars().filter(|c| !c.is_alphabetic()).count();
    non_alpha as f64 >= CODE_LINE_NON_ALPHA_SHARE * total as f64
}

fn drop_code_blocks(raw: &str) -> Vec<&str> {
    let lines: Vec<&str> = raw.lines().collect();
    let mut kept = Vec::with_capacity(lines.len());
    let mut i = 0;
    while i < lines.len() {
        if is_code_line(lines[i]) {
            let start = i;
            while i < lines.len() && is_code_line(lines[i]) {
                i += 1;
            }
            if i - start < MIN_CODE_RUN {
                kept.extend_from_slice(&lines[start..i]);
            }
        } else {
            kept.push(lines[i]);
            i += 1;
        }
    }
    kept
}

fn is_removable_token(token: &str) -> bool {
    url_token().is_match(token) || email_token().is_match(token)
}

/// Strips code-like line runs, then URL and e-mail tokens, then collapses whitespace.
///
/// The result is a single line of space-separated tokens, so applying it twice
/// gives the same output, and it is never longer than the input.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for line in drop_code_blocks(raw) {
        for token in line.split_whitespace() {
            if is_removable_token(token) {
                continue;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(token);
        }
    }
    out
}
