use serde::Serialize;
use thiserror::Error;

pub const CODE_START: &str = "# CODE START";
pub const CODE_END: &str = "# CODE END";

/// Program text taken from between a pair of marker lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtractedCode {
    /// Inner text, without the marker lines and without markdown fence lines.
    pub code: String,
    /// Byte range of the chosen pair in the response, from the start of the
    /// `# CODE START` line to the end of the `# CODE END` line.
    pub marker_span: (usize, usize),
    /// Zero-based index of the chosen pair among all complete pairs.
    pub pair_index: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractError {
    #[error("response has no `# CODE START` marker")]
    NoMarkers,
    #[error("`# CODE START` at byte {0} has no matching `# CODE END`")]
    Unterminated(usize),
    #[error("the last marker pair encloses no code")]
    EmptyCode,
}

fn is_marker(line: &str, marker: &str) -> bool {
    line.trim() == marker
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// Picks the last complete `# CODE START` … `# CODE END` pair.
///
/// Marker lines may carry surrounding whitespace. When a START is repeated
/// before its END, the later START opens the pair. Markdown fence lines inside
/// the pair are dropped.
pub fn extract_code(response: &str) -> Result<ExtractedCode, ExtractError> {
    let mut open: Option<(usize, usize)> = None; // (line start, inner start)
    let mut last_open_at = None;
    let mut pairs: Vec<((usize, usize), (usize, usize))> = Vec::new(); // (span, inner)
    let mut offset = 0;
    for line in response.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let content = line.trim_end_matches(['\n', '\r']);
        if is_marker(content, CODE_START) {
            open = Some((start, offset));
            last_open_at = Some(start);
        } else if is_marker(content, CODE_END) {
            if let Some((span_start, inner_start)) = open.take() {
                pairs.push(((span_start, start + content.len()), (inner_start, start)));
            }
        }
    }
    if let Some((start, _)) = open {
        if pairs.is_empty() {
            return Err(ExtractError::Unterminated(start));
        }
    }
    let Some(&(span, (inner_start, inner_end))) = pairs.last() else {
        return Err(match last_open_at {
            Some(at) => ExtractError::Unterminated(at),
            None => ExtractError::NoMarkers,
        });
    };
    let code: Vec<&str> = response[inner_start..inner_end]
        .lines()
        .filter(|l| !is_fence(l))
        .collect();
    let code = code.join("\n");
    if code.trim().is_empty() {
        return Err(ExtractError::EmptyCode);
    }
    Ok(ExtractedCode {
        code,
        marker_span: span,
        pair_index: pairs.len() - 1,
    })
}

/// [`extract_code`] over raw bytes; invalid UTF-8 is replaced, never fatal.
pub fn extract_code_bytes(response: &[u8]) -> Result<ExtractedCode, ExtractError> {
    extract_code(&String::from_utf8_lossy(response))
}
