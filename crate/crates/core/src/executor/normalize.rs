use std::collections::BTreeSet;

use thiserror::Error;

use super::{ExecutionResult, ExecutionStatus};
use crate::encoding::{label_to_index, EncodingKind};
use crate::tasks::{Answer, TaskKind};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("execution ended with status {0:?}; the answer is unanswerable")]
    Unanswerable(ExecutionStatus),
    #[error("cannot read `{text}` as a {task} answer")]
    Unparseable { task: TaskKind, text: String },
}

/// Turns an execution result into a comparable answer.
pub fn normalize_answer(result: &ExecutionResult, task: TaskKind, kind: EncodingKind) -> Result<Answer, NormalizeError> {
    match (&result.status, &result.ans_text) {
        (ExecutionStatus::Ok, Some(text)) => parse_answer_text(text, task, kind),
        (status, _) => Err(NormalizeError::Unanswerable(*status)),
    }
}

fn strip_period(text: &str) -> &str {
    let t = text.trim();
    t.strip_suffix('.').unwrap_or(t).trim_end()
}

fn yes_no(text: &str) -> Option<bool> {
    match strip_period(text).to_ascii_lowercase().as_str() {
        "true" | "yes" => Some(true),
        "false" | "no" => Some(false),
        _ => None,
    }
}

/// Parses answer text for one task.
///
/// * counts and degree: a non-negative integer;
/// * edge existence: `True`/`False`/`Yes`/`No`, any case;
/// * cycle check: `Has cycle.`/`No cycle.` (period optional, any case) or
///   the yes/no forms;
/// * connected nodes: comma-separated labels mapped back to node indices,
///   with `No nodes` meaning the empty set.
pub fn parse_answer_text(text: &str, task: TaskKind, kind: EncodingKind) -> Result<Answer, NormalizeError> {
    let fail = || NormalizeError::Unparseable {
        task,
        text: text.to_string(),
    };
    match task {
        TaskKind::NodeCount | TaskKind::EdgeCount | TaskKind::NodeDegree => {
            let t = strip_period(text);
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(fail());
            }
            t.parse().map(Answer::Integer).map_err(|_| fail())
        }
        TaskKind::EdgeExistence => yes_no(text).map(Answer::Boolean).ok_or_else(fail),
        TaskKind::CycleCheck => match strip_period(text).to_ascii_lowercase().as_str() {
            "has cycle" => Ok(Answer::Cycle(true)),
            "no cycle" => Ok(Answer::Cycle(false)),
            _ => yes_no(text).map(Answer::Cycle).ok_or_else(fail),
        },
        TaskKind::ConnectedNodes => {
            let t = strip_period(text);
            if t.eq_ignore_ascii_case("no nodes") {
                return Ok(Answer::Nodes(BTreeSet::new()));
            }
            t.split(',')
                .map(|item| {
                    let label = item.trim().trim_matches(['\'', '"']);
                    label_to_index(label, kind).ok_or_else(fail)
                })
                .collect::<Result<BTreeSet<_>, _>>()
                .map(Answer::Nodes)
        }
    }
}

/// The answer part of a natural-language response: the text after the last
/// "The answer is", or else the last non-empty line.
pub fn extract_text_answer(response: &str) -> Option<String> {
    const CUE: &str = "the answer is";
    let lower = response.to_ascii_lowercase();
    if let Some(at) = lower.rfind(CUE) {
        let rest = &response[at + CUE.len()..];
        let line = rest.lines().next().unwrap_or("").trim().trim_start_matches(':').trim();
        if !line.is_empty() {
            return Some(line.to_string());
        }
    }
    response
        .lines()
        .map(str::trim)
        .rfind(|l| !l.is_empty())
        .map(|l| l.strip_prefix("A:").unwrap_or(l).trim().to_string())
        .filter(|l| !l.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, task: TaskKind) -> Result<Answer, NormalizeError> {
        parse_answer_text(text, task, EncodingKind::Adjacency)
    }

    #[test]
    fn sample_program_strings() {
        assert_eq!(parse("Has cycle.", TaskKind::CycleCheck), Ok(Answer::Cycle(true)));
        assert_eq!(parse("No cycle", TaskKind::CycleCheck), Ok(Answer::Cycle(false)));
        assert_eq!(parse("No nodes", TaskKind::ConnectedNodes), Ok(Answer::Nodes(BTreeSet::new())));
        assert_eq!(parse("1, 3, 5", TaskKind::ConnectedNodes), Ok(Answer::Nodes([1, 3, 5].into())));
        assert_eq!(parse("False", TaskKind::EdgeExistence), Ok(Answer::Boolean(false)));
        assert_eq!(parse("yes", TaskKind::EdgeExistence), Ok(Answer::Boolean(true)));
        assert_eq!(parse(" 12\n", TaskKind::EdgeCount), Ok(Answer::Integer(12)));
    }

    #[test]
    fn names_map_back_to_indices() {
        let a = parse_answer_text("David, James, Michael, Robert", TaskKind::ConnectedNodes, EncodingKind::Friendship);
        assert_eq!(a, Ok(Answer::Nodes([0, 1, 3, 4].into())));
        let a = parse_answer_text("A, E", TaskKind::ConnectedNodes, EncodingKind::Expert);
        assert_eq!(a, Ok(Answer::Nodes([0, 4].into())));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("-1", TaskKind::NodeDegree).is_err());
        assert!(parse("4.5", TaskKind::NodeDegree).is_err());
        assert!(parse("maybe", TaskKind::EdgeExistence).is_err());
        assert!(parse("1, x", TaskKind::ConnectedNodes).is_err());
        assert!(parse("", TaskKind::ConnectedNodes).is_err());
    }

    #[test]
    fn non_ok_results_are_unanswerable() {
        let r = ExecutionResult {
            status: ExecutionStatus::Timeout,
            ans_text: None,
            stderr_excerpt: String::new(),
            duration_ms: 0,
        };
        assert_eq!(
            normalize_answer(&r, TaskKind::NodeCount, EncodingKind::Adjacency),
            Err(NormalizeError::Unanswerable(ExecutionStatus::Timeout))
        );
    }

    #[test]
    fn text_answers() {
        assert_eq!(extract_text_answer("Step 1\nThe answer is 4."), Some("4.".into()));
        assert_eq!(extract_text_answer("A: Yes\n"), Some("Yes".into()));
        assert_eq!(extract_text_answer("  \n"), None);
    }
}
