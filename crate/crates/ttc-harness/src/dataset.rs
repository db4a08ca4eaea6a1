//! JSONL question ingestion and synthetic question generation.
//!
//! One record per line, either a synthetic task or an external prompt:
//!
//! ```text
//! {"id": "q1", "env": {"p_step": 0.6, "depth": 3, "wrong_answer_count": 9}}
//! {"id": "q2", "question_text": "What is 2+2?", "answer": "4"}
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use ttc_core::types::{AnswerId, EnvParams, Question};

use crate::config::SyntheticDatasetConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate question id {id}")]
    DuplicateId { line: usize, id: String },
}

/// Loaded questions plus the expected answer text for external ones, used by
/// remote grading.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub questions: Vec<Question>,
    pub answer_key: BTreeMap<String, String>,
}

impl Dataset {
    pub fn from_questions(questions: Vec<Question>) -> Self {
        Dataset {
            questions,
            answer_key: BTreeMap::new(),
        }
    }

    pub fn is_fully_synthetic(&self) -> bool {
        self.questions.iter().all(|q| q.env().is_some())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    #[serde(default)]
    question_text: Option<String>,
    #[serde(default)]
    answer: Option<String>,
    #[serde(default)]
    env: Option<EnvParams>,
}

/// Load a JSONL dataset; blank lines are allowed, anything else must be a
/// valid record with a fresh id.
pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(path).map_err(|e| DatasetError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let reader = BufReader::new(file);
    let mut dataset = Dataset::default();
    let mut seen = std::collections::BTreeSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_number = index + 1;
        let line = line.map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord =
            serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
                line: line_number,
                message: e.to_string(),
            })?;
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId {
                line: line_number,
                id: record.id,
            });
        }
        let question = match (record.env, record.question_text, record.answer) {
            (Some(env), None, None) => {
                env.validate().map_err(|e| DatasetError::Parse {
                    line: line_number,
                    message: e.to_string(),
                })?;
                Question::synthetic(record.id, env)
            }
            (None, Some(text), Some(answer)) => {
                dataset.answer_key.insert(record.id.clone(), answer);
                Question::external(record.id, text, AnswerId::CORRECT)
            }
            _ => {
                return Err(DatasetError::Parse {
                    line: line_number,
                    message: "record needs either env or question_text plus answer".into(),
                })
            }
        };
        dataset.questions.push(question);
    }
    Ok(dataset)
}

/// Generate `count` synthetic questions whose `p_step` is evenly spaced over
/// the configured range, easiest last; ids are `syn-0000`, `syn-0001`, ...
pub fn synthesize_questions(config: &SyntheticDatasetConfig) -> Vec<Question> {
    let count = config.count;
    (0..count)
        .map(|i| {
            let t = if count <= 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            };
            let env = EnvParams {
                p_step: config.p_step_min + t * (config.p_step_max - config.p_step_min),
                depth: config.depth,
                wrong_answer_count: config.wrong_answer_count,
                revision_uplift: config.revision_uplift,
                corruption_prob: config.corruption_prob,
            };
            Question::synthetic(format!("syn-{i:04}"), env)
        })
        .collect()
}
