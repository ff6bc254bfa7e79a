use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("`{0}` must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error(
        "need spawn_distance > control_radius > junction half width \
         (got {spawn_distance} / {control_radius} / {junction_half_width})"
    )]
    Ordering {
        spawn_distance: f64,
        control_radius: f64,
        junction_half_width: f64,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` is not a number: `{value}`")]
    NotNumeric {
        line: usize,
        key: String,
        value: String,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("`{key}` out of range: {reason}")]
    OutOfRange { key: &'static str, reason: String },
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("scenario has no vehicles")]
    Empty,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("collision at t={time:.1}s between vehicles {a} and {b}: {detail}\n{trace}")]
    Collision {
        time: f64,
        a: u32,
        b: u32,
        detail: String,
        trace: String,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep needs at least one strategy")]
    NoStrategies,
    #[error("sweep needs at least one arrival rate")]
    NoLambdas,
    #[error("sweep needs at least one seed")]
    NoSeeds,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
