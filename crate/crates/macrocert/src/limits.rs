//! Global size limits for dense state vectors and sector matrices.

use std::sync::OnceLock;

/// Default cap on the number of amplitudes in a single state vector.
/// Keeps worst-case sweep memory around 100 MB.
pub const DEFAULT_MAX_STATE_DIM: usize = 4_000_000;

/// Environment variable that overrides [`DEFAULT_MAX_STATE_DIM`].
pub const MAX_DIM_ENV: &str = "MACROCERT_MAX_DIM";

static MAX_DIM: OnceLock<usize> = OnceLock::new();

/// Maximum state dimension, read once from `MACROCERT_MAX_DIM` if set.
pub fn max_state_dim() -> usize {
    *MAX_DIM.get_or_init(|| parse_max_dim(std::env::var(MAX_DIM_ENV).ok().as_deref()))
}

/// Parse an override value, falling back to the default on anything unusable.
pub fn parse_max_dim(var: Option<&str>) -> usize {
    match var.map(str::trim) {
        Some(s) if !s.is_empty() => s.parse::<usize>().ok().filter(|&d| d > 0).unwrap_or(DEFAULT_MAX_STATE_DIM),
        _ => DEFAULT_MAX_STATE_DIM,
    }
}
