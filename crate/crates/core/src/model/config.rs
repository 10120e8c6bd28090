use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line size must be positive")]
    LineSize,
    #[error("at least one cache level is required")]
    NoLevels,
    #[error("capacity {0} is not a positive multiple of the line size {1}")]
    Capacity(u64, u64),
    #[error("capacities must be non-decreasing")]
    Order,
}

/// Line size and per-level capacities, all in bytes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CacheConfig {
    pub line_size: u64,
    pub levels: Vec<u64>,
}

impl CacheConfig {
    pub fn new(line_size: u64, levels: Vec<u64>) -> Result<Self, ConfigError> {
        let c = CacheConfig { line_size, levels };
        c.validate()?;
        Ok(c)
    }

    /// A single level holding `lines` lines.
    pub fn lines(line_size: u64, lines: u64) -> Result<Self, ConfigError> {
        Self::new(line_size, vec![lines * line_size])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.line_size == 0 {
            return Err(ConfigError::LineSize);
        }
        if self.levels.is_empty() {
            return Err(ConfigError::NoLevels);
        }
        for &c in &self.levels {
            if c == 0 || c % self.line_size != 0 {
                return Err(ConfigError::Capacity(c, self.line_size));
            }
        }
        if self.levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(ConfigError::Order);
        }
        Ok(())
    }

    pub fn capacity_lines(&self, level: usize) -> u64 {
        self.levels[level] / self.line_size
    }

    pub fn level_lines(&self) -> Vec<u64> {
        (0..self.levels.len()).map(|k| self.capacity_lines(k)).collect()
    }
}
