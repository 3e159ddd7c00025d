use thiserror::Error;

/// Engine parameters. Optional fields derive their default from `minpts`.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Neighborhood size defining density; also the HNSW degree target.
    pub minpts: usize,
    /// Beam width of the HNSW construction search.
    pub ef: usize,
    /// Minimum cluster size; defaults to `minpts`.
    pub min_cluster_size: Option<usize>,
    /// The candidate buffer is flushed once it holds more than `alpha * n` edges.
    pub alpha: f64,
    /// HNSW per-layer degree target for layers above 0; defaults to `minpts`.
    pub hnsw_m: Option<usize>,
    /// HNSW layer-0 degree cap; defaults to `2 * minpts`.
    pub hnsw_m0: Option<usize>,
    /// Level multiplier; defaults to `1 / ln(hnsw_m)`.
    pub level_mult: Option<f64>,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config::new(10)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConfigError {
    #[error("minpts must be at least 2 (got {0})")]
    MinPts(usize),
    #[error("ef must be at least 1 (got {0})")]
    Ef(usize),
    #[error("min cluster size must be at least 2 (got {0})")]
    MinClusterSize(usize),
    #[error("alpha must be a finite number >= 1 (got {0})")]
    Alpha(f64),
    #[error("hnsw m must be at least 2 (got {0})")]
    HnswM(usize),
    #[error("hnsw m0 must be at least 1 (got {0})")]
    HnswM0(usize),
    #[error("level multiplier must be finite and non-negative (got {0})")]
    LevelMult(f64),
}

impl Config {
    pub fn new(minpts: usize) -> Config {
        Config {
            minpts,
            ef: 20,
            min_cluster_size: None,
            alpha: 32.0,
            hnsw_m: None,
            hnsw_m0: None,
            level_mult: None,
            seed: 0,
        }
    }

    pub fn with_ef(mut self, ef: usize) -> Self {
        self.ef = ef;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_min_cluster_size(mut self, m_cs: usize) -> Self {
        self.min_cluster_size = Some(m_cs);
        self
    }

    pub fn min_cluster_size(&self) -> usize {
        self.min_cluster_size.unwrap_or(self.minpts)
    }

    pub fn hnsw_m(&self) -> usize {
        self.hnsw_m.unwrap_or(self.minpts)
    }

    pub fn hnsw_m0(&self) -> usize {
        self.hnsw_m0.unwrap_or(2 * self.minpts)
    }

    pub fn level_mult(&self) -> f64 {
        self.level_mult
            .unwrap_or_else(|| 1.0 / libm::log(self.hnsw_m() as f64))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.minpts < 2 {
            return Err(ConfigError::MinPts(self.minpts));
        }
        if self.ef < 1 {
            return Err(ConfigError::Ef(self.ef));
        }
        if self.min_cluster_size() < 2 {
            return Err(ConfigError::MinClusterSize(self.min_cluster_size()));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if self.hnsw_m() < 2 {
            return Err(ConfigError::HnswM(self.hnsw_m()));
        }
        if self.hnsw_m0() < 1 {
            return Err(ConfigError::HnswM0(self.hnsw_m0()));
        }
        let mult = self.level_mult();
        if !(mult >= 0.0 && mult.is_finite()) {
            return Err(ConfigError::LevelMult(mult));
        }
        Ok(())
    }
}
