//! Run configuration: a TOML file with `[tlnmf]` and `[framing]` tables,
//! overridden field by field from the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use tlnmf::audio::{FrameSpec, Window};
use tlnmf::driver::{TlnmfConfig, TransformInit};
use tlnmf::manifold::TransformAlgorithm;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error(transparent)]
    Invalid(#[from] tlnmf::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tlnmf: TlnmfConfig,
    pub framing: FrameSpec,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub algorithm: Option<String>,
    pub iters: Option<usize>,
    pub rank: Option<usize>,
    pub lambda: Option<f64>,
    pub inner_tl_iters: Option<usize>,
    pub init: Option<TransformInit>,
    pub frame_ms: Option<f64>,
    pub frame_samples: Option<usize>,
    pub overlap: Option<f64>,
    pub window: Option<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self, ConfigError> {
        let t = &mut self.tlnmf;
        if let Some(v) = o.seed {
            t.seed = v;
        }
        if let Some(v) = &o.algorithm {
            t.algorithm = v.parse::<TransformAlgorithm>()?;
        }
        if let Some(v) = o.iters {
            t.n_outer = v;
        }
        if let Some(v) = o.rank {
            t.rank = v;
        }
        if let Some(v) = o.lambda {
            t.lambda = v;
        }
        if let Some(v) = o.inner_tl_iters {
            t.inner_tl_iters = v;
        }
        if let Some(v) = o.init {
            t.init = v;
        }
        let f = &mut self.framing;
        if let Some(v) = o.frame_ms {
            f.frame_ms = v;
        }
        if o.frame_samples.is_some() {
            f.frame_samples = o.frame_samples;
        }
        if let Some(v) = o.overlap {
            f.overlap = v;
        }
        if let Some(v) = &o.window {
            f.window = v.parse::<Window>()?;
        }
        self.tlnmf.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file() {
        let c = RunConfig::load(None).unwrap();
        assert_eq!(c.tlnmf.rank, 10);
        assert_eq!(c.tlnmf.inner_tl_iters, 5);
        assert_eq!(c.framing.frame_ms, 40.0);
        assert_eq!(c.framing.overlap, 0.5);
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "[tlnmf]\nrank = 4\nlambda = 0.5\nalgorithm = \"projected-gradient\"\n\n[tlnmf.line_search]\nc2 = 0.5\n\n[framing]\nwindow = \"hann\"\n",
        )
        .unwrap();
        let c = RunConfig::load(Some(&path)).unwrap();
        assert_eq!(c.tlnmf.rank, 4);
        assert_eq!(c.tlnmf.algorithm, TransformAlgorithm::ProjectedGradient);
        assert_eq!(c.tlnmf.line_search.c2, 0.5);
        assert_eq!(c.tlnmf.line_search.c1, 1e-4);
        assert_eq!(c.framing.window, Window::Hann);

        let o = Overrides {
            rank: Some(6),
            algorithm: Some("qn".into()),
            frame_samples: Some(128),
            ..Overrides::default()
        };
        let c = c.apply(&o).unwrap();
        assert_eq!(c.tlnmf.rank, 6);
        assert_eq!(c.tlnmf.lambda, 0.5);
        assert_eq!(c.tlnmf.algorithm, TransformAlgorithm::QuasiNewton);
        assert_eq!(c.framing.frame_samples, Some(128));
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[tlnmf]\nrnak = 4\n").unwrap();
        assert!(matches!(RunConfig::load(Some(&path)), Err(ConfigError::Parse { .. })));

        let o = Overrides {
            algorithm: Some("jacobi".into()),
            ..Overrides::default()
        };
        assert!(matches!(RunConfig::default().apply(&o), Err(ConfigError::Invalid(_))));
        let o = Overrides {
            rank: Some(0),
            ..Overrides::default()
        };
        assert!(RunConfig::default().apply(&o).is_err());
    }
}
