//! Flat `key = value` pipeline configuration. Precedence is command-line
//! flag, then config file, then built-in defaults.

use std::path::{Path, PathBuf};

use ctxsal::kv::parse_pairs;
use ctxsal::pipeline::PipelineParams;
use ctxsal::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub params: PipelineParams,
    pub lut_bank: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
}

fn parse_value<T: std::str::FromStr>(path: &Path, line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("bad value {value:?} for {key}"),
    })
}

impl PipelineConfig {
    /// Relative paths inside the file resolve against the file's directory.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let base = origin.parent().unwrap_or(Path::new(""));
        let mut cfg = Self::default();
        let p = &mut cfg.params;
        for pair in parse_pairs(text, origin)? {
            let (key, value, line) = (pair.key.as_str(), pair.value.as_str(), pair.line);
            if pair.section.is_some() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line,
                    msg: "sections are not allowed in a pipeline config".into(),
                });
            }
            match key {
                "block_size" => p.contrast.block_size = parse_value(origin, line, key, value)?,
                "color_p" | "p" => p.color.p = parse_value(origin, line, key, value)?,
                "w1" => p.fusion.w1 = parse_value(origin, line, key, value)?,
                "w2" => p.fusion.w2 = parse_value(origin, line, key, value)?,
                "sigma_sq" => p.center_prior.sigma_sq = parse_value(origin, line, key, value)?,
                "center_prior" => p.center_prior.enabled = parse_value(origin, line, key, value)?,
                "smooth_size" => p.smooth.size = parse_value(origin, line, key, value)?,
                "smooth" => p.smooth.enabled = parse_value(origin, line, key, value)?,
                "user_lut" => p.user_lut = parse_value(origin, line, key, value)?,
                "lut_bank" => cfg.lut_bank = Some(base.join(value)),
                "model" => cfg.model = Some(base.join(value)),
                "mapping" => cfg.mapping = Some(base.join(value)),
                _ => {
                    return Err(Error::Parse {
                        path: origin.to_path_buf(),
                        line,
                        msg: format!("unknown key {key:?}"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }
}
