//! Flat `section.key = value` run configuration.
//!
//! Relative paths are resolved against the directory of the config file. Unknown keys are
//! errors, so typos fail before any computation starts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::landmarks::{load_landmarks, RoiRadii};
use crate::matching::{MatchOptions, MissingRegionPolicy};
use crate::pipeline::{EvaluationConfig, LandmarkSource, MatcherSelection, NormalizationSource, PipelineConfig};
use crate::sift::SiftParams;
use crate::image::{WORKING_HEIGHT, WORKING_WIDTH};

pub const EFFECTIVE_CONFIG_FILE: &str = "effective_config.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    /// `None` selects the fixed default geometry.
    pub landmarks: Option<PathBuf>,
    pub sift: SiftParams,
    pub roi: RoiRadii,
    pub missing_region: MissingRegionPolicy,
    pub ratio_test: Option<f64>,
    pub alpha: f64,
    pub threshold_psi: f64,
    pub fit_threshold: bool,
    pub normalization: NormalizationSource,
    pub output_dir: PathBuf,
    pub matcher: MatcherSelection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eval = EvaluationConfig::default();
        Self {
            manifest: None,
            landmarks: None,
            sift: SiftParams::default(),
            roi: RoiRadii::default(),
            missing_region: MissingRegionPolicy::Strict,
            ratio_test: None,
            alpha: eval.alpha,
            threshold_psi: eval.threshold_psi,
            fit_threshold: eval.fit_threshold,
            normalization: eval.normalization,
            output_dir: PathBuf::from("output"),
            matcher: eval.matchers,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("invalid value `{value}` for {key}: {e}"))
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, path)
    }

    pub fn parse(text: &str, base: &Path, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            cfg.set(key.trim(), value.trim(), base).map_err(err)?;
        }
        Ok(cfg)
    }

    /// Applies one override.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> std::result::Result<(), String> {
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match key {
            "dataset.manifest" => self.manifest = if value == "none" { None } else { Some(path(value)) },
            "dataset.landmarks" => self.landmarks = if value == "default" { None } else { Some(path(value)) },
            "sift.octaves" => self.sift.octaves = parse_value(key, value)?,
            "sift.scales_per_octave" => self.sift.scales_per_octave = parse_value(key, value)?,
            "sift.base_sigma" => self.sift.base_sigma = parse_value(key, value)?,
            "sift.contrast_threshold" => self.sift.contrast_threshold = parse_value(key, value)?,
            "sift.edge_ratio_threshold" => self.sift.edge_ratio_threshold = parse_value(key, value)?,
            "sift.orientation_bins" => self.sift.orientation_bins = parse_value(key, value)?,
            "roi.eye" => self.roi.eye = parse_value(key, value)?,
            "roi.nose" => self.roi.nose = parse_value(key, value)?,
            "roi.mouth" => self.roi.mouth = parse_value(key, value)?,
            "matching.missing_region" => {
                self.missing_region = match value {
                    "strict" => MissingRegionPolicy::Strict,
                    "skip" => MissingRegionPolicy::Skip,
                    other => return Err(format!("invalid {key} `{other}` (expected strict or skip)")),
                }
            }
            "matching.ratio_test" => {
                self.ratio_test = if value == "off" { None } else { Some(parse_value(key, value)?) }
            }
            "fusion.alpha" => self.alpha = parse_value(key, value)?,
            "fusion.threshold_psi" => {
                self.threshold_psi = parse_value(key, value)?;
                self.fit_threshold = false;
            }
            "fusion.fit_threshold" => {
                self.fit_threshold = match value {
                    "eer" => true,
                    "none" => false,
                    other => return Err(format!("invalid {key} `{other}` (expected eer or none)")),
                }
            }
            "normalization.source" => self.normalization = parse_value(key, value)?,
            "output.dir" => self.output_dir = path(value),
            "matcher" => self.matcher = parse_value(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Range checks and existence of referenced paths.
    pub fn validate(&self) -> Result<()> {
        self.pipeline().validate()?;
        if let Some(r) = self.ratio_test {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Config(format!("matching.ratio_test must lie in (0, 1], got {r}")));
            }
        }
        crate::fusion::FusionConfig {
            alpha: self.alpha,
            threshold_psi: self.threshold_psi,
        }
        .validate()?;
        for p in self.manifest.iter().chain(&self.landmarks) {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()));
            }
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            sift: self.sift.clone(),
            roi: self.roi,
            matching: MatchOptions {
                policy: self.missing_region,
                ratio_test: self.ratio_test,
            },
        }
    }

    pub fn evaluation(&self) -> EvaluationConfig {
        EvaluationConfig {
            pipeline: self.pipeline(),
            matchers: self.matcher,
            alpha: self.alpha,
            threshold_psi: self.threshold_psi,
            fit_threshold: self.fit_threshold,
            normalization: self.normalization,
        }
    }

    pub fn landmark_source(&self) -> Result<LandmarkSource> {
        match &self.landmarks {
            None => Ok(LandmarkSource::Default),
            Some(p) => Ok(LandmarkSource::Annotated(load_landmarks(p, WORKING_WIDTH, WORKING_HEIGHT)?)),
        }
    }

    /// Every key with its effective value, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let show = |p: &Option<PathBuf>, none: &str| p.as_ref().map_or(none.to_string(), |p| p.display().to_string());
        kv("dataset.manifest", show(&self.manifest, "none"));
        kv("dataset.landmarks", show(&self.landmarks, "default"));
        kv("sift.octaves", self.sift.octaves.to_string());
        kv("sift.scales_per_octave", self.sift.scales_per_octave.to_string());
        kv("sift.base_sigma", self.sift.base_sigma.to_string());
        kv("sift.contrast_threshold", self.sift.contrast_threshold.to_string());
        kv("sift.edge_ratio_threshold", self.sift.edge_ratio_threshold.to_string());
        kv("sift.orientation_bins", self.sift.orientation_bins.to_string());
        kv("roi.eye", self.roi.eye.to_string());
        kv("roi.nose", self.roi.nose.to_string());
        kv("roi.mouth", self.roi.mouth.to_string());
        kv(
            "matching.missing_region",
            match self.missing_region {
                MissingRegionPolicy::Strict => "strict",
                MissingRegionPolicy::Skip => "skip",
            }
            .to_string(),
        );
        kv("matching.ratio_test", self.ratio_test.map_or("off".to_string(), |r| r.to_string()));
        kv("fusion.alpha", self.alpha.to_string());
        kv("fusion.fit_threshold", if self.fit_threshold { "eer" } else { "none" }.to_string());
        if !self.fit_threshold {
            kv("fusion.threshold_psi", self.threshold_psi.to_string());
        }
        kv("normalization.source", self.normalization.as_str().to_string());
        kv("output.dir", self.output_dir.display().to_string());
        kv("matcher", self.matcher.as_str().to_string());
        out
    }

    pub fn write_effective(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(EFFECTIVE_CONFIG_FILE);
        std::fs::write(&path, self.to_text()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
