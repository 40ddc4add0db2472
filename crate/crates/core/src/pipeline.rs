//! End-to-end wiring: enrolment of images into region templates, pairwise distances, training
//! fits and per-matcher evaluation reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::{compute_eer, pairs, EvalReport, Polarity, RocPoint, ScoreEntry, ScoreMatrix};
use crate::fusion::{fit_minmax, fuse, FusionConfig, NormalizationStats};
use crate::image::{load_image, to_working_frame, Image, WORKING_HEIGHT, WORKING_WIDTH};
use crate::landmarks::{assign_regions, default_landmarks, LandmarkSet, RegionFeatures, RoiRadii};
use crate::manifest::{DatasetManifest, PartitionEntry, Role};
use crate::matching::{concat_features, global_match, local_match, MatchOptions};
use crate::sift::{extract, Keypoint, SiftParams};

/// Largest possible local distance: four regions, each a mean of unit-vector distances.
pub const LOCAL_DISTANCE_BOUND: f64 = 8.0;
pub const GLOBAL_DISTANCE_BOUND: f64 = 2.0;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineConfig {
    pub sift: SiftParams,
    pub roi: RoiRadii,
    pub matching: MatchOptions,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.sift.validate()?;
        self.roi.validate()
    }
}

/// Keypoints of one face, grouped by region.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTemplate {
    pub keypoint_count: usize,
    pub landmarks: LandmarkSet,
    pub regions: RegionFeatures,
    /// Region lists concatenated in fixed order.
    pub global: Vec<Keypoint>,
}

impl FaceTemplate {
    pub fn keypoints(&self) -> impl Iterator<Item = &Keypoint> {
        self.global.iter()
    }
}

/// Resizes to the working frame, extracts keypoints and partitions them into regions.
pub fn enrol(image: &Image, landmarks: &LandmarkSet, config: &PipelineConfig) -> Result<(FaceTemplate, Vec<Keypoint>)> {
    let frame = to_working_frame(image)?;
    landmarks.validate(frame.width(), frame.height())?;
    let keypoints = extract(&frame, &config.sift)?;
    let regions = assign_regions(&keypoints, landmarks, &config.roi.resolve(landmarks));
    let global = concat_features(&regions).unwrap_or_default();
    Ok((
        FaceTemplate {
            keypoint_count: keypoints.len(),
            landmarks: *landmarks,
            regions,
            global,
        },
        keypoints,
    ))
}

pub fn local_distance(probe: &FaceTemplate, gallery: &FaceTemplate, options: &MatchOptions) -> Result<f64> {
    local_match(&probe.regions, &gallery.regions, options).map(|s| s.value)
}

pub fn global_distance(probe: &FaceTemplate, gallery: &FaceTemplate, options: &MatchOptions) -> Result<f64> {
    global_match(&probe.global, &gallery.global, options).map(|s| s.value)
}

/// Where each image's landmarks come from.
#[derive(Debug, Clone, Default)]
pub enum LandmarkSource {
    #[default]
    Default,
    Annotated(BTreeMap<String, LandmarkSet>),
}

impl LandmarkSource {
    pub fn lookup(&self, relative_path: &str) -> Result<LandmarkSet> {
        match self {
            LandmarkSource::Default => Ok(default_landmarks(WORKING_WIDTH, WORKING_HEIGHT)),
            LandmarkSource::Annotated(map) => map
                .get(relative_path)
                .copied()
                .ok_or_else(|| Error::Config(format!("no landmark annotation for {relative_path}"))),
        }
    }
}

/// Enrolment outcome per image path; failures keep their message so every affected pair can
/// be counted as failed.
pub type Templates = BTreeMap<String, std::result::Result<FaceTemplate, String>>;

/// Enrols every distinct image of the manifest in parallel.
pub fn enrol_manifest(manifest: &DatasetManifest, landmarks: &LandmarkSource, config: &PipelineConfig) -> Templates {
    let images = manifest.unique_images();
    images
        .par_iter()
        .map(|entry| {
            let result = landmarks
                .lookup(&entry.relative_path)
                .and_then(|lm| {
                    let image = load_image(&entry.path)?;
                    enrol(&image, &lm, config)
                })
                .map(|(t, _)| t)
                .map_err(|e| e.to_string());
            if let Err(msg) = &result {
                log::warn!("enrolment of {} failed: {msg}", entry.relative_path);
            }
            (entry.relative_path.clone(), result)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatcherKind {
    Local,
    Global,
    Fused,
}

impl MatcherKind {
    pub const ALL: [MatcherKind; 3] = [MatcherKind::Local, MatcherKind::Global, MatcherKind::Fused];

    pub fn as_str(self) -> &'static str {
        match self {
            MatcherKind::Local => "local",
            MatcherKind::Global => "global",
            MatcherKind::Fused => "fused",
        }
    }

    /// Raw matchers give distances, the fused pipeline gives genuine mass.
    pub fn polarity(self) -> Polarity {
        match self {
            MatcherKind::Local | MatcherKind::Global => Polarity::Distance,
            MatcherKind::Fused => Polarity::Similarity,
        }
    }
}

impl fmt::Display for MatcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatcherSelection {
    Local,
    Global,
    Fused,
    #[default]
    All,
}

impl MatcherSelection {
    pub fn kinds(self) -> Vec<MatcherKind> {
        match self {
            MatcherSelection::Local => vec![MatcherKind::Local],
            MatcherSelection::Global => vec![MatcherKind::Global],
            MatcherSelection::Fused => vec![MatcherKind::Fused],
            MatcherSelection::All => MatcherKind::ALL.to_vec(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MatcherSelection::Local => "local",
            MatcherSelection::Global => "global",
            MatcherSelection::Fused => "fused",
            MatcherSelection::All => "all",
        }
    }
}

impl FromStr for MatcherSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "local" => Ok(Self::Local),
            "global" => Ok(Self::Global),
            "fused" => Ok(Self::Fused),
            "all" => Ok(Self::All),
            other => Err(format!("unknown matcher `{other}` (expected local, global, fused or all)")),
        }
    }
}

/// One compared pair with both raw distances; `None` marks a failed comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub probe_id: String,
    pub gallery_id: String,
    pub subject_probe: String,
    pub subject_gallery: String,
    pub local: Option<f64>,
    pub global: Option<f64>,
}

/// Both distances for every probe x gallery pair, in pair order.
pub fn pair_distances(
    probes: &[PartitionEntry<'_>],
    gallery: &[PartitionEntry<'_>],
    templates: &Templates,
    options: &MatchOptions,
) -> Vec<PairRecord> {
    let all = pairs(probes, gallery);
    all.par_iter()
        .map(|(p, g)| {
            let tp = templates.get(&p.image.relative_path).and_then(|t| t.as_ref().ok());
            let tg = templates.get(&g.image.relative_path).and_then(|t| t.as_ref().ok());
            let (local, global) = match (tp, tg) {
                (Some(a), Some(b)) => (
                    local_distance(a, b, options).ok(),
                    global_distance(a, b, options).ok(),
                ),
                _ => (None, None),
            };
            PairRecord {
                probe_id: p.image.relative_path.clone(),
                gallery_id: g.image.relative_path.clone(),
                subject_probe: p.subject.to_string(),
                subject_gallery: g.subject.to_string(),
                local,
                global,
            }
        })
        .collect()
}

/// Score matrix from the records where `score` yields a value; the rest count as failures.
pub fn matrix_from(records: &[PairRecord], score: impl Fn(&PairRecord) -> Option<f64>) -> ScoreMatrix {
    let mut entries = Vec::with_capacity(records.len());
    let mut failures = 0;
    for r in records {
        match score(r) {
            Some(s) => entries.push(ScoreEntry::new(&r.probe_id, &r.gallery_id, &r.subject_probe, &r.subject_gallery, s)),
            None => failures += 1,
        }
    }
    ScoreMatrix::new(entries, failures)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationSource {
    /// Min-max over the pooled training-partition distances.
    #[default]
    Training,
    /// The theoretical distance ranges `[0, 8]` and `[0, 2]`.
    Bounds,
}

impl NormalizationSource {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationSource::Training => "training",
            NormalizationSource::Bounds => "bounds",
        }
    }
}

impl FromStr for NormalizationSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "training" => Ok(Self::Training),
            "bounds" => Ok(Self::Bounds),
            other => Err(format!("unknown normalization source `{other}` (expected training or bounds)")),
        }
    }
}

pub fn bounds_stats() -> (NormalizationStats, NormalizationStats) {
    (
        NormalizationStats {
            min_score: 0.0,
            max_score: LOCAL_DISTANCE_BOUND,
        },
        NormalizationStats {
            min_score: 0.0,
            max_score: GLOBAL_DISTANCE_BOUND,
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig {
    pub pipeline: PipelineConfig,
    pub matchers: MatcherSelection,
    pub alpha: f64,
    /// Fixed `Ψ`; ignored when `fit_threshold` is set.
    pub threshold_psi: f64,
    /// Fit `Ψ` as the EER threshold of fused training scores.
    pub fit_threshold: bool,
    pub normalization: NormalizationSource,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            matchers: MatcherSelection::All,
            alpha: FusionConfig::default().alpha,
            threshold_psi: FusionConfig::default().threshold_psi,
            fit_threshold: true,
            normalization: NormalizationSource::Training,
        }
    }
}

impl EvaluationConfig {
    /// Requirements on the manifest that can be checked before any image is read.
    pub fn check_manifest(&self, manifest: &DatasetManifest) -> Result<()> {
        for role in [Role::Probe, Role::Gallery] {
            if manifest.partition(role).is_empty() {
                return Err(Error::Config(format!("{role} partition is empty")));
            }
        }
        let fused = self.matchers.kinds().contains(&MatcherKind::Fused);
        let needs_training = fused && (self.fit_threshold || self.normalization == NormalizationSource::Training);
        if needs_training && manifest.partition(Role::Training).is_empty() {
            return Err(Error::Config(
                "fused evaluation needs a training partition for normalization or threshold fitting".into(),
            ));
        }
        FusionConfig {
            alpha: self.alpha,
            threshold_psi: self.threshold_psi,
        }
        .validate()?;
        self.pipeline.validate()
    }
}

/// Normalization and threshold fitted for the fused matcher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedFusion {
    pub stats_local: NormalizationStats,
    pub stats_global: NormalizationStats,
    pub config: FusionConfig,
}

impl FittedFusion {
    pub fn fused_score(&self, local: f64, global: f64) -> Result<f64> {
        fuse(local, global, &self.stats_local, &self.stats_global, self.config.alpha).map(|m| m.m_genuine)
    }
}

/// Fits min-max statistics (and optionally `Ψ`) from training-partition pair records.
pub fn fit_fusion(training: &[PairRecord], config: &EvaluationConfig) -> Result<FittedFusion> {
    let (stats_local, stats_global) = match config.normalization {
        NormalizationSource::Bounds => bounds_stats(),
        NormalizationSource::Training => {
            let local: Vec<f64> = training.iter().filter_map(|r| r.local).collect();
            let global: Vec<f64> = training.iter().filter_map(|r| r.global).collect();
            (fit_minmax(&local)?, fit_minmax(&global)?)
        }
    };
    let mut fitted = FittedFusion {
        stats_local,
        stats_global,
        config: FusionConfig {
            alpha: config.alpha,
            threshold_psi: config.threshold_psi,
        },
    };
    if config.fit_threshold {
        let fused = matrix_from(training, |r| fitted.fused_score(r.local?, r.global?).ok());
        let report = compute_eer(&fused, Polarity::Similarity)?;
        fitted.config.threshold_psi = report.eer_threshold.clamp(0.0, 1.0);
    }
    Ok(fitted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub reports: BTreeMap<MatcherKind, EvalReport>,
    pub fusion: Option<FittedFusion>,
    /// FAR/FRR of the fused matcher at the fitted `Ψ`.
    pub fused_operating_point: Option<RocPoint>,
}

/// Runs the requested matchers over already enrolled templates.
pub fn evaluate_templates(manifest: &DatasetManifest, templates: &Templates, config: &EvaluationConfig) -> Result<Evaluation> {
    config.check_manifest(manifest)?;
    let kinds = config.matchers.kinds();
    let options = &config.pipeline.matching;
    let test = pair_distances(&manifest.partition(Role::Probe), &manifest.partition(Role::Gallery), templates, options);

    let mut fusion = None;
    if kinds.contains(&MatcherKind::Fused) {
        let fitted = if config.normalization == NormalizationSource::Bounds && !config.fit_threshold {
            fit_fusion(&[], config)?
        } else {
            let training = manifest.partition(Role::Training);
            fit_fusion(&pair_distances(&training, &training, templates, options), config)?
        };
        fusion = Some(fitted);
    }

    let mut reports = BTreeMap::new();
    let mut fused_operating_point = None;
    for kind in kinds {
        let matrix = match kind {
            MatcherKind::Local => matrix_from(&test, |r| r.local),
            MatcherKind::Global => matrix_from(&test, |r| r.global),
            MatcherKind::Fused => {
                let f = fusion.as_ref().expect("fitted above");
                matrix_from(&test, |r| f.fused_score(r.local?, r.global?).ok())
            }
        };
        let report = compute_eer(&matrix, kind.polarity())?;
        if let (MatcherKind::Fused, Some(f)) = (kind, &fusion) {
            fused_operating_point = Some(operating_point(&matrix, f.config.threshold_psi));
        }
        reports.insert(kind, report);
    }
    Ok(Evaluation {
        reports,
        fusion,
        fused_operating_point,
    })
}

/// FAR/FRR of a similarity matrix when accepting `score >= psi`.
fn operating_point(matrix: &ScoreMatrix, psi: f64) -> RocPoint {
    let (mut fa, mut fr, mut ni, mut ng) = (0usize, 0usize, 0usize, 0usize);
    for e in matrix.entries() {
        let accepted = Polarity::Similarity.accepts(e.score, psi);
        match e.label {
            crate::evaluation::Label::Genuine => {
                ng += 1;
                fr += usize::from(!accepted);
            }
            crate::evaluation::Label::Impostor => {
                ni += 1;
                fa += usize::from(accepted);
            }
        }
    }
    RocPoint {
        threshold: psi,
        far: fa as f64 / ni.max(1) as f64,
        frr: fr as f64 / ng.max(1) as f64,
    }
}

/// Enrols and evaluates in one go.
pub fn run_evaluation(manifest: &DatasetManifest, landmarks: &LandmarkSource, config: &EvaluationConfig) -> Result<Evaluation> {
    config.check_manifest(manifest)?;
    let templates = enrol_manifest(manifest, landmarks, &config.pipeline);
    evaluate_templates(manifest, &templates, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{FaceScene, Perturbation};

    fn template(seed: u64, noise_seed: u64) -> FaceTemplate {
        let img = FaceScene::new(seed).render(
            &Perturbation {
                noise_sigma: 1.0,
                ..Perturbation::default()
            },
            noise_seed,
        );
        enrol(&img, &default_landmarks(WORKING_WIDTH, WORKING_HEIGHT), &PipelineConfig::default())
            .unwrap()
            .0
    }

    #[test]
    fn self_match_is_zero() {
        let t = template(2, 0);
        let o = MatchOptions::default();
        assert_eq!(local_distance(&t, &t, &o).unwrap(), 0.0);
        assert_eq!(global_distance(&t, &t, &o).unwrap(), 0.0);
    }

    #[test]
    fn same_identity_is_closer_than_another() {
        let o = MatchOptions::default();
        let a = template(2, 0);
        let b = template(2, 1);
        let c = template(9, 0);
        assert!(local_distance(&a, &b, &o).unwrap() < local_distance(&a, &c, &o).unwrap());
        assert!(global_distance(&a, &b, &o).unwrap() < global_distance(&a, &c, &o).unwrap());
    }

    #[test]
    fn matcher_selection_parses() {
        assert_eq!("all".parse::<MatcherSelection>().unwrap().kinds().len(), 3);
        assert_eq!("fused".parse::<MatcherSelection>().unwrap().kinds(), vec![MatcherKind::Fused]);
        assert!("both".parse::<MatcherSelection>().is_err());
    }

    #[test]
    fn annotated_source_requires_entries() {
        let src = LandmarkSource::Annotated(BTreeMap::new());
        assert!(matches!(src.lookup("a.pgm"), Err(Error::Config(_))));
        assert!(LandmarkSource::Default.lookup("a.pgm").is_ok());
    }
}
