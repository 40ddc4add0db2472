//! Genuine/impostor score matrices, FAR/FRR sweeps, EER, rank-1 recognition and ROC output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, PartitionEntry, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Genuine,
    Impostor,
}

/// Whether small scores mean "same subject" (distances) or large ones do (similarities).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Distance,
    Similarity,
}

impl Polarity {
    pub fn accepts(self, score: f64, threshold: f64) -> bool {
        match self {
            Polarity::Distance => score <= threshold,
            Polarity::Similarity => score >= threshold,
        }
    }

    /// True when `a` is a strictly better match score than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Polarity::Distance => a < b,
            Polarity::Similarity => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub probe_id: String,
    pub gallery_id: String,
    pub subject_probe: String,
    pub subject_gallery: String,
    pub score: f64,
    pub label: Label,
}

impl ScoreEntry {
    pub fn new(
        probe_id: impl Into<String>,
        gallery_id: impl Into<String>,
        subject_probe: impl Into<String>,
        subject_gallery: impl Into<String>,
        score: f64,
    ) -> Self {
        let (subject_probe, subject_gallery) = (subject_probe.into(), subject_gallery.into());
        let label = if subject_probe == subject_gallery {
            Label::Genuine
        } else {
            Label::Impostor
        };
        Self {
            probe_id: probe_id.into(),
            gallery_id: gallery_id.into(),
            subject_probe,
            subject_gallery,
            score,
            label,
        }
    }
}

/// Scored probe/gallery pairs, kept sorted by `(probe_id, gallery_id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreMatrix {
    entries: Vec<ScoreEntry>,
    /// Pairs whose comparison failed and were left out.
    pub failures: usize,
}

impl ScoreMatrix {
    pub fn new(mut entries: Vec<ScoreEntry>, failures: usize) -> Self {
        entries.sort_by(|a, b| a.probe_id.cmp(&b.probe_id).then_with(|| a.gallery_id.cmp(&b.gallery_id)));
        Self { entries, failures }
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scores(&self, label: Label) -> Vec<f64> {
        self.entries.iter().filter(|e| e.label == label).map(|e| e.score).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    pub fn all_scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.score).collect()
    }

    fn check_two_classes(&self) -> Result<()> {
        if self.entries.iter().any(|e| !e.score.is_finite()) {
            return Err(Error::DegenerateMatrix("non-finite score".into()));
        }
        let g = self.count(Label::Genuine);
        let i = self.count(Label::Impostor);
        if g == 0 || i == 0 {
            return Err(Error::DegenerateMatrix(format!("{g} genuine and {i} impostor entries")));
        }
        Ok(())
    }

    /// Same pairs with every score replaced by `f(score)`.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| ScoreEntry {
                score: f(e.score),
                ..e.clone()
            })
            .collect();
        Self {
            entries,
            failures: self.failures,
        }
    }
}

/// Every (probe, gallery) pair of two partitions, skipping comparisons of an image with itself.
pub fn pairs<'a>(probes: &[PartitionEntry<'a>], gallery: &[PartitionEntry<'a>]) -> Vec<(PartitionEntry<'a>, PartitionEntry<'a>)> {
    let mut out = Vec::with_capacity(probes.len() * gallery.len());
    for p in probes {
        for g in gallery {
            if p.image.relative_path != g.image.relative_path {
                out.push((*p, *g));
            }
        }
    }
    out
}

/// Scores every pair of `probes` x `gallery` with `score`, in parallel. Failed pairs are
/// dropped, logged and counted.
pub fn score_pairs<'a, F>(probes: &[PartitionEntry<'a>], gallery: &[PartitionEntry<'a>], score: F) -> Result<ScoreMatrix>
where
    F: Fn(&PartitionEntry<'a>, &PartitionEntry<'a>) -> Result<f64> + Sync,
{
    if probes.is_empty() {
        return Err(Error::Config("probe partition is empty".into()));
    }
    if gallery.is_empty() {
        return Err(Error::Config("gallery partition is empty".into()));
    }
    let all = pairs(probes, gallery);
    let results: Vec<_> = all
        .par_iter()
        .map(|(p, g)| {
            score(p, g).map(|s| ScoreEntry::new(&p.image.relative_path, &g.image.relative_path, p.subject, g.subject, s))
        })
        .collect();
    let mut entries = Vec::with_capacity(results.len());
    let mut failures = 0;
    for (r, (p, g)) in results.into_iter().zip(&all) {
        match r {
            Ok(e) => entries.push(e),
            Err(err) => {
                failures += 1;
                log::debug!("{} vs {}: {err}", p.image.relative_path, g.image.relative_path);
            }
        }
    }
    if failures > 0 {
        warn!("{failures} of {} comparisons failed and were excluded", all.len());
    }
    Ok(ScoreMatrix::new(entries, failures))
}

/// Probe partition against gallery partition of `manifest`.
pub fn build_score_matrix<F>(manifest: &DatasetManifest, score: F) -> Result<ScoreMatrix>
where
    F: for<'a> Fn(&PartitionEntry<'a>, &PartitionEntry<'a>) -> Result<f64> + Sync,
{
    score_pairs(&manifest.partition(Role::Probe), &manifest.partition(Role::Gallery), score)
}

/// Training partition against itself.
pub fn build_training_matrix<F>(manifest: &DatasetManifest, score: F) -> Result<ScoreMatrix>
where
    F: for<'a> Fn(&PartitionEntry<'a>, &PartitionEntry<'a>) -> Result<f64> + Sync,
{
    let training = manifest.partition(Role::Training);
    if training.is_empty() {
        return Err(Error::Config("training partition is empty".into()));
    }
    score_pairs(&training, &training, score)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    /// Fraction of impostor entries accepted.
    pub far: f64,
    /// Fraction of genuine entries rejected.
    pub frr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub frr_at_eer: f64,
    pub far_at_eer: f64,
    pub eer: f64,
    pub eer_threshold: f64,
    /// Rank-1 identification rate, percent.
    pub recognition_rate: f64,
    /// `100 - eer`.
    pub verification_accuracy: f64,
    /// Full sweep in ascending threshold order.
    pub roc_points: Vec<RocPoint>,
    pub genuine_count: usize,
    pub impostor_count: usize,
    pub failed_count: usize,
}

/// FAR/FRR at every distinct score, ascending thresholds.
pub fn roc_sweep(matrix: &ScoreMatrix, polarity: Polarity) -> Result<Vec<RocPoint>> {
    matrix.check_two_classes()?;
    let mut genuine = matrix.scores(Label::Genuine);
    let mut impostor = matrix.scores(Label::Impostor);
    genuine.sort_by(f64::total_cmp);
    impostor.sort_by(f64::total_cmp);
    let mut thresholds = matrix.all_scores();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);
    Ok(thresholds
        .into_iter()
        .map(|t| {
            let le = |v: &[f64]| v.partition_point(|&s| s <= t);
            let lt = |v: &[f64]| v.partition_point(|&s| s < t);
            let (far_count, frr_count) = match polarity {
                Polarity::Distance => (le(&impostor), genuine.len() - le(&genuine)),
                Polarity::Similarity => (impostor.len() - lt(&impostor), lt(&genuine)),
            };
            RocPoint {
                threshold: t,
                far: far_count as f64 / ni,
                frr: frr_count as f64 / ng,
            }
        })
        .collect())
}

/// The sweep point closest to FAR = FRR; ties prefer the smaller total error, then the
/// smaller FRR.
pub fn eer_point(points: &[RocPoint]) -> Option<RocPoint> {
    points.iter().copied().min_by(|a, b| {
        let key = |p: &RocPoint| ((p.far - p.frr).abs(), p.far + p.frr, p.frr);
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.total_cmp(&kb.2))
    })
}

pub fn compute_eer(matrix: &ScoreMatrix, polarity: Polarity) -> Result<EvalReport> {
    let roc_points = roc_sweep(matrix, polarity)?;
    let at = eer_point(&roc_points).expect("non-empty sweep");
    let eer = 100.0 * (at.far + at.frr) / 2.0;
    Ok(EvalReport {
        frr_at_eer: 100.0 * at.frr,
        far_at_eer: 100.0 * at.far,
        eer,
        eer_threshold: at.threshold,
        recognition_rate: recognition_rate(matrix, polarity)?,
        verification_accuracy: 100.0 - eer,
        roc_points,
        genuine_count: matrix.count(Label::Genuine),
        impostor_count: matrix.count(Label::Impostor),
        failed_count: matrix.failures,
    })
}

/// Rank-1 identification rate in percent. Among equally scored gallery entries the one with
/// the smallest `gallery_id` wins.
pub fn recognition_rate(matrix: &ScoreMatrix, polarity: Polarity) -> Result<f64> {
    if matrix.is_empty() {
        return Err(Error::DegenerateMatrix("no entries".into()));
    }
    let mut best: BTreeMap<&str, &ScoreEntry> = BTreeMap::new();
    for e in matrix.entries() {
        best.entry(&e.probe_id)
            .and_modify(|b| {
                let wins = polarity.better(e.score, b.score) || (e.score == b.score && e.gallery_id < b.gallery_id);
                if wins {
                    *b = e;
                }
            })
            .or_insert(e);
    }
    let correct = best.values().filter(|e| e.label == Label::Genuine).count();
    Ok(100.0 * correct as f64 / best.len() as f64)
}

pub fn format_roc(report: &EvalReport) -> String {
    let mut out = String::from("threshold,far,frr\n");
    for p in &report.roc_points {
        let _ = writeln!(out, "{:.6},{:.6},{:.6}", p.threshold, p.far, p.frr);
    }
    out
}

pub fn emit_roc(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_roc(report)).map_err(|e| Error::io(path, e))
}

/// Plain-text `key=value` summary, one line per report field.
pub fn format_summary(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "genuine_count={}", report.genuine_count);
    let _ = writeln!(out, "impostor_count={}", report.impostor_count);
    let _ = writeln!(out, "failed_count={}", report.failed_count);
    let _ = writeln!(out, "frr_at_eer_percent={:.6}", report.frr_at_eer);
    let _ = writeln!(out, "far_at_eer_percent={:.6}", report.far_at_eer);
    let _ = writeln!(out, "eer_percent={:.6}", report.eer);
    let _ = writeln!(out, "eer_threshold={:.6}", report.eer_threshold);
    let _ = writeln!(out, "rank1_recognition_rate_percent={:.6}", report.recognition_rate);
    let _ = writeln!(out, "verification_accuracy_percent={:.6}", report.verification_accuracy);
    let _ = writeln!(out, "roc_points={}", report.roc_points.len());
    out
}

pub fn write_summary(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_summary(report)).map_err(|e| Error::io(path, e))
}
