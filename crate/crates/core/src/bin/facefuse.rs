use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use facefuse::config::RunConfig;
use facefuse::evaluation::{emit_roc, format_summary};
use facefuse::fusion::{dempster_combine, normalize, score_to_mass, FusionConfig};
use facefuse::image::load_image;
use facefuse::landmarks::Region;
use facefuse::manifest::load_manifest;
use facefuse::pipeline::{
    bounds_stats, enrol, enrol_manifest, evaluate_templates, fit_fusion, global_distance, local_distance, pair_distances,
    FittedFusion, LandmarkSource, NormalizationSource,
};
use facefuse::sift::write_keypoints;
use facefuse::{Error, Role};

/// Exit status for a Dempster combination with total conflict.
const EXIT_TOTAL_CONFLICT: u8 = 3;

#[derive(Parser)]
#[command(name = "facefuse", version, about = "SIFT face matching with Dempster-Shafer fusion")]
struct Cli {
    /// Flat `section.key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract keypoints from one image and write a dump file.
    Extract { image: PathBuf },
    /// Score a probe image against a gallery image.
    Match { probe: PathBuf, gallery: PathBuf },
    /// Run the full protocol over the configured manifest.
    Evaluate,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let conflict = err.downcast_ref::<Error>().is_some_and(|e| matches!(e, Error::TotalConflict(_)));
            eprintln!("error: {}", one_line(&err));
            if conflict {
                ExitCode::from(EXIT_TOTAL_CONFLICT)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn one_line(err: &anyhow::Error) -> String {
    err.chain().map(|e| e.to_string()).collect::<Vec<_>>().join(": ")
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.output {
        config.output_dir = out.clone();
    }
    config.validate()?;
    match cli.command {
        Command::Extract { image } => cmd_extract(&config, &image),
        Command::Match { probe, gallery } => cmd_match(&config, &probe, &gallery),
        Command::Evaluate => cmd_evaluate(&config),
    }
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// Annotation for an image given on the command line: looked up by the path as written,
/// then by file name; default geometry when no annotation file is configured.
fn landmarks_for(source: &LandmarkSource, image: &Path) -> anyhow::Result<facefuse::LandmarkSet> {
    match source {
        LandmarkSource::Default => Ok(source.lookup("")?),
        LandmarkSource::Annotated(map) => {
            let as_written = image.to_string_lossy();
            let name = image.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            map.get(as_written.as_ref())
                .or_else(|| map.get(&name))
                .copied()
                .with_context(|| format!("no landmark annotation for {}", image.display()))
        }
    }
}

fn cmd_extract(config: &RunConfig, image_path: &Path) -> anyhow::Result<()> {
    let image = load_image(image_path)?;
    let landmarks = landmarks_for(&config.landmark_source()?, image_path)?;
    let (template, keypoints) = enrol(&image, &landmarks, &config.pipeline())?;
    create_dir(&config.output_dir)?;
    let stem = image_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image".into());
    let dump = config.output_dir.join(format!("{stem}.keys"));
    write_keypoints(&keypoints, &dump)?;
    for region in Region::ALL {
        println!("{}={}", region, template.regions.get(region).len());
    }
    println!("total={}", keypoints.len());
    println!("dump={}", dump.display());
    Ok(())
}

/// Normalization and threshold for `match`: fitted on the manifest's training partition when
/// one is configured, otherwise the theoretical distance bounds and the configured `Ψ`.
fn match_fusion(config: &RunConfig) -> anyhow::Result<FittedFusion> {
    let eval = config.evaluation();
    let manifest = match &config.manifest {
        Some(p) if eval.normalization == NormalizationSource::Training || eval.fit_threshold => Some(load_manifest(p)?),
        _ => None,
    };
    match manifest {
        Some(m) if !m.partition(Role::Training).is_empty() => {
            let training = m.partition(Role::Training);
            let templates = enrol_manifest(&m, &config.landmark_source()?, &eval.pipeline);
            let records = pair_distances(&training, &training, &templates, &eval.pipeline.matching);
            Ok(fit_fusion(&records, &eval)?)
        }
        _ => {
            let (stats_local, stats_global) = bounds_stats();
            Ok(FittedFusion {
                stats_local,
                stats_global,
                config: FusionConfig {
                    alpha: config.alpha,
                    threshold_psi: config.threshold_psi,
                },
            })
        }
    }
}

fn cmd_match(config: &RunConfig, probe: &Path, gallery: &Path) -> anyhow::Result<()> {
    let source = config.landmark_source()?;
    let pipeline = config.pipeline();
    let tp = enrol(&load_image(probe)?, &landmarks_for(&source, probe)?, &pipeline)?.0;
    let tg = enrol(&load_image(gallery)?, &landmarks_for(&source, gallery)?, &pipeline)?.0;
    let local = local_distance(&tp, &tg, &pipeline.matching)?;
    let global = global_distance(&tp, &tg, &pipeline.matching)?;
    let fitted = match_fusion(config)?;
    let m_local = score_to_mass(normalize(local, &fitted.stats_local), fitted.config.alpha);
    let m_global = score_to_mass(normalize(global, &fitted.stats_global), fitted.config.alpha);
    let fused = dempster_combine(&m_local, &m_global)?;
    let accept = fused.m_genuine >= fitted.config.threshold_psi;
    println!("local_distance={local:.6}");
    println!("global_distance={global:.6}");
    println!("fused_m_genuine={:.6}", fused.m_genuine);
    println!("fused_m_impostor={:.6}", fused.m_impostor);
    println!("fused_m_theta={:.6}", fused.m_theta);
    println!("threshold_psi={:.6}", fitted.config.threshold_psi);
    println!("decision={}", if accept { "accept" } else { "reject" });
    Ok(())
}

fn cmd_evaluate(config: &RunConfig) -> anyhow::Result<()> {
    let Some(manifest_path) = &config.manifest else {
        bail!("evaluate needs dataset.manifest in the config");
    };
    let manifest = load_manifest(manifest_path)?;
    let eval = config.evaluation();
    eval.check_manifest(&manifest)?;
    let source = config.landmark_source()?;
    create_dir(&config.output_dir)?;
    config.write_effective(&config.output_dir)?;

    let templates = enrol_manifest(&manifest, &source, &eval.pipeline);
    let result = evaluate_templates(&manifest, &templates, &eval)?;
    for (kind, report) in &result.reports {
        let roc = config.output_dir.join(format!("roc_{kind}.csv"));
        emit_roc(report, &roc)?;
        let mut summary = format_summary(report);
        if let (facefuse::pipeline::MatcherKind::Fused, Some(f)) = (kind, &result.fusion) {
            summary.push_str(&format!("threshold_psi={:.6}\n", f.config.threshold_psi));
            summary.push_str(&format!("alpha={:.6}\n", f.config.alpha));
            summary.push_str(&format!(
                "local_min={:.6}\nlocal_max={:.6}\nglobal_min={:.6}\nglobal_max={:.6}\n",
                f.stats_local.min_score, f.stats_local.max_score, f.stats_global.min_score, f.stats_global.max_score
            ));
            if let Some(op) = result.fused_operating_point {
                summary.push_str(&format!("far_at_psi_percent={:.6}\n", 100.0 * op.far));
                summary.push_str(&format!("frr_at_psi_percent={:.6}\n", 100.0 * op.frr));
            }
        }
        let path = config.output_dir.join(format!("report_{kind}.txt"));
        std::fs::write(&path, &summary).with_context(|| format!("cannot write {}", path.display()))?;
        println!(
            "{kind}: eer_percent={:.6} rank1_percent={:.6} genuine={} impostor={} failed={}",
            report.eer, report.recognition_rate, report.genuine_count, report.impostor_count, report.failed_count
        );
    }
    Ok(())
}
