use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use wmh_core::morphology::{diameter_opening, lesion_table, LesionRecord};
use wmh_core::nifti::{read_mask, read_nifti, write_mask, write_nifti, DataType};
use wmh_core::preprocess::{
    clamp_negatives, zstandardize_foreground_with, StdConvention, ZScoreOptions,
};
use wmh_core::volume::{resample, resample_mask, trim_outer_slices, Interpolation};
use wmh_core::Connectivity;

use super::ensure_dir;
use crate::args::PreprocessArgs;
use crate::manifest::{read_cases, CaseEntry};
use crate::par_map;
use crate::report::csv_writer;

struct Outcome {
    flair: PathBuf,
    mask: Option<PathBuf>,
    actions: Vec<String>,
    lesions: Vec<LesionRecord>,
}

fn target_spacing(v: &[f64]) -> Result<[f64; 3]> {
    match *v {
        [s] => Ok([s; 3]),
        [x, y, z] => Ok([x, y, z]),
        _ => bail!("--resample takes one or three values, got {}", v.len()),
    }
}

fn process(case: &CaseEntry, args: &PreprocessArgs, out_dir: &Path) -> Result<Outcome> {
    let conn: Connectivity = args.connectivity.into();
    let mut actions = Vec::new();

    let raw = read_nifti(&case.path).with_context(|| format!("reading {}", case.path.display()))?;
    let negatives = raw.data().iter().filter(|&&v| v < 0.0).count();
    let mut vol = clamp_negatives(&raw);
    actions.push(format!("clamped {negatives} negative voxels"));

    let mut mask = match &case.mask_path {
        Some(p) => {
            let m = read_mask(p).with_context(|| format!("reading {}", p.display()))?;
            vol.geometry().ensure_same_grid(m.geometry())?;
            let opened = diameter_opening(&m, args.min_diameter, conn)?;
            actions.push(format!(
                "removed {} mask voxels in components under {} voxels across",
                m.count() - opened.count(),
                args.min_diameter
            ));
            Some(opened)
        }
        None => None,
    };

    let opts = ZScoreOptions {
        std: if args.sample_std {
            StdConvention::Sample
        } else {
            StdConvention::Population
        },
        keep_background_zero: args.keep_background_zero,
    };
    let (z, stats) = zstandardize_foreground_with(&vol, opts)?;
    vol = z;
    actions.push(format!(
        "z-standardized with mean {:.6} std {:.6} over {} voxels",
        stats.mean, stats.std, stats.n_foreground
    ));

    if let Some(s) = &args.resample {
        let s = target_spacing(s)?;
        vol = resample(&vol, s, Interpolation::Trilinear)?;
        mask = mask.map(|m| resample_mask(&m, s)).transpose()?;
        actions.push(format!("resampled to {:?} mm, dims {:?}", s, vol.dims()));
    }
    if let Some(f) = args.trim {
        vol = trim_outer_slices(&vol, f)?;
        mask = mask.map(|m| trim_outer_slices(&m, f)).transpose()?;
        actions.push(format!("trimmed to dims {:?}", vol.dims()));
    }

    let flair = out_dir.join(format!("{}_flair.nii.gz", case.case_id));
    write_nifti(&vol, &flair, DataType::Float32)?;
    let (mask, lesions) = match mask {
        Some(m) => {
            let p = out_dir.join(format!("{}_mask.nii.gz", case.case_id));
            write_mask(&m, &p)?;
            (Some(p), lesion_table(&m, conn))
        }
        None => (None, Vec::new()),
    };
    Ok(Outcome {
        flair,
        mask,
        actions,
        lesions,
    })
}

pub fn run(args: &PreprocessArgs) -> Result<i32> {
    let cases = read_cases(&args.manifest)?;
    ensure_dir(&args.out_dir)?;
    let outcomes = par_map(&cases, |c| process(c, args, &args.out_dir));

    let mut log_w = csv_writer(&args.out_dir.join("preprocess_log.csv"))?;
    log_w.write_record(["case_id", "status", "detail"])?;
    let mut manifest_w = csv_writer(&args.out_dir.join("preprocessed.csv"))?;
    manifest_w.write_record(["case_id", "flair_path", "mask_path", "scanner_label"])?;
    let mut lesion_w = csv_writer(&args.out_dir.join("lesions.csv"))?;
    lesion_w.write_record([
        "case_id",
        "label",
        "voxel_count",
        "volume_ml",
        "ex",
        "ey",
        "ez",
    ])?;

    let mut failed = 0;
    for (case, outcome) in cases.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                info!("{}: {}", case.case_id, o.actions.join("; "));
                log_w.write_record([case.case_id.as_str(), "ok", &o.actions.join("; ")])?;
                let file_name = |p: &Path| p.file_name().unwrap().to_string_lossy().into_owned();
                manifest_w.write_record([
                    case.case_id.clone(),
                    file_name(&o.flair),
                    o.mask.as_deref().map(file_name).unwrap_or_default(),
                    case.scanner_label.clone().unwrap_or_default(),
                ])?;
                for r in &o.lesions {
                    lesion_w.write_record([
                        case.case_id.clone(),
                        r.label.to_string(),
                        r.voxel_count.to_string(),
                        r.volume_ml.to_string(),
                        r.bbox_extent[0].to_string(),
                        r.bbox_extent[1].to_string(),
                        r.bbox_extent[2].to_string(),
                    ])?;
                }
            }
            Err(e) => {
                warn!("{}: {}", case.case_id, crate::describe(&e));
                log_w.write_record([case.case_id.as_str(), "error", &crate::describe(&e)])?;
                failed += 1;
            }
        }
    }
    log_w.flush()?;
    manifest_w.flush()?;
    lesion_w.flush()?;
    if failed > 0 {
        warn!("{failed} of {} cases failed", cases.len());
        return Ok(1);
    }
    Ok(0)
}
