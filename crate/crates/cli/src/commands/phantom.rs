use anyhow::{bail, Context, Result};
use log::info;
use wmh_core::nifti::{write_mask, write_nifti, DataType};
use wmh_core::phantom::{degrade_mask, generate_phantom, DegradeConfig, PhantomConfig};

use super::ensure_dir;
use crate::args::PhantomArgs;
use crate::par_map;
use crate::report::csv_writer;

/// A named degradation applied to every ground-truth mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub erode_prob: f64,
    pub dilate_prob: f64,
    pub fp_blob_rate: f64,
}

/// Parses `name=erode,dilate,fp_rate`.
pub fn parse_model(s: &str) -> Result<ModelSpec> {
    let (name, rest) = s
        .split_once('=')
        .with_context(|| format!("model {s:?} is not name=erode,dilate,fp"))?;
    let v: Vec<f64> = rest
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("model {s:?}: bad rate"))?;
    let [erode_prob, dilate_prob, fp_blob_rate] = v[..] else {
        bail!("model {s:?} needs three rates");
    };
    if name.is_empty() {
        bail!("model {s:?} has an empty name");
    }
    Ok(ModelSpec {
        name: name.to_string(),
        erode_prob,
        dilate_prob,
        fp_blob_rate,
    })
}

fn triple<T: Copy>(v: &[T], what: &str) -> Result<[T; 3]> {
    match *v {
        [a] => Ok([a; 3]),
        [a, b, c] => Ok([a, b, c]),
        _ => bail!("{what} takes one or three values"),
    }
}

/// Seed of case `i`, and of model `k` degrading it.
fn case_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(i as u64)
}

fn model_seed(case_seed: u64, k: usize) -> u64 {
    case_seed.wrapping_mul(31).wrapping_add(k as u64 + 1)
}

pub fn run(args: &PhantomArgs) -> Result<i32> {
    if args.n_cases == 0 {
        bail!("--n-cases must be at least 1");
    }
    let dims = triple(&args.dims, "--dims")?;
    let spacing = triple(&args.spacing, "--spacing")?;
    let [r_lo, r_hi] = args.radius[..] else {
        bail!("--radius takes two values");
    };
    let models = args
        .models
        .iter()
        .map(|m| parse_model(m))
        .collect::<Result<Vec<_>>>()?;
    let scanners = args.scanners.max(1);
    let case_dir = args.out_dir.join("cases");
    ensure_dir(&case_dir)?;

    let ids: Vec<usize> = (0..args.n_cases).collect();
    let written = par_map(&ids, |&i| -> Result<()> {
        let id = format!("case{i:03}");
        let seed = case_seed(args.seed, i);
        let cfg = PhantomConfig {
            seed,
            dims,
            spacing,
            n_lesions: args.n_lesions,
            radius_range: (r_lo, r_hi),
            noise_sigma: args.noise,
        };
        let (flair, mask) = generate_phantom(&cfg)?;
        write_nifti(
            &flair,
            case_dir.join(format!("{id}_flair.nii.gz")),
            DataType::Float32,
        )?;
        write_mask(&mask, case_dir.join(format!("{id}_mask.nii.gz")))?;
        for (k, m) in models.iter().enumerate() {
            let d = DegradeConfig {
                seed: model_seed(seed, k),
                erode_prob: m.erode_prob,
                dilate_prob: m.dilate_prob,
                fp_blob_rate: m.fp_blob_rate,
            };
            let pred = degrade_mask(&mask, &d)?;
            write_mask(&pred, case_dir.join(format!("{id}_{}.nii.gz", m.name)))?;
        }
        Ok(())
    });
    for r in written {
        r?;
    }

    let mut gt = csv_writer(&args.out_dir.join("gt.csv"))?;
    gt.write_record(["case_id", "flair_path", "mask_path", "scanner_label"])?;
    for i in 0..args.n_cases {
        let id = format!("case{i:03}");
        gt.write_record([
            id.clone(),
            format!("cases/{id}_flair.nii.gz"),
            format!("cases/{id}_mask.nii.gz"),
            format!("scanner{}", i % scanners),
        ])?;
    }
    gt.flush()?;
    if !models.is_empty() {
        let mut pr = csv_writer(&args.out_dir.join("preds.csv"))?;
        pr.write_record(["case_id", "model", "path"])?;
        for i in 0..args.n_cases {
            let id = format!("case{i:03}");
            for m in &models {
                pr.write_record([
                    id.clone(),
                    m.name.clone(),
                    format!("cases/{id}_{}.nii.gz", m.name),
                ])?;
            }
        }
        pr.flush()?;
    }
    info!(
        "wrote {} phantom cases to {}",
        args.n_cases,
        args.out_dir.display()
    );
    Ok(0)
}
