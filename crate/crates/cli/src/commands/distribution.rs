use anyhow::{Context, Result};
use log::warn;
use wmh_core::nifti::read_nifti;
use wmh_core::preprocess::{
    clamp_negatives, density_histogram, foreground_mask, zstandardize_foreground,
};

use crate::args::DistributionArgs;
use crate::manifest::read_cases;
use crate::par_map;
use crate::report::csv_writer;

/// Foreground values of one case, standardized unless `raw`.
fn foreground_values(path: &std::path::Path, raw: bool) -> Result<Vec<f64>> {
    let vol = clamp_negatives(&read_nifti(path)?);
    let fg = foreground_mask(&vol);
    let vol = if raw {
        vol
    } else {
        zstandardize_foreground(&vol)?
    };
    Ok(fg.true_indices().map(|i| vol.data()[i]).collect())
}

pub fn run(args: &DistributionArgs) -> Result<i32> {
    let cases = read_cases(&args.manifest)?;
    let values = par_map(&cases, |c| foreground_values(&c.path, args.no_standardize));

    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    let mut failed = 0;
    for (case, v) in cases.iter().zip(values) {
        let label = case
            .scanner_label
            .clone()
            .unwrap_or_else(|| "unlabeled".into());
        let idx = match groups.iter().position(|(l, _)| *l == label) {
            Some(i) => i,
            None => {
                groups.push((label, Vec::new()));
                groups.len() - 1
            }
        };
        match v {
            Ok(v) => groups[idx].1.extend(v),
            Err(e) => {
                warn!("{}: {}", case.case_id, crate::describe(&e));
                failed += 1;
            }
        }
    }

    let mut w = csv_writer(&args.out)?;
    w.write_record(["scanner_label", "bin_center", "density"])?;
    for (label, values) in &groups {
        if values.is_empty() {
            warn!("group {label}: no foreground voxels");
            continue;
        }
        let hist =
            density_histogram(values, args.bins).with_context(|| format!("group {label}"))?;
        for (center, density) in &hist.rows {
            w.write_record([label.clone(), center.to_string(), density.to_string()])?;
        }
    }
    w.flush()?;
    Ok(if failed == 0 { 0 } else { 1 })
}
