use anyhow::{Context, Result};
use log::info;
use serde_json::json;
use wmh_core::nifti::{read_mask, write_mask, write_nifti, DataType};
use wmh_core::staple::{majority_vote, staple_with, StapleOptions, StapleRegion};
use wmh_core::{RaterStack, StapleParams};

use super::ensure_dir;
use crate::args::FuseArgs;
use crate::report::write_json;

pub fn run(args: &FuseArgs) -> Result<i32> {
    let masks = args
        .inputs
        .iter()
        .map(|p| read_mask(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let stack = RaterStack::new(masks)?;
    ensure_dir(&args.out_dir)?;
    let inputs: Vec<String> = args
        .inputs
        .iter()
        .map(|p| p.display().to_string())
        .collect();

    if args.majority {
        let fused = majority_vote(&stack)?;
        write_mask(&fused, args.out_dir.join("fused.nii.gz"))?;
        write_json(
            &args.out_dir.join("fusion.json"),
            json!({
                "method": "majority",
                "inputs": inputs,
                "n_raters": stack.n_raters(),
                "fused_voxels": fused.count(),
            }),
        )?;
        info!(
            "majority vote of {} masks: {} voxels",
            stack.n_raters(),
            fused.count()
        );
        return Ok(0);
    }

    let mut init = StapleParams::initial(&stack);
    init.sensitivity.fill(args.init_performance);
    init.specificity.fill(args.init_performance);
    init.max_iters = args.max_iters;
    init.tol = args.tol;
    let region = if args.full_volume {
        StapleRegion::Full
    } else {
        StapleRegion::BoundingBox
    };
    let res = staple_with(&stack, &init, StapleOptions { region })?;
    write_mask(&res.fused, args.out_dir.join("fused.nii.gz"))?;
    write_nifti(
        res.weights.field(),
        args.out_dir.join("weights.nii.gz"),
        DataType::Float32,
    )?;
    write_json(
        &args.out_dir.join("fusion.json"),
        json!({
            "method": "staple",
            "inputs": inputs,
            "n_raters": stack.n_raters(),
            "region": if args.full_volume { "full" } else { "bounding_box" },
            "initial": init,
            "sensitivity": res.params.sensitivity,
            "specificity": res.params.specificity,
            "prior": res.params.prior,
            "n_iters": res.n_iters,
            "converged": res.converged,
            "log_likelihood": res.log_likelihood,
            "fused_voxels": res.fused.count(),
        }),
    )?;
    info!(
        "STAPLE of {} masks: {} iterations, converged {}",
        stack.n_raters(),
        res.n_iters,
        res.converged
    );
    Ok(0)
}
