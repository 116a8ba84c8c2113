use anyhow::Result;
use log::{info, warn};
use serde_json::json;
use wmh_core::metrics::{evaluate_case, pool_rows, CaseEvaluation, SizeBinRow};
use wmh_core::nifti::read_mask;
use wmh_core::{Connectivity, SizeBins};

use super::ensure_dir;
use crate::args::EvaluateArgs;
use crate::manifest::{read_cases, read_preds, CaseEntry, PredEntry};
use crate::par_map;
use crate::report::{self, format_opt, PerCaseRow};

/// A case-model pair that could not be scored.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Excluded {
    pub case_id: String,
    pub model: String,
    pub reason: String,
}

struct Job<'a> {
    gt: &'a CaseEntry,
    preds: Vec<&'a PredEntry>,
}

type JobResult = Vec<(String, std::result::Result<CaseEvaluation, String>)>;

fn run_job(job: &Job, conn: Connectivity, bins: &SizeBins) -> JobResult {
    let gt_path = job.gt.mask_path.as_ref().unwrap_or(&job.gt.path);
    let gt = read_mask(gt_path);
    job.preds
        .iter()
        .map(|p| {
            let res = match &gt {
                Err(e) => Err(format!("ground truth: {e}")),
                Ok(gt) => read_mask(&p.path)
                    .and_then(|pred| evaluate_case(&pred, gt, conn, bins))
                    .map_err(|e| e.to_string()),
            };
            (p.model.clone(), res)
        })
        .collect()
}

pub fn run(args: &EvaluateArgs) -> Result<i32> {
    let gts = read_cases(&args.gt)?;
    let preds = read_preds(&args.pred)?;
    let bins = SizeBins::new(args.bin_edges.clone())?;
    let conn: Connectivity = args.connectivity.into();
    ensure_dir(&args.out_dir)?;

    let mut models: Vec<String> = Vec::new();
    for p in &preds {
        if !models.contains(&p.model) {
            models.push(p.model.clone());
        }
    }
    let mut excluded = Vec::new();
    for p in &preds {
        if !gts.iter().any(|g| g.case_id == p.case_id) {
            warn!("{}/{}: no ground truth in manifest", p.case_id, p.model);
            excluded.push(Excluded {
                case_id: p.case_id.clone(),
                model: p.model.clone(),
                reason: "no ground truth".into(),
            });
        }
    }
    let jobs: Vec<Job> = gts
        .iter()
        .map(|gt| Job {
            gt,
            preds: models
                .iter()
                .filter_map(|m| {
                    preds
                        .iter()
                        .find(|p| p.case_id == gt.case_id && &p.model == m)
                })
                .collect(),
        })
        .collect();
    for job in &jobs {
        for m in &models {
            if !job.preds.iter().any(|p| &p.model == m) {
                warn!("{}/{m}: no prediction", job.gt.case_id);
                excluded.push(Excluded {
                    case_id: job.gt.case_id.clone(),
                    model: m.clone(),
                    reason: "no prediction".into(),
                });
            }
        }
    }

    let results = par_map(&jobs, |job| run_job(job, conn, &bins));

    let mut rows = Vec::new();
    let mut pooled: Vec<Vec<SizeBinRow>> = vec![Vec::new(); models.len()];
    for (job, res) in jobs.iter().zip(results) {
        for (model, r) in res {
            match r {
                Ok(eval) => {
                    info!("{}/{model}: dsc {:.4}", job.gt.case_id, eval.metrics.dsc);
                    let k = models.iter().position(|m| *m == model).unwrap();
                    if pooled[k].is_empty() {
                        pooled[k] = eval.stratified.clone();
                    } else {
                        pool_rows(&mut pooled[k], &eval.stratified);
                    }
                    rows.push(PerCaseRow {
                        case_id: job.gt.case_id.clone(),
                        model,
                        metrics: eval.metrics,
                    });
                }
                Err(reason) => {
                    warn!("{}/{model}: excluded: {reason}", job.gt.case_id);
                    excluded.push(Excluded {
                        case_id: job.gt.case_id.clone(),
                        model,
                        reason,
                    });
                }
            }
        }
    }

    report::write_per_case(&args.out_dir.join("per_case.csv"), &rows)?;

    let mut w = report::csv_writer(&args.out_dir.join("stratified.csv"))?;
    w.write_record([
        "model",
        "bin_low",
        "bin_high",
        "recall",
        "precision",
        "n_gt",
        "n_pred",
    ])?;
    for (model, bins) in models.iter().zip(&pooled) {
        for b in bins {
            w.write_record([
                model.clone(),
                b.bin_low.to_string(),
                b.bin_high.to_string(),
                format_opt(b.recall()),
                format_opt(b.precision()),
                b.n_gt.to_string(),
                b.n_pred.to_string(),
            ])?;
        }
    }
    w.flush()?;

    report::write_json(
        &args.out_dir.join("summary.json"),
        json!({
            "models": models,
            "n_cases": gts.len(),
            "n_scored": rows.len(),
            "summary": report::summaries(&rows),
            "excluded": excluded,
        }),
    )?;

    if models.len() >= 2 {
        let stats = report::model_statistics(&rows, &args.stats)?;
        report::write_json(&args.out_dir.join("stats.json"), stats)?;
    }

    if excluded.is_empty() {
        Ok(0)
    } else {
        warn!("{} case-model pairs excluded", excluded.len());
        Ok(1)
    }
}
