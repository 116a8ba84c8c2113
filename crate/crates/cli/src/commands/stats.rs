use anyhow::{bail, Result};

use crate::args::StatsArgs;
use crate::report::{model_statistics, read_per_case, write_json};

pub fn run(args: &StatsArgs) -> Result<i32> {
    let rows = read_per_case(&args.per_case)?;
    if rows.is_empty() {
        bail!(
            "{} has no rows; expected the per_case.csv written by `wmh evaluate`",
            args.per_case.display()
        );
    }
    write_json(&args.out, model_statistics(&rows, &args.stats)?)?;
    Ok(0)
}
