use pconet_core::model::{evaluate, load_checkpoint};
use pconet_core::report;
use serde_json::json;

use super::{format_report, load_labeled, require};
use crate::config::ConfigFile;
use crate::error::CliError;
use crate::EvalArgs;

pub fn run(args: EvalArgs, config: &ConfigFile) -> Result<(), CliError> {
    let checkpoint = require(config.merge_path(args.checkpoint, "checkpoint"), "checkpoint")?;
    let data = require(config.merge_path(args.data, "data"), "data")?;
    let batch = config.merge(args.batch, "batch")?.unwrap_or(16);
    if batch == 0 {
        return Err(CliError::Usage("--batch must be at least 1".into()));
    }
    let as_json = args.json || config.flag("json")?;

    let model = load_checkpoint(&checkpoint)?;
    let items = load_labeled(&data)?;
    let summary = evaluate(&model, &items, batch)?;
    let r = report(&summary.confusion)?;

    if as_json {
        let per_class: Vec<_> = r
            .classes
            .iter()
            .map(|c| {
                json!({
                    "class": c.name,
                    "precision": c.precision,
                    "recall": c.recall,
                    "f1": c.f1,
                    "support": c.support,
                })
            })
            .collect();
        let doc = json!({
            "accuracy": r.accuracy,
            "loss": summary.loss,
            "per_class": per_class,
            "confusion": summary.confusion.counts,
        });
        println!("{doc}");
    } else {
        println!("evaluated {} images, loss {:.4}\n", items.len(), summary.loss);
        print!("{}", format_report(&r, &summary.confusion));
    }
    Ok(())
}
