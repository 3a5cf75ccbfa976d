use pconet_core::model::{load_checkpoint_full, ModelSpec};

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::SummaryArgs;

pub fn run(args: SummaryArgs, config: &ConfigFile) -> Result<(), CliError> {
    let spec = match config.merge_path(args.checkpoint, "checkpoint") {
        Some(path) => {
            let ckpt = load_checkpoint_full(&path)?;
            if let Some(state) = &ckpt.training {
                println!(
                    "checkpoint {} after {} epochs ({} steps)\n",
                    path.display(),
                    state.epoch,
                    state.adam.step_count()
                );
            }
            ckpt.model.spec().clone()
        }
        None => ModelSpec::pconet(),
    };
    let table = spec.summary_table().map_err(|e| CliError::Other(e.to_string()))?;
    print!("{table}");
    Ok(())
}
