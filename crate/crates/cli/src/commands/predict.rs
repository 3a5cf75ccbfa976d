use std::io::{self, Write};

use pconet_core::data::load_image;
use pconet_core::model::load_checkpoint;
use pconet_core::IMAGE_SIZE;

use super::require;
use crate::config::ConfigFile;
use crate::error::CliError;
use crate::PredictArgs;

pub fn run(args: PredictArgs, config: &ConfigFile) -> Result<(), CliError> {
    let checkpoint = require(config.merge_path(args.checkpoint, "checkpoint"), "checkpoint")?;
    let model = load_checkpoint(&checkpoint)?;
    let stdout = io::stdout();
    let mut ok = 0;
    for path in &args.images {
        let prediction = load_image(path, IMAGE_SIZE)
            .map_err(CliError::from)
            .and_then(|img| model.predict(&img).map_err(|e| CliError::Other(e.to_string())));
        match prediction {
            Ok(p) => {
                ok += 1;
                let line = format!(
                    "{}\t{}\t{:.6}\t{:.6}\n",
                    path.display(),
                    p.label_name(),
                    p.scores[0],
                    p.scores[1]
                );
                stdout
                    .lock()
                    .write_all(line.as_bytes())
                    .map_err(|e| CliError::Other(e.to_string()))?;
            }
            Err(e) => eprintln!("warning: {}: {e}", path.display()),
        }
    }
    if ok == 0 {
        return Err(CliError::Other("no image could be classified".into()));
    }
    Ok(())
}
