use std::ops::ControlFlow;
use std::path::PathBuf;

use pconet_core::data::split;
use pconet_core::metrics::emit_curves_svg;
use pconet_core::model::{evaluate, save_checkpoint_full, TrainConfig, TrainingState};
use pconet_core::{build_pconet_seeded, report, train};

use super::{format_report, load_labeled, require};
use crate::config::ConfigFile;
use crate::error::CliError;
use crate::{Toggle, TrainArgs};

const SPLIT_RATIO: f64 = 0.8;

pub fn run(args: TrainArgs, config: &ConfigFile) -> Result<(), CliError> {
    let defaults = TrainConfig::default();
    let data = require(config.merge_path(args.data, "data"), "data")?;
    let val_dir = config.merge_path(args.val_dir, "val-dir");
    let out = config
        .merge_path(args.out, "out")
        .unwrap_or_else(|| PathBuf::from("pconet.ckpt"));
    let log = config
        .merge_path(args.log, "log")
        .unwrap_or_else(|| out.with_extension("csv"));
    let train_config = TrainConfig {
        epochs: config.merge(args.epochs, "epochs")?.unwrap_or(defaults.epochs),
        batch_size: config.merge(args.batch, "batch")?.unwrap_or(defaults.batch_size),
        learning_rate: config.merge(args.lr, "lr")?.unwrap_or(defaults.learning_rate),
        seed: config.merge(args.seed, "seed")?.unwrap_or(defaults.seed),
        augment: config.merge(args.augment, "augment")?.unwrap_or(Toggle::On) == Toggle::On,
        log_path: Some(log.clone()),
        ..defaults
    };
    train_config.validate()?;

    let (train_set, val_set) = match val_dir {
        Some(dir) => (load_labeled(&data)?, load_labeled(&dir)?),
        None => {
            let parts = split(&load_labeled(&data)?, SPLIT_RATIO, train_config.seed)?;
            (parts.train, parts.validation)
        }
    };
    println!(
        "training on {} images, validating on {}",
        train_set.len(),
        val_set.len()
    );

    let mut model = build_pconet_seeded(train_config.seed);
    let epochs = train_config.epochs;
    let (log_rows, adam) = train(&mut model, &train_set, &val_set, &train_config, |row| {
        println!(
            "epoch {:>3}/{epochs}  loss {:.4}  acc {:.4}  val_loss {:.4}  val_acc {:.4}  val_precision {:.4}  val_recall {:.4}",
            row.epoch, row.train_loss, row.train_acc, row.val_loss, row.val_acc, row.val_precision, row.val_recall
        );
        ControlFlow::Continue(())
    })?;

    let state = TrainingState {
        adam,
        epoch: log_rows.rows.len() as u32,
    };
    save_checkpoint_full(&model, Some(&state), &out)?;
    let curve_dir = match log.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let curves = emit_curves_svg(&log, &curve_dir)?;

    let summary = evaluate(&model, &val_set, train_config.batch_size)?;
    println!("\nvalidation results");
    print!("{}", format_report(&report(&summary.confusion)?, &summary.confusion));
    println!("\ncheckpoint: {}", out.display());
    println!("log: {}", log.display());
    for c in curves {
        println!("curve: {}", c.display());
    }
    Ok(())
}
