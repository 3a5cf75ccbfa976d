use pconet_core::data::synthetic;

use crate::error::CliError;
use crate::SynthArgs;

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    if args.per_class == 0 || args.size == 0 {
        return Err(CliError::Usage("--per-class and --size must be positive".into()));
    }
    synthetic::write_dataset(&args.out, args.per_class, args.size, args.seed)?;
    println!("wrote {} images to {}", 2 * args.per_class, args.out.display());
    Ok(())
}
