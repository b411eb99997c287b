use std::io::Write;

use crate::args::GenerateArgs;
use crate::error::CliError;
use crate::files::{create_dir, save_flo, save_pgm};
use crate::report;
use crate::synth::synth_pair;

/// Writes `{stem}_{i:04}_img1.pgm`, `_img2.pgm` and `_flow.flo` per pair and
/// prints one manifest line for each.
pub fn run(args: &GenerateArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    create_dir(&args.out)?;
    for i in 0..args.n {
        let pair = synth_pair(args.flow, &args.synth, i)?;
        let stem = format!("{}_{i:04}", args.stem);
        let paths = ["img1.pgm", "img2.pgm", "flow.flo"].map(|s| args.out.join(format!("{stem}_{s}")));
        save_pgm(&paths[0], &pair.image1)?;
        save_pgm(&paths[1], &pair.image2)?;
        save_flo(&paths[2], &pair.truth)?;
        report(
            out,
            format_args!(
                "{} {} {} max_disp={:.6}",
                paths[0].display(),
                paths[1].display(),
                paths[2].display(),
                pair.truth.max_magnitude()
            ),
        )?;
    }
    Ok(())
}
