use aesthete::data::{synth_dataset, write_votes, LabeledImage};
use anyhow::{bail, Result};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::io::write;

pub const IMAGE_DIR: &str = "images";
pub const VOTES_FILE: &str = "votes.txt";

/// Writes `images/<id>.png` and a vote file for `[synth]` under the output
/// directory.
pub fn run(cfg: &RunConfig) -> Result<()> {
    if cfg.synth.n == 0 {
        bail!("synth.n must be at least 1");
    }
    cfg.echo()?;
    let set = synth_dataset(cfg.synth.n, cfg.seed, cfg.synth.size)?;
    let dir = cfg.output_dir.join(IMAGE_DIR);
    set.par_iter().try_for_each(|s| write(&dir.join(&s.record.image_path), s.image.encode_png()?))?;
    let records: Vec<LabeledImage> = set.into_iter().map(|s| s.record).collect();
    write(&cfg.output_dir.join(VOTES_FILE), write_votes(&records))?;
    println!("wrote {} images to {}", records.len(), dir.display());
    Ok(())
}
