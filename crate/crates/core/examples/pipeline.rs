//! Drives the staged pipeline on a generated chart corpus, exactly as the
//! `pcsr` binary would, and prints the run report summary.
//!
//! cargo run --release --example pipeline [-- <work dir>]

use std::path::PathBuf;

use pcsr::charts::text_chart;
use pcsr::image::io::save_pgm;
use pcsr::pipeline::{load_report, summarize, Pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "pipeline-out".into()),
    );
    let corpus = work.join("corpus");
    std::fs::create_dir_all(&corpus)?;
    for i in 0..6 {
        save_pgm(
            &text_chart(160, 160, 40 + i),
            corpus.join(format!("chart_{i:02}.pgm")),
        )?;
    }
    let config = "\
corpus_dir = \"corpus\"
output_dir = \"run\"

[corpus]
evaluation_count = 2

[patch]
count = 3000
";
    std::fs::write(work.join("pcsr.toml"), config)?;
    let cfg = PipelineConfig::load(&work.join("pcsr.toml"))?;
    let pipeline = Pipeline::new(cfg);
    pipeline.run_all()?;
    let report = load_report(&pipeline.workspace().report())?;
    print!("{}", summarize(&report));
    Ok(())
}
