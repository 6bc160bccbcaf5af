//! Full in-memory reconstruction of synthetic text-and-line charts: train a
//! basis and a restoration filter on a few charts, then super-resolve a
//! held-out chart and compare against single-frame bicubic upsampling.
//!
//! cargo run --release --example super_resolve [-- <size> <patches>]

use pcsr::charts::text_chart;
use pcsr::image::compare;
use pcsr::pipeline::{step_one, synthesize, train_basis, PipelineConfig};
use pcsr::restore::{apply_filter, train_filter, TrainingPair};
use std::path::Path;
use std::time::Instant;

fn main() -> pcsr::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let size = args.first().copied().unwrap_or(192);
    let patches = args.get(1).copied().unwrap_or(4000);

    let mut cfg = PipelineConfig::parse("corpus_dir = \"unused\"\n", "inline", Path::new("."))
        .expect("valid config");
    cfg.patch.count = patches;

    let train: Vec<_> = (0..4).map(|i| text_chart(size, size, 100 + i)).collect();
    let t = Instant::now();
    let basis = train_basis(&train, &cfg)?;
    println!(
        "basis: {} components from {} patches in {:.1?}",
        basis.n_components(),
        patches,
        t.elapsed()
    );
    println!("leading eigenvalues: {:?}", &basis.eigenvalues()[..5]);

    let mut pairs = Vec::new();
    for (i, chart) in train.iter().enumerate() {
        let seq = synthesize(chart, &cfg, 500 + i as u64)?;
        let s1 = step_one(&seq.frames(), &basis, &cfg)?;
        pairs.push(TrainingPair {
            input: s1.interpolation.image,
            target: seq.goal,
        });
    }
    let filter = train_filter(&pairs, &cfg.restore)?;
    println!(
        "filter: radius {} with {} rings",
        filter.radius(),
        filter.ring_count()
    );

    for seed in 0..3 {
        let chart = text_chart(size, size, seed);
        let t = Instant::now();
        let seq = synthesize(&chart, &cfg, 900 + seed)?;
        let s1 = step_one(&seq.frames(), &basis, &cfg)?;
        let restored = apply_filter(&s1.interpolation.image, &filter);
        let m = cfg.evaluation.margin;
        let base = compare(&s1.baseline, &seq.goal, m)?.psnr;
        let step1 = compare(&s1.interpolation.image, &seq.goal, m)?.psnr;
        let fin = compare(&restored, &seq.goal, m)?.psnr;
        let cont = s1.interpolation.continuity.as_ref().unwrap();
        println!(
            "chart {seed}: bicubic {base:.2} dB, step 1 {step1:.2} dB, restored {fin:.2} dB \
             (J {:.3e} -> {:.3e} in {} CG iterations, {:.1?})",
            cont.objective_before(),
            cont.objective_after(),
            cont.iterations,
            t.elapsed()
        );
    }
    Ok(())
}
