//! Scattered-sample interpolation step by step: project registered frames
//! into the reference frame, fit the local models, enforce continuity with
//! conjugate gradients, and evaluate on the HR grid.
//!
//! cargo run --release --example local_models

use pcsr::charts::text_chart;
use pcsr::image::compare;
use pcsr::interp::{
    build_model_field, evaluate_hr, project_sequence, refine_continuity, Area, CgOptions,
};
use pcsr::obsmodel::{render_hr_goal, synthesize_sequence, MotionSpec, SensorParams};
use pcsr::pcbasis::{sample_patches, train_pca, PatchGeometry};

fn main() -> pcsr::Result<()> {
    let p = SensorParams::default();
    let train = vec![text_chart(192, 192, 20), text_chart(192, 192, 21)];
    let set = sample_patches(&train, &p, PatchGeometry::default(), 2500, 1)?;
    let basis = train_pca(&set, 60)?;

    let chart = text_chart(192, 192, 22);
    let seq = synthesize_sequence(&chart, 5, MotionSpec::translation(2.0), &p, 4)?;
    let frames: Vec<_> = seq.iter().map(|c| c.image.clone()).collect();
    // ground-truth motion stands in for registration here
    let transforms: Vec<_> = seq.iter().map(|c| c.applied_transform).collect();
    let samples = project_sequence(&frames, &transforms)?;
    let area = Area {
        width: frames[0].width(),
        height: frames[0].height(),
    };
    println!(
        "{} samples over a {}x{} LR area",
        samples.len(),
        area.width,
        area.height
    );

    let field = build_model_field(&samples, &basis, area, 1e-8)?;
    let ranks: Vec<usize> = field.models.iter().map(|m| m.rank_used).collect();
    println!(
        "{} models, {} empty, rank {}..{}, fit energy {:.3}",
        field.models.len(),
        field.empty_count(),
        ranks.iter().min().unwrap(),
        ranks.iter().max().unwrap(),
        field.total_fit_energy()
    );

    let (refined, report) =
        refine_continuity(&field, &samples, &basis, 1.0, &CgOptions::default())?;
    println!(
        "continuity: J {:.4e} -> {:.4e} after {} iterations, overlap RMS {:.3} -> {:.3}",
        report.objective_before(),
        report.objective_after(),
        report.iterations,
        report.disagreement_before,
        report.disagreement_after
    );

    let goal = render_hr_goal(&chart, &p.noiseless(), 2)?;
    for (label, f) in [("independent fits", &field), ("after continuity", &refined)] {
        let hr = evaluate_hr(f, &basis, 2)?;
        println!(
            "{label}: PSNR {:.2} dB against the HR goal",
            compare(&hr, &goal, 8)?.psnr
        );
    }
    Ok(())
}
