//! Sub-pixel registration of a synthetic sequence against its first frame,
//! with the recovered transforms compared to the simulated ones.
//!
//! cargo run --release --example registration

use pcsr::charts::text_chart;
use pcsr::obsmodel::{synthesize_sequence, MotionSpec, SensorParams};
use pcsr::registration::{register_sequence, RegistrationOptions};
use pcsr::TransformKind;

fn main() -> pcsr::Result<()> {
    let chart = text_chart(256, 256, 3);
    for (kind, motion) in [
        (TransformKind::Translation, MotionSpec::translation(3.0)),
        (TransformKind::Affine, MotionSpec::affine(3.0)),
    ] {
        let p = SensorParams::default();
        let seq = synthesize_sequence(&chart, 6, motion, &p, 11)?;
        let frames: Vec<_> = seq.iter().map(|c| c.image.clone()).collect();
        let results = register_sequence(&frames, kind, &RegistrationOptions::default())?;
        println!("{} model:", kind.as_str());
        for (k, (cap, r)) in seq.iter().zip(&results).enumerate() {
            let (w, h) = (frames[0].width(), frames[0].height());
            let err = r
                .transform
                .mean_reprojection_error(&cap.applied_transform, w, h);
            println!(
                "  frame {k}: {} iterations, residual {:.3}, reprojection error {:.4} px",
                r.iterations, r.residual_rms, err
            );
        }
    }
    Ok(())
}
