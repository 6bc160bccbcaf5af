//! Sensor simulation: transfer-function values along the frequency axis,
//! then a shifted, noisy low-resolution capture of a synthetic chart.
//!
//! cargo run --release --example observation_model [-- <output dir>]

use pcsr::charts::text_chart;
use pcsr::image::io::save_pgm;
use pcsr::obsmodel::{
    aberration_otf, detector_otf, lens_otf, simulate_capture, OtfChain, SensorParams,
};
use pcsr::GeomTransform;

fn main() -> pcsr::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "observation-out".into());
    std::fs::create_dir_all(&out)?;
    let p = SensorParams::default();
    let chain = OtfChain::new(&p, p.downsample_factor);
    println!("cutoff {:.4} cycles per reference pixel", p.cutoff());
    println!(
        "{:>8} {:>8} {:>8} {:>8} {:>8}",
        "f", "lens", "aberr", "detector", "total"
    );
    for i in 0..=8 {
        let f = i as f64 * p.cutoff() / 8.0;
        println!(
            "{:8.4} {:8.4} {:8.4} {:8.4} {:8.4}",
            f,
            lens_otf(f, &p),
            aberration_otf(f, &p),
            detector_otf(f, 0.0, &p),
            chain.transfer(f, 0.0)
        );
    }

    let chart = text_chart(256, 256, 7);
    save_pgm(&chart, format!("{out}/reference.pgm"))?;
    let motion = GeomTransform::translation(1.5, -2.25);
    let capture = simulate_capture(&chart, &motion, &p, 42)?;
    save_pgm(&capture.image, format!("{out}/capture.pgm"))?;
    println!(
        "capture {}x{}, recorded motion {:?} LR px",
        capture.image.width(),
        capture.image.height(),
        capture.applied_transform.params()
    );
    Ok(())
}
