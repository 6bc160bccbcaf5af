//! Round trips through every on-disk format: PGM, PFM, transform sidecars,
//! the basis container and the filter container.
//!
//! cargo run --release --example file_formats [-- <output dir>]

use pcsr::charts::text_chart;
use pcsr::image::io::{load_pfm, load_pgm, quantized, save_pfm, save_pgm};
use pcsr::image::Sidecar;
use pcsr::pcbasis::{sample_patches, train_pca, PatchGeometry, PcBasis};
use pcsr::restore::RestorationFilter;
use pcsr::{obsmodel::SensorParams, GeomTransform};

fn main() -> pcsr::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "formats-out".into());
    std::fs::create_dir_all(&dir)?;
    let img = text_chart(96, 64, 5);

    save_pgm(&img, format!("{dir}/chart.pgm"))?;
    assert_eq!(load_pgm(format!("{dir}/chart.pgm"))?, quantized(&img));
    let smooth = img.map(|v| v / 3.0 + 0.125);
    save_pfm(&smooth, format!("{dir}/chart.pfm"))?;
    let back = load_pfm(format!("{dir}/chart.pfm"))?;
    let worst = back
        .data()
        .iter()
        .zip(smooth.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("PGM exact after quantization, PFM max error {worst:.2e}");

    let t = GeomTransform::affine(1.01, -0.003, 0.002, 0.995, 0.37, -1.2);
    let side = Sidecar::new(t).with_seed(77).with_extra("note", "example");
    side.save(format!("{dir}/motion.txt"))?;
    let loaded = Sidecar::load(format!("{dir}/motion.txt"))?;
    assert_eq!(loaded.transform, t);
    print!("sidecar:\n{}", side.to_text());

    let set = sample_patches(
        &[text_chart(128, 128, 1)],
        &SensorParams::default(),
        PatchGeometry::default(),
        200,
        3,
    )?;
    let basis = train_pca(&set, 8)?;
    basis.save(format!("{dir}/basis.pcsr"))?;
    assert_eq!(PcBasis::load(format!("{dir}/basis.pcsr"))?, basis);

    let filter = RestorationFilter::identity(5);
    filter.save(format!("{dir}/filter.pcrf").as_ref())?;
    assert_eq!(
        RestorationFilter::load(format!("{dir}/filter.pcrf").as_ref())?,
        filter
    );
    println!("basis and filter containers reload bit-exactly");
    Ok(())
}
