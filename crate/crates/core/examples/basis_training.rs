//! Trains a principal-component patch basis from synthetic imagery, prints
//! the spectrum, and evaluates the leading components as continuous
//! functions over the 4x4 LR-pixel patch.
//!
//! cargo run --release --example basis_training [-- <patches> <output file>]

use pcsr::charts::{blob_scene, text_chart};
use pcsr::obsmodel::SensorParams;
use pcsr::pcbasis::{sample_patches, train_pca, PatchGeometry, PcBasis};

fn main() -> pcsr::Result<()> {
    let count: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(3000);
    let out = std::env::args()
        .nth(2)
        .unwrap_or_else(|| "basis.pcsr".into());
    let refs = vec![
        text_chart(256, 256, 1),
        text_chart(256, 256, 2),
        blob_scene(256, 256, 3),
    ];
    let set = sample_patches(
        &refs,
        &SensorParams::default(),
        PatchGeometry::default(),
        count,
        5,
    )?;
    let basis = train_pca(&set, 60)?;
    let total = set.total_variance();
    let mut captured = 0.0;
    for (j, ev) in basis.eigenvalues().iter().enumerate().take(12) {
        captured += ev;
        println!(
            "component {j:2}: eigenvalue {ev:12.3}  cumulative {:.4}",
            captured / total
        );
    }
    let captured: f64 = basis.eigenvalues().iter().sum();
    println!(
        "60 components capture {:.4} of the patch variance",
        captured / total
    );

    println!("component 0 sampled on a 5x5 grid of LR positions:");
    for r in 0..5 {
        let row: Vec<String> = (0..5)
            .map(|c| {
                let v = basis
                    .eval_component(0, 0.4 + c as f64 * 0.8, 0.4 + r as f64 * 0.8)
                    .unwrap();
                format!("{v:8.4}")
            })
            .collect();
        println!("  {}", row.join(" "));
    }

    basis.save(&out)?;
    let back = PcBasis::load(&out)?;
    assert_eq!(back, basis);
    println!("saved and reloaded {out}");
    Ok(())
}
