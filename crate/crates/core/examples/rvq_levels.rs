//! Fits a residual quantizer to random latents and shows the error falling
//! as levels are added, plus the exact dequantization round trip.

use choreo::rvq::ResidualQuantizer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> choreo::Result<()> {
    let (n, d) = (2000, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let latent: Vec<f64> = (0..n * d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut q = ResidualQuantizer::new(6, 64, d, false, 1.0)?;
    q.initialize(&latent, 20, &mut rng)?;
    let energy: f64 = latent.iter().map(|v| v * v).sum::<f64>();
    for levels in 1..=q.levels() {
        let r = q.quantize_levels(&latent, levels)?;
        let err: f64 = r.final_residual().iter().map(|v| v * v).sum();
        println!(
            "{levels} levels: relative squared error {:.4}",
            err / energy
        );
    }
    let r = q.quantize(&latent)?;
    println!(
        "dequantize(indices) == quantized: {}",
        q.dequantize(&r.indices)? == r.quantized
    );
    Ok(())
}
