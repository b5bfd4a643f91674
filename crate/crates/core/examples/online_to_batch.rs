//! Offline LAD through the anytime online-to-batch conversion.

use oco_compress::algorithms::Weights;
use oco_compress::harness::{fit_rate, monte_carlo, Algorithm, EnvKind, RunConfig};
use oco_compress::CompressorSpec;

fn main() {
    let horizons: Vec<usize> = (10..=14).map(|e| 1 << e).collect();
    for (weights, mu) in [(Weights::Uniform, None), (Weights::Linear, Some(0.5))] {
        let mut gaps = Vec::new();
        for &t in &horizons {
            let config = RunConfig {
                n: 4,
                d: 8,
                horizon: t,
                algorithm: Algorithm::O2b,
                env: EnvKind::Lad,
                compressor: CompressorSpec::RandK(2),
                block_len: Some(4),
                samples: 32,
                weights,
                mu,
                ..RunConfig::default()
            };
            let s = monte_carlo(&config, 10, 0).unwrap();
            gaps.push(s.final_subopt().unwrap().mean);
        }
        let xs: Vec<f64> = horizons.iter().map(|&t| t as f64).collect();
        let fit = fit_rate(&xs, &gaps).unwrap();
        let gaps: Vec<String> = gaps.iter().map(|g| format!("{g:.2e}")).collect();
        println!(
            "{weights:?}: f(x^K) - f* = [{}], rate T^{:.3}",
            gaps.join(", "),
            fit.exponent
        );
    }
}
