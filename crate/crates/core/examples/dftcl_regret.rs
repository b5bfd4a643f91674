//! Regret growth of D-FTCL on a drifting linear adversary, with a log-log fit.

use oco_compress::harness::{fit_rate, monte_carlo, Algorithm, RunConfig};
use oco_compress::CompressorSpec;

fn main() {
    let horizons: Vec<usize> = (8..=13).map(|e| 1 << e).collect();
    let mut regrets = Vec::new();
    for &t in &horizons {
        let config = RunConfig {
            n: 8,
            d: 16,
            horizon: t,
            algorithm: Algorithm::Dftcl,
            compressor: CompressorSpec::RandK(4),
            diameter: Some(2.0),
            drift: 0.5,
            ..RunConfig::default()
        };
        let s = monte_carlo(&config, 10, 0).unwrap();
        let r = s.final_regret();
        let bits = s.bits_up.last().unwrap().mean + s.bits_down.last().unwrap().mean;
        println!(
            "T={t:>5}  regret {:>8.3} +- {:.3}  total bits {bits:.0}",
            r.mean, r.stderr
        );
        regrets.push(r.mean);
    }
    let xs: Vec<f64> = horizons.iter().map(|&t| t as f64).collect();
    let fit = fit_rate(&xs, &regrets).unwrap();
    println!("regret ~ T^{:.3} (r2 {:.4})", fit.exponent, fit.r2);
}
