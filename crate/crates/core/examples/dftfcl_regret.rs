//! D-FTCL against D-FTFCL as the compression gets coarser.

use oco_compress::harness::{fit_rate, monte_carlo, Algorithm, RunConfig};
use oco_compress::CompressorSpec;

fn main() {
    let deltas = [1.0, 0.25, 0.0625];
    for algorithm in [Algorithm::Dftcl, Algorithm::Dftfcl] {
        let mut regrets = Vec::new();
        for &delta in &deltas {
            let compressor = if delta == 1.0 {
                CompressorSpec::Identity
            } else {
                CompressorSpec::rand_k_for_delta(16, delta)
            };
            let config = RunConfig {
                n: 8,
                d: 16,
                horizon: 1 << 13,
                algorithm,
                compressor,
                diameter: Some(2.0),
                drift: 0.5,
                ..RunConfig::default()
            };
            let r = monte_carlo(&config, 10, 0).unwrap().final_regret();
            println!("{algorithm:<7} delta={delta:<7} regret {:>9.3}", r.mean);
            regrets.push(r.mean);
        }
        let fit = fit_rate(&deltas, &regrets).unwrap();
        println!("{algorithm:<7} regret ~ delta^{:.3}", fit.exponent);
    }
}
