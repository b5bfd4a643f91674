//! Regret on the lower-bound environments next to `DG sqrt(T) / (8 sqrt(delta))`.

use oco_compress::harness::{monte_carlo, Algorithm, EnvKind, RunConfig};
use oco_compress::CompressorSpec;

fn main() {
    let t = 1 << 12;
    for delta in [0.25, 0.0625] {
        let bound = 2.0 * (t as f64).sqrt() / (8.0 * f64::sqrt(delta));
        for algorithm in [Algorithm::Dftcl, Algorithm::Dftfcl] {
            let config = RunConfig {
                n: 8,
                d: 16,
                horizon: t,
                algorithm,
                compressor: CompressorSpec::RandomGossip(delta),
                env: EnvKind::LowerBoundConvex,
                diameter: Some(2.0),
                ..RunConfig::default()
            };
            let r = monte_carlo(&config, 50, 0).unwrap().final_regret();
            println!(
                "delta={delta:<7} {algorithm:<7} regret {:>7.2} +- {:.2}  bound {bound:.2}",
                r.mean, r.stderr
            );
        }
    }

    let config = RunConfig {
        n: 8,
        d: 16,
        horizon: 1 << 12,
        algorithm: Algorithm::Dftfcl,
        compressor: CompressorSpec::RandomGossip(0.25),
        env: EnvKind::LowerBoundSc,
        mu: Some(1.0),
        ..RunConfig::default()
    };
    let r = monte_carlo(&config, 50, 0).unwrap().final_regret();
    println!(
        "strongly convex bound, D-FTFCL: regret {:.3} +- {:.3}",
        r.mean, r.stderr
    );
}
