//! Uplink-only compression sits between no compression and bidirectional compression.

use oco_compress::algorithms::Mode;
use oco_compress::harness::{monte_carlo, RunConfig};
use oco_compress::CompressorSpec;

fn main() {
    let base = RunConfig {
        n: 8,
        d: 16,
        horizon: 1 << 13,
        compressor: CompressorSpec::RandK(1),
        diameter: Some(2.0),
        drift: 0.5,
        ..RunConfig::default()
    };
    // one step size for all three so only the compression differs
    let Mode::Convex { eta } = base.resolve().unwrap().mode else {
        unreachable!("linear environments run in convex mode")
    };
    let variants = [
        (
            "identity",
            RunConfig {
                compressor: CompressorSpec::Identity,
                ..base.clone()
            },
        ),
        (
            "uplink only",
            RunConfig {
                unidirectional: true,
                ..base.clone()
            },
        ),
        ("bidirectional", base.clone()),
    ];
    for (name, config) in variants {
        let s = monte_carlo(
            &RunConfig {
                eta: Some(eta),
                ..config
            },
            10,
            0,
        )
        .unwrap();
        let down = s.bits_down.last().unwrap().mean;
        println!(
            "{name:<14} regret {:>9.3}  downlink bits {down:.0}",
            s.final_regret().mean
        );
    }
}
