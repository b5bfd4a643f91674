//! Monte Carlo estimate of the FCC contraction against `(1 - delta)^L`.

use oco_compress::compressors::contraction_stat;
use oco_compress::CompressorSpec;

fn main() {
    let d = 64;
    for spec in [
        CompressorSpec::RandK(8),
        CompressorSpec::ScaledSign,
        CompressorSpec::RandomGossip(0.125),
    ] {
        let delta = spec.nominal_delta(d);
        println!("{spec} (delta = {delta:.4})");
        for l in [1, 2, 4, 8, 16] {
            let s = contraction_stat(&spec, l, d, 5000, 7).unwrap();
            println!(
                "  L={l:>2}  mean {:.4} +- {:.4}   bound {:.4}",
                s.mean,
                s.stderr,
                (1.0 - delta).powi(l as i32)
            );
        }
    }
}
