//! Compress one vector with every compressor and compare error and cost.

use oco_compress::compressors::{compress, fcc};
use oco_compress::rng;
use oco_compress::{CompressorSpec, DecisionVector};

fn main() {
    let x = DecisionVector::from(vec![0.9, -0.3, 0.05, 1.4, -2.2, 0.0, 0.7, -0.1]);
    let d = x.dim();
    let specs = [
        CompressorSpec::Identity,
        CompressorSpec::RandK(2),
        CompressorSpec::ScaledSign,
        CompressorSpec::RandomGossip(0.25),
    ];
    println!(
        "{:<12} {:>6} {:>10} {:>8} {:>12}",
        "compressor", "delta", "err/|x|^2", "bits", "fcc(4) err"
    );
    for spec in specs {
        let mut r = rng::stream(1, 0, 0, 0);
        let msg = compress(&spec, &x, &mut r);
        let out = fcc(&x, &spec, 4, &mut r).unwrap();
        println!(
            "{:<12} {:>6.3} {:>10.4} {:>8} {:>12.4}",
            spec.to_string(),
            spec.nominal_delta(d),
            msg.payload.dist_sq(&x) / x.norm_sq(),
            msg.bits,
            out.residual_sum.dist_sq(&x) / x.norm_sq()
        );
    }
}
