//! Error-feedback memory energies against their bounds.

use oco_compress::verify::{verify, Lemma, VerifyConfig};

fn main() {
    let config = VerifyConfig {
        seeds: 20,
        ..VerifyConfig::default()
    };
    for lemma in [Lemma::DftclErrors, Lemma::DftfclErrors, Lemma::O2bErrors] {
        println!("{}", verify(lemma, &config).unwrap());
    }
}
