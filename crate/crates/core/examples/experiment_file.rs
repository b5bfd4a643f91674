//! Describe a sweep as a TOML experiment file and run it through the CLI layer.

use oco_compress::cli::{sweep, sweep_csv, ExperimentFile};

fn main() {
    let text = r#"
        algo = "dftfcl"
        compressor = "randk:4"
        n = 4
        d = 16
        T = [1024, 2048, 4096]
        delta = [1.0, 0.25]
        drift = 0.5
        reps = 5
    "#;
    let file = ExperimentFile::from_toml(text).unwrap();
    print!("{}", sweep_csv(&sweep(&file).unwrap()));
    println!("\nnormalized file:\n{}", file.to_toml());
}
