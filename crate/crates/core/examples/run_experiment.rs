//! Run an experiment in-process and write the same files as the command
//! line: `cargo run --release --example run_experiment -- lln out/lln`.

use std::path::PathBuf;

use rangecap::experiments::{self, report, Experiment, ExperimentConfig};
use rangecap::walk::ModelSpec;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = match args.get(1).map(String::as_str).unwrap_or("transience") {
        "lln" => Experiment::Lln,
        "variance" => Experiment::Variance,
        "clt" => Experiment::Clt,
        "error-scaling" => Experiment::ErrorScaling,
        "moment4" => Experiment::Moment4,
        "loop-equivalence" => Experiment::LoopEquivalence,
        _ => Experiment::Transience,
    };
    let dir = PathBuf::from(args.get(2).cloned().unwrap_or_else(|| format!("out/{}", kind.name())));
    let config = ExperimentConfig::new(ModelSpec::subordinate(3, 0.8), vec![64, 128, 256], 500, 1);
    let out = experiments::run(kind, &config).unwrap();
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("report.json"), out.report.to_json()).unwrap();
    std::fs::write(dir.join("samples.csv"), report::samples_csv(&out.samples)).unwrap();
    for c in &out.report.checks {
        println!("{:5} {} = {:.4}", if c.passed { "ok" } else { "FAIL" }, c.name, c.observed);
    }
    println!("wrote {}", dir.display());
}
