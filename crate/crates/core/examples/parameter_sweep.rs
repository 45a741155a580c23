//! Build a sweep spec in code, run it, and print the CSV table.

use interleaved_training::harness::{compare_report, comparison_csv, run_experiment, summary_csv, ExperimentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ExperimentSpec::from_json(
        r#"{
            "mode": "su",
            "scheme": "it",
            "n_t": [32, 64, 128],
            "paths": [1, 3],
            "n_rf": [1, 2],
            "alpha": [4.0],
            "trials": 20000,
            "seed": 1
        }"#,
    )?;
    let summary = run_experiment(&spec)?;
    print!("{}", summary_csv(&summary.rows));
    eprintln!("total {:.2}s", summary.wall_time.iter().sum::<f64>());

    println!();
    print!("{}", comparison_csv(&compare_report(&spec)?));
    Ok(())
}
