//! Mean rate of the rate-variant interleaved scheme against full and
//! length-matched partial training.

use interleaved_training::harness::{run_experiment, ExperimentSpec, Scheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for power_db in [0.0, 10.0, 20.0] {
        println!("P = {power_db} dB");
        for scheme in [Scheme::RateVariant, Scheme::NitFull, Scheme::NitPartial] {
            let spec = ExperimentSpec::from_json(&format!(
                r#"{{"mode":"su","scheme":"{scheme}","n_t":[64],"paths":[3],"n_rf":[3],"alpha":[4.0],
                    "power_db":[{power_db}],"trials":20000,"seed":9}}"#
            ))?;
            let row = run_experiment(&spec)?.rows.remove(0);
            println!(
                "  {:<13} length {:>6.2}  rate {:.3} ± {:.3}  outage {:.4}  {}",
                scheme.to_string(),
                row.mean_len,
                row.mean_rate.unwrap_or(f64::NAN),
                row.se_rate.unwrap_or(f64::NAN),
                row.outage,
                row.flags.join(";")
            );
        }
    }
    Ok(())
}
