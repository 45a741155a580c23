//! Outage probability of interleaved training: general formula, the single
//! RF chain special case and its large-array asymptote.

use interleaved_training::analytic::{outage_it_su, outage_single_rf, outage_single_rf_asymptote, AnalyticError};

fn main() {
    let alpha = 4.0;
    println!(
        "{:>5} {:>3} {:>12} {:>12} {:>12}",
        "N_t", "L", "N_RF=1", "N_RF=2", "N_RF=3"
    );
    for n_t in [16, 32, 64, 128, 256] {
        for l in [2, 4] {
            let cell = |n_rf| match outage_it_su(n_t, l, n_rf, alpha) {
                Ok(p) => format!("{p:.4e}"),
                Err(AnalyticError::PathCount { .. }) => "-".into(),
                Err(e) => format!("({e})"),
            };
            println!("{n_t:>5} {l:>3} {:>12} {:>12} {:>12}", cell(1), cell(2), cell(3));
        }
    }

    println!("\nsingle RF chain, L = 3: exact vs (alpha L / N_t)^L");
    for n_t in [64, 256, 1024, 4096] {
        let exact = outage_single_rf(n_t, 3, alpha).unwrap();
        let approx = outage_single_rf_asymptote(n_t, 3, alpha);
        println!("  N_t = {n_t:>5}: {exact:.4e} {approx:.4e} ratio {:.4}", exact / approx);
    }
}
