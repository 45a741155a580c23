//! Closed-form training-length distribution next to a Monte Carlo histogram.

use interleaved_training::analytic::{avg_training_length, avg_training_length_asymptotic, pmf_training_length};
use interleaved_training::channel::{sample_channel, ChannelConfig, PathCount, StreamKey};
use interleaved_training::su::{it_su_episode, SuSystemConfig};

fn main() {
    let (n_t, l, n_rf, alpha) = (32, 3, 2, 4.0);
    let pmf = pmf_training_length(n_t, l, n_rf, alpha).expect("within numerical validity");

    let trials = 200_000;
    let cfg = ChannelConfig::new(n_t, PathCount::Fixed(l), 1).unwrap();
    let sys = SuSystemConfig::with_alpha(n_rf, alpha).unwrap();
    let mut counts = vec![0u32; n_t + 1];
    for t in 0..trials {
        let ch = sample_channel(&cfg, &StreamKey::new(1, 0, t)).unwrap();
        counts[it_su_episode(&ch, &sys).training_length] += 1;
    }

    println!("{:>3} {:>10} {:>10}", "i", "P_i", "MC");
    for (i, &c) in counts.iter().enumerate().skip(1) {
        println!("{i:>3} {:>10.6} {:>10.6}", pmf.prob(i), c as f64 / trials as f64);
    }
    println!("mean length: {:.4}", avg_training_length(n_t, l, n_rf, alpha).unwrap());
    println!("N_t/(L+1):   {:.4}", avg_training_length_asymptotic(n_t, l));

    println!("\nslope of the mean length in N_t (N_RF = 1, alpha = 4):");
    for l in [1, 3, 6] {
        let a = avg_training_length(40, l, 1, 4.0).unwrap();
        let b = avg_training_length(160, l, 1, 4.0).unwrap();
        println!("  L = {l}: {:.3}", (b - a) / 120.0);
    }
}
