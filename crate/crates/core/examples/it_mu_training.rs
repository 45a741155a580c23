//! Mean training length of interleaved multi-user training as the array
//! grows with L = 0.1 N_t.

use interleaved_training::channel::{sample_channel, ChannelConfig, PathCount, StreamKey};
use interleaved_training::mu::{it_mu_episode, AssignmentMethod, MuSystemConfig};

fn main() {
    let (users, trials) = (3, 2000u64);
    let sys = MuSystemConfig::with_alpha_bar(3, users, 6.0).unwrap();
    println!("{:>5} {:>12} {:>12} {:>10}", "N_t", "exhaustive", "max-min", "outage");
    for n_t in [40, 80, 120, 160, 200] {
        let cfg = ChannelConfig::new(n_t, PathCount::LinearInNt(0.1), users).unwrap();
        let mut len = [0usize; 2];
        let mut outages = 0;
        for t in 0..trials {
            let ch = sample_channel(&cfg, &StreamKey::new(5, n_t as u64, t)).unwrap();
            for (k, method) in [AssignmentMethod::Exhaustive, AssignmentMethod::Maxmin]
                .into_iter()
                .enumerate()
            {
                let r = it_mu_episode(&ch, &sys, method).unwrap();
                len[k] += r.training_length;
                outages += (k == 0 && r.outage) as u32;
            }
        }
        let mean = |s: usize| s as f64 / trials as f64;
        println!(
            "{n_t:>5} {:>12.2} {:>12.2} {:>10.4}",
            mean(len[0]),
            mean(len[1]),
            outages as f64 / trials as f64
        );
    }
}
