//! Exhaustive and max-min beam assignment on one fully trained multi-user
//! channel, with the zero-forcing gain of each.

use interleaved_training::channel::{sample_channel, ChannelConfig, PathCount, StreamKey};
use interleaved_training::mu::{
    check_feasible, exhaustive_assignment, maxmin_assignment, zf_precoder, KnownBeams, MuSystemConfig,
};

fn main() {
    let (n_t, users) = (24, 3);
    let cfg = ChannelConfig::new(n_t, PathCount::Fixed(3), users).unwrap();
    let ch = sample_channel(&cfg, &StreamKey::new(42, 0, 3)).unwrap();
    let known = KnownBeams::after_training(&ch, n_t);
    for u in 0..users {
        let gains: Vec<String> = known
            .user(u)
            .iter()
            .map(|&b| format!("{b}:{:.3}", ch.user(u).power(b)))
            .collect();
        println!("user {u} non-zero beams (beam:|h|²) {}", gains.join(" "));
    }

    let sys = MuSystemConfig::with_alpha_bar(users, users, 1.0).unwrap();
    let ex = exhaustive_assignment(&known, &ch, &sys).unwrap();
    let mm = maxmin_assignment(&known, &ch);
    for (name, result) in [("exhaustive", ex), ("max-min", mm)] {
        match result {
            Some((a, lambda_sq)) => {
                let (_, lambda) = zf_precoder(&a, &ch).unwrap();
                println!(
                    "{name:>10}: beams {:?}, feasible {}, λ² = {lambda_sq:.4} (λ = {lambda:.4})",
                    a.beams(),
                    check_feasible(&a, &ch)
                );
            }
            None => println!("{name:>10}: no feasible assignment"),
        }
    }
}
