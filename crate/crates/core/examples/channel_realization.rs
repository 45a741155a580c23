//! Draw a sparse beamspace channel and look at it from both domains.

use interleaved_training::channel::{dft_beam, sample_channel, ChannelConfig, PathCount, StreamKey};

fn main() {
    let cfg = ChannelConfig::new(16, PathCount::Fixed(3), 2).expect("valid config");
    let ch = sample_channel(&cfg, &StreamKey::new(2024, 0, 0)).expect("paths fit");

    for (u, user) in ch.users().iter().enumerate() {
        println!("user {u}: paths {:?}", user.paths());
        for &b in user.paths() {
            let g = ch.effective_gain(u, b).unwrap();
            println!(
                "  beam {b:>2}: h = {:+.4}, effective gain |√N_t h|² = {:.4}",
                user.gain(b),
                g.norm_sqr()
            );
        }

        // Projecting the antenna-domain vector onto a DFT beam recovers the effective gain.
        let h = ch.antenna_domain_vector(u).unwrap();
        let b = user.paths()[0];
        let projected = (h.transpose() * dft_beam(ch.n_t(), b).unwrap())[(0, 0)];
        println!("  hᵀ·beam_{b} = {projected:+.4}");
    }

    println!("{}", ch.dump_json());
}
