//! Interleaved single-user training against the full-training baseline on a
//! handful of realizations.

use interleaved_training::channel::{sample_channel, ChannelConfig, PathCount, StreamKey};
use interleaved_training::su::{it_su_episode, nit_su_full, nit_su_partial, SuSystemConfig};

fn main() {
    let n_t = 32;
    let cfg = ChannelConfig::new(n_t, PathCount::Fixed(3), 1).unwrap();
    let sys = SuSystemConfig::from_rate(2, 10.0, 3.0).unwrap();
    println!("alpha = {:.3}", sys.alpha);
    println!(
        "{:>5} {:>8} {:>7} {:>12} {:>9} {:>13}",
        "trial", "IT len", "outage", "IT beams", "NIT SNR", "partial@8"
    );

    for t in 0..10 {
        let ch = sample_channel(&cfg, &StreamKey::new(7, 0, t)).unwrap();
        let it = it_su_episode(&ch, &sys);
        let full = nit_su_full(&ch, &sys);
        assert_eq!(it.outage, full.outage);
        let partial = nit_su_partial(&ch, &sys, 8).unwrap();
        println!(
            "{t:>5} {:>8} {:>7} {:>12} {:>9.3} {:>13}",
            it.training_length,
            it.outage,
            format!("{:?}", it.selected_beams),
            full.normalized_snr,
            if partial.outage { "outage" } else { "ok" }
        );
    }
}
