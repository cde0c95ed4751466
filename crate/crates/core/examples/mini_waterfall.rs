//! Minimal BER comparison: genie bound vs trellis search vs block MSD
//! under log-normal fading, printed as a small table.
//!
//! Run with `cargo run --release --example mini_waterfall`.

use pcfso::sim::{ReceiverSpec, RunSettings};
use pcfso::{
    genie_bep_semi_analytic, run_ber_point, ChannelParams, FadingModel, StoppingRule,
};

fn main() {
    let model = FadingModel::lognormal_from_si(0.5).unwrap();
    let n_b = 1.0;
    // One gain realization per unit keeps the detectors inside their
    // quasi-static design regime.
    let unit = 16_384u64;
    let run = RunSettings {
        seed: 2,
        shards: 2,
        unit_bits: unit,
    };
    let stopping = StoppingRule::new(0, 4_000_000).unwrap();
    let receivers = [
        ReceiverSpec::Trellis { l_m: 8, l: 20 },
        ReceiverSpec::Trellis { l_m: 1, l: 20 },
        ReceiverSpec::Msd { block_len: 4 },
    ];

    println!(
        "{:>7} {:>10} {:>12} {:>12} {:>12} {:>12}",
        "snr_db", "n_s", "genie_bound", "trellis_8", "trellis_1", "msd_4"
    );
    for db in [10.0f64, 12.0, 14.0, 16.0, 18.0] {
        let n_s = 10f64.powf(db / 10.0);
        let params = ChannelParams::new(n_s, n_b, unit).unwrap();
        let bound = genie_bep_semi_analytic(&model, &params, 200_000, 7);
        let mut bers = Vec::new();
        for (ix, spec) in receivers.iter().enumerate() {
            let point =
                run_ber_point(spec, &model, &params, &stopping, &run, ix as u64).unwrap();
            bers.push(point.ber);
        }
        println!(
            "{db:>7.1} {n_s:>10.2} {bound:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            bers[0], bers[1], bers[2]
        );
    }
}
