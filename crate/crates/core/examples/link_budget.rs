//! Uplink and D2D rates against distance, without shadowing.

use d2d_dais::channel::{db_to_linear, link_rate, link_snr, RadioParams};

fn main() {
    let r = RadioParams::default();
    println!("{:>8} {:>12} {:>12}", "d (m)", "UE->BS", "UE->UE");
    for d in [10.0, 50.0, 100.0, 200.0, 500.0, 707.0] {
        let bs = link_snr(
            r.ue_power_mw,
            r.ue_antenna_gain_db,
            r.bs_antenna_gain_db,
            d,
            &r,
            1.0,
        )
        .unwrap();
        let d2d = link_snr(
            r.d2d_power_mw,
            r.ue_antenna_gain_db,
            r.ue_antenna_gain_db,
            d,
            &r,
            1.0,
        )
        .unwrap();
        println!(
            "{d:>8} {:>12.4} {:>12.4}",
            link_rate(bs, r.bandwidth_hz),
            link_rate(d2d, r.bandwidth_hz)
        );
    }
    // one sigma of shadowing either way
    println!(
        "8 dB is a factor of {:.2}",
        db_to_linear(r.shadowing_sigma_db)
    );
}
