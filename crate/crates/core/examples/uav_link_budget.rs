//! Free-space link budget of one UAV at 40 m and 2 GHz, the resulting
//! service radius, and capacity-limited user association.

use ecmarl::experiment::{association_oracle, UAV_PRESET_SNR_THRESHOLD_DB};
use ecmarl::uav::{associate_users, path_loss_db, RadioParams};

fn main() -> ecmarl::Result<()> {
    let radio = RadioParams::default();
    println!("FSPL at 40 m: {:.2} dB", path_loss_db(40.0, radio.carrier_frequency_hz)?);
    for ground in [0.0, 50.0, 120.0, 500.0] {
        println!(
            "ground distance {ground:>5} m: SNR {:.2} dB",
            radio.snr_db((0.0, 0.0), (ground, 0.0))
        );
    }
    let preset = RadioParams {
        snr_threshold_db: UAV_PRESET_SNR_THRESHOLD_DB,
        ..radio
    };
    println!(
        "service radius at {} dB: {:.0} m (at {} dB: {:.0} m)",
        preset.snr_threshold_db,
        preset.service_radius_m(),
        radio.snr_threshold_db,
        radio.service_radius_m()
    );

    // two UAVs, five users, capacity two: the strongest links win
    let uavs = [(100.0, 100.0), (400.0, 100.0)];
    let users = [(100.0, 110.0), (120.0, 100.0), (90.0, 160.0), (400.0, 100.0), (800.0, 800.0)];
    let serving = associate_users(&uavs, &users, &preset, 2);
    for (u, s) in users.iter().zip(&serving) {
        println!("user at {u:?} -> {s:?}");
    }

    let report = association_oracle(6, 1000, &preset, 3, 0)?;
    println!(
        "greedy vs exhaustive association on {} six-user instances: {} mismatches",
        report.instances, report.mismatches
    );
    Ok(())
}
