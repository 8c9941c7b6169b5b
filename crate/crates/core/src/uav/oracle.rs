use super::radio::RadioParams;
use super::world::Point;
use crate::error::{Error, Result};

/// Largest single-UAV instance the exhaustive association search accepts.
pub const MAX_EXHAUSTIVE_USERS: usize = 8;

/// Best single-UAV association by trying every subset of users.
///
/// A subset is feasible when it fits the capacity and every member clears
/// the SNR threshold. The largest feasible subset wins, then the one with
/// the highest total SNR.
pub fn exhaustive_association(
    uav: Point,
    users: &[Point],
    radio: &RadioParams,
    capacity: usize,
) -> Result<Vec<bool>> {
    if users.len() > MAX_EXHAUSTIVE_USERS {
        return Err(Error::contract(format!(
            "exhaustive association limited to {MAX_EXHAUSTIVE_USERS} users, got {}",
            users.len()
        )));
    }
    let snr: Vec<f64> = users.iter().map(|&u| radio.snr_db(uav, u)).collect();
    let mut best = (0usize, f64::NEG_INFINITY, 0u32);
    for mask in 0u32..(1 << users.len()) {
        let size = mask.count_ones() as usize;
        let ok = (0..users.len()).all(|i| mask >> i & 1 == 0 || snr[i] >= radio.snr_threshold_db);
        if size > capacity || !ok {
            continue;
        }
        let total: f64 = (0..users.len()).filter(|&i| mask >> i & 1 == 1).map(|i| snr[i]).sum();
        if size > best.0 || (size == best.0 && total > best.1) {
            best = (size, total, mask);
        }
    }
    Ok((0..users.len()).map(|i| best.2 >> i & 1 == 1).collect())
}
