use crate::comm::comm_checks;
use crate::env::{best_no_comm_value, switch_riddle_oracle};
use crate::error::{Error, Result};
use crate::tensor::{corrupted_square_check, default_checks, run_gradcheck, GradCheckReport};
use crate::uav::{associate_users, exhaustive_association, Point, RadioParams, GRID_M};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const GRADCHECK_TRIALS: usize = 20;

/// Finite-difference checks of every tensor op and channel stage. With
/// `corrupt` a deliberately wrong backward rule is added to the suite.
pub fn gradcheck_report(corrupt: bool, seed: u64) -> GradCheckReport {
    let mut checks = default_checks();
    checks.extend(comm_checks());
    if corrupt {
        checks.push(corrupted_square_check());
    }
    run_gradcheck(&checks, GRADCHECK_TRIALS, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchOracleReport {
    pub n: usize,
    pub horizon: usize,
    pub designated_counter: f64,
    pub exact: bool,
    pub schedules: u64,
    /// Best memoryless policy without messages, when small enough to search.
    pub best_no_comm: Option<f64>,
}

pub fn switch_oracle(n: usize, horizon: Option<usize>, rollouts: usize, seed: u64) -> Result<SwitchOracleReport> {
    let horizon = horizon.unwrap_or((4 * n).saturating_sub(6).max(1));
    let v = switch_riddle_oracle(n, horizon, rollouts, seed)?;
    let best_no_comm = if v.exact { Some(best_no_comm_value(n, horizon)?) } else { None };
    Ok(SwitchOracleReport {
        n,
        horizon,
        designated_counter: v.value,
        exact: v.exact,
        schedules: v.samples,
        best_no_comm,
    })
}

impl SwitchOracleReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "switch_riddle n={} horizon={}\ndesignated_counter {} ({} over {} schedules)\n",
            self.n,
            self.horizon,
            self.designated_counter,
            if self.exact { "exact" } else { "monte-carlo" },
            self.schedules
        );
        if let Some(b) = self.best_no_comm {
            writeln!(s, "best_no_comm {b}").expect("write to string");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationOracleReport {
    pub instances: usize,
    pub users: usize,
    pub mismatches: usize,
}

/// Compares greedy association against exhaustive search on random
/// single-UAV instances with `users` users each.
pub fn association_oracle(
    users: usize,
    instances: usize,
    radio: &RadioParams,
    capacity: usize,
    seed: u64,
) -> Result<AssociationOracleReport> {
    if instances == 0 {
        return Err(Error::config("oracle needs at least one instance"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    // users are drawn near the UAV so that the threshold and capacity bind
    let span = 2.0 * radio.service_radius_m().max(1.0);
    for _ in 0..instances {
        let uav: Point = (rng.random_range(0.0..=GRID_M), rng.random_range(0.0..=GRID_M));
        let pts: Vec<Point> = (0..users)
            .map(|_| {
                let dx = rng.random_range(-span..=span);
                let dy = rng.random_range(-span..=span);
                ((uav.0 + dx).clamp(0.0, GRID_M), (uav.1 + dy).clamp(0.0, GRID_M))
            })
            .collect();
        let best = exhaustive_association(uav, &pts, radio, capacity)?;
        let greedy = associate_users(&[uav], &pts, radio, capacity);
        if greedy.iter().map(Option::is_some).ne(best.iter().copied()) {
            mismatches += 1;
        }
    }
    Ok(AssociationOracleReport {
        instances,
        users,
        mismatches,
    })
}
