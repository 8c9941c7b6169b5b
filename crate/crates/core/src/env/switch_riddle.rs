//! The prisoners-and-light-bulb riddle.
//!
//! Each day one prisoner, drawn uniformly, visits the room. Whoever is in the
//! room may announce that everyone has visited: correct ends the episode with
//! +1, wrong with −1, and running out of days gives 0. The only way to pass
//! information forward is the message the visitor leaves for the next
//! visitor, which the channel delivers as a one-bit signal.

use super::{check_actions, EnvStep, Environment};
use crate::comm::ConnectivityMask;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ANNOUNCE: usize = 1;

/// `[in_room, bulb, t / horizon, has_been]`. Agents outside the room see
/// zeros except for the clock.
pub const SWITCH_OBS_DIM: usize = 4;

const MAX_EXHAUSTIVE_SCHEDULES: u64 = 531_441; // 3^12

#[derive(Clone, Debug)]
pub struct SwitchRiddle {
    n: usize,
    horizon: usize,
    schedule: Vec<usize>,
    visited: Vec<bool>,
    bulb: bool,
    t: usize,
    done: bool,
}

impl SwitchRiddle {
    /// `n` prisoners with the customary `4n − 6` day limit (at least one day).
    pub fn new(n: usize) -> Result<Self> {
        Self::with_horizon(n, (4 * n).saturating_sub(6).max(1))
    }

    pub fn with_horizon(n: usize, horizon: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("switch riddle needs at least 2 prisoners"));
        }
        if horizon == 0 {
            return Err(Error::config("switch riddle horizon must be positive"));
        }
        let mut env = SwitchRiddle {
            n,
            horizon,
            schedule: vec![0; horizon],
            visited: vec![false; n],
            bulb: false,
            t: 0,
            done: true,
        };
        env.reset(0);
        Ok(env)
    }

    /// Starts an episode on a fixed visit schedule.
    pub fn reset_with_schedule(&mut self, schedule: &[usize]) -> Result<EnvStep> {
        if schedule.len() != self.horizon || schedule.iter().any(|&p| p >= self.n) {
            return Err(Error::contract(format!(
                "schedule must list {} prisoner ids below {}",
                self.horizon, self.n
            )));
        }
        self.schedule = schedule.to_vec();
        self.visited = vec![false; self.n];
        self.bulb = false;
        self.t = 0;
        self.done = false;
        Ok(self.observe(0.0, false))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn schedule(&self) -> &[usize] {
        &self.schedule
    }

    pub fn in_room(&self) -> usize {
        self.schedule[self.t.min(self.horizon - 1)]
    }

    pub fn day(&self) -> usize {
        self.t
    }

    pub fn bulb(&self) -> bool {
        self.bulb
    }

    /// Lets scripted strategies flip the physical bulb. Learned agents
    /// signal through the message channel instead.
    pub fn set_bulb(&mut self, on: bool) {
        self.bulb = on;
    }

    /// Whether `agent` had been in the room before today.
    pub fn has_been(&self, agent: usize) -> bool {
        self.schedule[..self.t].contains(&agent)
    }

    /// Whether every prisoner has been in the room, today included.
    pub fn all_visited(&self) -> bool {
        let mut seen = vec![false; self.n];
        for &p in &self.schedule[..=self.t.min(self.horizon - 1)] {
            seen[p] = true;
        }
        seen.iter().all(|&s| s)
    }

    pub fn observation(&self, agent: usize) -> Vec<f64> {
        let clock = self.t as f64 / self.horizon as f64;
        if agent == self.in_room() {
            vec![
                1.0,
                if self.bulb { 1.0 } else { 0.0 },
                clock,
                if self.has_been(agent) { 1.0 } else { 0.0 },
            ]
        } else {
            vec![0.0, 0.0, clock, 0.0]
        }
    }

    fn observe(&self, reward: f64, done: bool) -> EnvStep {
        let obs = (0..self.n).map(|i| self.observation(i)).collect();
        EnvStep::new(obs, reward, done)
    }
}

impl Environment for SwitchRiddle {
    fn name(&self) -> &'static str {
        "switch_riddle"
    }

    fn n_agents(&self) -> usize {
        self.n
    }

    fn obs_dim(&self) -> usize {
        SWITCH_OBS_DIM
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self, seed: u64) -> EnvStep {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schedule: Vec<usize> = (0..self.horizon)
            .map(|_| rng.random_range(0..self.n))
            .collect();
        self.reset_with_schedule(&schedule).expect("schedule in range")
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep> {
        if self.done {
            return Err(Error::contract("step after episode end"));
        }
        check_actions(actions, self.n, 2)?;
        let who = self.in_room();
        self.visited[who] = true;
        if actions[who] == ANNOUNCE {
            let correct = self.visited.iter().all(|&v| v);
            self.done = true;
            let r = if correct { 1.0 } else { -1.0 };
            return Ok(self
                .observe(r, true)
                .with_info("announced", 1.0)
                .with_info("all_visited", if correct { 1.0 } else { 0.0 }));
        }
        if self.t + 1 == self.horizon {
            self.done = true;
            let all = self.visited.iter().all(|&v| v);
            return Ok(self
                .observe(0.0, true)
                .with_info("announced", 0.0)
                .with_info("all_visited", if all { 1.0 } else { 0.0 }));
        }
        self.t += 1;
        Ok(self.observe(0.0, false))
    }

    /// Today's visitor reaches tomorrow's visitor, unless it is the same
    /// prisoner again.
    fn delivery_mask(&self) -> Option<ConnectivityMask> {
        let mut mask = ConnectivityMask::silent(self.n);
        if !self.done && self.t + 1 < self.horizon {
            let (from, to) = (self.schedule[self.t], self.schedule[self.t + 1]);
            if from != to {
                mask.set(to, from, true);
            }
        }
        Some(mask)
    }
}

/// Reward of the designated-counter strategy on one schedule.
///
/// Prisoner 0 counts: whenever it finds the bulb on it switches it off and
/// adds one, announcing once the count reaches `n − 1`. Everyone else
/// switches the bulb on the first time they find it off.
pub fn designated_counter_reward(n: usize, schedule: &[usize]) -> Result<f64> {
    let mut env = SwitchRiddle::with_horizon(n, schedule.len())?;
    env.reset_with_schedule(schedule)?;
    let mut signalled = vec![false; n];
    let mut count = 0;
    loop {
        let who = env.in_room();
        let mut announce = false;
        if who == 0 {
            if env.bulb() {
                env.set_bulb(false);
                count += 1;
            }
            announce = count == n - 1;
        } else if !env.bulb() && !signalled[who] {
            env.set_bulb(true);
            signalled[who] = true;
        }
        let mut actions = vec![0; n];
        actions[who] = usize::from(announce);
        let s = env.step(&actions)?;
        if s.done {
            return Ok(s.reward);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    /// True when every schedule was enumerated, false for Monte-Carlo.
    pub exact: bool,
    pub samples: u64,
}

fn for_each_schedule(n: usize, horizon: usize, mut f: impl FnMut(&[usize])) {
    let mut s = vec![0usize; horizon];
    loop {
        f(&s);
        let mut k = 0;
        while k < horizon {
            s[k] += 1;
            if s[k] < n {
                break;
            }
            s[k] = 0;
            k += 1;
        }
        if k == horizon {
            return;
        }
    }
}

fn schedule_count(n: usize, horizon: usize) -> Option<u64> {
    (n as u64).checked_pow(horizon as u32)
}

/// Expected reward of the designated-counter strategy.
///
/// Exact by enumerating all `n^horizon` schedules for `n ≤ 3`; Monte-Carlo
/// over `n_rollouts` seeded schedules for `n = 4`.
pub fn switch_riddle_oracle(
    n: usize,
    horizon: usize,
    n_rollouts: usize,
    seed: u64,
) -> Result<OracleValue> {
    if !(2..=4).contains(&n) {
        return Err(Error::contract(format!(
            "switch riddle oracle supports 2 to 4 prisoners, got {n}"
        )));
    }
    if horizon == 0 {
        return Err(Error::contract("horizon must be positive"));
    }
    if n <= 3 {
        if horizon > (4 * n - 6).max(2) {
            return Err(Error::contract(format!(
                "exhaustive oracle limited to horizon <= {}",
                (4 * n - 6).max(2)
            )));
        }
        let count = schedule_count(n, horizon).unwrap_or(u64::MAX);
        if count > MAX_EXHAUSTIVE_SCHEDULES {
            return Err(Error::contract("instance too large for enumeration"));
        }
        let mut total = 0.0;
        let mut err = None;
        for_each_schedule(n, horizon, |s| match designated_counter_reward(n, s) {
            Ok(r) => total += r,
            Err(e) => err = Some(e),
        });
        if let Some(e) = err {
            return Err(e);
        }
        return Ok(OracleValue {
            value: total / count as f64,
            exact: true,
            samples: count,
        });
    }
    if n_rollouts == 0 {
        return Err(Error::contract("Monte-Carlo oracle needs at least one rollout"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..n_rollouts {
        let s: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..n)).collect();
        total += designated_counter_reward(n, &s)?;
    }
    Ok(OracleValue {
        value: total / n_rollouts as f64,
        exact: false,
        samples: n_rollouts as u64,
    })
}

/// Best expected reward achievable without any communication.
///
/// Without messages the visitor knows only the day and whether it has been
/// in before, so a deterministic policy is a table from those two inputs to
/// announce-or-wait. Every table is scored against every schedule; the best
/// mean is returned. Stochastic tables are mixtures of deterministic ones
/// and cannot do better.
pub fn best_no_comm_value(n: usize, horizon: usize) -> Result<f64> {
    let count = schedule_count(n, horizon).unwrap_or(u64::MAX);
    if n < 2 || horizon == 0 || 2 * horizon > 20 || count > MAX_EXHAUSTIVE_SCHEDULES {
        return Err(Error::contract(format!(
            "no-comm enumeration too large for n={n}, horizon={horizon}"
        )));
    }
    let mut schedules = Vec::with_capacity(count as usize);
    for_each_schedule(n, horizon, |s| schedules.push(s.to_vec()));

    let mut best = f64::NEG_INFINITY;
    for table in 0u32..(1 << (2 * horizon)) {
        let announce = |t: usize, been: bool| table >> (2 * t + usize::from(been)) & 1 == 1;
        let mut total = 0.0;
        for s in &schedules {
            let mut seen = vec![false; n];
            let mut seen_count = 0;
            for (t, &p) in s.iter().enumerate() {
                let been = seen[p];
                if !been {
                    seen[p] = true;
                    seen_count += 1;
                }
                if announce(t, been) {
                    total += if seen_count == n { 1.0 } else { -1.0 };
                    break;
                }
            }
        }
        best = best.max(total / count as f64);
    }
    Ok(best)
}
