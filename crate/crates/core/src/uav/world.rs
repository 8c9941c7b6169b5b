use super::radio::RadioParams;
use crate::env::{check_actions, EnvStep, Environment};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const GRID_M: f64 = 700.0;
pub const SPEED_M_PER_STEP: f64 = 45.0;
pub const UAV_OBS_DIM: usize = 12;
pub const N_MOVES: usize = 5;
pub const SECTORS: usize = 8;

const N_CLUSTERS: usize = 3;
const CLUSTER_MARGIN_M: f64 = 100.0;
const CLUSTER_SPREAD_M: f64 = 40.0;

/// Moves: stay, +x, −x, +y, −y.
const MOVES: [(f64, f64); N_MOVES] = [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Uniform,
    Clustered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UavConfig {
    pub n_uavs: usize,
    pub n_users: usize,
    pub sensing_radius_m: f64,
    pub placement: Placement,
    pub horizon: usize,
    pub capacity: usize,
    pub radio: RadioParams,
}

impl Default for UavConfig {
    fn default() -> Self {
        UavConfig {
            n_uavs: 3,
            n_users: 30,
            sensing_radius_m: 150.0,
            placement: Placement::Clustered,
            horizon: 120,
            capacity: 12,
            radio: RadioParams::default(),
        }
    }
}

impl UavConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_uavs == 0 || self.n_users == 0 {
            return Err(Error::config("env.n_uavs and env.n_users must be at least 1"));
        }
        if self.horizon == 0 || self.capacity == 0 {
            return Err(Error::config("env.horizon and env.capacity must be at least 1"));
        }
        if !(self.sensing_radius_m >= 0.0 && self.sensing_radius_m.is_finite()) {
            return Err(Error::config("env.sensing_radius_m must be finite and non-negative"));
        }
        self.radio.validate()
    }
}

pub type Point = (f64, f64);

#[derive(Clone, Debug, PartialEq)]
pub struct UavWorldState {
    pub uavs: Vec<Point>,
    pub users: Vec<Point>,
    /// Serving UAV of each user.
    pub serving: Vec<Option<usize>>,
    pub t: usize,
}

impl UavWorldState {
    pub fn served(&self) -> usize {
        self.serving.iter().filter(|s| s.is_some()).count()
    }

    pub fn load(&self, uav: usize) -> usize {
        self.serving.iter().filter(|s| **s == Some(uav)).count()
    }
}

/// Greedy capacity-limited association.
///
/// All user-UAV links at or above the threshold are visited from strongest
/// to weakest (ties: lower user id, then lower UAV id). A user joins the
/// UAV of its first visited link that still has room.
pub fn associate_users(
    uavs: &[Point],
    users: &[Point],
    radio: &RadioParams,
    capacity: usize,
) -> Vec<Option<usize>> {
    let mut links: Vec<(f64, usize, usize)> = Vec::with_capacity(uavs.len() * users.len());
    for (u, &up) in users.iter().enumerate() {
        for (k, &kp) in uavs.iter().enumerate() {
            let snr = radio.snr_db(kp, up);
            if snr >= radio.snr_threshold_db {
                links.push((snr, u, k));
            }
        }
    }
    links.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut serving = vec![None; users.len()];
    let mut load = vec![0usize; uavs.len()];
    for (_, u, k) in links {
        if serving[u].is_none() && load[k] < capacity {
            serving[u] = Some(k);
            load[k] += 1;
        }
    }
    serving
}

/// Sector of the bearing from `from` to `to`, counter-clockwise from +x.
pub fn bearing_sector(from: Point, to: Point) -> usize {
    let mut a = (to.1 - from.1).atan2(to.0 - from.0);
    if a < 0.0 {
        a += 2.0 * PI;
    }
    ((a / (2.0 * PI / SECTORS as f64)) as usize).min(SECTORS - 1)
}

/// `[x/700, y/700, visible/n_users, 8 bearing counts/n_users, t/horizon]`.
pub fn uav_observation(state: &UavWorldState, agent: usize, cfg: &UavConfig) -> Vec<f64> {
    let me = state.uavs[agent];
    let n = cfg.n_users as f64;
    let r2 = cfg.sensing_radius_m * cfg.sensing_radius_m;
    let mut hist = [0.0; SECTORS];
    let mut visible = 0.0;
    for &u in &state.users {
        let (dx, dy) = (u.0 - me.0, u.1 - me.1);
        if dx * dx + dy * dy <= r2 {
            visible += 1.0;
            hist[bearing_sector(me, u)] += 1.0;
        }
    }
    let mut obs = Vec::with_capacity(UAV_OBS_DIM);
    obs.push(me.0 / GRID_M);
    obs.push(me.1 / GRID_M);
    obs.push(visible / n);
    obs.extend(hist.iter().map(|h| h / n));
    obs.push(state.t as f64 / cfg.horizon as f64);
    obs
}

fn clip(v: f64) -> f64 {
    v.clamp(0.0, GRID_M)
}

/// UAV base stations repositioning over ground users.
#[derive(Clone, Debug)]
pub struct UavEnv {
    cfg: UavConfig,
    state: UavWorldState,
    done: bool,
}

impl UavEnv {
    pub fn new(cfg: UavConfig) -> Result<Self> {
        cfg.validate()?;
        let mut env = UavEnv {
            state: UavWorldState {
                uavs: vec![(0.0, 0.0); cfg.n_uavs],
                users: vec![(0.0, 0.0); cfg.n_users],
                serving: vec![None; cfg.n_users],
                t: 0,
            },
            cfg,
            done: true,
        };
        env.reset(0);
        Ok(env)
    }

    pub fn config(&self) -> &UavConfig {
        &self.cfg
    }

    pub fn state(&self) -> &UavWorldState {
        &self.state
    }

    /// Starts an episode from explicit positions.
    pub fn reset_with(&mut self, uavs: Vec<Point>, users: Vec<Point>) -> Result<EnvStep> {
        if uavs.len() != self.cfg.n_uavs || users.len() != self.cfg.n_users {
            return Err(Error::contract(format!(
                "expected {} UAVs and {} users",
                self.cfg.n_uavs, self.cfg.n_users
            )));
        }
        let inside = |p: &Point| (0.0..=GRID_M).contains(&p.0) && (0.0..=GRID_M).contains(&p.1);
        if !uavs.iter().chain(&users).all(inside) {
            return Err(Error::contract("positions must lie on the 700 m grid"));
        }
        self.state = UavWorldState {
            serving: associate_users(&uavs, &users, &self.cfg.radio, self.cfg.capacity),
            uavs,
            users,
            t: 0,
        };
        self.done = false;
        Ok(self.observe(0.0, false))
    }

    fn coverage_now(&self) -> f64 {
        self.state.served() as f64 / self.cfg.n_users as f64
    }

    fn observe(&self, reward: f64, done: bool) -> EnvStep {
        let obs = (0..self.cfg.n_uavs)
            .map(|k| uav_observation(&self.state, k, &self.cfg))
            .collect();
        EnvStep::new(obs, reward, done).with_info("served", self.state.served() as f64)
    }

    fn draw_users(&self, rng: &mut ChaCha8Rng) -> Vec<Point> {
        match self.cfg.placement {
            Placement::Uniform => (0..self.cfg.n_users)
                .map(|_| (rng.random_range(0.0..=GRID_M), rng.random_range(0.0..=GRID_M)))
                .collect(),
            Placement::Clustered => {
                let centers: Vec<Point> = (0..N_CLUSTERS)
                    .map(|_| {
                        let span = CLUSTER_MARGIN_M..=GRID_M - CLUSTER_MARGIN_M;
                        (rng.random_range(span.clone()), rng.random_range(span))
                    })
                    .collect();
                let spread = Normal::new(0.0, CLUSTER_SPREAD_M).expect("positive spread");
                (0..self.cfg.n_users)
                    .map(|u| {
                        let c = centers[u % N_CLUSTERS];
                        (clip(c.0 + spread.sample(rng)), clip(c.1 + spread.sample(rng)))
                    })
                    .collect()
            }
        }
    }
}

impl Environment for UavEnv {
    fn name(&self) -> &'static str {
        "uav_coverage"
    }

    fn n_agents(&self) -> usize {
        self.cfg.n_uavs
    }

    fn obs_dim(&self) -> usize {
        UAV_OBS_DIM
    }

    fn n_actions(&self) -> usize {
        N_MOVES
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reset(&mut self, seed: u64) -> EnvStep {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = self.draw_users(&mut rng);
        let uavs = (0..self.cfg.n_uavs)
            .map(|_| (rng.random_range(0.0..=GRID_M), rng.random_range(0.0..=GRID_M)))
            .collect();
        self.reset_with(uavs, users).expect("drawn positions are valid")
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep> {
        if self.done {
            return Err(Error::contract("step after episode end"));
        }
        check_actions(actions, self.cfg.n_uavs, N_MOVES)?;
        for (p, &a) in self.state.uavs.iter_mut().zip(actions) {
            let (dx, dy) = MOVES[a];
            *p = (
                clip(p.0 + dx * SPEED_M_PER_STEP),
                clip(p.1 + dy * SPEED_M_PER_STEP),
            );
        }
        self.state.serving = associate_users(
            &self.state.uavs,
            &self.state.users,
            &self.cfg.radio,
            self.cfg.capacity,
        );
        self.state.t += 1;
        self.done = self.state.t >= self.cfg.horizon;
        Ok(self.observe(self.coverage_now(), self.done))
    }

    fn coverage(&self) -> Option<f64> {
        Some(self.coverage_now())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_assume, proptest};

    fn single(n_users: usize) -> UavEnv {
        UavEnv::new(UavConfig {
            n_uavs: 1,
            n_users,
            ..UavConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn two_users_in_range_both_served() {
        let s = associate_users(&[(100.0, 100.0)], &[(120.0, 90.0), (60.0, 140.0)], &RadioParams::default(), 12);
        assert_eq!(s, vec![Some(0), Some(0)]);
    }

    #[test]
    fn capacity_binds_at_twelve() {
        let users: Vec<Point> = (0..13).map(|i| (300.0 + i as f64, 300.0)).collect();
        let s = associate_users(&[(300.0, 300.0)], &users, &RadioParams::default(), 12);
        assert_eq!(s.iter().filter(|x| x.is_some()).count(), 12);
        // the farthest user is the one left out
        assert_eq!(s[12], None);
    }

    #[test]
    fn all_below_threshold_serves_nobody() {
        let radio = RadioParams {
            snr_threshold_db: 80.0,
            ..RadioParams::default()
        };
        let s = associate_users(&[(0.0, 0.0)], &[(0.0, 0.0), (5.0, 5.0)], &radio, 12);
        assert!(s.iter().all(|x| x.is_none()));
    }

    #[test]
    fn stay_keeps_positions_and_reward() {
        let mut env = UavEnv::new(UavConfig::default()).unwrap();
        let s0 = env.reset(5);
        let before = env.state().uavs.clone();
        let served = s0.info["served"];
        let s = env.step(&[0, 0, 0]).unwrap();
        assert_eq!(env.state().uavs, before);
        assert_eq!(s.reward, served / 30.0);
    }

    #[test]
    fn moves_clip_at_boundary() {
        let mut env = single(1);
        env.reset_with(vec![(690.0, 10.0)], vec![(0.0, 0.0)]).unwrap();
        env.step(&[1]).unwrap();
        assert_eq!(env.state().uavs[0], (700.0, 10.0));
        env.step(&[4]).unwrap();
        assert_eq!(env.state().uavs[0], (700.0, 0.0));
        assert!(env.step(&[5]).is_err());
    }

    #[test]
    fn approaching_a_user_never_hurts() {
        // user 200 m east; threshold set so service radius sits near 180 m
        let radio = RadioParams {
            snr_threshold_db: 61.8,
            ..RadioParams::default()
        };
        let cfg = UavConfig {
            n_uavs: 1,
            n_users: 1,
            radio,
            ..UavConfig::default()
        };
        let mut rewards = Vec::new();
        for a in 0..N_MOVES {
            let mut env = UavEnv::new(cfg.clone()).unwrap();
            env.reset_with(vec![(300.0, 300.0)], vec![(500.0, 300.0)]).unwrap();
            rewards.push(env.step(&[a]).unwrap().reward);
        }
        let toward = rewards[1];
        assert!(rewards.iter().all(|&r| toward >= r), "{rewards:?}");
        assert_eq!(toward, 1.0);
        assert_eq!(rewards[2], 0.0);
    }

    #[test]
    fn episode_ends_at_horizon() {
        let mut env = UavEnv::new(UavConfig {
            horizon: 3,
            ..UavConfig::default()
        })
        .unwrap();
        env.reset(1);
        assert!(!env.step(&[1, 2, 3]).unwrap().done);
        assert!(!env.step(&[1, 2, 3]).unwrap().done);
        assert!(env.step(&[1, 2, 3]).unwrap().done);
        assert!(env.step(&[0, 0, 0]).is_err());
    }

    #[test]
    fn empty_neighbourhood_observation() {
        let mut env = single(2);
        env.reset_with(vec![(0.0, 0.0)], vec![(600.0, 600.0), (650.0, 650.0)]).unwrap();
        let o = uav_observation(env.state(), 0, env.config());
        assert_eq!(o.len(), UAV_OBS_DIM);
        assert!(o[2..11].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_sector_holds_everything() {
        let mut env = single(4);
        let users = vec![(310.0, 301.0), (330.0, 305.0), (340.0, 302.0), (320.0, 308.0)];
        env.reset_with(vec![(300.0, 300.0)], users).unwrap();
        let o = uav_observation(env.state(), 0, env.config());
        assert_eq!(o[2], 1.0);
        assert_eq!(o[3], 1.0);
        assert!(o[4..11].iter().all(|&v| v == 0.0));
    }

    fn rotate(p: Point, c: Point) -> Point {
        (c.0 - (p.1 - c.1), c.1 + (p.0 - c.0))
    }

    proptest! {
        #[test]
        fn quarter_turn_shifts_histogram_two_sectors(
            offsets in proptest::collection::vec((-140.0f64..140.0, -140.0f64..140.0), 1..8)
        ) {
            let c = (350.0, 350.0);
            let users: Vec<Point> = offsets.iter().map(|(dx, dy)| (c.0 + dx, c.1 + dy)).collect();
            // stay clear of sector boundaries where rounding could flip a bin
            let step = PI / 4.0;
            for &(dx, dy) in &offsets {
                let a = dy.atan2(dx).rem_euclid(2.0 * PI);
                let frac = (a / step).fract();
                prop_assume!(frac > 1e-6 && frac < 1.0 - 1e-6);
            }
            let cfg = UavConfig { n_uavs: 1, n_users: users.len(), ..UavConfig::default() };
            let mut env = UavEnv::new(cfg.clone()).unwrap();
            env.reset_with(vec![c], users.clone()).unwrap();
            let a = uav_observation(env.state(), 0, &cfg);
            env.reset_with(vec![c], users.iter().map(|&u| rotate(u, c)).collect()).unwrap();
            let b = uav_observation(env.state(), 0, &cfg);
            for s in 0..SECTORS {
                prop_assert_eq!(a[3 + s], b[3 + (s + 2) % SECTORS]);
            }
        }

        #[test]
        fn single_uav_matches_exhaustive_association(
            users in proptest::collection::vec((0.0f64..700.0, 0.0f64..700.0), 1..=6),
            uav in (0.0f64..700.0, 0.0f64..700.0),
            capacity in 1usize..=6,
            threshold in 55.0f64..75.0,
        ) {
            let radio = RadioParams { snr_threshold_db: threshold, ..RadioParams::default() };
            let greedy = associate_users(&[uav], &users, &radio, capacity);
            // enumerate every subset; keep the largest, then strongest total SNR
            let snr: Vec<f64> = users.iter().map(|&u| radio.snr_db(uav, u)).collect();
            let mut best: Option<(usize, f64, u32)> = None;
            for mask in 0u32..(1 << users.len()) {
                let members: Vec<usize> = (0..users.len()).filter(|&i| mask >> i & 1 == 1).collect();
                if members.len() > capacity || members.iter().any(|&i| snr[i] < threshold) {
                    continue;
                }
                let total: f64 = members.iter().map(|&i| snr[i]).sum();
                let better = match best {
                    None => true,
                    Some((c, s, _)) => members.len() > c || (members.len() == c && total > s + 1e-9),
                };
                if better {
                    best = Some((members.len(), total, mask));
                }
            }
            let (_, _, mask) = best.unwrap();
            for i in 0..users.len() {
                prop_assert_eq!(greedy[i].is_some(), mask >> i & 1 == 1);
            }
        }

        #[test]
        fn capacity_never_exceeded(seed in 0u64..1000) {
            let cfg = UavConfig { n_uavs: 2, n_users: 60, placement: Placement::Clustered, ..UavConfig::default() };
            let mut env = UavEnv::new(cfg).unwrap();
            env.reset(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..10 {
                let s = env.step(&[rng.random_range(0..N_MOVES), rng.random_range(0..N_MOVES)]).unwrap();
                prop_assert!((0.0..=1.0).contains(&s.reward));
                prop_assert_eq!(s.reward, env.state().served() as f64 / 60.0);
                for k in 0..2 {
                    prop_assert!(env.state().load(k) <= 12);
                }
            }
        }
    }
}
