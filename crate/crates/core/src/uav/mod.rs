//! UAV base stations serving ground users over a free-space radio link.

mod log;
mod oracle;
mod radio;
mod world;

pub use log::EpisodeLog;
pub use oracle::{exhaustive_association, MAX_EXHAUSTIVE_USERS};
pub use radio::{path_loss_db, RadioParams};
pub use world::{
    associate_users, bearing_sector, uav_observation, Placement, Point, UavConfig, UavEnv,
    UavWorldState, GRID_M, N_MOVES, SECTORS, SPEED_M_PER_STEP, UAV_OBS_DIM,
};
