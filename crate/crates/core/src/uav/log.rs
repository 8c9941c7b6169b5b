use super::world::UavWorldState;
use std::fmt::Write;

/// Per-step trace of one episode, exportable as CSV.
#[derive(Clone, Debug, Default)]
pub struct EpisodeLog {
    n_uavs: usize,
    rows: Vec<(usize, Vec<(f64, f64)>, usize)>,
}

impl EpisodeLog {
    pub fn new(n_uavs: usize) -> Self {
        EpisodeLog {
            n_uavs,
            rows: Vec::new(),
        }
    }

    pub fn record(&mut self, state: &UavWorldState) {
        self.rows.push((state.t, state.uavs.clone(), state.served()));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Columns: `t, x0, y0, x1, y1, …, served`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for k in 0..self.n_uavs {
            let _ = write!(s, ",x{k},y{k}");
        }
        s.push_str(",served\n");
        for (t, uavs, served) in &self.rows {
            let _ = write!(s, "{t}");
            for (x, y) in uavs {
                let _ = write!(s, ",{x},{y}");
            }
            let _ = writeln!(s, ",{served}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Environment;
    use crate::uav::{UavConfig, UavEnv};

    #[test]
    fn csv_has_one_row_per_record() {
        let mut env = UavEnv::new(UavConfig::default()).unwrap();
        env.reset(2);
        let mut log = EpisodeLog::new(3);
        log.record(env.state());
        env.step(&[1, 1, 1]).unwrap();
        log.record(env.state());
        let csv = log.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x0,y0,x1,y1,x2,y2,served");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,"));
    }
}
