use std::io::{self, Write};

use super::TapTrajectory;

pub const TRAJECTORY_HEADER: &str = "t,m,increment,bound,blown_up";

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one row per recorded state. `increment` and `bound` describe the
/// step that produced the row (empty on the initial row; `bound` empty
/// outside bounded mode). Floats carry 17 significant digits.
pub fn write_trajectory_csv<W: Write>(traj: &TapTrajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for (k, state) in traj.states.iter().enumerate() {
        let increment = k
            .checked_sub(1)
            .and_then(|j| traj.increments.get(j))
            .map(|v| fmt17(*v))
            .unwrap_or_default();
        let bound = k
            .checked_sub(1)
            .and_then(|j| traj.bound_values.get(j))
            .map(|v| fmt17(*v))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            state.t,
            fmt17(state.m),
            increment,
            bound,
            u8::from(state.blown_up)
        )?;
    }
    Ok(())
}
