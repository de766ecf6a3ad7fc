use super::{MdpModel, RewardModel, SaTable};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Moves available in a grid world, in action-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
    ];
}

/// Cell index for column `x` and row `y`, with row 0 at the bottom.
pub fn cell(width: usize, x: usize, y: usize) -> usize {
    y * width + x
}

/// A deterministic path-planning grid.
///
/// States are cells numbered row by row from the bottom-left corner (the
/// start cell, index 0); the goal is the top-right cell. Moves that would
/// leave the grid keep the agent in place. Every action taken outside the
/// goal pays a uniform reward on `step_reward`; every action taken at the
/// goal pays a uniform reward on `goal_reward`. `sigma` is set to
/// `max(1, largest reward)`.
pub fn grid_world(
    width: usize,
    height: usize,
    step_reward: (f64, f64),
    goal_reward: (f64, f64),
    discount: f64,
) -> Result<MdpModel> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument("grid dimensions must be positive".into()));
    }
    for (lo, hi) in [step_reward, goal_reward] {
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid reward interval [{lo}, {hi}]"
            )));
        }
    }
    let n = width * height;
    let goal = n - 1;
    let sigma = step_reward.1.max(goal_reward.1).max(1.0);

    let mut transitions = Vec::with_capacity(4);
    for action in GridAction::ALL {
        let mut p = Matrix::zeros(n, n);
        for y in 0..height {
            for x in 0..width {
                let (nx, ny) = match action {
                    GridAction::Up if y + 1 < height => (x, y + 1),
                    GridAction::Down if y > 0 => (x, y - 1),
                    GridAction::Left if x > 0 => (x - 1, y),
                    GridAction::Right if x + 1 < width => (x + 1, y),
                    _ => (x, y),
                };
                p[(cell(width, x, y), cell(width, nx, ny))] = 1.0;
            }
        }
        transitions.push(p);
    }

    let mut lo = SaTable::filled(n, 4, step_reward.0);
    let mut hi = SaTable::filled(n, 4, step_reward.1);
    for a in 0..4 {
        lo.set(goal, a, goal_reward.0);
        hi.set(goal, a, goal_reward.1);
    }
    MdpModel::new(
        transitions,
        RewardModel::UniformInterval { lo, hi },
        discount,
        sigma,
    )
}
