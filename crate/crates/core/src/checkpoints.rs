//! Log-spaced N-grids at which convergence diagnostics are recorded.

/// Smallest exponent of the default grid: `ceil(1.5^8) = 26`.
pub const FIRST_EXPONENT: i32 = 8;

/// `{ ceil(1.5^j) : j >= 8 } ∩ [1, n_max]`, plus `n_max` itself.
pub fn default_grid(n_max: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut j = FIRST_EXPONENT;
    loop {
        let n = 1.5f64.powi(j).ceil() as usize;
        if n > n_max {
            break;
        }
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        j += 1;
    }
    if grid.last() != Some(&n_max) && n_max >= 1 {
        grid.push(n_max);
    }
    grid
}

/// Strictly increasing, nonzero, and at most `available`.
pub fn validate(checkpoints: &[usize], available: usize) -> crate::Result<()> {
    use crate::Error;
    if checkpoints.is_empty() {
        return Err(Error::Validation("empty checkpoint list".into()));
    }
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation(
            "checkpoints must be positive and strictly increasing".into(),
        ));
    }
    let last = *checkpoints.last().unwrap();
    if last > available {
        return Err(Error::Length {
            needed: last,
            available,
        });
    }
    Ok(())
}
