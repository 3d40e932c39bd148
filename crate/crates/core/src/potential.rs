//! The potential `V` entering `-Δ + V`.
//!
//! `V` must be `d`-periodic in `x1` and supported in `|x2| <= x2_inf`.

use crate::error::{CoreError, Result};
use crate::geometry::Grid;
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone)]
pub enum PotentialSpec {
    /// `V = 0`.
    Zero,
    /// Separable bump `amp * exp(-w(x1 - x1_0)^2 / (2 s1^2)) * exp(-(x2 - x2_0)^2 / (2 s2^2))`,
    /// with `w(.)` the `d`-periodic wrap of the `x1` offset, hard-cut to zero
    /// for `|x2| > support`. Keep `support >> s2` so the cut is negligible.
    GaussianBump {
        amp: f64,
        x1_0: f64,
        x2_0: f64,
        sigma1: f64,
        sigma2: f64,
        period: f64,
        support: f64,
    },
    /// Values sampled on grid nodes, read from a plain-text table.
    Table {
        values: HashMap<(usize, isize), f64>,
        support: f64,
    },
}

impl PotentialSpec {
    pub fn gaussian(
        amp: f64,
        x1_0: f64,
        x2_0: f64,
        sigma1: f64,
        sigma2: f64,
        period: f64,
        support: f64,
    ) -> Result<Self> {
        if sigma1 <= 0.0 || sigma2 <= 0.0 {
            return Err(CoreError::Potential("Gaussian widths must be positive".into()));
        }
        if x2_0.abs() >= support {
            return Err(CoreError::Potential(format!(
                "bump center x2_0 = {x2_0} outside the support bound {support}"
            )));
        }
        Ok(Self::GaussianBump { amp, x1_0, x2_0, sigma1, sigma2, period, support })
    }

    /// Read a `x1 x2 V` table; every line must hit a node of `grid` exactly
    /// (to 1e-9 of a spacing). Missing nodes evaluate to zero.
    pub fn from_table_file(path: &Path, grid: &Grid, support: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(CoreError::Potential(format!(
                    "table line {}: expected `x1 x2 V`, got {line:?}",
                    lineno + 1
                )));
            }
            let x1: f64 = parts[0].parse().map_err(|e| {
                CoreError::Potential(format!("table line {}: {e}", lineno + 1))
            })?;
            let x2: f64 = parts[1].parse().map_err(|e| {
                CoreError::Potential(format!("table line {}: {e}", lineno + 1))
            })?;
            let v: f64 = parts[2].parse().map_err(|e| {
                CoreError::Potential(format!("table line {}: {e}", lineno + 1))
            })?;
            let fi = x1 / grid.h1;
            let fj = x2 / grid.h2;
            let i = fi.round();
            let j = fj.round();
            if (fi - i).abs() > 1e-9 || (fj - j).abs() > 1e-9 {
                return Err(CoreError::Potential(format!(
                    "table line {}: point ({x1}, {x2}) is not a grid node",
                    lineno + 1
                )));
            }
            values.insert((i as usize, j as isize), v);
        }
        Ok(Self::Table { values, support })
    }

    /// Evaluate at grid node `(i, j)`.
    pub fn at_node(&self, grid: &Grid, i: usize, j: isize) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::GaussianBump { amp, x1_0, x2_0, sigma1, sigma2, period, support } => {
                let x2 = grid.x2(j);
                if x2.abs() > *support {
                    return 0.0;
                }
                let mut u = (grid.x1(i) - x1_0) % period;
                if u > period / 2.0 {
                    u -= period;
                } else if u < -period / 2.0 {
                    u += period;
                }
                let w = x2 - x2_0;
                amp * (-u * u / (2.0 * sigma1 * sigma1)).exp()
                    * (-w * w / (2.0 * sigma2 * sigma2)).exp()
            }
            Self::Table { values, support } => {
                if grid.x2(j).abs() > *support {
                    return 0.0;
                }
                values.get(&(i, j)).copied().unwrap_or(0.0)
            }
        }
    }

    /// Support bound: `V = 0` beyond this `|x2|`.
    pub fn support(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::GaussianBump { support, .. } | Self::Table { support, .. } => *support,
        }
    }

    /// Verify compact support by sampling: `V` must vanish at every node
    /// with `|x2| > x2_inf`.
    pub fn check_support(&self, grid: &Grid, x2_inf: f64) -> Result<()> {
        let nh = grid.n2_half as isize;
        for j in -nh..=nh {
            if grid.x2(j).abs() <= x2_inf {
                continue;
            }
            for i in 0..=grid.n1 {
                let v = self.at_node(grid, i, j);
                if v != 0.0 {
                    return Err(CoreError::Potential(format!(
                        "V = {v} at ({}, {}) outside the support region |x2| <= {x2_inf}",
                        grid.x1(i),
                        grid.x2(j)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_everywhere() {
        let g = Grid::new(1.0, 8, 2.0, 16).unwrap();
        assert_eq!(PotentialSpec::Zero.at_node(&g, 3, -5), 0.0);
        PotentialSpec::Zero.check_support(&g, 1.0).unwrap();
    }

    #[test]
    fn gaussian_periodic_wrap() {
        let g = Grid::new(1.0, 16, 2.0, 32).unwrap();
        let v = PotentialSpec::gaussian(2.0, 0.0, 0.0, 0.2, 0.3, 1.0, 1.0).unwrap();
        // x1 = 0 and x1 = 1 are one period apart
        assert!((v.at_node(&g, 0, 0) - v.at_node(&g, 16, 0)).abs() < 1e-15);
        assert_eq!(v.at_node(&g, 4, 32), 0.0); // beyond support
    }

    #[test]
    fn support_violation_detected() {
        let g = Grid::new(1.0, 8, 3.0, 24).unwrap();
        let v = PotentialSpec::gaussian(1.0, 0.5, 0.0, 0.2, 0.5, 1.0, 2.5).unwrap();
        // support bound 2.5 > x2_inf = 1.0: nonzero samples beyond x2_inf
        assert!(v.check_support(&g, 1.0).is_err());
    }
}
