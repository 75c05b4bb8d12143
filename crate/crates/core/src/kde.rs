//! Gaussian kernel density estimates on a uniform grid.

use serde::Serialize;

use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 512;

/// Kernel mass beyond this many bandwidths is ignored.
const CUTOFF: f64 = 8.0;

#[derive(Debug, Clone, Serialize)]
pub struct KernelDensity {
    pub label: String,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    pub sample_size: usize,
}

impl KernelDensity {
    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    /// Grid point of the highest density.
    pub fn mode(&self) -> f64 {
        let (k, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &d)| if d > best.1 { (k, d) } else { best });
        self.grid[k]
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule of thumb, `0.9 · min(σ, IQR/1.34) · n^(−1/5)`, falling
/// back to σ when the IQR is zero and to 1 for a degenerate sample.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    if sorted.len() < 2 || sorted[0] == sorted[sorted.len() - 1] {
        return 1.0;
    }
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = (quantile(sorted, 0.75) - quantile(sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return 1.0,
    };
    0.9 * spread * n.powf(-0.2)
}

fn sorted_sample(samples: &[f64], label: &str) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample(label.to_owned()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn gaussian_sum(sorted: &[f64], at: f64, h: f64) -> f64 {
    let lo = sorted.partition_point(|&v| v < at - CUTOFF * h);
    let hi = sorted.partition_point(|&v| v <= at + CUTOFF * h);
    sorted[lo..hi]
        .iter()
        .map(|&v| {
            let u = (at - v) / h;
            (-0.5 * u * u).exp()
        })
        .sum()
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Density on a grid spanning the sample padded by four bandwidths.
pub fn gaussian_kde(samples: &[f64], label: &str) -> Result<KernelDensity> {
    let sorted = sorted_sample(samples, label)?;
    let h = silverman_bandwidth(&sorted);
    let lo = sorted[0] - 4.0 * h;
    let hi = sorted[sorted.len() - 1] + 4.0 * h;
    let grid = uniform_grid(lo, hi);
    let norm = INV_SQRT_2PI / (h * sorted.len() as f64);
    let density = grid.iter().map(|&g| norm * gaussian_sum(&sorted, g, h)).collect();
    Ok(KernelDensity {
        label: label.to_owned(),
        grid,
        density,
        bandwidth: h,
        sample_size: sorted.len(),
    })
}

/// Density for samples known to lie in `[lo, hi]`, on a grid over exactly that
/// interval. Kernel mass spilling past either end is reflected back in.
pub fn bounded_gaussian_kde(samples: &[f64], lo: f64, hi: f64, label: &str) -> Result<KernelDensity> {
    let sorted = sorted_sample(samples, label)?;
    let h = silverman_bandwidth(&sorted);
    let grid = uniform_grid(lo, hi);
    let norm = INV_SQRT_2PI / (h * sorted.len() as f64);
    let density = grid
        .iter()
        .map(|&g| {
            // Reflecting the grid point instead of the samples gives the
            // same sum.
            let direct = gaussian_sum(&sorted, g, h);
            let below = gaussian_sum(&sorted, 2.0 * lo - g, h);
            let above = gaussian_sum(&sorted, 2.0 * hi - g, h);
            norm * (direct + below + above)
        })
        .collect();
    Ok(KernelDensity {
        label: label.to_owned(),
        grid,
        density,
        bandwidth: h,
        sample_size: sorted.len(),
    })
}

fn uniform_grid(lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS).map(|k| lo + step * k as f64).collect()
}
