//! Aligned physical/market grids and joint path realizations.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::integrate::{pushforward_grid_values, Strategy};
use crate::timechange::TimeChangePath;

/// Physical grid `0 = t_0 < … < t_n = T` and market grid `0 = s_0 < … < s_m = T̄`
/// such that `Λ(t_i)` and `Λ(t_i−)` are market grid points for every `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPair {
    pub physical: Vec<f64>,
    pub market: Vec<f64>,
    /// `Λ(t_i)`
    pub lambda: Vec<f64>,
    /// `Λ(t_i−)`
    pub lambda_left: Vec<f64>,
    /// Market index of `Λ(t_i)`.
    pub image: Vec<usize>,
    /// Market index of `Λ(t_i−)`; differs from `image[i]` exactly at jumps.
    pub pre_image: Vec<usize>,
}

fn uniform(n: usize, end: f64) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| if i == n { end } else { end * i as f64 / n as f64 })
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn locate(grid: &[f64], x: f64) -> Result<usize> {
    grid.binary_search_by(|g| g.total_cmp(&x))
        .map_err(|_| Error::Alignment(format!("market point {x} missing from the market grid")))
}

/// Uniform grids with `n_physical` and `n_market` steps, refined by the jump
/// times of `lambda` and by the images `Λ(t_i)`, `Λ(t_i−)`.
pub fn build_grid_pair(lambda: &TimeChangePath, n_physical: usize, n_market: usize) -> Result<GridPair> {
    if n_physical == 0 || n_market == 0 {
        return Err(Error::Domain("grid sizes must be >= 1".into()));
    }
    let horizon = lambda.horizon();
    let physical = sorted_unique(uniform(n_physical, horizon).chain(lambda.jumps().map(|k| k.t)).collect());
    let values: Vec<f64> = physical.iter().map(|&t| lambda.eval_unchecked(t)).collect();
    let left: Vec<f64> = physical.iter().map(|&t| lambda.eval_left_unchecked(t)).collect();

    let market_end = lambda.market_horizon().max(lambda.terminal());
    let market_end = if market_end.is_finite() { market_end } else { lambda.terminal() };
    let market = sorted_unique(
        uniform(n_market, market_end)
            .chain(values.iter().copied())
            .chain(left.iter().copied())
            .collect(),
    );
    let image = values.iter().map(|&s| locate(&market, s)).collect::<Result<Vec<_>>>()?;
    let pre_image = left.iter().map(|&s| locate(&market, s)).collect::<Result<Vec<_>>>()?;
    Ok(GridPair {
        physical,
        market,
        lambda: values,
        lambda_left: left,
        image,
        pre_image,
    })
}

impl GridPair {
    pub fn n_physical_steps(&self) -> usize {
        self.physical.len() - 1
    }

    /// Index of the physical grid point at `t`, tolerating rounding.
    pub fn physical_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-12 * self.physical.last().copied().unwrap_or(1.0).max(1.0);
        let i = self.physical.partition_point(|&x| x < t - tol);
        match self.physical.get(i) {
            Some(&x) if (x - t).abs() <= tol => Ok(i),
            _ => Err(Error::Domain(format!("physical time {t} is not a grid point"))),
        }
    }

    /// Index of the market grid point at `s`, tolerating rounding.
    pub fn market_index(&self, s: f64) -> Result<usize> {
        let tol = 1e-12 * self.market.last().copied().unwrap_or(1.0).max(1.0);
        let j = self.market.partition_point(|&x| x < s - tol);
        match self.market.get(j) {
            Some(&x) if (x - s).abs() <= tol => Ok(j),
            _ => Err(Error::Domain(format!("market time {s} is not a grid point"))),
        }
    }

    /// Physical step `i` whose image `[Λ(t_i), Λ(t_{i+1}))` contains market
    /// step `j`. Market steps past `Λ_T` map to the last physical step.
    pub fn block_of(&self, j: usize) -> usize {
        let n = self.n_physical_steps();
        self.image.partition_point(|&k| k <= j).saturating_sub(1).min(n.saturating_sub(1))
    }

    /// Physical step for every market step (length `market.len() - 1`).
    pub fn blocks(&self) -> Vec<usize> {
        let steps = self.market.len() - 1;
        let n = self.n_physical_steps();
        let mut out = Vec::with_capacity(steps);
        let mut i = 0;
        for j in 0..steps {
            while i + 1 < n && self.image[i + 1] <= j {
                i += 1;
            }
            out.push(i);
        }
        out
    }

    /// Physical indices `i` at which `Λ` jumps.
    pub fn jump_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.physical.len()).filter(|&i| self.pre_image[i] < self.image[i])
    }
}

/// Standard Brownian motion on `grid`, starting at 0.
pub fn sample_brownian<R: Rng + ?Sized>(grid: &[f64], rng: &mut R) -> Vec<f64> {
    let mut w = Vec::with_capacity(grid.len());
    let mut level = 0.0;
    w.push(level);
    for pair in grid.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        level += (pair[1] - pair[0]).sqrt() * z;
        w.push(level);
    }
    w
}

/// `M(t_i) = W(Λ(t_i))` by exact lookup on the aligned market grid.
pub fn time_changed_path(w: &[f64], grids: &GridPair) -> Result<Vec<f64>> {
    if w.len() != grids.market.len() {
        return Err(Error::Alignment(format!(
            "W has {} values for {} market points",
            w.len(),
            grids.market.len()
        )));
    }
    Ok(grids.image.iter().map(|&j| w[j]).collect())
}

/// `A(t_i) = Σ_{s_j < Λ(t_i)} θ̃(s_j) Δs_j`, the left-point sum of the
/// market-time drift rate up to `Λ(t_i)`.
pub fn drift_path(theta_market: &[f64], grids: &GridPair) -> Vec<f64> {
    let mut cumulative = Vec::with_capacity(grids.market.len());
    let mut acc = 0.0;
    cumulative.push(acc);
    for (j, pair) in grids.market.windows(2).enumerate() {
        acc += theta_market[j] * (pair[1] - pair[0]);
        cumulative.push(acc);
    }
    grids.image.iter().map(|&j| cumulative[j]).collect()
}

/// One joint realization of `(Λ, W)` with the derived `M`, `A` and `S`.
#[derive(Clone, Debug)]
pub struct PathBundle {
    pub lambda: TimeChangePath,
    pub grids: GridPair,
    /// `W` on the market grid.
    pub w: Vec<f64>,
    /// `M = W∘Λ` on the physical grid.
    pub m: Vec<f64>,
    /// Drift rate `θ` held over each physical step `(t_i, t_{i+1}]`.
    pub theta: Vec<f64>,
    /// `θ̃ = θ∘Λ←` held over each market step.
    pub theta_market: Vec<f64>,
    pub a: Vec<f64>,
    pub s: Vec<f64>,
    pub s0: f64,
}

impl PathBundle {
    /// Builds `M`, evaluates the rate functional `theta` causally on the
    /// physical grid, and accumulates `A` and `S = S₀ + M + A`.
    pub fn assemble(lambda: TimeChangePath, grids: GridPair, w: Vec<f64>, theta: &Strategy, s0: f64) -> Result<Self> {
        let m = time_changed_path(&w, &grids)?;
        let theta_values = theta.grid_values(&grids.physical, &grids.lambda, &m)?;
        let theta_market = pushforward_grid_values(&theta_values, &grids);
        let a = drift_path(&theta_market, &grids);
        let s = m.iter().zip(&a).map(|(m, a)| s0 + m + a).collect();
        Ok(PathBundle {
            lambda,
            grids,
            w,
            m,
            theta: theta_values,
            theta_market,
            a,
            s,
            s0,
        })
    }

    pub fn physical(&self) -> &[f64] {
        &self.grids.physical
    }

    pub fn market(&self) -> &[f64] {
        &self.grids.market
    }

    /// `M(t_i−) = W(Λ(t_i−))`.
    pub fn m_left(&self, i: usize) -> f64 {
        self.w[self.grids.pre_image[i]]
    }

    pub fn terminal_index(&self) -> usize {
        self.grids.physical.len() - 1
    }

    /// Writes `(t, Lambda, M, A, S)` on the physical grid.
    pub fn write_physical_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        out.write_record(["t", "Lambda", "M", "A", "S"])?;
        for i in 0..self.grids.physical.len() {
            out.write_record([
                self.grids.physical[i].to_string(),
                self.grids.lambda[i].to_string(),
                self.m[i].to_string(),
                self.a[i].to_string(),
                self.s[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `(s, W)` on the market grid.
    pub fn write_market_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        out.write_record(["s", "W"])?;
        for (s, w) in self.grids.market.iter().zip(&self.w) {
            out.write_record([s.to_string(), w.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `<stem>_physical.csv` and `<stem>_market.csv` into `dir`.
    pub fn save_csv(&self, dir: &Path, stem: &str) -> Result<()> {
        self.write_physical_csv(std::fs::File::create(dir.join(format!("{stem}_physical.csv")))?)?;
        self.write_market_csv(std::fs::File::create(dir.join(format!("{stem}_market.csv")))?)
    }
}
