//! Strictly increasing, right-continuous time-changes with finitely many jumps.
//!
//! A [`TimeChangePath`] is stored as an ordered list of knots
//! `(t, Λ(t−), Λ(t))`. Between consecutive knots the path is linear from
//! `Λ(t_k)` to `Λ(t_{k+1}−)`; a knot with `Λ(t−) < Λ(t)` is a jump. Evaluation
//! and inversion are exact on this piecewise-linear representation.

use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Redraws allowed when a sampled path overshoots the market horizon.
pub const MAX_HORIZON_REDRAWS: usize = 1000;

/// One breakpoint of a time-change path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    pub t: f64,
    /// `Λ(t−)`
    pub left: f64,
    /// `Λ(t)`
    pub right: f64,
    /// Whether the knot was declared as a jump. Paths read from CSV derive
    /// this from `left < right`.
    pub jump: bool,
}

impl Knot {
    pub fn continuous(t: f64, value: f64) -> Self {
        Knot {
            t,
            left: value,
            right: value,
            jump: false,
        }
    }

    pub fn jump(t: f64, left: f64, right: f64) -> Self {
        Knot {
            t,
            left,
            right,
            jump: true,
        }
    }

    pub fn jump_size(&self) -> f64 {
        self.right - self.left
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    Exponential { mean: f64 },
    Gamma { shape: f64, scale: f64 },
    Fixed { size: f64 },
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpLaw::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            JumpLaw::Gamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
            JumpLaw::Fixed { size } => size > 0.0 && size.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("jump-size law must be supported on (0, inf): {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Exponential { mean } => mean,
            JumpLaw::Gamma { shape, scale } => shape * scale,
            JumpLaw::Fixed { size } => size,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Exponential { mean } => mean * Exp::new(1.0).expect("unit rate").sample(rng),
            JumpLaw::Gamma { shape, scale } => Gamma::new(shape, scale).expect("validated").sample(rng),
            JumpLaw::Fixed { size } => size,
        }
    }
}

fn default_floor() -> f64 {
    1e-6
}

fn default_steps() -> usize {
    4096
}

/// Parameters of a family of time-changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeChangeSpec {
    /// Piecewise-linear with slopes on `[0, b_1), [b_1, b_2), …, [b_k, T]`
    /// plus deterministic upward jumps.
    DeterministicPiecewise {
        #[serde(default)]
        breaks: Vec<f64>,
        slopes: Vec<f64>,
        #[serde(default)]
        jump_times: Vec<f64>,
        #[serde(default)]
        jump_sizes: Vec<f64>,
    },
    /// `Λ_t = rate · t`.
    Linear { rate: f64 },
    /// `Λ_t = drift · t + Σ_{τ_i ≤ t} J_i` with Poisson jump times.
    SubordinatorDrift {
        drift: f64,
        intensity: f64,
        jump_law: JumpLaw,
    },
    /// `Λ_t = ∫_0^t v_u du` with a square-root mean-reverting rate `v`
    /// reflected at `floor`.
    IntegratedDiffusion {
        initial_rate: f64,
        mean_reversion: f64,
        long_run_rate: f64,
        vol: f64,
        #[serde(default = "default_floor")]
        floor: f64,
        #[serde(default = "default_steps")]
        steps: usize,
    },
}

impl TimeChangeSpec {
    pub fn identity() -> Self {
        TimeChangeSpec::Linear { rate: 1.0 }
    }

    /// True when every draw yields the same path.
    pub fn is_deterministic(&self) -> bool {
        match self {
            TimeChangeSpec::DeterministicPiecewise { .. } | TimeChangeSpec::Linear { .. } => true,
            TimeChangeSpec::SubordinatorDrift { intensity, .. } => *intensity == 0.0,
            TimeChangeSpec::IntegratedDiffusion { vol, .. } => *vol == 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TimeChangeSpec::DeterministicPiecewise {
                breaks,
                slopes,
                jump_times,
                jump_sizes,
            } => {
                if slopes.len() != breaks.len() + 1 {
                    return Err(Error::InvalidSpec(format!(
                        "{} slopes given for {} breaks; need breaks + 1",
                        slopes.len(),
                        breaks.len()
                    )));
                }
                if jump_times.len() != jump_sizes.len() {
                    return Err(Error::InvalidSpec("jump_times and jump_sizes differ in length".into()));
                }
                if let Some(s) = slopes.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                    return Err(Error::InvalidSpec(format!("slope {s} is not positive")));
                }
                if let Some(j) = jump_sizes.iter().find(|j| !(**j > 0.0 && j.is_finite())) {
                    return Err(Error::InvalidSpec(format!("jump size {j} is not positive")));
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSpec("breaks must be strictly increasing".into()));
                }
                Ok(())
            }
            TimeChangeSpec::Linear { rate } => {
                if *rate > 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!("rate {rate} is not positive")))
                }
            }
            TimeChangeSpec::SubordinatorDrift {
                drift,
                intensity,
                jump_law,
            } => {
                if !(*drift > 0.0 && drift.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "subordinator drift must be > 0 for strict increase, got {drift}"
                    )));
                }
                if !(*intensity >= 0.0 && intensity.is_finite()) {
                    return Err(Error::InvalidSpec(format!("jump intensity {intensity} is negative")));
                }
                jump_law.validate()
            }
            TimeChangeSpec::IntegratedDiffusion {
                initial_rate,
                mean_reversion,
                long_run_rate,
                vol,
                floor,
                steps,
            } => {
                if !(*floor > 0.0) {
                    return Err(Error::InvalidSpec(format!("rate floor must be > 0, got {floor}")));
                }
                if *steps == 0 {
                    return Err(Error::InvalidSpec("steps must be >= 1".into()));
                }
                if !(*initial_rate >= *floor) {
                    return Err(Error::InvalidSpec(format!(
                        "initial rate {initial_rate} is below the floor {floor}"
                    )));
                }
                if !(*mean_reversion >= 0.0 && *long_run_rate > 0.0 && *vol >= 0.0) {
                    return Err(Error::InvalidSpec(
                        "mean_reversion and vol must be >= 0 and long_run_rate > 0".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Builds (deterministic kinds) or samples (random kinds) one path.
    ///
    /// Random paths with `Λ_T > T̄` are redrawn from the same stream, up to
    /// [`MAX_HORIZON_REDRAWS`] times.
    pub fn sample<R: Rng + ?Sized>(&self, horizon: f64, market_horizon: f64, rng: &mut R) -> Result<TimeChangePath> {
        self.validate()?;
        match self {
            TimeChangeSpec::DeterministicPiecewise {
                breaks,
                slopes,
                jump_times,
                jump_sizes,
            } => {
                let jumps: Vec<(f64, f64)> = jump_times.iter().copied().zip(jump_sizes.iter().copied()).collect();
                build_deterministic(breaks, slopes, &jumps, horizon, market_horizon)
            }
            TimeChangeSpec::Linear { rate } => build_deterministic(&[], &[*rate], &[], horizon, market_horizon),
            _ => {
                for attempt in 0..MAX_HORIZON_REDRAWS {
                    let path = match self {
                        TimeChangeSpec::SubordinatorDrift {
                            drift,
                            intensity,
                            jump_law,
                        } => sample_subordinator_drift(*drift, *intensity, jump_law, horizon, rng)?,
                        TimeChangeSpec::IntegratedDiffusion {
                            initial_rate,
                            mean_reversion,
                            long_run_rate,
                            vol,
                            floor,
                            steps,
                        } => sample_integrated_diffusion(
                            &RateDiffusion {
                                initial_rate: *initial_rate,
                                mean_reversion: *mean_reversion,
                                long_run_rate: *long_run_rate,
                                vol: *vol,
                                floor: *floor,
                            },
                            *steps,
                            horizon,
                            rng,
                        )?,
                        _ => unreachable!(),
                    };
                    if path.terminal() <= market_horizon {
                        return Ok(path.with_market_horizon(market_horizon));
                    }
                    if attempt == 0 {
                        warn!(
                            "sampled Λ_T = {} exceeds market horizon {}; redrawing",
                            path.terminal(),
                            market_horizon
                        );
                    }
                }
                Err(Error::InvalidSpec(format!(
                    "no path with Λ_T <= {market_horizon} after {MAX_HORIZON_REDRAWS} draws"
                )))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeChangePath {
    knots: Vec<Knot>,
    horizon: f64,
    market_horizon: f64,
}

impl TimeChangePath {
    /// Wraps raw knots without checking them; see [`TimeChangePath::validate`].
    pub fn from_knots_unchecked(knots: Vec<Knot>, horizon: f64, market_horizon: f64) -> Self {
        TimeChangePath {
            knots,
            horizon,
            market_horizon,
        }
    }

    pub fn from_knots(knots: Vec<Knot>, horizon: f64, market_horizon: f64) -> Result<Self> {
        let path = Self::from_knots_unchecked(knots, horizon, market_horizon);
        let report = path.validate();
        if report.is_valid() {
            Ok(path)
        } else {
            Err(Error::InvalidSpec(report.to_string()))
        }
    }

    /// `Λ_t = t` on `[0, horizon]`.
    pub fn identity(horizon: f64) -> Self {
        TimeChangePath {
            knots: vec![Knot::continuous(0.0, 0.0), Knot::continuous(horizon, horizon)],
            horizon,
            market_horizon: horizon,
        }
    }

    fn with_market_horizon(mut self, market_horizon: f64) -> Self {
        self.market_horizon = market_horizon;
        self
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn market_horizon(&self) -> f64 {
        self.market_horizon
    }

    /// `Λ_T`.
    pub fn terminal(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.right)
    }

    pub fn jumps(&self) -> impl Iterator<Item = &Knot> + '_ {
        self.knots.iter().filter(|k| k.left < k.right)
    }

    pub fn jump_count(&self) -> usize {
        self.jumps().count()
    }

    fn check_physical(&self, t: f64) -> Result<()> {
        if (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(Error::Domain(format!("physical time {t} outside [0, {}]", self.horizon)))
        }
    }

    /// Index `k` of the last knot with `t_k <= t`.
    fn segment(&self, t: f64) -> usize {
        self.knots.partition_point(|k| k.t <= t).saturating_sub(1)
    }

    fn interpolate(&self, k: usize, t: f64) -> f64 {
        let a = &self.knots[k];
        match self.knots.get(k + 1) {
            Some(b) if t > a.t => a.right + (t - a.t) / (b.t - a.t) * (b.left - a.right),
            _ => a.right,
        }
    }

    /// `Λ(t)`, right-continuous.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_physical(t)?;
        Ok(self.eval_unchecked(t))
    }

    /// `Λ(t−)`.
    pub fn eval_left(&self, t: f64) -> Result<f64> {
        self.check_physical(t)?;
        Ok(self.eval_left_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let k = self.segment(t);
        self.interpolate(k, t)
    }

    pub(crate) fn eval_left_unchecked(&self, t: f64) -> f64 {
        let k = self.segment(t);
        if self.knots[k].t == t {
            self.knots[k].left
        } else {
            self.interpolate(k, t)
        }
    }

    /// `Λ←(s) = inf{t : Λ_t > s}`, or `T` for `s >= Λ_T`.
    pub fn generalized_inverse(&self, s: f64) -> Result<f64> {
        if !(0.0..=self.market_horizon).contains(&s) {
            return Err(Error::Domain(format!(
                "market time {s} outside [0, {}]",
                self.market_horizon
            )));
        }
        Ok(self.inverse_unchecked(s))
    }

    pub(crate) fn inverse_unchecked(&self, s: f64) -> f64 {
        let k = self.knots.partition_point(|knot| knot.right <= s);
        if k >= self.knots.len() {
            return self.horizon;
        }
        if k == 0 {
            // Only reachable for s < Λ_0 = 0.
            return 0.0;
        }
        let prev = &self.knots[k - 1];
        let next = &self.knots[k];
        if next.left > s {
            let frac = (s - prev.right) / (next.left - prev.right);
            (prev.t + frac * (next.t - prev.t)).clamp(prev.t, next.t)
        } else {
            // s lies in the jump image [Λ(t_k−), Λ(t_k)).
            next.t
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut push = |t: f64, kind: ViolationKind, detail: String| violations.push(Violation { t, kind, detail });

        let Some(first) = self.knots.first() else {
            push(0.0, ViolationKind::Empty, "no knots".into());
            return ValidationReport { violations };
        };
        for k in &self.knots {
            if !(k.t.is_finite() && k.left.is_finite() && k.right.is_finite()) {
                push(k.t, ViolationKind::NonFinite, format!("{k:?}"));
            }
        }
        if first.t != 0.0 || first.left != 0.0 || first.right != 0.0 {
            push(
                first.t,
                ViolationKind::NonZeroStart,
                format!("first knot is ({}, {}, {})", first.t, first.left, first.right),
            );
        }
        for k in &self.knots {
            if k.left > k.right {
                push(
                    k.t,
                    ViolationKind::DecreasingJump,
                    format!("Λ(t−) = {} > Λ(t) = {}", k.left, k.right),
                );
            } else if k.jump && k.left == k.right {
                push(k.t, ViolationKind::ZeroJump, "declared jump has zero size".into());
            }
        }
        for w in self.knots.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.t <= a.t {
                push(b.t, ViolationKind::TimesNotIncreasing, format!("t = {} follows t = {}", b.t, a.t));
            }
            if b.left <= a.right {
                push(
                    b.t,
                    ViolationKind::NotStrictlyIncreasing,
                    format!("Λ({}) = {} then Λ({}−) = {}", a.t, a.right, b.t, b.left),
                );
            }
        }
        let last = self.knots.last().expect("non-empty");
        if last.t != self.horizon {
            push(
                last.t,
                ViolationKind::HorizonMismatch,
                format!("last knot at {} but horizon is {}", last.t, self.horizon),
            );
        }
        if last.right > self.market_horizon {
            push(
                last.t,
                ViolationKind::ExceedsMarketHorizon,
                format!("Λ_T = {} > T̄ = {}", last.right, self.market_horizon),
            );
        }
        ValidationReport { violations }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        out.write_record(["t", "lambda_left", "lambda_right"])?;
        for k in &self.knots {
            out.write_record([k.t.to_string(), k.left.to_string(), k.right.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads knots written by [`TimeChangePath::write_csv`]; the horizon is
    /// the last knot time.
    pub fn read_csv<R: Read>(reader: R, market_horizon: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "lambda_left", "lambda_right"] {
            return Err(Error::InvalidSpec(format!("unexpected header {headers:?}")));
        }
        let mut knots = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidSpec(format!("bad number {:?}: {e}", &record[i])))
            };
            let (t, left, right) = (field(0)?, field(1)?, field(2)?);
            knots.push(Knot {
                t,
                left,
                right,
                jump: left < right,
            });
        }
        let horizon = knots.last().map_or(0.0, |k| k.t);
        Self::from_knots(knots, horizon, market_horizon)
    }
}

/// Exact piecewise-linear path from slopes and jumps.
///
/// `breaks` are the interior slope change points; `jumps` are `(time, size)`
/// pairs with times in `(0, T]`.
pub fn build_deterministic(
    breaks: &[f64],
    slopes: &[f64],
    jumps: &[(f64, f64)],
    horizon: f64,
    market_horizon: f64,
) -> Result<TimeChangePath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidSpec(format!("horizon {horizon} must be positive")));
    }
    if slopes.len() != breaks.len() + 1 {
        return Err(Error::InvalidSpec(format!(
            "{} slopes given for {} breaks; need breaks + 1",
            slopes.len(),
            breaks.len()
        )));
    }
    if let Some(s) = slopes.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidSpec(format!("slope {s} is not positive")));
    }
    if let Some(b) = breaks.iter().find(|b| !(**b > 0.0 && **b < horizon)) {
        return Err(Error::InvalidSpec(format!("break {b} not inside (0, {horizon})")));
    }
    if breaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec("breaks must be strictly increasing".into()));
    }
    for &(t, size) in jumps {
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::InvalidSpec(format!("jump size {size} at t = {t} is not positive")));
        }
        if t == 0.0 {
            return Err(Error::InvalidSpec("a jump at t = 0 would make Λ_0 != 0".into()));
        }
        if !(t > 0.0 && t <= horizon) {
            return Err(Error::InvalidSpec(format!("jump time {t} not in (0, {horizon}]")));
        }
    }

    let mut times: Vec<f64> = breaks.iter().copied().chain(jumps.iter().map(|j| j.0)).collect();
    times.push(horizon);
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut knots = vec![Knot::continuous(0.0, 0.0)];
    let mut prev_t = 0.0;
    let mut level = 0.0;
    for t in times {
        let segment = breaks.partition_point(|&b| b <= prev_t);
        level += slopes[segment] * (t - prev_t);
        let size: f64 = jumps.iter().filter(|j| j.0 == t).map(|j| j.1).sum();
        if size > 0.0 {
            knots.push(Knot::jump(t, level, level + size));
            level += size;
        } else {
            knots.push(Knot::continuous(t, level));
        }
        prev_t = t;
    }
    let path = TimeChangePath::from_knots_unchecked(knots, horizon, market_horizon);
    if path.terminal() > market_horizon {
        return Err(Error::InvalidSpec(format!(
            "Λ_T = {} exceeds market horizon {market_horizon}",
            path.terminal()
        )));
    }
    Ok(path)
}

/// `Λ_t = drift · t + Σ_{τ_i ≤ t} J_i` for the given jumps.
pub fn subordinator_from_jumps(drift: f64, jumps: &[(f64, f64)], horizon: f64) -> Result<TimeChangePath> {
    if !(drift > 0.0 && drift.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "subordinator drift must be > 0 for strict increase, got {drift}"
        )));
    }
    // A linear piece plus jumps is exactly the deterministic construction;
    // the market horizon is fixed up by the caller.
    build_deterministic(&[], &[drift], jumps, horizon, f64::INFINITY)
}

/// Drifted compound-Poisson subordinator on `[0, horizon]`.
pub fn sample_subordinator_drift<R: Rng + ?Sized>(
    drift: f64,
    intensity: f64,
    jump_law: &JumpLaw,
    horizon: f64,
    rng: &mut R,
) -> Result<TimeChangePath> {
    if !(drift > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "subordinator drift must be > 0 for strict increase, got {drift}"
        )));
    }
    if !(intensity >= 0.0) {
        return Err(Error::InvalidSpec(format!("jump intensity {intensity} is negative")));
    }
    jump_law.validate()?;
    let mut jumps = Vec::new();
    if intensity > 0.0 {
        let waiting = Exp::new(intensity).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let mut t = waiting.sample(rng);
        while t <= horizon {
            jumps.push((t, jump_law.sample(rng)));
            t += waiting.sample(rng);
        }
    }
    subordinator_from_jumps(drift, &jumps, horizon)
}

/// Square-root mean-reverting rate `dv = κ(θ − v)dt + σ√v dB`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateDiffusion {
    pub initial_rate: f64,
    pub mean_reversion: f64,
    pub long_run_rate: f64,
    pub vol: f64,
    pub floor: f64,
}

impl RateDiffusion {
    /// `∫_0^T v` for the vol-free rate, solved in closed form.
    pub fn deterministic_integral(&self, horizon: f64) -> f64 {
        let k = self.mean_reversion;
        if k == 0.0 {
            return self.initial_rate * horizon;
        }
        self.long_run_rate * horizon + (self.initial_rate - self.long_run_rate) * (1.0 - (-k * horizon).exp()) / k
    }
}

/// Euler path of the rate with reflection at the floor, integrated with the
/// left-point rule on `steps` uniform steps.
pub fn sample_integrated_diffusion<R: Rng + ?Sized>(
    rate: &RateDiffusion,
    steps: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<TimeChangePath> {
    if !(rate.floor > 0.0) {
        return Err(Error::InvalidSpec(format!("rate floor must be > 0, got {}", rate.floor)));
    }
    if steps == 0 {
        return Err(Error::InvalidSpec("steps must be >= 1".into()));
    }
    if !(rate.initial_rate >= rate.floor) {
        return Err(Error::InvalidSpec(format!(
            "initial rate {} is below the floor {}",
            rate.initial_rate, rate.floor
        )));
    }
    let h = horizon / steps as f64;
    let sqrt_h = h.sqrt();
    let mut knots = Vec::with_capacity(steps + 1);
    knots.push(Knot::continuous(0.0, 0.0));
    let mut v = rate.initial_rate;
    let mut level = 0.0;
    for i in 1..=steps {
        level += v * h;
        let t = if i == steps { horizon } else { horizon * i as f64 / steps as f64 };
        knots.push(Knot::continuous(t, level));
        let shock: f64 = if rate.vol > 0.0 {
            rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        v += rate.mean_reversion * (rate.long_run_rate - v) * h + rate.vol * v.max(0.0).sqrt() * sqrt_h * shock;
        if v < rate.floor {
            v = (2.0 * rate.floor - v).max(rate.floor);
        }
    }
    Ok(TimeChangePath::from_knots_unchecked(knots, horizon, f64::INFINITY))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Empty,
    NonFinite,
    NonZeroStart,
    ZeroJump,
    DecreasingJump,
    TimesNotIncreasing,
    NotStrictlyIncreasing,
    HorizonMismatch,
    ExceedsMarketHorizon,
}

impl ViolationKind {
    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::Empty => "empty path",
            ViolationKind::NonFinite => "non-finite value",
            ViolationKind::NonZeroStart => "does not start at zero",
            ViolationKind::ZeroJump => "zero jump",
            ViolationKind::DecreasingJump => "decreasing jump",
            ViolationKind::TimesNotIncreasing => "knot times not increasing",
            ViolationKind::NotStrictlyIncreasing => "not strictly increasing",
            ViolationKind::HorizonMismatch => "horizon mismatch",
            ViolationKind::ExceedsMarketHorizon => "exceeds market horizon",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} at t = {}: {}", v.kind.label(), v.t, v.detail)?;
        }
        Ok(())
    }
}
