//! Heat semigroup of the sub-Laplacian on step-2 Carnot groups, discretized as a lattice
//! random walk in exponential coordinates.
//!
//! Points `(x, z)` multiply by `(x, z)(x', z') = (x + x', z + z' + ½γ(x, x'))`. With
//! horizontal spacing `h` and vertical spacing `h_v = h²/(2q)`, where `q` is a common
//! denominator of γ, right multiplication by `±h e_i` maps lattice points to lattice
//! points. The discrete operator
//!
//! ```text
//! L_h u(p) = h⁻² Σ_i [u(p·he_i) + u(p·(−he_i)) − 2u(p)]
//! ```
//!
//! is `−Σ D_iᵀD_i` for the forward flow differences `D_i u = (u(p·he_i) − u(p))/h`, so it is
//! symmetric for counting measure, nonpositive, and second-order consistent with
//! `L = Σ X_i²`. Horizontal boundary: absorbing. Vertical: periodic.

mod checks;
mod distance;
mod snapshot;
mod suite;

pub use checks::{
    check_harnack, check_li_yau, check_semigroup_laws, check_variational, harnack_on, li_yau_at_maximum,
    li_yau_at_maximum_on, li_yau_on, pair_times, select, semigroup_laws_on, snapshots, variational_integrals,
    EstimateReport, HarnackPair, Monitor, SemigroupLawsInput, VariationalWeight,
};
pub use distance::{ball_measure, cc_distance, cc_distance_lower_bound, directions, distances_within, heisenberg_distance};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};
pub use suite::{run_heat_suite, smooth_bump, SuiteConfig, SuiteReport};

use crate::exact::common_denominator;
use crate::structures::{StructureConstants, StructureFile};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatError {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("structure is not a step-2 Carnot structure")]
    NotCarnot,
    #[error("time step {dt:e} exceeds the stability bound {max:e}")]
    CflViolation { dt: f64, max: f64 },
    #[error("non-finite value after reaching t = {0}")]
    NonFiniteValue(f64),
    #[error("target not reachable inside the chart")]
    Unreachable,
    #[error("ball of radius {0} meets the chart boundary")]
    BallClipped(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// Geometry of a chart, in coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartConfig {
    /// Horizontal spacing.
    pub h: f64,
    /// Each horizontal coordinate ranges over `[−half_width, half_width]`.
    pub half_width: f64,
    /// Period of every vertical coordinate.
    pub vertical_period: f64,
}

impl Default for ChartConfig {
    fn default() -> Self {
        ChartConfig { h: 0.0625, half_width: 3.0, vertical_period: 1.0 }
    }
}

/// One right-multiplication move `p ↦ p·(sign·h e_i)` from a fixed row.
#[derive(Clone, Debug)]
struct Move {
    /// Target row, `None` when it leaves the box.
    row: Option<usize>,
    /// Vertical shift in cells per axis, reduced modulo the period.
    shift: Vec<usize>,
}

#[derive(Debug)]
pub struct CarnotChart {
    sc: StructureConstants,
    config: ChartConfig,
    d: usize,
    hdim: usize,
    h: f64,
    hv: f64,
    /// Half width in cells.
    n: i64,
    side: usize,
    period: usize,
    rows: usize,
    vsize: usize,
    /// `q·γ^m_ij` as integers, indexed `(m·d + i)·d + j`.
    gq: Vec<i64>,
    /// `moves[row][2i]` is `+h e_i`, `moves[row][2i+1]` is `−h e_i`.
    moves: Vec<Vec<Move>>,
}

fn integer_ratio(value: f64, unit: f64, what: &str) -> Result<usize, HeatError> {
    let r = value / unit;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-6 {
        return Err(HeatError::InvalidChart(format!("{what} {value} is not a positive multiple of {unit}")));
    }
    Ok(n as usize)
}

impl CarnotChart {
    pub fn new(sc: &StructureConstants, config: ChartConfig) -> Result<Arc<CarnotChart>, HeatError> {
        if !sc.is_carnot() {
            return Err(HeatError::NotCarnot);
        }
        if !(config.h > 0.0) {
            return Err(HeatError::InvalidChart(format!("spacing must be positive, got {}", config.h)));
        }
        let (d, hdim) = (sc.d(), sc.h());
        let q = common_denominator(sc.gamma_tensor())
            .to_i64()
            .ok_or_else(|| HeatError::InvalidChart("gamma denominators too large".into()))?;
        let gq: Vec<i64> = sc
            .gamma_tensor()
            .iter()
            .map(|g| (g * crate::exact::q(q)).to_integer().to_i64().expect("q·γ is a small integer"))
            .collect();
        let h = config.h;
        let hv = h * h / (2.0 * q as f64);
        let n = integer_ratio(config.half_width, h, "half width")? as i64;
        let period = if hdim == 0 { 1 } else { integer_ratio(config.vertical_period, hv, "vertical period")? };
        let side = (2 * n + 1) as usize;
        let rows = side.pow(d as u32);
        let vsize = period.pow(hdim as u32);
        let mut chart = CarnotChart {
            sc: sc.clone(),
            config,
            d,
            hdim,
            h,
            hv,
            n,
            side,
            period,
            rows,
            vsize,
            gq,
            moves: Vec::new(),
        };
        chart.moves = (0..rows)
            .map(|r| {
                let a = chart.row_coords(r);
                (0..2 * d)
                    .map(|k| {
                        let (l, sign) = (k / 2, if k % 2 == 0 { 1 } else { -1 });
                        let mut b = a.clone();
                        b[l] += sign;
                        let shift = (0..hdim)
                            .map(|m| (sign * chart.vshift(&a, m, l)).rem_euclid(chart.period as i64) as usize)
                            .collect();
                        Move { row: chart.row_index(&b), shift }
                    })
                    .collect()
            })
            .collect();
        Ok(Arc::new(chart))
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.sc
    }

    pub fn config(&self) -> &ChartConfig {
        &self.config
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn hdim(&self) -> usize {
        self.hdim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn hv(&self) -> f64 {
        self.hv
    }

    pub fn half_width_cells(&self) -> i64 {
        self.n
    }

    pub fn period_cells(&self) -> usize {
        self.period
    }

    pub fn len(&self) -> usize {
        self.rows * self.vsize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn vsize(&self) -> usize {
        self.vsize
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32) * self.hv.powi(self.hdim as i32)
    }

    /// Largest stable explicit step, `h²/(2d)`.
    pub fn max_dt(&self) -> f64 {
        self.h * self.h / (2.0 * self.d as f64)
    }

    /// `Σ_i qγ^m_il a_i`: vertical cells gained by the move `+h e_l` from row `a`.
    pub(crate) fn vshift(&self, a: &[i64], m: usize, l: usize) -> i64 {
        (0..self.d).map(|i| self.gq[(m * self.d + i) * self.d + l] * a[i]).sum()
    }

    pub fn row_coords(&self, mut r: usize) -> Vec<i64> {
        let mut a = vec![0; self.d];
        for i in (0..self.d).rev() {
            a[i] = (r % self.side) as i64 - self.n;
            r /= self.side;
        }
        a
    }

    pub fn row_index(&self, a: &[i64]) -> Option<usize> {
        let mut r = 0usize;
        for &ai in a {
            if ai.abs() > self.n {
                return None;
            }
            r = r * self.side + (ai + self.n) as usize;
        }
        Some(r)
    }

    pub fn col_coords(&self, mut c: usize) -> Vec<i64> {
        let mut b = vec![0; self.hdim];
        for m in (0..self.hdim).rev() {
            b[m] = (c % self.period) as i64;
            c /= self.period;
        }
        b
    }

    /// Column of the vertical index vector `b`, reduced modulo the period.
    pub fn col_index(&self, b: &[i64]) -> usize {
        b.iter().fold(0usize, |acc, &bm| acc * self.period + bm.rem_euclid(self.period as i64) as usize)
    }

    /// Lattice indices `(a, b)` of a cell, with `b` in `[0, period)`.
    pub fn cell_indices(&self, cell: usize) -> (Vec<i64>, Vec<i64>) {
        (self.row_coords(cell / self.vsize), self.col_coords(cell % self.vsize))
    }

    pub fn cell_of_indices(&self, a: &[i64], b: &[i64]) -> Option<usize> {
        self.row_index(a).map(|r| r * self.vsize + self.col_index(b))
    }

    /// Coordinates `(x, z)` with each `z_m` wrapped into `[−P/2, P/2)`.
    pub fn point(&self, cell: usize) -> Vec<f64> {
        let (a, b) = self.cell_indices(cell);
        let p = self.period as i64;
        a.iter()
            .map(|&ai| ai as f64 * self.h)
            .chain(b.iter().map(|&bm| (if 2 * bm >= p { bm - p } else { bm }) as f64 * self.hv))
            .collect()
    }

    /// Nearest lattice cell to a point given in coordinates.
    pub fn cell_at(&self, point: &[f64]) -> Result<usize, HeatError> {
        let (a, b) = self.indices_at(point)?;
        self.cell_of_indices(&a, &b).ok_or_else(|| HeatError::InvalidParameter(format!("point {point:?} outside chart")))
    }

    pub fn indices_at(&self, point: &[f64]) -> Result<(Vec<i64>, Vec<i64>), HeatError> {
        if point.len() != self.d + self.hdim {
            return Err(HeatError::InvalidParameter(format!("point must have {} coordinates", self.d + self.hdim)));
        }
        let a = point[..self.d].iter().map(|x| (x / self.h).round() as i64).collect();
        let b = point[self.d..].iter().map(|z| (z / self.hv).round() as i64).collect();
        Ok((a, b))
    }

    /// Number of moves from `row` that leave the box.
    fn exits(&self, row: usize) -> usize {
        self.moves[row].iter().filter(|m| m.row.is_none()).count()
    }

    /// Cell reached from `cell` by move `k` (`2i` is `+h e_i`, `2i+1` is `−h e_i`).
    pub fn neighbor(&self, cell: usize, k: usize) -> Option<usize> {
        let (row, col) = (cell / self.vsize, cell % self.vsize);
        let mv = &self.moves[row][k];
        let target = mv.row?;
        let col = if self.hdim == 1 {
            (col + mv.shift[0]) % self.period
        } else {
            let b = self.col_coords(col);
            let shifted: Vec<i64> = b.iter().zip(&mv.shift).map(|(&bm, &s)| bm + s as i64).collect();
            self.col_index(&shifted)
        };
        Some(target * self.vsize + col)
    }

    /// Cell reached by one vertical step `±e_m` (periodic).
    pub fn vertical_neighbor(&self, cell: usize, m: usize, up: bool) -> usize {
        let (row, col) = (cell / self.vsize, cell % self.vsize);
        let mut b = self.col_coords(col);
        b[m] += if up { 1 } else { -1 };
        row * self.vsize + self.col_index(&b)
    }

    /// `out[p] = Σ_k u(p·g_k)` over the `2d` horizontal moves, zero outside the box.
    pub fn neighbor_sum(&self, u: &[f64], out: &mut [f64]) {
        let vsize = self.vsize;
        out.par_chunks_mut(vsize).enumerate().for_each(|(row, dst)| {
            dst.fill(0.0);
            for mv in &self.moves[row] {
                let Some(target) = mv.row else { continue };
                let src = &u[target * vsize..(target + 1) * vsize];
                if self.hdim <= 1 {
                    let s = mv.shift.first().copied().unwrap_or(0);
                    let split = vsize - s;
                    for (o, v) in dst[..split].iter_mut().zip(&src[s..]) {
                        *o += v;
                    }
                    for (o, v) in dst[split..].iter_mut().zip(&src[..s]) {
                        *o += v;
                    }
                } else {
                    for (col, o) in dst.iter_mut().enumerate() {
                        let b = self.col_coords(col);
                        let shifted: Vec<i64> = b.iter().zip(&mv.shift).map(|(&bm, &s)| bm + s as i64).collect();
                        *o += src[self.col_index(&shifted)];
                    }
                }
            }
        });
    }

    /// `L_h u`.
    pub fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; u.len()];
        self.neighbor_sum(u, &mut s);
        let (two_d, inv_h2) = (2.0 * self.d as f64, 1.0 / (self.h * self.h));
        s.par_iter_mut().zip(u).for_each(|(sv, &uv)| *sv = (*sv - two_d * uv) * inv_h2);
        s
    }

    /// The composed centered operator `Σ_i D_i∘D_i`, `D_i u = (u(p·he_i) − u(p·(−he_i)))/(2h)`.
    pub fn apply_composed_centered(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for i in 0..self.d {
            let di = self.horizontal_derivative(u, i);
            let ddi = self.horizontal_derivative(&di, i);
            for (o, v) in out.iter_mut().zip(ddi) {
                *o += v;
            }
        }
        out
    }

    /// Centered `X_i u` at every cell, zero data outside the box.
    pub fn horizontal_derivative(&self, u: &[f64], i: usize) -> Vec<f64> {
        (0..u.len())
            .into_par_iter()
            .map(|c| {
                let fwd = self.neighbor(c, 2 * i).map_or(0.0, |n| u[n]);
                let bwd = self.neighbor(c, 2 * i + 1).map_or(0.0, |n| u[n]);
                (fwd - bwd) / (2.0 * self.h)
            })
            .collect()
    }

    /// Centered `X_i u` at one cell.
    pub fn dx_at(&self, u: &[f64], cell: usize, i: usize) -> f64 {
        let fwd = self.neighbor(cell, 2 * i).map_or(0.0, |n| u[n]);
        let bwd = self.neighbor(cell, 2 * i + 1).map_or(0.0, |n| u[n]);
        (fwd - bwd) / (2.0 * self.h)
    }

    /// Centered `Z_m u` at one cell.
    pub fn dz_at(&self, u: &[f64], cell: usize, m: usize) -> f64 {
        (u[self.vertical_neighbor(cell, m, true)] - u[self.vertical_neighbor(cell, m, false)]) / (2.0 * self.hv)
    }

    /// `(Γ(u), Γ^Z(u))` at one cell by centered differences.
    pub fn gammas_at(&self, u: &[f64], cell: usize) -> (f64, f64) {
        let g = (0..self.d).map(|i| self.dx_at(u, cell, i).powi(2)).sum();
        let gz = (0..self.hdim).map(|m| self.dz_at(u, cell, m).powi(2)).sum();
        (g, gz)
    }

    /// Cells whose horizontal coordinates all satisfy `|x_i| <= radius`, sampling every
    /// `stride`-th row index per axis and every `vstride`-th vertical cell.
    pub fn monitored_cells(&self, radius: f64, stride: usize, vstride: usize) -> Vec<usize> {
        let lim = (radius / self.h + 1e-9).floor() as i64;
        let (stride, vstride) = (stride.max(1) as i64, vstride.max(1));
        (0..self.rows)
            .filter(|&r| self.row_coords(r).iter().all(|&a| a.abs() <= lim && a.rem_euclid(stride) == 0))
            .flat_map(|r| (0..self.vsize).step_by(vstride).map(move |c| r * self.vsize + c))
            .collect()
    }

    /// Echo of the chart for headers and reports.
    pub fn describe(&self) -> ChartDescription {
        ChartDescription {
            structure: StructureFile::from_structure(&self.sc),
            config: self.config.clone(),
            h_vertical: self.hv,
            half_width_cells: self.n,
            period_cells: self.period,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDescription {
    pub structure: StructureFile,
    pub config: ChartConfig,
    pub h_vertical: f64,
    pub half_width_cells: i64,
    pub period_cells: usize,
}

/// Discrete nonnegative function on a chart at a given time.
#[derive(Clone, Debug)]
pub struct HeatField {
    pub chart: Arc<CarnotChart>,
    pub values: Vec<f64>,
    pub time: f64,
    /// Mass absorbed at the horizontal boundary so far.
    pub absorbed: f64,
}

/// Per-step bookkeeping reported by [`evolve_monitored`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub time: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    /// Mass that left through the boundary during this step.
    pub flux: f64,
}

impl HeatField {
    pub fn zeros(chart: &Arc<CarnotChart>) -> Self {
        HeatField { chart: chart.clone(), values: vec![0.0; chart.len()], time: 0.0, absorbed: 0.0 }
    }

    pub fn from_fn(chart: &Arc<CarnotChart>, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let values = (0..chart.len()).into_par_iter().map(|c| f(&chart.point(c))).collect();
        HeatField { chart: chart.clone(), values, time: 0.0, absorbed: 0.0 }
    }

    /// Unit mass concentrated in the cell nearest to `point`.
    pub fn delta(chart: &Arc<CarnotChart>, point: &[f64]) -> Result<Self, HeatError> {
        let mut f = HeatField::zeros(chart);
        let c = chart.cell_at(point)?;
        f.values[c] = 1.0 / chart.cell_volume();
        Ok(f)
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.chart.cell_volume()
    }

    pub fn at(&self, point: &[f64]) -> Result<f64, HeatError> {
        Ok(self.values[self.chart.cell_at(point)?])
    }

    pub fn lu(&self) -> Vec<f64> {
        self.chart.apply_l(&self.values)
    }
}

/// Evolves to `t_target` with steps no larger than `dt` (default: half the stability bound).
pub fn evolve(field: &HeatField, t_target: f64, dt: Option<f64>) -> Result<HeatField, HeatError> {
    let mut f = field.clone();
    evolve_in_place(&mut f, t_target, dt, |_| {})?;
    Ok(f)
}

/// Like [`evolve`], calling `monitor` after every step.
pub fn evolve_monitored(
    field: &HeatField,
    t_target: f64,
    dt: Option<f64>,
    monitor: impl FnMut(&StepStats),
) -> Result<HeatField, HeatError> {
    let mut f = field.clone();
    evolve_in_place(&mut f, t_target, dt, monitor)?;
    Ok(f)
}

pub fn evolve_in_place(
    f: &mut HeatField,
    t_target: f64,
    dt: Option<f64>,
    mut monitor: impl FnMut(&StepStats),
) -> Result<(), HeatError> {
    let chart = f.chart.clone();
    let max = chart.max_dt();
    let dt = match dt {
        Some(dt) if dt > max * (1.0 + 1e-12) || !(dt > 0.0) => return Err(HeatError::CflViolation { dt, max }),
        Some(dt) => dt,
        None => 0.5 * max,
    };
    let span = t_target - f.time;
    if span < -1e-12 {
        return Err(HeatError::InvalidParameter(format!("cannot evolve backwards from {} to {t_target}", f.time)));
    }
    if span <= 1e-15 {
        return Ok(());
    }
    let steps = (span / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let c = dt / (chart.h * chart.h);
    let a = 1.0 - 2.0 * chart.d as f64 * c;
    let vol = chart.cell_volume();
    let exit_rows: Vec<(usize, usize)> =
        (0..chart.rows).map(|r| (r, chart.exits(r))).filter(|&(_, e)| e > 0).collect();
    let mut scratch = vec![0.0; f.values.len()];
    let t0 = f.time;
    for step in 1..=steps {
        let vs = chart.vsize;
        let flux: f64 = exit_rows
            .iter()
            .map(|&(r, e)| e as f64 * f.values[r * vs..(r + 1) * vs].iter().sum::<f64>())
            .sum::<f64>()
            * c
            * vol;
        chart.neighbor_sum(&f.values, &mut scratch);
        f.values.par_iter_mut().zip(&scratch).for_each(|(u, s)| *u = a * *u + c * s);
        f.time = t0 + span * step as f64 / steps as f64;
        f.absorbed += flux;
        let (min, max, sum) = f
            .values
            .par_iter()
            .fold(|| (f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), &v| (lo.min(v), hi.max(v), s + v))
            .reduce(|| (f64::INFINITY, f64::NEG_INFINITY, 0.0), |x, y| (x.0.min(y.0), x.1.max(y.1), x.2 + y.2));
        if !sum.is_finite() || !min.is_finite() || !max.is_finite() {
            return Err(HeatError::NonFiniteValue(f.time));
        }
        monitor(&StepStats { time: f.time, mass: sum * vol, min, max, flux });
    }
    f.time = t_target;
    Ok(())
}
