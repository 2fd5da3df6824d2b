//! The desk-scale heat suite: solver invariants plus every estimate check, with one
//! refinement level for the Li-Yau estimate.

use super::checks::{
    check_li_yau, check_variational, harnack_on, li_yau_at_maximum_on, li_yau_on, pair_times, select,
    semigroup_laws_on, snapshots, EstimateReport, HarnackPair, Monitor, SemigroupLawsInput, VariationalWeight,
};
use super::{evolve, evolve_monitored, CarnotChart, ChartConfig, HeatError, HeatField};
use crate::forms::CDParams;
use crate::structures::StructureConstants;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub chart: ChartConfig,
    /// Chart at twice the spacing, for the refinement comparison.
    pub coarse_chart: ChartConfig,
    /// Tolerances are `c_tol · h`.
    pub c_tol: f64,
    pub monitor: Monitor,
    /// Width of the Gaussian factor of the smooth initial data.
    pub bump_sigma: f64,
    pub li_yau_times: Vec<f64>,
    pub harnack_points: Vec<Vec<f64>>,
    pub harnack_s: f64,
    pub harnack_t: f64,
    pub kernel_times: Vec<f64>,
    pub gradient_times: Vec<f64>,
    pub variational_t: f64,
    pub variational_epsilon: f64,
    pub resolution: usize,
    pub off_diagonal_epsilon: f64,
    /// Time for the mass and symmetry checks.
    pub solver_time: f64,
    pub symmetry_points: [Vec<f64>; 2],
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let chart = ChartConfig::default();
        let coarse_chart = ChartConfig { h: 2.0 * chart.h, ..chart.clone() };
        SuiteConfig {
            chart,
            coarse_chart,
            c_tol: 1.0,
            monitor: Monitor::default(),
            bump_sigma: 0.5,
            li_yau_times: vec![0.1, 0.2, 0.4],
            harnack_points: vec![
                vec![0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0],
                vec![0.0, 0.5, 0.125],
                vec![-0.5, -0.25, 0.0],
                vec![0.25, -0.5, -0.25],
            ],
            harnack_s: 0.1,
            harnack_t: 0.2,
            kernel_times: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            gradient_times: vec![0.05, 0.1, 0.2],
            variational_t: 0.2,
            variational_epsilon: 1e-3,
            resolution: 4,
            off_diagonal_epsilon: 0.5,
            solver_time: 0.1,
            symmetry_points: [vec![0.25, -0.125, 0.125], vec![-0.1875, 0.25, -0.0625]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub reports: Vec<EstimateReport>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn get(&self, check: &str) -> Option<&EstimateReport> {
        self.reports.iter().find(|r| r.check == check)
    }
}

/// `exp(−|x|²/(2σ²)) · Π_m (1 + ½cos(2π z_m / P))`: smooth, positive, periodic in `z`.
pub fn smooth_bump(point: &[f64], d: usize, sigma: f64, period: f64) -> f64 {
    let r2: f64 = point[..d].iter().map(|x| x * x).sum();
    let v: f64 = point[d..].iter().map(|z| 1.0 + 0.5 * (2.0 * PI * z / period).cos()).product();
    (-r2 / (2.0 * sigma * sigma)).exp() * v
}

fn bump_field(chart: &Arc<CarnotChart>, sigma: f64) -> HeatField {
    let (d, period) = (chart.d(), chart.config().vertical_period);
    HeatField::from_fn(chart, move |p| smooth_bump(p, d, sigma, period))
}

/// Positivity and mass accounting for a unit mass evolved to `t`.
fn solver_invariants(chart: &Arc<CarnotChart>, t: f64) -> Result<EstimateReport, HeatError> {
    let mut report = EstimateReport::new(
        "mass_positivity",
        "sub-Markov property: positivity kept and mass non-increasing each step",
        0.0,
    );
    let delta = HeatField::delta(chart, &vec![0.0; chart.d() + chart.hdim()])?;
    let mut prev = delta.mass();
    let mut steps = 0usize;
    let (mut worst_mass, mut worst_min) = (f64::INFINITY, f64::INFINITY);
    let mut flux_total = 0.0;
    let mut accounting: f64 = 0.0;
    let f = evolve_monitored(&delta, t, None, |s| {
        steps += 1;
        // Relative slack allowed for summation rounding.
        worst_mass = worst_mass.min((prev * (1.0 + 1e-12) - s.mass) / prev);
        worst_min = worst_min.min(s.min);
        flux_total += s.flux;
        accounting = accounting.max((prev - s.mass - s.flux).abs());
        prev = s.mass;
    })?;
    report.samples = steps;
    report.worst_residual = worst_mass.min(worst_min).min(f.mass() - 0.99);
    report.time = Some(t);
    report.extra.insert("final_mass".into(), f.mass());
    report.extra.insert("absorbed".into(), flux_total);
    report.extra.insert("max_step_accounting_error".into(), accounting);
    report.extra.insert("min_value".into(), worst_min);
    report.notes.push("residual = min(step mass decrease, min value, final mass − 0.99)".into());
    report.passed = report.worst_residual >= 0.0;
    Ok(report)
}

/// Kernel symmetry `p̂(a,b,t) = p̂(b,a,t)`.
fn kernel_symmetry(chart: &Arc<CarnotChart>, a: &[f64], b: &[f64], t: f64) -> Result<EstimateReport, HeatError> {
    let mut report = EstimateReport::new("kernel_symmetry", "symmetry of the heat kernel, within 1e-8 relative", 0.0);
    let pab = evolve(&HeatField::delta(chart, a)?, t, None)?.at(b)?;
    let pba = evolve(&HeatField::delta(chart, b)?, t, None)?.at(a)?;
    let rel = (pab - pba).abs() / pab.abs().max(pba.abs());
    report.extra.insert("p_ab".into(), pab);
    report.extra.insert("p_ba".into(), pba);
    report.extra.insert("relative_difference".into(), rel);
    report.observe(1e-8 - rel, Some(a.iter().chain(b).copied().collect()), Some(t));
    Ok(report.finish())
}

/// Runs every check of the suite. Returns errors only for invalid configurations or
/// solver failures; inequality failures are recorded in the reports.
pub fn run_heat_suite(sc: &StructureConstants, p: &CDParams, cfg: &SuiteConfig) -> Result<SuiteReport, HeatError> {
    let fine = CarnotChart::new(sc, cfg.chart.clone())?;
    let coarse = CarnotChart::new(sc, cfg.coarse_chart.clone())?;
    let tol = |chart: &CarnotChart| cfg.c_tol * chart.h();
    let origin = vec![0.0; fine.d() + fine.hdim()];
    let mut reports = vec![
        solver_invariants(&fine, cfg.solver_time)?,
        kernel_symmetry(&fine, &cfg.symmetry_points[0], &cfg.symmetry_points[1], cfg.solver_time)?,
    ];

    let bump = bump_field(&fine, cfg.bump_sigma);
    let pairs: Vec<HarnackPair> = cfg
        .harnack_points
        .iter()
        .flat_map(|x| {
            cfg.harnack_points.iter().map(move |y| HarnackPair { x: x.clone(), s: cfg.harnack_s, y: y.clone(), t: cfg.harnack_t })
        })
        .collect();
    // One evolution of the smooth data serves every check that uses it.
    let mut times: Vec<f64> =
        cfg.li_yau_times.iter().chain(&cfg.gradient_times).copied().chain(pair_times(&pairs)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let series = snapshots(&bump, &times)?;
    let li_yau_snaps = select(&series, &cfg.li_yau_times)?;

    let ly_fine = li_yau_on(&li_yau_snaps, p, tol(&fine), &cfg.monitor);
    let mut ly_coarse =
        check_li_yau(&bump_field(&coarse, cfg.bump_sigma), p, &cfg.li_yau_times, tol(&coarse), &cfg.monitor)?;
    ly_coarse.check = "li_yau_coarse".into();
    ly_coarse.informational = true;
    let mut refine = EstimateReport::new(
        "li_yau_refinement",
        "Li-Yau violation within tol(h) and shrinking by at least 1.5x under h → h/2",
        tol(&fine),
    );
    let (vf, vc) = (ly_fine.violation(), ly_coarse.violation());
    refine.samples = 2;
    refine.worst_residual = -vf;
    refine.extra.insert("violation_fine".into(), vf);
    refine.extra.insert("violation_coarse".into(), vc);
    refine.extra.insert("margin_fine".into(), ly_fine.worst_residual);
    refine.extra.insert("margin_coarse".into(), ly_coarse.worst_residual);
    let shrinks = if vf == 0.0 {
        refine.notes.push("no violation at the fine level; shrinkage holds trivially".into());
        true
    } else {
        refine.extra.insert("shrink_factor".into(), vc / vf);
        vc >= 1.5 * vf
    };
    refine.passed = vf <= tol(&fine) && shrinks;
    reports.extend([ly_fine, ly_coarse, refine]);
    reports.push(li_yau_at_maximum_on(&li_yau_snaps, p, tol(&fine), &cfg.monitor));
    reports.push(harnack_on(&series, &pairs, p, tol(&fine), cfg.resolution)?);

    let input = SemigroupLawsInput {
        delta: HeatField::delta(&fine, &origin)?,
        x0: origin.clone(),
        smooth: bump.clone(),
        kernel_times: cfg.kernel_times.clone(),
        gradient_times: cfg.gradient_times.clone(),
        monitor: cfg.monitor.clone(),
        resolution: cfg.resolution,
        off_diagonal_epsilon: cfg.off_diagonal_epsilon,
    };
    reports.extend(semigroup_laws_on(&input, &series, p, tol(&fine))?);
    drop(series);
    reports.push(check_variational(
        &bump,
        cfg.variational_t,
        p,
        VariationalWeight::CUBIC,
        cfg.variational_epsilon,
        tol(&fine),
        &cfg.monitor,
    )?);

    let passed = reports.iter().all(|r| r.passed || r.informational);
    Ok(SuiteReport { config: cfg.clone(), reports, passed })
}
