use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;
use transverse_cd::exact::q;
use transverse_cd::forms::CDParams;
use transverse_cd::heat::{
    ball_measure, cc_distance, cc_distance_lower_bound, check_harnack, check_li_yau, check_variational, directions,
    evolve, evolve_monitored, heisenberg_distance, read_snapshot, write_snapshot, CarnotChart, ChartConfig, HarnackPair,
    HeatError, HeatField, Monitor, VariationalWeight,
};
use transverse_cd::structures::{catalog_model, parse_model_spec, StructureConstants};

fn h1() -> StructureConstants {
    catalog_model(&parse_model_spec("heisenberg:1").unwrap()).unwrap()
}

fn chart(sc: &StructureConstants, h: f64, half_width: f64, period: f64) -> Arc<CarnotChart> {
    CarnotChart::new(sc, ChartConfig { h, half_width, vertical_period: period }).unwrap()
}

fn h1_params() -> CDParams {
    CDParams::parse("0,1/2,1,2").unwrap()
}

/// With γ = 0 the group is Euclidean and a Gaussian of variance σ² has variance σ² + 2t
/// after time t.
#[test]
fn euclidean_limit_matches_gaussian() {
    let sc = StructureConstants::zero(2, 0);
    let c = chart(&sc, 1.0 / 32.0, 3.0, 1.0);
    let s2 = 0.25;
    let f0 = HeatField::from_fn(&c, |p| (-(p[0] * p[0] + p[1] * p[1]) / (2.0 * s2)).exp());
    let t = 0.1;
    let f = evolve(&f0, t, None).unwrap();
    let v = s2 + 2.0 * t;
    let mut worst: f64 = 0.0;
    for cell in c.monitored_cells(1.0, 4, 1) {
        let p = c.point(cell);
        let exact = s2 / v * (-(p[0] * p[0] + p[1] * p[1]) / (2.0 * v)).exp();
        worst = worst.max((f.values[cell] - exact).abs() / exact);
    }
    assert!(worst < 1e-3, "relative error {worst}");
}

/// `L[g(r) cos kz] = (Δg − r²k²g/4) cos kz` for radial `g` on H¹.
#[test]
fn discrete_operators_converge_to_sub_laplacian() {
    let sc = h1();
    let (sigma2, period) = (0.3f64, 1.0f64);
    let k = 2.0 * PI / period;
    let f = |p: &[f64]| (-(p[0] * p[0] + p[1] * p[1]) / (2.0 * sigma2)).exp() * (k * p[2]).cos();
    let lf = |p: &[f64]| {
        let r2 = p[0] * p[0] + p[1] * p[1];
        let g = (-r2 / (2.0 * sigma2)).exp();
        (g * (r2 / (sigma2 * sigma2) - 2.0 / sigma2) - r2 * k * k * g / 4.0) * (k * p[2]).cos()
    };
    let mut errs = Vec::new();
    for h in [1.0 / 8.0, 1.0 / 16.0] {
        let c = chart(&sc, h, 1.5, period);
        let u = HeatField::from_fn(&c, f);
        let (l, lc) = (c.apply_l(&u.values), c.apply_composed_centered(&u.values));
        let (mut e1, mut e2): (f64, f64) = (0.0, 0.0);
        for cell in c.monitored_cells(0.75, 1, 1) {
            let exact = lf(&c.point(cell));
            e1 = e1.max((l[cell] - exact).abs());
            e2 = e2.max((lc[cell] - exact).abs());
        }
        // The two discretizations agree to the same order.
        let diff = c.monitored_cells(0.75, 1, 1).iter().map(|&i| (l[i] - lc[i]).abs()).fold(0.0, f64::max);
        assert!(diff <= e1 + e2 + 1e-12);
        errs.push((e1, e2));
    }
    // Second order: halving h cuts the error by about four.
    assert!(errs[1].0 < errs[0].0 / 3.0 && errs[1].1 < errs[0].1 / 3.0, "{errs:?}");
    assert!(errs[1].0 < 0.05 && errs[1].1 < 0.1, "{errs:?}");
}

#[test]
fn operator_is_symmetric_and_nonpositive() {
    let c = chart(&h1(), 0.25, 1.0, 0.5);
    let u = HeatField::from_fn(&c, |p| (p[0] + 2.0 * p[1] * p[1] + (4.0 * PI * p[2]).sin()).cos());
    let v = HeatField::from_fn(&c, |p| (-(p[0] * p[0]) - p[1] + p[2]).exp());
    let (lu, lv) = (c.apply_l(&u.values), c.apply_l(&v.values));
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    assert_relative_eq!(dot(&u.values, &lv), dot(&lu, &v.values), max_relative = 1e-12);
    assert!(dot(&u.values, &lu) < 0.0 && dot(&v.values, &lv) < 0.0);
}

#[test]
fn mass_and_positivity_every_step() {
    let c = chart(&h1(), 1.0 / 8.0, 2.0, 1.0);
    let f0 = HeatField::delta(&c, &[0.0, 0.0, 0.0]).unwrap();
    let mut prev = (f0.mass(), f0.values.iter().cloned().fold(0.0, f64::max));
    let mut absorbed = 0.0;
    let f = evolve_monitored(&f0, 0.1, None, |s| {
        assert!(s.min >= 0.0);
        assert!(s.mass <= prev.0 * (1.0 + 1e-12));
        assert!(s.max <= prev.1 * (1.0 + 1e-12));
        assert!((prev.0 - s.mass - s.flux).abs() < 1e-12);
        absorbed += s.flux;
        prev = (s.mass, s.max);
    })
    .unwrap();
    assert!(f.mass() <= 1.0 && f.mass() >= 0.99, "{}", f.mass());
    assert_relative_eq!(f.absorbed, absorbed, max_relative = 1e-12);
}

#[test]
fn kernel_is_symmetric() {
    let c = chart(&h1(), 1.0 / 8.0, 2.0, 1.0);
    let (a, b) = ([0.25, -0.125, 0.125], [-0.375, 0.25, -0.25]);
    let pab = evolve(&HeatField::delta(&c, &a).unwrap(), 0.05, None).unwrap().at(&b).unwrap();
    let pba = evolve(&HeatField::delta(&c, &b).unwrap(), 0.05, None).unwrap().at(&a).unwrap();
    assert!(pab > 0.0);
    assert!((pab - pba).abs() <= 1e-8 * pab);
}

#[test]
fn solver_contract() {
    let c = chart(&h1(), 1.0 / 8.0, 1.0, 0.5);
    let z = HeatField::zeros(&c);
    assert!(evolve(&z, 0.3, None).unwrap().values.iter().all(|&v| v == 0.0));
    let too_big = 2.0 * c.max_dt();
    assert!(matches!(evolve(&z, 0.3, Some(too_big)), Err(HeatError::CflViolation { .. })));
    assert!(matches!(CarnotChart::new(&catalog_model(&parse_model_spec("su2").unwrap()).unwrap(), ChartConfig::default()), Err(HeatError::NotCarnot)));
    assert!(c.cell_at(&[5.0, 0.0, 0.0]).is_err());
}

#[test]
fn snapshot_round_trip() {
    let c = chart(&h1(), 0.25, 1.0, 0.5);
    let mut f = evolve(&HeatField::from_fn(&c, |p| 1.0 + p[0] * p[1] - p[2]), 0.01, None).unwrap();
    f.absorbed = 0.125;
    let mut buf = Vec::new();
    write_snapshot(&f, &mut buf).unwrap();
    let g = read_snapshot(buf.as_slice()).unwrap();
    assert_eq!(g.values, f.values);
    assert_eq!((g.time, g.absorbed), (f.time, f.absorbed));
    assert_eq!(g.chart.describe(), f.chart.describe());
    // Values are the trailing little-endian doubles.
    let tail = &buf[buf.len() - 8..];
    assert_eq!(f64::from_le_bytes(tail.try_into().unwrap()), *f.values.last().unwrap());
    buf[0] = b'X';
    assert!(read_snapshot(buf.as_slice()).is_err());
}

#[test]
fn heisenberg_distance_closed_form() {
    assert_relative_eq!(heisenberg_distance(1.0, 0.0), 1.0);
    assert_relative_eq!(heisenberg_distance(0.0, 1.0), 2.0 * PI.sqrt(), max_relative = 1e-14);
    // Dilations: d(λc, λ²w) = λ d(c, w).
    for (c, w) in [(1.0, 0.3), (0.5, 2.0), (2.0, 0.01)] {
        assert_relative_eq!(heisenberg_distance(3.0 * c, 9.0 * w), 3.0 * heisenberg_distance(c, w), max_relative = 1e-9);
        assert!(heisenberg_distance(c, w) >= c);
    }
    // A half circle of length ℓ = πρ: chord 2ρ and area πρ²/2.
    let rho = 0.7;
    assert_relative_eq!(heisenberg_distance(2.0 * rho, PI * rho * rho / 2.0), PI * rho, max_relative = 1e-9);
}

#[test]
fn graph_distances() {
    let c = chart(&h1(), 1.0 / 8.0, 1.5, 4.0);
    let o = [0.0, 0.0, 0.0];
    assert_relative_eq!(cc_distance(&c, &o, &[1.0, 0.0, 0.0], 1).unwrap(), 1.0, max_relative = 1e-6);
    let pts = [[0.25, 0.5, 0.125], [-0.5, 0.25, -0.25], [0.0, -0.75, 0.5]];
    for a in &pts {
        for b in &pts {
            let dab = cc_distance(&c, a, b, 2).unwrap();
            assert_eq!(dab, cc_distance(&c, b, a, 2).unwrap());
            assert!(dab >= cc_distance_lower_bound(a, b, 2) - 1e-9);
            for m in &pts {
                assert!(dab <= cc_distance(&c, a, m, 2).unwrap() + cc_distance(&c, m, b, 2).unwrap() + 1e-12);
            }
        }
    }
    let z = [0.0, 0.0, 1.0];
    let ds: Vec<f64> = [1, 2, 4].iter().map(|&r| cc_distance(&c, &o, &z, r).unwrap()).collect();
    assert!(ds.windows(2).all(|w| w[1] <= w[0]), "{ds:?}");
    assert!(ds[2] >= 2.0 * PI.sqrt() * 0.999);
    assert_eq!(directions(2, 1).len(), 8);
}

#[test]
fn ball_measure_basics() {
    let c = chart(&h1(), 1.0 / 8.0, 1.5, 2.0);
    let o = [0.0, 0.0, 0.0];
    assert_eq!(ball_measure(&c, &o, 1e-9, 2).unwrap(), c.cell_volume());
    let rs = [0.25, 0.5, 0.75];
    let ms: Vec<f64> = rs.iter().map(|&r| ball_measure(&c, &o, r, 2).unwrap()).collect();
    assert!(ms.windows(2).all(|w| w[0] <= w[1]));
    assert!(matches!(ball_measure(&c, &o, 3.0, 2), Err(HeatError::BallClipped(_))));
}

/// Coarse-grid runs of the estimate checks: they must produce samples and pass.
#[test]
fn estimate_checks_on_a_coarse_grid() {
    let c = chart(&h1(), 1.0 / 8.0, 3.0, 1.0);
    let bump = HeatField::from_fn(&c, |p| {
        (-(p[0] * p[0] + p[1] * p[1]) / 0.5).exp() * (1.0 + 0.5 * (2.0 * PI * p[2]).cos())
    });
    let p = h1_params();
    let tol = c.h();
    let monitor = Monitor::default();
    let ly = check_li_yau(&bump, &p, &[0.1, 0.2], tol, &monitor).unwrap();
    assert!(ly.passed && ly.samples > 0, "{ly:?}");
    let pairs = vec![
        HarnackPair { x: vec![0.0, 0.0, 0.0], s: 0.1, y: vec![0.5, 0.0, 0.0], t: 0.2 },
        HarnackPair { x: vec![0.25, -0.5, 0.25], s: 0.1, y: vec![0.0, 0.0, 0.0], t: 0.2 },
    ];
    let hr = check_harnack(&bump, &pairs, &p, tol, 2).unwrap();
    assert!(hr.passed && hr.samples == 2, "{hr:?}");
    let bad = vec![HarnackPair { x: vec![0.0; 3], s: 0.2, y: vec![0.0; 3], t: 0.2 }];
    assert!(check_harnack(&bump, &bad, &p, tol, 2).is_err());
    let var = check_variational(&bump, 0.2, &p, VariationalWeight::CUBIC, 1e-3, tol, &monitor).unwrap();
    assert!(var.passed && var.samples > 0, "{var:?}");
    assert!(check_variational(&bump, 0.2, &p, VariationalWeight::Power(2), 1e-3, tol, &monitor).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lattice_points_round_trip(a in -8i64..=8, b in -8i64..=8, z in 0usize..256) {
        let c = chart(&h1(), 1.0 / 8.0, 1.0, 1.0);
        let cell = c.cell_of_indices(&[a, b], &[z as i64]).unwrap();
        prop_assert_eq!(c.cell_at(&c.point(cell)).unwrap(), cell);
        let q0 = q(0);
        prop_assert!(c.structure().gamma(0, 0, 0) == &q0);
    }

    #[test]
    fn heisenberg_distance_is_monotone(c in 0.0f64..3.0, w1 in 0.0f64..3.0, w2 in 0.0f64..3.0) {
        let (lo, hi) = if w1 < w2 { (w1, w2) } else { (w2, w1) };
        prop_assert!(heisenberg_distance(c, lo) <= heisenberg_distance(c, hi) + 1e-9);
        prop_assert!(heisenberg_distance(c, hi) <= c + (4.0 * PI * hi).sqrt() + 1e-9);
    }
}
