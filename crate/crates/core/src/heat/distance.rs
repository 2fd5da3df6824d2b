//! Carnot–Carathéodory distance by shortest paths over horizontal lattice segments.
//!
//! An edge from `p` is the horizontal segment `s ↦ p·(s h v, 0)`, `s ∈ [0,1]`, for an
//! integer direction `v`. Its length is exactly `h|v|`, so every graph path is a true
//! horizontal curve and graph distances bound the CC distance from above. Costs are
//! rounded up to multiples of `2⁻²⁰`, which keeps the triangle inequality exact.

use super::{CarnotChart, HeatError};
use num_integer::Integer;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

const SCALE: f64 = (1u64 << 20) as f64;
const MAX_EXPANSIONS: usize = 40_000_000;

/// Primitive integer directions with entries in `[−R, R]` and at most two nonzero entries.
/// The sets are nested in `R`, so refining the resolution only adds edges.
pub fn directions(d: usize, resolution: usize) -> Vec<Vec<i64>> {
    let r = resolution.max(1) as i64;
    let mut out = Vec::new();
    for i in 0..d {
        let mut v = vec![0; d];
        v[i] = 1;
        out.push(v.clone());
        v[i] = -1;
        out.push(v);
        for j in i + 1..d {
            for m in -r..=r {
                for n in -r..=r {
                    if m == 0 || n == 0 || m.gcd(&n) != 1 {
                        continue;
                    }
                    let mut v = vec![0; d];
                    v[i] = m;
                    v[j] = n;
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Fixed capacity for per-state coordinate arrays.
const MAX_AXES: usize = 8;

type Coords = [i64; MAX_AXES];

struct Graph<'a> {
    chart: &'a CarnotChart,
    dirs: Vec<Vec<i64>>,
    costs: Vec<u64>,
    /// `weights[k][m·d + i]`: vertical shift along direction `k` per unit of `a_i`.
    weights: Vec<Vec<i64>>,
    /// Row index offset of direction `k`.
    row_offsets: Vec<isize>,
}

impl<'a> Graph<'a> {
    fn new(chart: &'a CarnotChart, resolution: usize) -> Result<Self, HeatError> {
        let (d, hdim) = (chart.d(), chart.hdim());
        if d > MAX_AXES || hdim > MAX_AXES {
            return Err(HeatError::InvalidParameter(format!("distance search supports at most {MAX_AXES} axes per layer")));
        }
        let dirs = directions(d, resolution);
        let costs = dirs
            .iter()
            .map(|v| {
                let len = chart.h() * (v.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt();
                (len * SCALE).ceil() as u64
            })
            .collect();
        let side = 2 * chart.half_width_cells() as isize + 1;
        let weights = dirs
            .iter()
            .map(|v| {
                let mut w = vec![0; hdim * d];
                for i in 0..d {
                    let mut e = vec![0; d];
                    e[i] = 1;
                    for m in 0..hdim {
                        w[m * d + i] = (0..d).map(|j| v[j] * chart.vshift(&e, m, j)).sum();
                    }
                }
                w
            })
            .collect();
        let row_offsets = dirs.iter().map(|v| v.iter().fold(0isize, |acc, &x| acc * side + x as isize)).collect();
        Ok(Graph { chart, dirs, costs, weights, row_offsets })
    }

    /// Lattice indices `(a, b)` of a cell, `b` reduced to `[0, P)`.
    fn decode(&self, cell: usize) -> (Coords, Coords) {
        let c = self.chart;
        let (side, p) = (2 * c.half_width_cells() as usize + 1, c.period_cells());
        let (mut row, mut col) = (cell / c.vsize(), cell % c.vsize());
        let (mut a, mut b) = ([0; MAX_AXES], [0; MAX_AXES]);
        for i in (0..c.d()).rev() {
            a[i] = (row % side) as i64 - c.half_width_cells();
            row /= side;
        }
        for m in (0..c.hdim()).rev() {
            b[m] = (col % p) as i64;
            col /= p;
        }
        (a, b)
    }

    /// Successor along direction `k` from the cell with indices `(a, b)`: the new cell and
    /// the unreduced vertical shift. `None` when the segment leaves the box.
    fn step(&self, row: usize, a: &Coords, b: &Coords, k: usize) -> Option<(usize, Coords)> {
        let c = self.chart;
        let (d, n, p) = (c.d(), c.half_width_cells(), c.period_cells() as i64);
        let v = &self.dirs[k];
        if (0..d).any(|i| (a[i] + v[i]).abs() > n) {
            return None;
        }
        let w = &self.weights[k];
        let mut shift = [0; MAX_AXES];
        let mut col = 0usize;
        for m in 0..c.hdim() {
            shift[m] = (0..d).map(|i| a[i] * w[m * d + i]).sum::<i64>();
            col = col * p as usize + (b[m] + shift[m]).rem_euclid(p) as usize;
        }
        let row = (row as isize + self.row_offsets[k]) as usize;
        Some((row * c.vsize() + col, shift))
    }
}

fn start_cell(chart: &CarnotChart, point: &[f64]) -> Result<usize, HeatError> {
    chart.cell_at(point)
}

fn wrap_nearest(x: i64, p: i64) -> i64 {
    let r = x.rem_euclid(p);
    if 2 * r > p {
        r - p
    } else {
        r
    }
}

/// Admissible lower bound on the remaining length, in cost units.
struct Heuristic {
    /// `Some(|g|)` when `d = 2`, one vertical axis, and the single bracket `[X₁,X₂] = gZ`;
    /// then the exact Heisenberg distance is available as a lower bound.
    planar_gamma: Option<f64>,
}

impl Heuristic {
    fn new(chart: &CarnotChart) -> Self {
        let sc = chart.structure();
        let planar_gamma = if chart.d() == 2 && chart.hdim() == 1 {
            Some(crate::exact::to_f64(sc.gamma(0, 0, 1)).abs()).filter(|g| *g > 0.0)
        } else {
            None
        };
        Heuristic { planar_gamma }
    }

    fn estimate(&self, chart: &CarnotChart, a: &Coords, b: &Coords, ta: &Coords, tb: &Coords) -> u64 {
        let d = chart.d();
        let chord = chart.h() * (0..d).map(|i| ((ta[i] - a[i]) as f64).powi(2)).sum::<f64>().sqrt();
        let mut bound = chord;
        if let Some(g) = self.planar_gamma {
            // Group element p⁻¹·t has vertical part z_t − z − ½γ(x, x_t); any lift mod the period.
            let rel = tb[0] - b[0] - (0..d).map(|j| ta[j] * chart.vshift(&a[..d], 0, j)).sum::<i64>();
            let z = wrap_nearest(rel, chart.period_cells() as i64) as f64 * chart.hv();
            bound = heisenberg_distance(chord, z.abs() / g);
        }
        (bound * SCALE * (1.0 - 1e-9)).floor().max(0.0) as u64
    }
}

/// Exact CC distance on the Heisenberg group with `[X₁,X₂] = Z` from the origin to a point
/// with horizontal radius `c` and vertical coordinate `±w`.
///
/// Minimizers are circular arcs of turning angle `2θ`, `θ ∈ [0, π)`: such an arc of length `ℓ`
/// has chord `ℓ sinθ/θ` and encloses area `ℓ²(2θ − sin 2θ)/(8θ²)` with its chord. Hence `θ`
/// solves `(2θ − sin 2θ)/(8 sin²θ) = w/c²` and `ℓ = cθ/sinθ`.
pub fn heisenberg_distance(c: f64, w: f64) -> f64 {
    use std::f64::consts::PI;
    if w <= 0.0 {
        return c;
    }
    if c <= 0.0 {
        return (4.0 * PI * w).sqrt();
    }
    let target = w / (c * c);
    let mu = |t: f64| {
        if t < 1e-3 {
            // Series keeps the cancellation in 2θ − sin 2θ accurate.
            let t2 = t * t;
            t * (1.0 - t2 / 5.0) / (6.0 * (1.0 - t2 / 3.0))
        } else {
            (2.0 * t - (2.0 * t).sin()) / (8.0 * t.sin().powi(2))
        }
    };
    let (mut lo, mut hi) = (0.0f64, PI);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mu(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo < 1e-8 {
        return c;
    }
    if lo > PI - 1e-7 {
        // sinθ is too small to divide by; fall back to the isoperimetric bound.
        return ((4.0 * PI * w).sqrt() - c).max(c);
    }
    c * lo / lo.sin()
}

/// Graph distance between the lattice points nearest to `a` and `b`, in the chart's
/// quotient by the vertical period. Non-increasing in `resolution`.
pub fn cc_distance(chart: &CarnotChart, a: &[f64], b: &[f64], resolution: usize) -> Result<f64, HeatError> {
    let graph = Graph::new(chart, resolution)?;
    let (start, target) = (start_cell(chart, a)?, start_cell(chart, b)?);
    let (ta, tb) = graph.decode(target);
    let heur = Heuristic::new(chart);
    let mut best = vec![u64::MAX; chart.len()];
    let mut heap = BinaryHeap::new();
    best[start] = 0;
    let (sa, sb) = graph.decode(start);
    heap.push(Reverse((heur.estimate(chart, &sa, &sb, &ta, &tb), 0u64, start)));
    let mut expansions = 0usize;
    while let Some(Reverse((_, g, cell))) = heap.pop() {
        if best[cell] < g {
            continue;
        }
        if cell == target {
            return Ok(g as f64 / SCALE);
        }
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(HeatError::Unreachable);
        }
        let (ca, cb) = graph.decode(cell);
        for k in 0..graph.dirs.len() {
            let Some((next, _)) = graph.step(cell / chart.vsize(), &ca, &cb, k) else { continue };
            let ng = g + graph.costs[k];
            if ng < best[next] {
                best[next] = ng;
                let (na, nb) = graph.decode(next);
                heap.push(Reverse((ng + heur.estimate(chart, &na, &nb, &ta, &tb), ng, next)));
            }
        }
    }
    Err(HeatError::Unreachable)
}

/// Euclidean distance of the horizontal projections; a lower bound for the CC distance
/// because the projection of a subunit path has Euclidean speed at most 1.
pub fn cc_distance_lower_bound(a: &[f64], b: &[f64], d: usize) -> f64 {
    a[..d].iter().zip(&b[..d]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Volume of the lattice ball `{q : graph distance(center, q) ≤ r}`: the number of cells
/// times the cell volume.
pub fn ball_measure(chart: &CarnotChart, center: &[f64], r: f64, resolution: usize) -> Result<f64, HeatError> {
    Ok(distances_within(chart, center, r, resolution)?.len() as f64 * chart.cell_volume())
}

/// Graph distances from `center` to every cell within `r`, as `(cell, distance)` pairs.
///
/// The search tracks unwrapped vertical coordinates; if the ball spans a full vertical
/// period or touches the horizontal boundary it is reported as clipped.
pub fn distances_within(
    chart: &CarnotChart,
    center: &[f64],
    r: f64,
    resolution: usize,
) -> Result<Vec<(usize, f64)>, HeatError> {
    if !(r >= 0.0) {
        return Err(HeatError::InvalidParameter(format!("radius must be nonnegative, got {r}")));
    }
    let graph = Graph::new(chart, resolution)?;
    let start = start_cell(chart, center)?;
    let limit = (r * SCALE).floor() as u64;
    let (d, hdim, n, p) = (chart.d(), chart.hdim(), chart.half_width_cells(), chart.period_cells() as i64);
    // Best cost per cell and the unwrapped vertical coordinates it was reached with,
    // relative to the center.
    let mut best = vec![u64::MAX; chart.len()];
    let mut lifts = vec![0i64; chart.len() * hdim];
    let (mut lo, mut hi) = ([0i64; MAX_AXES], [0i64; MAX_AXES]);
    let mut settled = Vec::new();
    let mut heap = BinaryHeap::new();
    best[start] = 0;
    heap.push(Reverse((0u64, start)));
    while let Some(Reverse((g, cell))) = heap.pop() {
        if best[cell] < g {
            continue;
        }
        let (ca, cb) = graph.decode(cell);
        if ca[..d].iter().any(|a| a.abs() == n) {
            return Err(HeatError::BallClipped(r));
        }
        let lift: Coords = std::array::from_fn(|m| if m < hdim { lifts[cell * hdim + m] } else { 0 });
        for m in 0..hdim {
            lo[m] = lo[m].min(lift[m]);
            hi[m] = hi[m].max(lift[m]);
            if hi[m] - lo[m] >= p {
                return Err(HeatError::BallClipped(r));
            }
        }
        settled.push((cell, g as f64 / SCALE));
        for k in 0..graph.dirs.len() {
            let ng = g + graph.costs[k];
            if ng > limit {
                continue;
            }
            let Some((next, shift)) = graph.step(cell / chart.vsize(), &ca, &cb, k) else { continue };
            if ng < best[next] {
                best[next] = ng;
                for m in 0..hdim {
                    lifts[next * hdim + m] = lift[m] + shift[m];
                }
                heap.push(Reverse((ng, next)));
            }
        }
    }
    Ok(settled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_arcs_have_unit_length() {
        for theta in [1e-4, 0.01, 0.3, 1.0, 2.0, 3.0, 3.1] {
            let c = f64::sin(theta) / theta;
            let w = (2.0 * theta - f64::sin(2.0 * theta)) / (8.0 * theta * theta);
            assert!((heisenberg_distance(c, w) - 1.0).abs() < 1e-9, "θ = {theta}");
        }
        assert!((heisenberg_distance(0.0, 1.0) - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert_eq!(heisenberg_distance(0.7, 0.0), 0.7);
    }

    #[test]
    fn nested_direction_sets() {
        let (a, b) = (directions(2, 2), directions(2, 4));
        assert!(a.iter().all(|v| b.contains(v)));
        assert_eq!(directions(2, 1).len(), 8);
    }
}
