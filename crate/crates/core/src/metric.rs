//! The M-graph distance, distance shells, and the comparison constants
//! between graph distance and Euclidean distance.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::complexes::{ComplexAddress, Point, Window};
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::geometry::FractalSpec;

const UNREACHED: u32 = u32::MAX;

/// Complex-adjacency distances from the complexes containing a point:
/// containing complexes are at 1, their neighbours at 2, and so on.
pub fn complex_distances(window: &Window, sources: &[usize]) -> Vec<u32> {
    let mut dist = vec![UNREACHED; window.num_complexes()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s] == UNREACHED {
            dist[s] = 1;
            queue.push_back(s);
        }
    }
    while let Some(c) = queue.pop_front() {
        for &d in window.neighbours(c) {
            if dist[d] == UNREACHED {
                dist[d] = dist[c] + 1;
                queue.push_back(d);
            }
        }
    }
    dist
}

/// `d_M(x, y)` by chains of window complexes. A chain through the window is
/// also a chain of the unbounded fractal, so this never underestimates.
pub fn graph_distance(window: &Window, x: &Point, y: &Point) -> Result<u32> {
    if x.pos == y.pos {
        return Ok(0);
    }
    let dist = complex_distances(window, &window.containing(x)?);
    let d = window
        .containing(y)?
        .iter()
        .map(|&c| dist[c])
        .min()
        .unwrap_or(UNREACHED);
    if d == UNREACHED {
        return Err(Error::Resource {
            what: "graph distance window (enlarge the window)".into(),
            requested: window.depth() as u128 + 1,
            limit: window.depth() as u128,
        });
    }
    Ok(d)
}

/// `#L_{M,n,x}` for `n = 1..=n_max`, with member complexes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellTable {
    pub base: FieldElement,
    pub base_level: i32,
    pub level: i32,
    pub counts: Vec<usize>,
    pub members: Vec<Vec<ComplexAddress>>,
    /// Shells `1..=exact_through` cannot grow in a larger window.
    pub exact_through: usize,
}

/// Window vertex ids where complexes outside `K^{<M+m>}` attach.
pub fn frontier(window: &Window) -> Vec<usize> {
    window
        .spec()
        .primary_vertices(window.top_level())
        .iter()
        .filter(|v| !v.is_zero())
        .filter_map(|v| window.vertex_id(v))
        .collect()
}

/// Shells by the recursion: incident complexes first, then complexes touching
/// the previous shell not yet counted.
pub fn shells(window: &Window, x: &Point, n_max: usize) -> Result<ShellTable> {
    let sources = window.containing(x)?;
    let dist = complex_distances(window, &sources);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_max];
    for (c, &d) in dist.iter().enumerate() {
        if d != UNREACHED && (d as usize) <= n_max {
            members[d as usize - 1].push(c);
        }
    }
    let exact_through = frontier(window)
        .iter()
        .flat_map(|&v| window.incident(v).iter().map(|&c| dist[c]))
        .min()
        .map_or(usize::MAX, |d| d as usize)
        .min(n_max);
    Ok(ShellTable {
        base: x.pos.clone(),
        base_level: x.level,
        level: window.level(),
        counts: members.iter().map(Vec::len).collect(),
        members: members
            .iter()
            .map(|m| m.iter().map(|&c| window.address(c)).collect())
            .collect(),
        exact_through,
    })
}

/// Shells by the supremum characterization: `Δ ∈ L_{M,n,x}` iff the largest
/// `d_M(x, z)` over `z ∈ Δ` is `n`. The supremum is taken over the vertices of
/// `Δ` and of its subcomplexes one level down (`fine` must be the window one
/// level below `window`, one level deeper).
pub fn shells_by_sup(
    window: &Window,
    fine: &Window,
    x: &Point,
    n_max: usize,
) -> Result<Vec<Vec<ComplexAddress>>> {
    let n = window.spec().n();
    if fine.level() != window.level() - 1 || fine.depth() != window.depth() + 1 {
        return Err(Error::domain(
            "fine window must be one level lower and one deeper",
        ));
    }
    let dist = complex_distances(window, &window.containing(x)?);
    let mut sup = vec![0u32; window.num_complexes()];
    for (vid, z) in fine.vertices().iter().enumerate() {
        let mut coarse: Vec<usize> = fine.incident(vid).iter().map(|&c| c / n).collect();
        coarse.dedup();
        let d = if *z == x.pos {
            0
        } else {
            coarse.iter().map(|&c| dist[c]).min().unwrap()
        };
        for &c in &coarse {
            sup[c] = sup[c].max(d);
        }
    }
    let mut out = vec![Vec::new(); n_max];
    for (c, &s) in sup.iter().enumerate() {
        if s >= 1 && s as usize <= n_max {
            out[s as usize - 1].push(window.address(c));
        }
    }
    Ok(out)
}

/// A closed interval of reals, widened outward to absorb floating error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
    pub fn overlaps(&self, other: &Interval, slack: f64) -> bool {
        self.lo <= other.hi + slack && other.lo <= self.hi + slack
    }
    /// Endpoints as exact rationals.
    pub fn to_rationals(&self) -> Option<(crate::field::Rational, crate::field::Rational)> {
        Some((
            crate::field::Rational::from_float(self.lo)?,
            crate::field::Rational::from_float(self.hi)?,
        ))
    }
}

const SLACK: f64 = 1e-12;

type P2 = (f64, f64);

fn sub(a: P2, b: P2) -> P2 {
    (a.0 - b.0, a.1 - b.1)
}
fn cross(a: P2, b: P2) -> f64 {
    a.0 * b.1 - a.1 * b.0
}
fn dist(a: P2, b: P2) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn convex_hull(mut pts: Vec<P2>) -> Vec<P2> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| dist(*a, *b) < 1e-14);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && cross(
                sub(lower[lower.len() - 1], lower[lower.len() - 2]),
                sub(p, lower[lower.len() - 1]),
            ) <= 1e-14
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(
                sub(upper[upper.len() - 1], upper[upper.len() - 2]),
                sub(p, upper[upper.len() - 1]),
            ) <= 1e-14
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn point_segment(p: P2, a: P2, b: P2) -> f64 {
    let ab = sub(b, a);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * ab.0 + (p.1 - a.1) * ab.1) / len2).clamp(0.0, 1.0)
    };
    dist(p, (a.0 + t * ab.0, a.1 + t * ab.1))
}

fn segments_cross(a: P2, b: P2, c: P2, d: P2) -> bool {
    let d1 = cross(sub(b, a), sub(c, a));
    let d2 = cross(sub(b, a), sub(d, a));
    let d3 = cross(sub(d, c), sub(a, c));
    let d4 = cross(sub(d, c), sub(b, c));
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

fn inside_convex(p: P2, poly: &[P2]) -> bool {
    let n = poly.len();
    (0..n).all(|i| cross(sub(poly[(i + 1) % n], poly[i]), sub(p, poly[i])) >= 0.0)
}

/// Distance between two convex polygons (CCW), zero if they meet.
fn polygon_distance(p: &[P2], q: &[P2]) -> f64 {
    let (np, nq) = (p.len(), q.len());
    for i in 0..np {
        for j in 0..nq {
            if segments_cross(p[i], p[(i + 1) % np], q[j], q[(j + 1) % nq]) {
                return 0.0;
            }
        }
    }
    if inside_convex(p[0], q) || inside_convex(q[0], p) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for &x in p {
        for j in 0..nq {
            best = best.min(point_segment(x, q[j], q[(j + 1) % nq]));
        }
    }
    for &x in q {
        for i in 0..np {
            best = best.min(point_segment(x, p[i], p[(i + 1) % np]));
        }
    }
    best
}

/// Float model of cells `L^p K + a` for bracketing set distances: `K` lies in
/// the convex hull of the fixed points, and the `V0` points lie in `K`.
struct CellModel {
    hull: Vec<P2>,
    v0: Vec<P2>,
    nu: Vec<P2>,
    l: f64,
}

#[derive(Clone, Copy)]
struct Cell {
    level: i32,
    a: P2,
}

impl CellModel {
    fn new(spec: &FractalSpec) -> Self {
        CellModel {
            hull: convex_hull(
                spec.fixed_points()
                    .iter()
                    .map(FieldElement::to_complex)
                    .collect(),
            ),
            v0: spec.v0().iter().map(FieldElement::to_complex).collect(),
            nu: spec.nu().iter().map(FieldElement::to_complex).collect(),
            l: spec.scale() as f64,
        }
    }
    fn place(&self, pts: &[P2], c: Cell) -> Vec<P2> {
        let s = self.l.powi(c.level);
        pts.iter()
            .map(|p| (c.a.0 + s * p.0, c.a.1 + s * p.1))
            .collect()
    }
    fn lower(&self, x: Cell, y: Cell) -> f64 {
        polygon_distance(&self.place(&self.hull, x), &self.place(&self.hull, y))
    }
    fn upper(&self, x: Cell, y: Cell) -> f64 {
        let (px, py) = (self.place(&self.v0, x), self.place(&self.v0, y));
        px.iter()
            .flat_map(|a| py.iter().map(move |b| dist(*a, *b)))
            .fold(f64::INFINITY, f64::min)
    }
    fn children(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let s = self.l.powi(c.level);
        self.nu.iter().map(move |v| Cell {
            level: c.level - 1,
            a: (c.a.0 + s * v.0, c.a.1 + s * v.1),
        })
    }
}

struct Node {
    lb: f64,
    x: Cell,
    y: Cell,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.lb == o.lb
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // Min-heap on the lower bound.
    fn cmp(&self, o: &Self) -> Ordering {
        o.lb.total_cmp(&self.lb)
    }
}

/// Result of the minimal-gap search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBracket {
    pub interval: Interval,
    pub converged: bool,
    pub pairs: usize,
    pub expansions: usize,
}

pub const MAX_GAP_EXPANSIONS: usize = 20_000_000;

/// Brackets `min dist(Δ, Δ')` over pairs of disjoint 0-complexes of
/// `K^{<level>}` by branch and bound: hull distances bound below, distances
/// between actual fractal points bound above.
pub fn min_gap(spec: &FractalSpec, level: usize, tol: f64, budget: &Budget) -> Result<GapBracket> {
    if tol <= 0.0 {
        return Err(Error::domain("tolerance must be positive"));
    }
    let w = Window::new(spec, 0, level, budget)?;
    let model = CellModel::new(spec);
    let cells: Vec<Cell> = (0..w.num_complexes())
        .map(|c| Cell {
            level: 0,
            a: w.address(c).anchor(spec).to_complex(),
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|a| (a + 1..cells.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| !w.cell(a).iter().any(|v| w.cell(b).contains(v)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::domain(format!(
            "no disjoint 0-complexes inside K^<{level}>"
        )));
    }
    let bounds: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            (
                model.lower(cells[a], cells[b]),
                model.upper(cells[a], cells[b]),
            )
        })
        .collect();
    let mut upper = bounds.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    let mut heap: BinaryHeap<Node> = pairs
        .iter()
        .zip(&bounds)
        .filter(|(_, b)| b.0 < upper)
        .map(|(&(a, b), bd)| Node {
            lb: bd.0,
            x: cells[a],
            y: cells[b],
        })
        .collect();
    let mut expansions = 0;
    let mut lower = upper;
    let mut converged = true;
    while let Some(node) = heap.pop() {
        if upper - node.lb < 0.5 * tol {
            lower = node.lb;
            break;
        }
        if expansions >= MAX_GAP_EXPANSIONS {
            lower = node.lb;
            converged = false;
            break;
        }
        expansions += 1;
        let split_x = node.x.level >= node.y.level;
        let kids: Vec<(Cell, Cell)> = if split_x {
            model.children(node.x).map(|c| (c, node.y)).collect()
        } else {
            model.children(node.y).map(|c| (node.x, c)).collect()
        };
        for (x, y) in kids {
            upper = upper.min(model.upper(x, y));
            let lb = model.lower(x, y);
            if lb < upper {
                heap.push(Node { lb, x, y });
            }
        }
        lower = upper;
    }
    Ok(GapBracket {
        interval: Interval {
            lo: (lower - SLACK).max(0.0),
            hi: upper + SLACK,
        },
        converged,
        pairs: pairs.len(),
        expansions,
    })
}

/// `diam(K^{<0>})`: the hull of the fixed points contains `K` and its
/// vertices lie in `K`, so the diameter is the largest fixed-point distance.
pub fn diameter(spec: &FractalSpec) -> Interval {
    let x = spec.fixed_points();
    let mut best = 0.0f64;
    for (i, a) in x.iter().enumerate() {
        for b in &x[i + 1..] {
            best = best.max((a - b).norm_sq().to_f64().sqrt());
        }
    }
    Interval {
        lo: best - SLACK,
        hi: best + SLACK,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConstants {
    pub spec: String,
    pub level: i32,
    pub d_f: f64,
    pub c5: Interval,
    pub c5_level_check: Option<Interval>,
    pub diam: Interval,
    /// `1 / diam(Δ_M)` from the upper diameter bound.
    pub c6: f64,
    /// `2 N^{-M+1} C5^{-d_f}` from the lower C5 bound.
    pub c7: f64,
    /// `max{2, 2N C5^{-d_f}}` from the lower C5 bound.
    pub n_uniform: f64,
    /// Fitted shell constant, `1.05 · max #L/n^{d_f}`.
    pub c8: f64,
}

pub const C8_SAFETY: f64 = 1.05;
pub const DEFAULT_SHELL_NMAX: usize = 6;

/// Shell constant fitted on all exact shells of a depth-2 window, bases
/// taken from the vertices one level finer (so interior points are included).
pub fn fit_c8(spec: &FractalSpec, level: i32, n_max: usize, budget: &Budget) -> Result<f64> {
    let sampler = PointUniverse::new(spec, level, 2, budget)?;
    let d_f = spec.d_f();
    let mut best = 0.0f64;
    for p in 0..sampler.len() {
        let t = sampler.shell_counts(p, n_max);
        for (n, &c) in t.counts.iter().enumerate().take(t.exact_through) {
            best = best.max(c as f64 / ((n + 1) as f64).powf(d_f));
        }
    }
    Ok(best * C8_SAFETY)
}

/// Constants at order `M` from a C5 bracket at `gap_level`.
pub fn metric_constants(
    spec: &FractalSpec,
    level: i32,
    tol: f64,
    budget: &Budget,
) -> Result<MetricConstants> {
    let c5 = min_gap(spec, 2, tol, budget)?;
    let c5_3 = min_gap(spec, 3, tol, budget)?;
    if !c5.converged || !c5_3.converged {
        return Err(Error::Resource {
            what: "C5 refinement steps".into(),
            requested: MAX_GAP_EXPANSIONS as u128 + 1,
            limit: MAX_GAP_EXPANSIONS as u128,
        });
    }
    let d_f = spec.d_f();
    let n = spec.n() as f64;
    let diam = diameter(spec);
    let lm = spec.l_pow_f64(level);
    let c5_pow = c5.interval.lo.powf(-d_f);
    Ok(MetricConstants {
        spec: spec.name().to_string(),
        level,
        d_f,
        c5: c5.interval,
        c5_level_check: Some(c5_3.interval),
        diam,
        c6: 1.0 / (diam.hi * lm),
        c7: 2.0 * n.powi(1 - level) * c5_pow,
        n_uniform: (2.0 * n * c5_pow).max(2.0),
        c8: fit_c8(spec, level, DEFAULT_SHELL_NMAX, budget)?,
    })
}

/// Points of `K^{<M+m>}` given as level-`(M-1)` vertices (which include all
/// level-M vertices), with their containing M-complexes.
pub struct PointUniverse {
    coarse: Window,
    fine: Window,
    containing: Vec<Vec<usize>>,
    frontier: Vec<usize>,
}

impl PointUniverse {
    pub fn new(spec: &FractalSpec, level: i32, depth: usize, budget: &Budget) -> Result<Self> {
        let coarse = Window::new(spec, level, depth, budget)?;
        let fine = Window::with_spec(coarse.spec_arc().clone(), level - 1, depth + 1, budget)?;
        let n = spec.n();
        let containing = (0..fine.vertices().len())
            .map(|v| {
                let mut c: Vec<usize> = fine.incident(v).iter().map(|&c| c / n).collect();
                c.dedup();
                c
            })
            .collect();
        let frontier = frontier(&coarse);
        Ok(PointUniverse {
            coarse,
            fine,
            containing,
            frontier,
        })
    }

    pub fn len(&self) -> usize {
        self.fine.vertices().len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn coarse(&self) -> &Window {
        &self.coarse
    }
    pub fn fine(&self) -> &Window {
        &self.fine
    }
    pub fn point(&self, p: usize) -> Point {
        Point::new(self.fine.vertex(p).clone(), self.fine.level())
    }
    pub fn containing(&self, p: usize) -> &[usize] {
        &self.containing[p]
    }

    pub fn distances_from(&self, p: usize) -> Vec<u32> {
        complex_distances(&self.coarse, &self.containing[p])
    }

    pub fn distance(&self, from: &[u32], p: usize, q: usize) -> u32 {
        if p == q {
            0
        } else {
            self.containing[q].iter().map(|&c| from[c]).min().unwrap()
        }
    }

    fn shell_counts(&self, p: usize, n_max: usize) -> ShellCounts {
        let dist = self.distances_from(p);
        let mut counts = vec![0usize; n_max];
        for &d in &dist {
            if d != UNREACHED && (d as usize) <= n_max {
                counts[d as usize - 1] += 1;
            }
        }
        let exact_through = self
            .frontier
            .iter()
            .flat_map(|&v| self.coarse.incident(v).iter().map(|&c| dist[c]))
            .min()
            .map_or(n_max, |d| (d as usize).min(n_max));
        ShellCounts {
            counts,
            exact_through,
        }
    }
}

struct ShellCounts {
    counts: Vec<usize>,
    exact_through: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: String,
    pub x: FieldElement,
    pub y: Option<FieldElement>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub spec: String,
    pub level: i32,
    pub constants: MetricConstants,
    pub pairs_checked: usize,
    pub bases_checked: usize,
    pub shells_checked: usize,
    pub max_lower_ratio: f64,
    pub max_upper_ratio: f64,
    pub violations: Vec<Violation>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `C6|x−y| ≤ d_M(x,y) ≤ max{2, C7|x−y|^{d_f}}`, the uniform bound for
/// `|x−y| ≤ L^M`, and `#L_{M,n,x} ≤ C8 n^{d_f}` on sampled points of a
/// depth-3 window.
pub fn verify_comparison(
    constants: &MetricConstants,
    spec: &FractalSpec,
    samples: usize,
    seed: u64,
    budget: &Budget,
) -> Result<ComparisonReport> {
    let m = constants.level;
    let uni = PointUniverse::new(spec, m, 3, budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floats: Vec<P2> = uni
        .fine
        .vertices()
        .iter()
        .map(FieldElement::to_complex)
        .collect();
    let d_f = spec.d_f();
    let lm = spec.l_pow_f64(m);
    let mut violations = Vec::new();
    let mut cache: HashMap<usize, Vec<u32>> = HashMap::new();
    let (mut max_lower, mut max_upper) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let p = rng.random_range(0..uni.len());
        let q = rng.random_range(0..uni.len());
        let from = cache.entry(p).or_insert_with(|| uni.distances_from(p));
        let d = uni.distance(from, p, q) as f64;
        let e = dist(floats[p], floats[q]);
        let slack = 1e-9 * (1.0 + e);
        let lower = constants.c6 * e;
        let upper = (constants.c7 * e.powf(d_f)).max(2.0);
        if d > 0.0 {
            max_lower = max_lower.max(lower / d);
            max_upper = max_upper.max(d / upper);
        }
        let mut flag = |kind: &str, detail: String| {
            violations.push(Violation {
                kind: kind.into(),
                x: uni.fine.vertex(p).clone(),
                y: Some(uni.fine.vertex(q).clone()),
                detail,
            })
        };
        if lower > d + slack {
            flag("lower", format!("C6|x-y| = {lower} > d = {d}"));
        }
        if d > upper + slack {
            flag("upper", format!("d = {d} > max(2, C7|x-y|^d_f) = {upper}"));
        }
        if e <= lm - slack && d > constants.n_uniform + slack {
            flag(
                "uniform",
                format!(
                    "|x-y| = {e} <= L^M but d = {d} > n = {}",
                    constants.n_uniform
                ),
            );
        }
    }
    let mut shells_checked = 0;
    for _ in 0..samples {
        let p = rng.random_range(0..uni.len());
        let t = uni.shell_counts(p, DEFAULT_SHELL_NMAX);
        for (n, &c) in t.counts.iter().enumerate().take(t.exact_through) {
            shells_checked += 1;
            let bound = constants.c8 * ((n + 1) as f64).powf(d_f);
            if c as f64 > bound + 1e-9 {
                violations.push(Violation {
                    kind: "shell".into(),
                    x: uni.fine.vertex(p).clone(),
                    y: None,
                    detail: format!("#L_{} = {c} > C8 n^d_f = {bound}", n + 1),
                });
            }
        }
    }
    Ok(ComparisonReport {
        spec: spec.name().to_string(),
        level: m,
        constants: constants.clone(),
        pairs_checked: samples,
        bases_checked: samples,
        shells_checked,
        max_lower_ratio: max_lower,
        max_upper_ratio: max_upper,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldElement as F;

    fn spec(name: &str) -> FractalSpec {
        FractalSpec::builtin(name).unwrap()
    }

    #[test]
    fn distance_examples() {
        let g = spec("gasket");
        let w = Window::new(&g, 0, 2, &Budget::unlimited()).unwrap();
        let o = Point::new(F::zero(3), 0);
        assert_eq!(graph_distance(&w, &o, &o).unwrap(), 0);
        assert_eq!(
            graph_distance(&w, &o, &Point::new(F::one(3), 0)).unwrap(),
            1
        );
        assert_eq!(
            graph_distance(&w, &o, &Point::new(F::from_int(3, 2), 0)).unwrap(),
            2
        );
        // Interior point of the second complex of K^<1>.
        let y = Point::new(F::parse(3, "[3/2]").unwrap(), -1);
        assert_eq!(graph_distance(&w, &o, &y).unwrap(), 2);
    }

    #[test]
    fn metric_axioms_on_samples() {
        for name in ["gasket", "vicsek"] {
            let s = spec(name);
            let u = PointUniverse::new(&s, 0, 2, &Budget::unlimited()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let all: Vec<Vec<u32>> = (0..u.len()).map(|p| u.distances_from(p)).collect();
            for _ in 0..500 {
                let (a, b, c) = (
                    rng.random_range(0..u.len()),
                    rng.random_range(0..u.len()),
                    rng.random_range(0..u.len()),
                );
                let d = |x: usize, y: usize| u.distance(&all[x], x, y);
                assert_eq!(d(a, b), d(b, a));
                assert!(d(a, c) <= d(a, b) + d(b, c));
                assert_eq!(d(a, b) == 0, a == b);
            }
        }
    }

    #[test]
    fn scale_covariance() {
        let s = spec("vicsek");
        let w1 = Window::new(&s, 1, 2, &Budget::unlimited()).unwrap();
        let w0 = Window::new(&s, 0, 2, &Budget::unlimited()).unwrap();
        let inv = s.l_pow(-1);
        for (i, x) in w1.vertices().iter().enumerate().step_by(7) {
            for y in w1.vertices().iter().skip(i).step_by(5) {
                let d1 = graph_distance(&w1, &Point::new(x.clone(), 1), &Point::new(y.clone(), 1))
                    .unwrap();
                let d0 = graph_distance(
                    &w0,
                    &Point::new(x.scale(&inv), 0),
                    &Point::new(y.scale(&inv), 0),
                )
                .unwrap();
                assert_eq!(d1, d0);
            }
        }
    }

    #[test]
    fn shells_two_ways() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let s = spec(name);
            let w = Window::new(&s, 0, 2, &Budget::unlimited()).unwrap();
            let fine = Window::new(&s, -1, 3, &Budget::unlimited()).unwrap();
            for v in fine.vertices().iter().step_by(3) {
                let x = Point::new(v.clone(), -1);
                let t = shells(&w, &x, 6).unwrap();
                let sup = shells_by_sup(&w, &fine, &x, 6).unwrap();
                assert_eq!(t.members, sup, "{name} {v}");
                let inc = w.containing(&x).unwrap().len();
                assert_eq!(t.counts[0], inc);
            }
        }
    }

    #[test]
    fn shell_rank_and_interior() {
        let g = spec("gasket");
        let w = Window::new(&g, 0, 2, &Budget::unlimited()).unwrap();
        let t = shells(&w, &Point::new(F::one(3), 0), 3).unwrap();
        assert_eq!(t.counts[0], 2);
        let t = shells(&w, &Point::new(F::parse(3, "[1/2]").unwrap(), -1), 3).unwrap();
        assert_eq!(t.counts[0], 1);
    }

    #[test]
    fn polygon_distance_basics() {
        let sq = |x: f64, y: f64| vec![(x, y), (x + 1.0, y), (x + 1.0, y + 1.0), (x, y + 1.0)];
        assert!((polygon_distance(&sq(0.0, 0.0), &sq(3.0, 0.0)) - 2.0).abs() < 1e-15);
        assert!((polygon_distance(&sq(0.0, 0.0), &sq(2.0, 2.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(polygon_distance(&sq(0.0, 0.0), &sq(0.5, 0.5)), 0.0);
        assert_eq!(polygon_distance(&sq(0.0, 0.0), &sq(0.2, 0.2)), 0.0);
        let h = convex_hull(vec![
            (0.0, 0.0),
            (1.0, 0.0),
            (0.5, 0.2),
            (1.0, 1.0),
            (0.0, 1.0),
        ]);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn gap_brackets_overlap() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let s = spec(name);
            let a = min_gap(&s, 2, 1e-6, &Budget::unlimited()).unwrap();
            let b = min_gap(&s, 3, 1e-6, &Budget::unlimited()).unwrap();
            assert!(a.converged && b.converged);
            assert!(
                a.interval.width() < 1e-6 && b.interval.width() < 1e-6,
                "{name} {a:?} {b:?}"
            );
            assert!(a.interval.overlaps(&b.interval, 2e-6), "{name} {a:?} {b:?}");
            assert!(a.interval.lo > 0.0);
        }
    }

    #[test]
    fn diameters() {
        assert!((diameter(&spec("gasket")).hi - 1.0).abs() < 1e-11);
        assert!((diameter(&spec("vicsek")).hi - 2f64.sqrt()).abs() < 1e-11);
        assert!((diameter(&spec("hexagon")).hi - 2.0).abs() < 1e-11);
    }
}
