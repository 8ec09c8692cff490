use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{build_grid, fold_table, GridGraph};
use super::hitting::Template;
use super::rational_to_f64;
use crate::budget::Budget;
use crate::complexes::Window;
use crate::error::{Error, Result};
use crate::field::{FieldElement, Rational};
use crate::labeling::Label;
use crate::projection::FoldingMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Grid level of the walk.
    pub m: i32,
    pub start: FieldElement,
    pub seed: u64,
    pub count: u64,
    pub steps: usize,
    /// Window depth; `None` picks one the walk cannot leave within `steps`.
    pub depth: Option<usize>,
}

/// Stream for path `i`: independent of scheduling and worker count.
fn path_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

struct Setup {
    grid: GridGraph,
    fold: Vec<usize>,
    template: Template,
    start: usize,
}

/// Smallest depth whose frontier is more than `steps` edges from `start`:
/// one step moves at most `L^m diam(K)`.
fn auto_depth(fold: &FoldingMap, cfg: &SimConfig) -> usize {
    let spec = fold.spec();
    let reach = cfg.steps as f64 * spec.l_pow_f64(cfg.m) * crate::metric::diameter(spec).hi;
    let (sx, sy) = cfg.start.to_complex();
    let mut d = (fold.level() + 1 - cfg.m).max(1) as usize;
    loop {
        let gap = spec
            .primary_vertices(cfg.m + d as i32)
            .iter()
            .filter(|v| !v.is_zero())
            .map(|v| {
                let (x, y) = v.to_complex();
                (x - sx).hypot(y - sy)
            })
            .fold(f64::INFINITY, f64::min);
        if gap > reach + 1e-9 {
            return d;
        }
        d += 1;
    }
}

fn setup(fold: &FoldingMap, cfg: &SimConfig, budget: &Budget) -> Result<Setup> {
    let spec = fold.spec();
    if cfg.m >= fold.level() {
        return Err(Error::domain("grid level must be below the order"));
    }
    let depth = cfg.depth.unwrap_or_else(|| auto_depth(fold, cfg));
    let template = Template::new(spec, fold.level(), cfg.m, budget)?;
    let grid = build_grid(Arc::new(Window::new(spec, cfg.m, depth, budget)?))?;
    let ft = fold_table(&grid, fold, &template.window)?;
    let start = grid.window().vertex_id(&cfg.start).ok_or_else(|| {
        Error::domain(format!(
            "start {} is not a vertex of the level-{} window",
            cfg.start, cfg.m
        ))
    })?;
    Ok(Setup {
        grid,
        fold: ft,
        template,
        start,
    })
}

fn walk_path(
    grid: &GridGraph,
    start: usize,
    rng: &mut ChaCha8Rng,
    steps: usize,
) -> (Vec<usize>, bool) {
    let mut path = Vec::with_capacity(steps + 1);
    path.push(start);
    let mut v = start;
    for _ in 0..steps {
        if grid.is_frontier(v) {
            return (path, true);
        }
        let nb = grid.neighbours(v);
        v = nb[rng.random_range(0..nb.len())];
        path.push(v);
    }
    (path, grid.is_frontier(v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path_id: u64,
    pub step: usize,
    pub raw_vertex: String,
    pub folded_vertex: String,
}

/// Raw and folded trajectories, ordered by path index.
pub struct PathArchive {
    grid_window: Arc<Window>,
    quotient_window: Arc<Window>,
    fold: Vec<usize>,
    paths: Vec<(Vec<usize>, bool)>,
}

pub fn simulate_paths(fold: &FoldingMap, cfg: &SimConfig, budget: &Budget) -> Result<PathArchive> {
    let s = setup(fold, cfg, budget)?;
    let paths = (0..cfg.count)
        .into_par_iter()
        .map(|i| walk_path(&s.grid, s.start, &mut path_rng(cfg.seed, i), cfg.steps))
        .collect();
    Ok(PathArchive {
        grid_window: s.grid.window().clone(),
        quotient_window: s.template.window.clone(),
        fold: s.fold,
        paths,
    })
}

impl PathArchive {
    pub fn len(&self) -> usize {
        self.paths.len()
    }
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
    pub fn raw(&self, i: usize) -> Vec<&FieldElement> {
        self.paths[i]
            .0
            .iter()
            .map(|&v| self.grid_window.vertex(v))
            .collect()
    }
    pub fn folded(&self, i: usize) -> Vec<&FieldElement> {
        self.paths[i]
            .0
            .iter()
            .map(|&v| self.quotient_window.vertex(self.fold[v]))
            .collect()
    }
    pub fn escaped(&self, i: usize) -> bool {
        self.paths[i].1
    }
    pub fn records(&self) -> impl Iterator<Item = PathRecord> + '_ {
        self.paths.iter().enumerate().flat_map(move |(i, (p, _))| {
            p.iter().enumerate().map(move |(step, &v)| PathRecord {
                path_id: i as u64,
                step,
                raw_vertex: self.grid_window.vertex(v).to_string(),
                folded_vertex: self.quotient_window.vertex(self.fold[v]).to_string(),
            })
        })
    }
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in self.records() {
            serde_json::to_writer(&mut w, &r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Streaming counts: folded position after `steps` steps, and the label at
/// the first visit to another level-M vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McHistogram {
    pub count: u64,
    pub steps: usize,
    pub vertices: Vec<String>,
    pub folded_counts: Vec<u64>,
    pub escaped: u64,
    pub label_counts: Vec<u64>,
    pub unresolved_hits: u64,
}

#[derive(Clone)]
struct Acc {
    folded: Vec<u64>,
    escaped: u64,
    labels: Vec<u64>,
    unresolved: u64,
}

impl Acc {
    fn merge(mut self, o: Acc) -> Acc {
        for (a, b) in self.folded.iter_mut().zip(&o.folded) {
            *a += b;
        }
        for (a, b) in self.labels.iter_mut().zip(&o.labels) {
            *a += b;
        }
        self.escaped += o.escaped;
        self.unresolved += o.unresolved;
        self
    }
}

pub fn simulate_histogram(
    fold: &FoldingMap,
    cfg: &SimConfig,
    hit_horizon: usize,
    budget: &Budget,
) -> Result<McHistogram> {
    let s = setup(fold, cfg, budget)?;
    let nq = s.template.window.vertices().len();
    let k = fold.spec().k() as usize;
    let seed = fold.labelling().seed();
    let label: Vec<Option<Label>> = s
        .fold
        .iter()
        .map(|&q| s.template.corner[q].map(|t| seed[t]))
        .collect();
    let empty = Acc {
        folded: vec![0; nq],
        escaped: 0,
        labels: vec![0; k],
        unresolved: 0,
    };
    let acc = (0..cfg.count)
        .into_par_iter()
        .fold(
            || empty.clone(),
            |mut acc, i| {
                let mut rng = path_rng(cfg.seed, i);
                let mut v = s.start;
                let mut hit = None;
                let mut escaped = false;
                for t in 1..=cfg.steps.max(hit_horizon) {
                    if s.grid.is_frontier(v) {
                        escaped = true;
                        break;
                    }
                    let nb = s.grid.neighbours(v);
                    v = nb[rng.random_range(0..nb.len())];
                    if hit.is_none() && v != s.start {
                        hit = label[v];
                    }
                    if t == cfg.steps && !s.grid.is_frontier(v) {
                        acc.folded[s.fold[v]] += 1;
                    }
                    if t >= cfg.steps && hit.is_some() {
                        break;
                    }
                }
                if (escaped || s.grid.is_frontier(v)) && cfg.steps > 0 {
                    acc.escaped += u64::from(escaped || s.grid.is_frontier(v));
                }
                if cfg.steps == 0 {
                    acc.folded[s.fold[s.start]] += 1;
                }
                match hit {
                    Some(l) => acc.labels[l as usize] += 1,
                    None => acc.unresolved += 1,
                }
                acc
            },
        )
        .reduce(|| empty.clone(), Acc::merge);
    Ok(McHistogram {
        count: cfg.count,
        steps: cfg.steps,
        vertices: s
            .template
            .window
            .vertices()
            .iter()
            .map(|v| v.to_string())
            .collect(),
        folded_counts: acc.folded,
        escaped: acc.escaped,
        label_counts: acc.labels,
        unresolved_hits: acc.unresolved,
    })
}

impl McHistogram {
    /// Total variation between the empirical folded law and `exact`.
    pub fn tv_against(&self, exact: &[Rational]) -> f64 {
        let n = self.count as f64;
        0.5 * self
            .folded_counts
            .iter()
            .zip(exact)
            .map(|(&c, p)| (c as f64 / n - rational_to_f64(p)).abs())
            .sum::<f64>()
    }
    /// `(empirical − p) / SE` per label, `SE = sqrt(p(1−p)/count)`; zero
    /// when `p` is 0 or 1 and the count agrees.
    pub fn label_z_scores(&self, exact: &[Rational]) -> Vec<f64> {
        let n = self.count as f64;
        self.label_counts
            .iter()
            .zip(exact)
            .map(|(&c, p)| {
                let p = rational_to_f64(p);
                let f = c as f64 / n;
                let se = (p * (1.0 - p) / n).sqrt();
                if se == 0.0 {
                    if (f - p).abs() < 1e-15 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (f - p) / se
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FractalSpec;

    fn gasket_fold() -> FoldingMap {
        FoldingMap::for_spec(&FractalSpec::builtin("gasket").unwrap(), 1).unwrap()
    }

    fn cfg(count: u64) -> SimConfig {
        SimConfig {
            m: 0,
            start: FieldElement::from_int(3, 4),
            seed: 42,
            count,
            steps: 10,
            depth: None,
        }
    }

    #[test]
    fn deterministic_and_folded_in_range() {
        let f = gasket_fold();
        let a = simulate_paths(&f, &cfg(50), &Budget::unlimited()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| simulate_paths(&f, &cfg(50), &Budget::unlimited()).unwrap());
        let ra: Vec<PathRecord> = a.records().collect();
        let rb: Vec<PathRecord> = b.records().collect();
        assert_eq!(ra, rb);
        let q = Template::new(f.spec(), 1, 0, &Budget::unlimited()).unwrap();
        for i in 0..a.len() {
            assert!(!a.escaped(i));
            assert_eq!(a.raw(i).len(), 11);
            assert!(a.folded(i).iter().all(|v| q.window.vertex_id(v).is_some()));
        }
        let mut buf = Vec::new();
        a.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 50 * 11);
    }

    #[test]
    fn histogram_counts_add_up() {
        let f = gasket_fold();
        let h = simulate_histogram(&f, &cfg(2000), 200, &Budget::unlimited()).unwrap();
        assert_eq!(h.folded_counts.iter().sum::<u64>() + h.escaped, 2000);
        assert_eq!(h.label_counts.iter().sum::<u64>() + h.unresolved_hits, 2000);
        let again = simulate_histogram(&f, &cfg(2000), 200, &Budget::unlimited()).unwrap();
        assert_eq!(h, again);
    }
}
