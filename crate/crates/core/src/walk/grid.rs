use std::sync::Arc;

use super::chain::Chain;
use crate::budget::Budget;
use crate::complexes::Window;
use crate::error::{Error, Result};
use crate::geometry::{rotate_about, FractalSpec};
use crate::projection::FoldingMap;

/// The level-m grid of a window: `x ~ y` when some m-complex holds both.
/// The nonzero corners of the window are the frontier, where the rest of the
/// unbounded fractal attaches; they are absorbing.
#[derive(Debug, Clone)]
pub struct GridGraph {
    window: Arc<Window>,
    pub(crate) chain: Chain,
}

pub fn build_grid(window: Arc<Window>) -> Result<GridGraph> {
    let nv = window.vertices().len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for cell in window.cells() {
        for &a in cell {
            for &b in cell {
                if a != b {
                    adj[a].push(b);
                }
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let mut absorbing = vec![false; nv];
    for v in crate::metric::frontier(&window) {
        absorbing[v] = true;
    }
    let k1 = window.spec().k() as usize - 1;
    for v in 0..nv {
        if !absorbing[v] && adj[v].len() != window.window_rank(v) * k1 {
            return Err(Error::integrity(format!(
                "degree law fails at {}: degree {} but rank {}",
                window.vertex(v),
                adj[v].len(),
                window.window_rank(v)
            )));
        }
    }
    Ok(GridGraph {
        window,
        chain: Chain { adj, absorbing },
    })
}

impl GridGraph {
    pub fn new(spec: &FractalSpec, level: i32, depth: usize, budget: &Budget) -> Result<Self> {
        build_grid(Arc::new(Window::new(spec, level, depth, budget)?))
    }
    pub fn window(&self) -> &Arc<Window> {
        &self.window
    }
    pub fn level(&self) -> i32 {
        self.window.level()
    }
    pub fn num_vertices(&self) -> usize {
        self.chain.len()
    }
    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.chain.adj[v]
    }
    pub fn degree(&self, v: usize) -> usize {
        self.chain.adj[v].len()
    }
    pub fn is_frontier(&self, v: usize) -> bool {
        self.chain.absorbing[v]
    }
    pub fn num_edges(&self) -> usize {
        self.chain.adj.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// For each grid vertex, the id of its image under `π_M` among the vertices
/// of `quotient` (the level-m window of `K^{<M>}`).
pub fn fold_table(grid: &GridGraph, fold: &FoldingMap, quotient: &Window) -> Result<Vec<usize>> {
    let w = grid.window();
    let m = fold.level();
    if quotient.level() != w.level() || quotient.top_level() != m || w.top_level() < m {
        return Err(Error::domain(
            "fold table needs grid and quotient at one level, quotient spanning K^<M>",
        ));
    }
    let spec = fold.spec();
    let b = spec.barycenter_at(m);
    let k = spec.k() as usize;
    // Rotations about b_M permute the quotient vertices.
    let mut perm = vec![vec![0usize; quotient.vertices().len()]; k];
    for (r, row) in perm.iter_mut().enumerate() {
        for (i, v) in quotient.vertices().iter().enumerate() {
            let img = rotate_about(v, &b, r as i64);
            row[i] = quotient
                .vertex_id(&img)
                .ok_or_else(|| Error::integrity(format!("rotation {r} moves {v} off the grid")))?;
        }
    }
    let mut out = vec![usize::MAX; w.vertices().len()];
    for (c, cell) in w.cells().iter().enumerate() {
        if cell.iter().all(|&v| out[v] != usize::MAX) {
            continue;
        }
        let addr = w.address(c).ancestor(m).expect("window spans level M");
        let r = fold.labelling().rotation_of(&addr)? as usize;
        let anchor = addr.anchor(spec);
        for &v in cell {
            if out[v] == usize::MAX {
                let local = w.vertex(v) - &anchor;
                let id = quotient.vertex_id(&local).ok_or_else(|| {
                    Error::integrity(format!("{} not on its complex grid", w.vertex(v)))
                })?;
                out[v] = perm[r][id];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::Point;

    fn grid(name: &str, level: i32, depth: usize) -> GridGraph {
        GridGraph::new(
            &FractalSpec::builtin(name).unwrap(),
            level,
            depth,
            &Budget::unlimited(),
        )
        .unwrap()
    }

    #[test]
    fn degree_examples() {
        let g = grid("gasket", 0, 1);
        assert_eq!(g.num_vertices(), 6);
        let mut degs: Vec<usize> = (0..6).map(|v| g.degree(v)).collect();
        degs.sort();
        assert_eq!(degs, vec![2, 2, 2, 4, 4, 4]);
        let v = grid("vicsek", 0, 1);
        let w = v.window().clone();
        for i in 0..v.num_vertices() {
            assert_eq!(v.degree(i), 3 * w.window_rank(i));
        }
        assert!((0..v.num_vertices()).any(|i| v.degree(i) == 6));
        let single = grid("hexagon", 0, 0);
        assert!((0..6).all(|i| single.degree(i) == 5));
        assert_eq!(single.num_edges(), 15);
    }

    #[test]
    fn fold_table_matches_projection() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let spec = FractalSpec::builtin(name).unwrap();
            let fold = FoldingMap::for_spec(&spec, 1).unwrap();
            let g = grid(name, 0, 3);
            let q = Window::new(&spec, 0, 1, &Budget::unlimited()).unwrap();
            let t = fold_table(&g, &fold, &q).unwrap();
            for v in (0..g.num_vertices()).step_by(5) {
                let p = fold
                    .project(&Point::new(g.window().vertex(v).clone(), 0))
                    .unwrap();
                assert_eq!(&p.pos, q.vertex(t[v]), "{name}");
            }
        }
    }
}
