use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num::{BigInt, Integer, One, Zero};
use serde::{Deserialize, Serialize};

use super::chain::Chain;
use super::{powers, rational_to_f64, scaled};
use crate::budget::Budget;
use crate::complexes::{incident_complexes, Window, DEFAULT_MAX_SEARCH_DEPTH};
use crate::error::{Error, Result};
use crate::field::{FieldElement, Rational};
use crate::geometry::{rotate_about, FractalSpec};
use crate::labeling::{GoodLabelling, Label};
use crate::projection::FoldingMap;

/// The level-m grid of `K^{<M>}` with the rotation action of `b_M`.
pub(crate) struct Template {
    pub window: Arc<Window>,
    pub perm: Vec<Vec<usize>>,
    /// `Some(t)` for the corner `L^M v_t`.
    pub corner: Vec<Option<usize>>,
}

impl Template {
    pub fn new(spec: &FractalSpec, big_m: i32, m: i32, budget: &Budget) -> Result<Self> {
        if m > big_m {
            return Err(Error::domain(format!("grid level {m} above order {big_m}")));
        }
        let window = Arc::new(Window::new(spec, m, (big_m - m) as usize, budget)?);
        let b = spec.barycenter_at(big_m);
        let k = spec.k() as usize;
        let mut perm = Vec::with_capacity(k);
        for r in 0..k {
            let row = window
                .vertices()
                .iter()
                .map(|v| {
                    window
                        .vertex_id(&rotate_about(v, &b, r as i64))
                        .ok_or_else(|| {
                            Error::integrity(format!("rotation {r} moves {v} off the grid"))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            perm.push(row);
        }
        let mut corner = vec![None; window.vertices().len()];
        for (t, v) in spec.primary_vertices(big_m).iter().enumerate() {
            let id = window
                .vertex_id(v)
                .ok_or_else(|| Error::integrity("corner missing from grid"))?;
            corner[id] = Some(t);
        }
        Ok(Template {
            window,
            perm,
            corner,
        })
    }
}

/// Walk from a level-M vertex `x`, confined to the M-complexes at `x` until
/// it reaches another level-M vertex; those are absorbing.
pub(crate) struct LocalChain {
    pub chain: Chain,
    pub verts: Vec<FieldElement>,
    /// Image under `π_M` as a template vertex id (identity fold without a labelling).
    pub fold: Vec<usize>,
    pub start: usize,
}

pub(crate) fn local_chain(
    spec: &FractalSpec,
    template: &Template,
    glp: Option<&GoodLabelling>,
    x: &FieldElement,
) -> Result<LocalChain> {
    let big_m = template.window.top_level();
    let addrs = incident_complexes(spec, x, big_m, DEFAULT_MAX_SEARCH_DEPTH)?;
    if addrs.is_empty() {
        return Err(Error::domain(format!("{x} is not a level-{big_m} vertex")));
    }
    let mut index: HashMap<FieldElement, usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut fold = Vec::new();
    let mut corner = Vec::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    for addr in &addrs {
        let anchor = addr.anchor(spec);
        let r = match glp {
            Some(g) => g.rotation_of(addr)? as usize,
            None => 0,
        };
        let ids: Vec<usize> = template
            .window
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, tv)| {
                let p = &anchor + tv;
                *index.entry(p.clone()).or_insert_with(|| {
                    verts.push(p);
                    fold.push(template.perm[r][i]);
                    corner.push(template.corner[i].is_some());
                    adj.push(Vec::new());
                    verts.len() - 1
                })
            })
            .collect();
        for cell in template.window.cells() {
            for &a in cell {
                for &b in cell {
                    if a != b {
                        adj[ids[a]].push(ids[b]);
                    }
                }
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let start = index[x];
    let absorbing = (0..verts.len()).map(|v| corner[v] && v != start).collect();
    Ok(LocalChain {
        chain: Chain { adj, absorbing },
        verts,
        fold,
        start,
    })
}

struct Run {
    /// Arrivals at absorbing vertices: numerators over `lambda^t`, `t = 0..=horizon`.
    hits: BTreeMap<usize, Vec<BigInt>>,
    /// Folded law on `{t < T}`: numerators over `lambda^t` per template vertex.
    pre_hit: Vec<Vec<BigInt>>,
}

fn run(lc: &LocalChain, lambda: u64, horizon: usize, fold_size: usize) -> Run {
    let n = lc.chain.len();
    let mut cur = vec![BigInt::zero(); n];
    cur[lc.start] = BigInt::one();
    let mut hits: BTreeMap<usize, Vec<BigInt>> = (0..n)
        .filter(|&v| lc.chain.absorbing[v])
        .map(|v| (v, vec![BigInt::zero(); horizon + 1]))
        .collect();
    let folded = |cur: &[BigInt]| {
        let mut acc = vec![BigInt::zero(); fold_size];
        for (v, x) in cur.iter().enumerate() {
            if !x.is_zero() {
                acc[lc.fold[v]] += x;
            }
        }
        acc
    };
    let mut pre_hit = vec![folded(&cur)];
    for t in 1..=horizon {
        let mut next = lc.chain.step_exact(&cur, lambda);
        for (v, x) in next.iter_mut().enumerate() {
            if lc.chain.absorbing[v] {
                hits.get_mut(&v).unwrap()[t] = std::mem::take(x);
            }
        }
        pre_hit.push(folded(&next));
        cur = next;
    }
    Run { hits, pre_hit }
}

/// Joint law of `(T_M^{(j)}, ℓ_M(Z at T_M^{(j)}))` for `j = 1..=J`.
#[derive(Debug, Clone)]
pub struct HittingLaw {
    pub level: i32,
    pub grid_level: i32,
    pub start: FieldElement,
    pub horizon: usize,
    k: usize,
    lambda: u64,
    pow: Vec<BigInt>,
    /// `[j-1][t][label]` numerators over `lambda^t`.
    joint: Vec<Vec<Vec<BigInt>>>,
    pre_hit: Vec<Vec<BigInt>>,
}

/// Hitting laws of the level-m walk started at the level-M vertex `x`.
/// Later hits are composed from first-hit laws of the vertices reached.
pub fn hitting_law(
    fold: &FoldingMap,
    x: &FieldElement,
    m: i32,
    horizon: usize,
    j_max: usize,
) -> Result<HittingLaw> {
    let spec = fold.spec();
    let big_m = fold.level();
    if m >= big_m {
        return Err(Error::domain(format!(
            "grid level {m} must be below the order {big_m}"
        )));
    }
    if j_max == 0 {
        return Err(Error::domain("need at least one hitting time"));
    }
    let template = Template::new(spec, big_m, m, &Budget::from_env())?;
    let glp = fold.labelling();
    let k = spec.k() as usize;
    let seed = glp.seed();
    let fold_size = template.window.vertices().len();

    let mut chains: HashMap<FieldElement, LocalChain> = HashMap::new();
    let mut frontier = vec![x.clone()];
    for _ in 0..j_max {
        let mut next = Vec::new();
        for y in frontier {
            if chains.contains_key(&y) {
                continue;
            }
            let lc = local_chain(spec, &template, Some(glp), &y)?;
            next.extend(
                (0..lc.chain.len())
                    .filter(|&v| lc.chain.absorbing[v])
                    .map(|v| lc.verts[v].clone()),
            );
            chains.insert(y, lc);
        }
        frontier = next;
    }
    let lambda = chains.values().fold(1u64, |l, c| l.lcm(&c.chain.scale()));
    let mut runs: HashMap<FieldElement, Run> = HashMap::new();
    let mut first = None;
    for (y, lc) in &chains {
        let r = run(lc, lambda, horizon, fold_size);
        if y == x {
            first = Some(r.pre_hit.clone());
        }
        runs.insert(y.clone(), r);
    }
    let label_of =
        |lc: &LocalChain, v: usize| -> Label { seed[template.corner[lc.fold[v]].unwrap()] };

    // Position law at the j-th hit, with the label there.
    let lc = &chains[x];
    let mut pos: BTreeMap<FieldElement, (Label, Vec<BigInt>)> = runs[x]
        .hits
        .iter()
        .map(|(&v, h)| (lc.verts[v].clone(), (label_of(lc, v), h.clone())))
        .collect();
    let mut joint = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let mut table = vec![vec![BigInt::zero(); k]; horizon + 1];
        for (label, law) in pos.values() {
            for (t, a) in law.iter().enumerate() {
                table[t][*label as usize] += a;
            }
        }
        joint.push(table);
        if j == j_max {
            break;
        }
        let mut next: BTreeMap<FieldElement, (Label, Vec<BigInt>)> = BTreeMap::new();
        for (y, (_, a)) in &pos {
            let (lc_y, r_y) = (&chains[y], &runs[y]);
            for (&z, b) in &r_y.hits {
                let acc = &mut next
                    .entry(lc_y.verts[z].clone())
                    .or_insert_with(|| (label_of(lc_y, z), vec![BigInt::zero(); horizon + 1]))
                    .1;
                for (s, a_s) in a.iter().enumerate() {
                    if a_s.is_zero() {
                        continue;
                    }
                    for u in 1..=horizon - s {
                        if !b[u].is_zero() {
                            acc[s + u] += a_s * &b[u];
                        }
                    }
                }
            }
        }
        pos = next;
    }
    Ok(HittingLaw {
        level: big_m,
        grid_level: m,
        start: x.clone(),
        horizon,
        k,
        lambda,
        pow: powers(lambda, horizon),
        joint,
        pre_hit: first.unwrap(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingSummary {
    pub j: usize,
    pub label_marginal: Vec<f64>,
    pub label_marginal_exact: Vec<String>,
    pub residual: f64,
    pub residual_exact: String,
    pub mean_time: f64,
}

impl HittingLaw {
    pub fn j_max(&self) -> usize {
        self.joint.len()
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn lambda(&self) -> u64 {
        self.lambda
    }
    pub fn prob(&self, j: usize, t: usize, label: Label) -> Rational {
        scaled(&self.joint[j - 1][t][label as usize], &self.pow[t])
    }
    pub fn label_marginal(&self, j: usize) -> Vec<Rational> {
        (0..self.k)
            .map(|b| {
                (0..=self.horizon)
                    .map(|t| self.prob(j, t, b as Label))
                    .sum()
            })
            .collect()
    }
    /// Mass not yet absorbed by the horizon.
    pub fn residual(&self, j: usize) -> Rational {
        Rational::one() - self.label_marginal(j).into_iter().sum::<Rational>()
    }
    /// Folded law of the walk killed at the first hit, per template vertex.
    pub fn pre_hit(&self, t: usize) -> Vec<Rational> {
        self.pre_hit[t]
            .iter()
            .map(|x| scaled(x, &self.pow[t]))
            .collect()
    }
    /// Exact equality of all `(j, t, label)` entries.
    pub fn same_joint_law(&self, other: &HittingLaw) -> bool {
        self.horizon == other.horizon
            && self.j_max() == other.j_max()
            && (1..=self.j_max()).all(|j| {
                (0..=self.horizon).all(|t| {
                    (0..self.k as Label).all(|b| self.prob(j, t, b) == other.prob(j, t, b))
                })
            })
    }
    pub fn same_pre_hit_law(&self, other: &HittingLaw) -> bool {
        self.horizon == other.horizon
            && (0..=self.horizon).all(|t| self.pre_hit(t) == other.pre_hit(t))
    }
    /// `T^{(j)}` strictly increasing: the j-th hit never comes before step j.
    pub fn times_increasing(&self) -> bool {
        (1..=self.j_max()).all(|j| {
            (0..j.min(self.horizon + 1)).all(|t| self.joint[j - 1][t].iter().all(Zero::is_zero))
        })
    }
    pub fn summary(&self) -> Vec<HittingSummary> {
        (1..=self.j_max())
            .map(|j| {
                let marg = self.label_marginal(j);
                let res = self.residual(j);
                let mean: f64 = (0..=self.horizon)
                    .map(|t| {
                        t as f64
                            * (0..self.k as Label)
                                .map(|b| rational_to_f64(&self.prob(j, t, b)))
                                .sum::<f64>()
                    })
                    .sum();
                HittingSummary {
                    j,
                    label_marginal: marg.iter().map(rational_to_f64).collect(),
                    label_marginal_exact: marg.iter().map(|r| r.to_string()).collect(),
                    residual: rational_to_f64(&res),
                    residual_exact: res.to_string(),
                    mean_time: mean,
                }
            })
            .collect()
    }
    /// `j,step,label,prob,exact` rows for nonzero entries.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("j,step,label,prob,exact\n");
        for j in 1..=self.j_max() {
            for t in 0..=self.horizon {
                for b in 0..self.k as Label {
                    let p = self.prob(j, t, b);
                    if !p.is_zero() {
                        out.push_str(&format!(
                            "{j},{t},{},{:.17e},{p}\n",
                            names[b as usize],
                            rational_to_f64(&p)
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Solves `A x = b` over the rationals.
pub(crate) fn solve_exact(
    mut a: Vec<Vec<Rational>>,
    mut b: Vec<Rational>,
) -> Result<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Degenerate("singular absorbing system".into()))?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = Rational::one() / &a[col][col];
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        b[col] *= &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..n {
                    let d = &a[col][c] * &f;
                    a[r][c] -= d;
                }
                let d = &b[col] * &f;
                b[r] -= d;
            }
        }
    }
    Ok(b)
}

/// Expected number of level-m steps from the origin until the walk reaches
/// another level-M vertex, by an exact linear solve.
pub fn expected_hitting_steps(spec: &FractalSpec, big_m: i32, m: i32) -> Result<Rational> {
    let template = Template::new(spec, big_m, m, &Budget::from_env())?;
    let lc = local_chain(spec, &template, None, &FieldElement::zero(spec.k()))?;
    let transient: Vec<usize> = (0..lc.chain.len())
        .filter(|&v| !lc.chain.absorbing[v])
        .collect();
    let pos: HashMap<usize, usize> = transient.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = transient.len();
    let mut a = vec![vec![Rational::zero(); n]; n];
    for (i, &v) in transient.iter().enumerate() {
        a[i][i] = Rational::one();
        let p = Rational::new(BigInt::one(), BigInt::from(lc.chain.adj[v].len()));
        for w in &lc.chain.adj[v] {
            if let Some(&j) = pos.get(w) {
                a[i][j] -= &p;
            }
        }
    }
    let h = solve_exact(a, vec![Rational::one(); n])?;
    Ok(h[pos[&lc.start]].clone())
}

/// Decimation time factor: expected level-m steps to move between
/// neighbouring level-(m+1) vertices.
pub fn estimate_gamma(spec: &FractalSpec, m: i32) -> Result<Rational> {
    expected_hitting_steps(spec, m + 1, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinVertexDistance {
    pub squared: FieldElement,
    pub distance: f64,
    pub pair: (FieldElement, FieldElement),
}

/// Smallest distance between distinct vertices of a window.
pub fn min_vertex_distance(window: &Window) -> Result<MinVertexDistance> {
    let v = window.vertices();
    if v.len() < 2 {
        return Err(Error::domain("window has fewer than two vertices"));
    }
    let f: Vec<(f64, f64)> = v.iter().map(FieldElement::to_complex).collect();
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            let d = (f[i].0 - f[j].0).hypot(f[i].1 - f[j].1);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    let sq = (&v[best.1] - &v[best.2]).norm_sq();
    Ok(MinVertexDistance {
        distance: sq.to_f64().sqrt(),
        squared: sq,
        pair: (v[best.1].clone(), v[best.2].clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::Point;
    use crate::field::rat;

    fn fold(name: &str, level: i32) -> FoldingMap {
        FoldingMap::for_spec(&FractalSpec::builtin(name).unwrap(), level).unwrap()
    }

    #[test]
    fn gamma_values() {
        let g = FractalSpec::builtin("gasket").unwrap();
        assert_eq!(estimate_gamma(&g, 0).unwrap(), rat(5, 1));
        assert_eq!(estimate_gamma(&g, 1).unwrap(), rat(5, 1));
        assert_eq!(estimate_gamma(&g, -1).unwrap(), rat(5, 1));
        for name in ["gasket", "vicsek", "hexagon", "snowflake"] {
            let s = FractalSpec::builtin(name).unwrap();
            assert_eq!(expected_hitting_steps(&s, 2, 2).unwrap(), Rational::one());
            assert_eq!(
                estimate_gamma(&s, 0).unwrap(),
                estimate_gamma(&s, 1).unwrap()
            );
        }
    }

    #[test]
    fn solve_small_system() {
        let a = vec![vec![rat(2, 1), rat(1, 1)], vec![rat(1, 1), rat(3, 1)]];
        assert_eq!(
            solve_exact(a, vec![rat(3, 1), rat(5, 1)]).unwrap(),
            vec![rat(4, 5), rat(7, 5)]
        );
        assert!(solve_exact(vec![vec![rat(0, 1)]], vec![rat(1, 1)]).is_err());
    }

    #[test]
    fn gasket_first_hit_from_origin() {
        let f = fold("gasket", 1);
        let x = FieldElement::zero(3);
        let law = hitting_law(&f, &x, 0, 60, 2).unwrap();
        let marg = law.label_marginal(1);
        assert_eq!(marg[0], Rational::zero());
        assert_eq!(marg[1], marg[2]);
        assert!(law.residual(1) < rat(1, 1_000_000));
        assert!(law.times_increasing());
        // First step can only reach the two midpoints.
        assert_eq!(law.prob(1, 1, 1), Rational::zero());
    }

    #[test]
    fn level_m_walk_hits_in_one_step() {
        let f = fold("vicsek", 1);
        let law = hitting_law(&f, &FieldElement::zero(4), 0, 5, 1);
        assert!(law.is_ok());
        let f0 = fold("gasket", 0);
        assert!(hitting_law(&f0, &FieldElement::zero(3), 0, 5, 1).is_err());
        let s = FractalSpec::builtin("hexagon").unwrap();
        let t = Template::new(&s, 1, 1, &Budget::unlimited()).unwrap();
        let lc = local_chain(&s, &t, None, &FieldElement::zero(6)).unwrap();
        let a: Vec<usize> = (0..lc.chain.len())
            .filter(|&v| lc.chain.absorbing[v])
            .collect();
        assert_eq!(a.len(), 5);
        assert!(lc.chain.adj[lc.start]
            .iter()
            .all(|&w| lc.chain.absorbing[w]));
    }

    #[test]
    fn hit_labels_match_recursive_labels() {
        let f = fold("vicsek", 1);
        let s = f.spec();
        let t = Template::new(s, 1, 0, &Budget::unlimited()).unwrap();
        let x = FieldElement::from_int(4, 6);
        let lc = local_chain(s, &t, Some(f.labelling()), &x).unwrap();
        for v in (0..lc.chain.len()).filter(|&v| lc.chain.absorbing[v] || v == lc.start) {
            let via_fold = f.labelling().seed()[t.corner[lc.fold[v]].unwrap()];
            assert_eq!(via_fold, f.labelling().label_vertex(&lc.verts[v]).unwrap());
            let p = f.project(&Point::new(lc.verts[v].clone(), 0)).unwrap();
            assert_eq!(&p.pos, t.window.vertex(lc.fold[v]));
        }
    }

    #[test]
    fn alpha_examples() {
        let b = Budget::unlimited();
        let g = Window::new(&FractalSpec::builtin("gasket").unwrap(), 0, 2, &b).unwrap();
        let a = min_vertex_distance(&g).unwrap();
        assert_eq!(a.squared, FieldElement::one(3));
        let v = Window::new(&FractalSpec::builtin("vicsek").unwrap(), -1, 2, &b).unwrap();
        assert!((min_vertex_distance(&v).unwrap().distance - 1.0 / 3.0).abs() < 1e-12);
    }
}
