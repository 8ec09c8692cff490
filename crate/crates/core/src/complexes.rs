//! M-complex addressing, finite windows `K^{<M+m>}`, vertex deduplication,
//! incidence, rank and point location.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::geometry::FractalSpec;

/// An M-complex `L^M K + ν_Δ` inside `K^{<M+m>}`, `m = word.len()`.
///
/// Digits are stored 0-based, outermost first: `word[0]` selects the
/// `(M+m-1)`-complex inside `K^{<M+m>}`, the last digit the M-complex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "AddressRepr", try_from = "AddressRepr")]
pub struct ComplexAddress {
    pub level: i32,
    pub word: Vec<u16>,
}

#[derive(Serialize, Deserialize)]
struct AddressRepr {
    level: i32,
    word: Vec<usize>,
}

impl From<ComplexAddress> for AddressRepr {
    fn from(a: ComplexAddress) -> Self {
        AddressRepr {
            level: a.level,
            word: a.word.iter().map(|&d| d as usize + 1).collect(),
        }
    }
}

impl TryFrom<AddressRepr> for ComplexAddress {
    type Error = String;
    fn try_from(r: AddressRepr) -> std::result::Result<Self, String> {
        let word = r
            .word
            .iter()
            .map(|&d| {
                if d == 0 || d > u16::MAX as usize {
                    Err(format!("digit {d} out of range"))
                } else {
                    Ok((d - 1) as u16)
                }
            })
            .collect::<std::result::Result<_, _>>()?;
        Ok(ComplexAddress {
            level: r.level,
            word,
        })
    }
}

impl fmt::Display for ComplexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M={}:(", self.level)?;
        for (i, d) in self.word.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", d + 1)?;
        }
        write!(f, ")")
    }
}

impl ComplexAddress {
    pub fn primary(level: i32) -> Self {
        ComplexAddress {
            level,
            word: Vec::new(),
        }
    }

    /// Builds an address from 1-based digits.
    pub fn from_digits(level: i32, digits: &[usize], n: usize) -> Result<Self> {
        let word = digits
            .iter()
            .map(|&d| {
                if d == 0 || d > n {
                    Err(Error::domain(format!("digit {d} outside 1..={n}")))
                } else {
                    Ok((d - 1) as u16)
                }
            })
            .collect::<Result<_>>()?;
        Ok(ComplexAddress { level, word })
    }

    /// Parses `"1,2,3"` (1-based digits, outermost first; empty for the primary complex).
    pub fn parse(level: i32, s: &str, n: usize) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        if s.is_empty() {
            return Ok(Self::primary(level));
        }
        let digits = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("digit {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_digits(level, &digits, n)
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    /// `ν_Δ = Σ_{j=M+1}^{M+m} L^j ν_{i_j}`.
    pub fn anchor(&self, spec: &FractalSpec) -> FieldElement {
        let m = self.word.len() as i32;
        self.word
            .iter()
            .enumerate()
            .fold(FieldElement::zero(spec.k()), |acc, (t, &d)| {
                let p = self.level + m - t as i32;
                &acc + &spec.nu()[d as usize].scale(&spec.l_pow(p))
            })
    }

    /// `L^M V0 + ν_Δ`, in the order of `V0`.
    pub fn vertices(&self, spec: &FractalSpec) -> Vec<FieldElement> {
        let a = self.anchor(spec);
        spec.primary_vertices(self.level)
            .iter()
            .map(|v| v + &a)
            .collect()
    }

    /// The enclosing complex one level up, if the word is non-empty.
    pub fn parent(&self) -> Option<ComplexAddress> {
        if self.word.is_empty() {
            return None;
        }
        Some(ComplexAddress {
            level: self.level + 1,
            word: self.word[..self.word.len() - 1].to_vec(),
        })
    }

    /// The `p`-level ancestor (`p ≥ level`), cutting `p - level` innermost digits.
    pub fn ancestor(&self, p: i32) -> Option<ComplexAddress> {
        let cut = p.checked_sub(self.level)?;
        if cut < 0 || cut as usize > self.word.len() {
            return None;
        }
        Some(ComplexAddress {
            level: p,
            word: self.word[..self.word.len() - cut as usize].to_vec(),
        })
    }

    /// The same complex addressed from a window `extra` levels higher: the
    /// primary complex of each level is the first-digit subcomplex of the next.
    pub fn lifted(&self, extra: usize) -> ComplexAddress {
        let mut word = vec![0u16; extra];
        word.extend_from_slice(&self.word);
        ComplexAddress {
            level: self.level,
            word,
        }
    }

    pub fn child(&self, digit: u16) -> ComplexAddress {
        let mut word = self.word.clone();
        word.push(digit);
        ComplexAddress {
            level: self.level - 1,
            word,
        }
    }

    pub fn is_within(&self, outer: &ComplexAddress) -> bool {
        self.ancestor(outer.level).as_ref() == Some(outer)
    }
}

/// A point given exactly as a vertex of some `level`-complex. Vertices of a
/// level are vertices of every lower level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub pos: FieldElement,
    pub level: i32,
}

impl Point {
    pub fn new(pos: FieldElement, level: i32) -> Self {
        Point { pos, level }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.pos, self.level)
    }
}

/// Float shadow data used to prune descents; never used for equality.
#[derive(Debug, Clone)]
struct Shadow {
    nu: Vec<(f64, f64)>,
    bary: (f64, f64),
    rho: f64,
    l: f64,
}

impl Shadow {
    fn new(spec: &FractalSpec) -> Self {
        Shadow {
            nu: spec.nu().iter().map(FieldElement::to_complex).collect(),
            bary: spec.barycenter().to_complex(),
            rho: spec.barycentric_radius(),
            l: spec.scale() as f64,
        }
    }

    /// Could a complex at `level` with float anchor `a` contain the point `p`?
    fn may_contain(&self, level: i32, a: (f64, f64), p: (f64, f64)) -> bool {
        let s = self.l.powi(level);
        let cx = a.0 + s * self.bary.0;
        let cy = a.1 + s * self.bary.1;
        let d = ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt();
        let scale = s.max(a.0.abs()).max(a.1.abs()).max(1.0);
        d <= s * self.rho + 1e-9 * scale
    }
}

/// All `target_level`-complexes inside the complex `top` that have `pos` as a
/// vertex, as full addresses below `top`, in lexicographic order.
pub fn locate_vertex(
    spec: &FractalSpec,
    pos: &FieldElement,
    target_level: i32,
    top: &ComplexAddress,
) -> Vec<ComplexAddress> {
    if target_level > top.level {
        return Vec::new();
    }
    let shadow = Shadow::new(spec);
    let p = pos.to_complex();
    let v0: HashSet<&FieldElement> = spec.v0().iter().collect();
    let top_anchor = top.anchor(spec).to_complex();
    let mut out = Vec::new();
    let mut word = top.word.clone();
    descend(
        spec,
        &shadow,
        &v0,
        pos,
        p,
        target_level,
        top.level,
        top_anchor,
        &mut word,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn descend(
    spec: &FractalSpec,
    shadow: &Shadow,
    v0: &HashSet<&FieldElement>,
    pos: &FieldElement,
    p: (f64, f64),
    target: i32,
    level: i32,
    anchor: (f64, f64),
    word: &mut Vec<u16>,
    out: &mut Vec<ComplexAddress>,
) {
    if !shadow.may_contain(level, anchor, p) {
        return;
    }
    if level == target {
        let addr = ComplexAddress {
            level,
            word: word.clone(),
        };
        let rel = (pos - &addr.anchor(spec)).scale(&spec.l_pow(-level));
        if v0.contains(&rel) {
            out.push(addr);
        }
        return;
    }
    let s = shadow.l.powi(level);
    for (i, nu) in shadow.nu.iter().enumerate() {
        word.push(i as u16);
        let a = (anchor.0 + s * nu.0, anchor.1 + s * nu.1);
        descend(spec, shadow, v0, pos, p, target, level - 1, a, word, out);
        word.pop();
    }
}

/// Smallest `T ≥ from` such that the disk bound allows `pos ∈ K^{<T>}`.
fn first_plausible_level(spec: &FractalSpec, pos: &FieldElement, from: i32) -> i32 {
    let shadow = Shadow::new(spec);
    let p = pos.to_complex();
    let mut t = from;
    while !shadow.may_contain(t, (0.0, 0.0), p) {
        t += 1;
    }
    t
}

/// Default cap on how far above `M` a vertex is searched for.
pub const DEFAULT_MAX_SEARCH_DEPTH: u32 = 24;

/// The M-complexes of the one-sided unbounded fractal having `v` as a vertex,
/// addressed inside `K^{<T+1>}` where `T` is the lowest level whose primary
/// complex contains `v`. Incident complexes never lie outside that window.
pub fn incident_complexes(
    spec: &FractalSpec,
    v: &FieldElement,
    level: i32,
    max_depth: u32,
) -> Result<Vec<ComplexAddress>> {
    let mut t = first_plausible_level(spec, v, level);
    while t <= level + max_depth as i32 {
        if !locate_vertex(spec, v, level, &ComplexAddress::primary(t)).is_empty() {
            return Ok(locate_vertex(
                spec,
                v,
                level,
                &ComplexAddress::primary(t + 1),
            ));
        }
        t += 1;
    }
    Err(Error::domain(format!(
        "{v} is not a level-{level} vertex within {max_depth} levels"
    )))
}

/// The M-complexes of the unbounded fractal containing the point `x`, as in
/// [`incident_complexes`]; a single complex unless `x` is a level-M vertex.
pub fn locate_point(
    spec: &FractalSpec,
    x: &Point,
    level: i32,
    max_depth: u32,
) -> Result<Vec<ComplexAddress>> {
    let fine = x.level.min(level);
    if fine == level {
        return incident_complexes(spec, &x.pos, level, max_depth);
    }
    let mut t = first_plausible_level(spec, &x.pos, level);
    while t <= level + max_depth as i32 {
        if !locate_vertex(spec, &x.pos, fine, &ComplexAddress::primary(t)).is_empty() {
            let mut out: Vec<ComplexAddress> =
                locate_vertex(spec, &x.pos, fine, &ComplexAddress::primary(t + 1))
                    .iter()
                    .filter_map(|a| a.ancestor(level))
                    .collect();
            out.dedup();
            return Ok(out);
        }
        t += 1;
    }
    Err(Error::domain(format!(
        "{x} is not a point of the fractal within {max_depth} levels"
    )))
}

/// Number of M-complexes of the unbounded fractal meeting at `v`.
pub fn rank(spec: &FractalSpec, v: &FieldElement, level: i32) -> Result<usize> {
    Ok(incident_complexes(spec, v, level, DEFAULT_MAX_SEARCH_DEPTH)?.len())
}

/// All `N^m` M-complexes of `K^{<M+m>}` with deduplicated vertices.
#[derive(Debug, Clone)]
pub struct Window {
    spec: Arc<FractalSpec>,
    level: i32,
    depth: usize,
    vertices: Vec<FieldElement>,
    index: HashMap<FieldElement, usize>,
    /// Vertex ids of each complex, in `V0` order.
    cells: Vec<Vec<usize>>,
    incidence: Vec<Vec<usize>>,
    adjacency: Vec<Vec<usize>>,
}

impl Window {
    pub fn new(spec: &FractalSpec, level: i32, depth: usize, budget: &Budget) -> Result<Self> {
        Self::with_spec(Arc::new(spec.clone()), level, depth, budget)
    }

    pub fn with_spec(
        spec: Arc<FractalSpec>,
        level: i32,
        depth: usize,
        budget: &Budget,
    ) -> Result<Self> {
        budget.check_pow("window complexes", spec.n(), depth as u32)?;
        let n = spec.n();
        let count = n.pow(depth as u32);
        let base = spec.primary_vertices(level);
        // Anchors by level: digit t of a depth-m word contributes L^{M+m-t} ν_d.
        let steps: Vec<Vec<FieldElement>> = (0..depth)
            .map(|t| {
                let s = spec.l_pow(level + (depth - t) as i32);
                spec.nu().iter().map(|v| v.scale(&s)).collect()
            })
            .collect();
        let mut vertices = Vec::new();
        let mut index: HashMap<FieldElement, usize> = HashMap::new();
        let mut cells = Vec::with_capacity(count);
        let mut incidence: Vec<Vec<usize>> = Vec::new();
        // Depth-first over words keeps a running anchor per prefix.
        let mut prefix = vec![FieldElement::zero(spec.k()); depth + 1];
        let mut word = vec![0usize; depth];
        for c in 0..count {
            // First digit position that changed since the previous word.
            let mut changed = 0;
            if c > 0 {
                let mut t = depth;
                while t > 0 {
                    t -= 1;
                    word[t] += 1;
                    if word[t] < n {
                        changed = t;
                        break;
                    }
                    word[t] = 0;
                }
            }
            for t in changed..depth {
                prefix[t + 1] = &prefix[t] + &steps[t][word[t]];
            }
            let anchor = &prefix[depth];
            let mut ids = Vec::with_capacity(base.len());
            for b in &base {
                let p = b + anchor;
                let next = vertices.len();
                let id = *index.entry(p.clone()).or_insert_with(|| {
                    vertices.push(p);
                    incidence.push(Vec::new());
                    next
                });
                incidence[id].push(c);
                ids.push(id);
            }
            cells.push(ids);
        }
        let mut adjacency = vec![Vec::new(); count];
        for inc in &incidence {
            for &a in inc {
                for &b in inc {
                    if a != b {
                        adjacency[a].push(b);
                    }
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Window {
            spec,
            level,
            depth,
            vertices,
            index,
            cells,
            incidence,
            adjacency,
        })
    }

    pub fn spec(&self) -> &FractalSpec {
        &self.spec
    }
    pub fn spec_arc(&self) -> &Arc<FractalSpec> {
        &self.spec
    }
    pub fn level(&self) -> i32 {
        self.level
    }
    pub fn depth(&self) -> usize {
        self.depth
    }
    /// Level of the enclosing primary complex, `M + m`.
    pub fn top_level(&self) -> i32 {
        self.level + self.depth as i32
    }
    pub fn num_complexes(&self) -> usize {
        self.cells.len()
    }
    pub fn vertices(&self) -> &[FieldElement] {
        &self.vertices
    }
    pub fn vertex(&self, id: usize) -> &FieldElement {
        &self.vertices[id]
    }
    pub fn vertex_id(&self, v: &FieldElement) -> Option<usize> {
        self.index.get(v).copied()
    }
    /// Vertex ids of complex `c`, in `V0` order.
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }
    /// Complexes having vertex `id`, ascending.
    pub fn incident(&self, id: usize) -> &[usize] {
        &self.incidence[id]
    }
    /// Number of window complexes meeting at vertex `id`.
    pub fn window_rank(&self, id: usize) -> usize {
        self.incidence[id].len()
    }
    /// Complexes sharing at least one vertex with `c`, ascending.
    pub fn neighbours(&self, c: usize) -> &[usize] {
        &self.adjacency[c]
    }

    pub fn address(&self, c: usize) -> ComplexAddress {
        let n = self.spec.n();
        let mut word = vec![0u16; self.depth];
        let mut x = c;
        for t in (0..self.depth).rev() {
            word[t] = (x % n) as u16;
            x /= n;
        }
        ComplexAddress {
            level: self.level,
            word,
        }
    }

    pub fn complex_index(&self, addr: &ComplexAddress) -> Option<usize> {
        if addr.level != self.level || addr.word.len() != self.depth {
            return None;
        }
        let n = self.spec.n();
        let mut c = 0usize;
        for &d in &addr.word {
            if d as usize >= n {
                return None;
            }
            c = c * n + d as usize;
        }
        Some(c)
    }

    /// Vertex ids of the primary complex `K^{<M>}` (complex 0), in `V0` order.
    pub fn primary_cell(&self) -> &[usize] {
        &self.cells[0]
    }

    /// Window complexes containing `x`: the full incident set for level-M
    /// vertices, otherwise the unique complex whose sub-cell has `x` as a vertex.
    pub fn containing(&self, x: &Point) -> Result<Vec<usize>> {
        if x.level >= self.level {
            return match self.index.get(&x.pos) {
                Some(&id) => Ok(self.incidence[id].clone()),
                None => Err(Error::domain(format!(
                    "{} is not a level-{} vertex of the window",
                    x.pos, self.level
                ))),
            };
        }
        let fine = locate_vertex(
            &self.spec,
            &x.pos,
            x.level,
            &ComplexAddress::primary(self.top_level()),
        );
        let mut out: Vec<usize> = fine
            .iter()
            .filter_map(|a| a.ancestor(self.level))
            .filter_map(|a| self.complex_index(&a))
            .collect();
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(Error::domain(format!("{x} lies outside the window")));
        }
        Ok(out)
    }

    pub fn containing_complex(&self, x: &Point) -> Result<Vec<ComplexAddress>> {
        Ok(self
            .containing(x)?
            .into_iter()
            .map(|c| self.address(c))
            .collect())
    }

    /// Adjacent complex pairs sharing more than one vertex.
    pub fn nesting_violations(&self) -> Vec<(usize, usize)> {
        let mut shared: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for inc in &self.incidence {
            for (i, &a) in inc.iter().enumerate() {
                for &b in &inc[i + 1..] {
                    *shared.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
        }
        shared
            .into_iter()
            .filter(|&(_, n)| n > 1)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn stats(&self) -> WindowStats {
        let mut rank_histogram = BTreeMap::new();
        for inc in &self.incidence {
            *rank_histogram.entry(inc.len()).or_insert(0) += 1;
        }
        WindowStats {
            spec: self.spec.name().to_string(),
            level: self.level,
            depth: self.depth,
            complexes: self.num_complexes(),
            vertices: self.vertices.len(),
            rank_histogram,
        }
    }

    /// `id,x,y,window_rank,coeffs` with coefficients `;`-separated.
    pub fn vertices_csv(&self) -> String {
        let mut s = String::from("id,x,y,window_rank,coeffs\n");
        for (id, v) in self.vertices.iter().enumerate() {
            let (x, y) = v.to_complex();
            s.push_str(&format!(
                "{id},{x},{y},{},{}\n",
                self.window_rank(id),
                v.to_coeff_strings().join(";")
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowStats {
    pub spec: String,
    pub level: i32,
    pub depth: usize,
    pub complexes: usize,
    pub vertices: usize,
    /// In-window rank → vertex count.
    pub rank_histogram: BTreeMap<usize, usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldElement as F;

    fn spec(name: &str) -> FractalSpec {
        FractalSpec::builtin(name).unwrap()
    }

    #[test]
    fn complex_vertices_examples() {
        let g = spec("gasket");
        let v = ComplexAddress::primary(0).vertices(&g);
        assert_eq!(v, g.v0());
        let a = ComplexAddress::from_digits(0, &[2], 3).unwrap();
        let got: Vec<(f64, f64)> = a.vertices(&g).iter().map(F::to_complex).collect();
        let h = 3f64.sqrt() / 2.0;
        for (p, q) in got.iter().zip([(1.0, 0.0), (2.0, 0.0), (1.5, h)]) {
            assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
        }
        for name in builtin_names() {
            let s = spec(name);
            let l = s.l_pow(1);
            let v1 = ComplexAddress::primary(1).vertices(&s);
            assert_eq!(v1, s.v0().iter().map(|v| v.scale(&l)).collect::<Vec<_>>());
        }
    }

    use crate::geometry::builtin_names;

    #[test]
    fn window_counts() {
        let g = Window::new(&spec("gasket"), 0, 1, &Budget::unlimited()).unwrap();
        assert_eq!((g.num_complexes(), g.vertices().len()), (3, 6));
        assert_eq!(g.stats().rank_histogram, BTreeMap::from([(1, 3), (2, 3)]));
        let v = Window::new(&spec("vicsek"), 0, 1, &Budget::unlimited()).unwrap();
        assert_eq!((v.num_complexes(), v.vertices().len()), (5, 16));
        let center = v.cell(4);
        assert!(center.iter().all(|&id| v.window_rank(id) == 2));
        for name in builtin_names() {
            let w = Window::new(&spec(name), 2, 0, &Budget::unlimited()).unwrap();
            assert_eq!(w.vertices().len(), w.spec().k() as usize);
            assert!((0..w.vertices().len()).all(|i| w.window_rank(i) == 1));
        }
    }

    #[test]
    fn window_invariants() {
        for name in builtin_names() {
            let s = spec(name);
            for depth in 0..3 {
                let w = Window::new(&s, 0, depth, &Budget::unlimited()).unwrap();
                assert!(w.vertices().len() <= s.k() as usize * s.n().pow(depth as u32));
                assert!(w.nesting_violations().is_empty(), "{name} {depth}");
                let up = Window::new(&s, 1, depth, &Budget::unlimited()).unwrap();
                let l = s.l_pow(1);
                let scaled: HashSet<F> = w.vertices().iter().map(|v| v.scale(&l)).collect();
                let upset: HashSet<F> = up.vertices().iter().cloned().collect();
                assert_eq!(scaled, upset);
                for c in 0..w.num_complexes() {
                    let a = w.address(c);
                    assert_eq!(w.complex_index(&a), Some(c));
                    let vs: Vec<F> = w.cell(c).iter().map(|&i| w.vertex(i).clone()).collect();
                    assert_eq!(vs, a.vertices(&s));
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let b = Budget { max_complexes: 10 };
        let err = Window::new(&spec("vicsek"), 0, 2, &b).unwrap_err();
        assert_eq!(
            err,
            Error::Resource {
                what: "window complexes".into(),
                requested: 25,
                limit: 10
            }
        );
    }

    #[test]
    fn rank_examples() {
        let g = spec("gasket");
        assert_eq!(rank(&g, &F::zero(3), 0).unwrap(), 1);
        assert_eq!(rank(&g, &F::zero(3), 5).unwrap(), 1);
        assert_eq!(rank(&g, &F::one(3), 0).unwrap(), 2);
        assert!(matches!(
            rank(&g, &F::parse(3, "[1/3]").unwrap(), 0),
            Err(Error::Domain(_))
        ));
        // Gasket vertices inside K^{<3>}: ranks lie in {1,2,3} and 0 is the only rank-1 point.
        let w = Window::new(&g, 0, 3, &Budget::unlimited()).unwrap();
        for v in w.vertices() {
            let r = rank(&g, v, 0).unwrap();
            assert!((1..=3).contains(&r));
            assert_eq!(r == 1, v.is_zero(), "{v}");
        }
    }

    #[test]
    fn rank_at_most_two_for_k_at_least_four() {
        for name in ["vicsek", "hexagon", "snowflake"] {
            let s = spec(name);
            let w = Window::new(&s, 0, 2, &Budget::unlimited()).unwrap();
            for v in w.vertices() {
                let r = rank(&s, v, 0).unwrap();
                assert!((1..=2).contains(&r), "{name} {v} {r}");
            }
        }
    }

    #[test]
    fn containing_examples() {
        let g = spec("gasket");
        let w = Window::new(&g, 0, 2, &Budget::unlimited()).unwrap();
        let got = w.containing_complex(&Point::new(F::one(3), 0)).unwrap();
        let words: Vec<Vec<u16>> = got.iter().map(|a| a.word.clone()).collect();
        assert_eq!(words, vec![vec![0, 0], vec![0, 1]]);
        // Interior point of K^{<0>} given as a level -2 vertex.
        let x = F::parse(3, "[1/4]").unwrap();
        let got = w.containing_complex(&Point::new(x, -2)).unwrap();
        assert_eq!(
            got,
            vec![ComplexAddress {
                level: 0,
                word: vec![0, 0]
            }]
        );
        // Rank-1 corner of K^{<0>}
        let got = w.containing_complex(&Point::new(F::zero(3), 0)).unwrap();
        assert_eq!(got.len(), 1);
        let far = F::from_int(3, 100);
        assert!(w.containing(&Point::new(far.clone(), 0)).is_err());
        assert!(w.containing(&Point::new(far, -1)).is_err());
    }

    #[test]
    fn address_serialization_is_one_based() {
        let a = ComplexAddress {
            level: -1,
            word: vec![0, 2],
        };
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"level":-1,"word":[1,3]}"#);
        assert_eq!(serde_json::from_str::<ComplexAddress>(&s).unwrap(), a);
        assert_eq!(a.to_string(), "M=-1:(1,3)");
        assert_eq!(ComplexAddress::parse(-1, "(1,3)", 3).unwrap(), a);
        assert!(ComplexAddress::parse(0, "0", 3).is_err());
    }

    #[test]
    fn lifted_addresses_keep_vertices() {
        let s = spec("vicsek");
        let a = ComplexAddress {
            level: 0,
            word: vec![4, 2],
        };
        assert_eq!(a.vertices(&s), a.lifted(3).vertices(&s));
    }

    #[test]
    fn csv_has_one_row_per_vertex() {
        let w = Window::new(&spec("gasket"), 0, 1, &Budget::unlimited()).unwrap();
        assert_eq!(w.vertices_csv().lines().count(), 7);
    }
}
