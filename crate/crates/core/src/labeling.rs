//! Good labellings: breadth-first propagation with conflict certificates, the
//! recursive on-demand labelling, and closed-form oracles.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::complexes::{
    incident_complexes, locate_vertex, ComplexAddress, Window, DEFAULT_MAX_SEARCH_DEPTH,
};
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::geometry::{rotate_about, FractalSpec};

/// Index into the alphabet `a_1 … a_k`, 0-based.
pub type Label = u32;

/// `k` symbols in the counter-clockwise order of `V0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    k: u32,
}

impl Alphabet {
    pub fn new(k: u32) -> Self {
        Alphabet { k }
    }
    pub fn size(&self) -> u32 {
        self.k
    }
    /// `a`, `b`, … for `k ≤ 26`, otherwise `a1`, `a2`, ….
    pub fn name(&self, l: Label) -> String {
        if self.k <= 26 {
            char::from(b'a' + l as u8).to_string()
        } else {
            format!("a{}", l + 1)
        }
    }
    pub fn parse(&self, s: &str) -> Result<Label> {
        let s = s.trim();
        let l = if self.k <= 26 && s.len() == 1 && s.as_bytes()[0].is_ascii_lowercase() {
            (s.as_bytes()[0] - b'a') as u32
        } else if let Some(n) = s.strip_prefix('a').and_then(|t| t.parse::<u32>().ok()) {
            n.checked_sub(1)
                .ok_or_else(|| Error::Parse(format!("label {s:?}")))?
        } else {
            return Err(Error::Parse(format!("label {s:?}")));
        };
        if l >= self.k {
            return Err(Error::Parse(format!(
                "label {s:?} outside alphabet of size {}",
                self.k
            )));
        }
        Ok(l)
    }
}

/// The identity seed: `V0[t] ↦ a_{t+1}`.
pub fn identity_seed(k: u32) -> Vec<Label> {
    (0..k).collect()
}

fn check_seed(seed: &[Label], k: u32) -> Result<()> {
    let mut seen = vec![false; k as usize];
    if seed.len() != k as usize {
        return Err(Error::domain(format!(
            "seed has {} labels, expected {k}",
            seed.len()
        )));
    }
    for &l in seed {
        if l >= k || std::mem::replace(&mut seen[l as usize], true) {
            return Err(Error::domain(format!(
                "seed {seed:?} is not a bijection onto the alphabet"
            )));
        }
    }
    Ok(())
}

fn seed_position(seed: &[Label], l: Label) -> usize {
    seed.iter()
        .position(|&x| x == l)
        .expect("seed is a bijection")
}

/// One link of a forcing chain: the complex, and the already-labelled vertex
/// that fixed its rotation (absent for the seed complex).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingStep {
    pub complex: ComplexAddress,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub via: Option<FieldElement>,
}

/// A vertex forced to two distinct labels, with both forcing chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub vertex: FieldElement,
    pub label_a: Label,
    pub label_b: Label,
    pub chain_a: Vec<ForcingStep>,
    pub chain_b: Vec<ForcingStep>,
}

impl Conflict {
    pub fn complex_a(&self) -> &ComplexAddress {
        &self.chain_a.last().expect("non-empty chain").complex
    }
    pub fn complex_b(&self) -> &ComplexAddress {
        &self.chain_b.last().expect("non-empty chain").complex
    }

    /// Re-derives both labels from the seed by walking each chain with exact
    /// geometry only.
    pub fn replay(&self, spec: &FractalSpec, seed: &[Label]) -> Result<(Label, Label)> {
        Ok((
            replay_chain(spec, seed, &self.chain_a, &self.vertex)?,
            replay_chain(spec, seed, &self.chain_b, &self.vertex)?,
        ))
    }
}

fn replay_chain(
    spec: &FractalSpec,
    seed: &[Label],
    chain: &[ForcingStep],
    v: &FieldElement,
) -> Result<Label> {
    let k = spec.k() as usize;
    let first = chain
        .first()
        .ok_or_else(|| Error::integrity("empty forcing chain"))?;
    if !first.complex.word.iter().all(|&d| d == 0) {
        return Err(Error::integrity(
            "forcing chain does not start at the primary complex",
        ));
    }
    let mut verts = first.complex.vertices(spec);
    let mut rot = 0usize;
    for step in &chain[1..] {
        let via = step
            .via
            .as_ref()
            .ok_or_else(|| Error::integrity("chain link without vertex"))?;
        let tp = verts
            .iter()
            .position(|x| x == via)
            .ok_or_else(|| Error::integrity("link vertex not in previous complex"))?;
        let label = seed[(tp + rot) % k];
        let next = step.complex.vertices(spec);
        let tn = next
            .iter()
            .position(|x| x == via)
            .ok_or_else(|| Error::integrity("link vertex not in complex"))?;
        rot = (seed_position(seed, label) + k - tn) % k;
        verts = next;
    }
    let t = verts
        .iter()
        .position(|x| x == v)
        .ok_or_else(|| Error::integrity("conflict vertex not in final complex"))?;
    Ok(seed[(t + rot) % k])
}

/// A good labelling of the window's vertices: complex `c` with rotation `r`
/// carries `seed[(t + r) mod k]` on its `t`-th vertex.
#[derive(Debug, Clone)]
pub struct Labeling {
    window: Arc<Window>,
    seed: Vec<Label>,
    labels: Vec<Label>,
    rotations: Vec<u32>,
    /// BFS parent complex and the vertex through which the rotation was fixed.
    parent: Vec<Option<(usize, usize)>>,
}

impl Labeling {
    pub fn window(&self) -> &Arc<Window> {
        &self.window
    }
    pub fn level(&self) -> i32 {
        self.window.level()
    }
    pub fn seed(&self) -> &[Label] {
        &self.seed
    }
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }
    pub fn label(&self, vertex: usize) -> Label {
        self.labels[vertex]
    }
    pub fn label_of(&self, v: &FieldElement) -> Option<Label> {
        self.window.vertex_id(v).map(|i| self.labels[i])
    }
    /// Rotation index of complex `c`, `0` meaning the identity.
    pub fn rotation(&self, c: usize) -> u32 {
        self.rotations[c]
    }
    pub fn rotations(&self) -> &[u32] {
        &self.rotations
    }
    pub fn chain(&self, c: usize) -> Vec<ForcingStep> {
        forcing_chain(&self.window, &self.parent, c)
    }
}

fn forcing_chain(window: &Window, parent: &[Option<(usize, usize)>], c: usize) -> Vec<ForcingStep> {
    let mut out = vec![ForcingStep {
        complex: window.address(c),
        via: None,
    }];
    let mut cur = c;
    while let Some((p, v)) = parent[cur] {
        out.last_mut().unwrap().via = Some(window.vertex(v).clone());
        out.push(ForcingStep {
            complex: window.address(p),
            via: None,
        });
        cur = p;
    }
    out.reverse();
    out
}

#[derive(Debug, Clone)]
pub enum Propagation {
    Labelled(Labeling),
    Conflict(Box<Conflict>),
}

impl Propagation {
    pub fn labeling(&self) -> Option<&Labeling> {
        match self {
            Propagation::Labelled(l) => Some(l),
            Propagation::Conflict(_) => None,
        }
    }
    pub fn conflict(&self) -> Option<&Conflict> {
        match self {
            Propagation::Conflict(c) => Some(c),
            Propagation::Labelled(_) => None,
        }
    }
}

/// Breadth-first over complex adjacency from the primary complex, giving each
/// newly reached complex the unique rotation matching its shared vertex.
/// Stops at the first vertex forced to two labels.
pub fn propagate_labels(window: Arc<Window>, seed: &[Label]) -> Result<Propagation> {
    let spec = window.spec();
    let k = spec.k() as usize;
    check_seed(seed, spec.k())?;
    if !spec.is_regular_ordered() {
        return Err(Error::domain(
            "essential fixed points do not form a regular polygon",
        ));
    }
    let nc = window.num_complexes();
    let mut labels: Vec<Option<Label>> = vec![None; window.vertices().len()];
    let mut labelled_by = vec![usize::MAX; labels.len()];
    let mut rotations: Vec<Option<u32>> = vec![None; nc];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nc];
    rotations[0] = Some(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        let r = rotations[c].unwrap() as usize;
        for (t, &v) in window.cell(c).iter().enumerate() {
            let l = seed[(t + r) % k];
            match labels[v] {
                None => {
                    labels[v] = Some(l);
                    labelled_by[v] = c;
                }
                Some(old) if old != l => {
                    return Ok(Propagation::Conflict(Box::new(Conflict {
                        vertex: window.vertex(v).clone(),
                        label_a: old,
                        label_b: l,
                        chain_a: forcing_chain(&window, &parent, labelled_by[v]),
                        chain_b: forcing_chain(&window, &parent, c),
                    })));
                }
                Some(_) => {}
            }
        }
        for &d in window.neighbours(c) {
            if rotations[d].is_some() {
                continue;
            }
            let cell = window.cell(d);
            let (t, v) = cell
                .iter()
                .enumerate()
                .find(|(_, v)| window.cell(c).contains(v))
                .map(|(t, &v)| (t, v))
                .expect("adjacent complexes share a vertex");
            let j = seed_position(seed, labels[v].unwrap());
            rotations[d] = Some(((j + k - t) % k) as u32);
            parent[d] = Some((c, v));
            queue.push_back(d);
        }
    }
    if let Some(c) = rotations.iter().position(Option::is_none) {
        return Err(Error::Validation(format!(
            "complex {} is not connected to the primary complex",
            window.address(c)
        )));
    }
    Ok(Propagation::Labelled(Labeling {
        labels: labels.into_iter().map(Option::unwrap).collect(),
        rotations: rotations.into_iter().map(Option::unwrap).collect(),
        seed: seed.to_vec(),
        window,
        parent,
    }))
}

/// The unique `r` with `ℓ(v) = ℓ_0(R_r(v − ν_Δ))` about `b_M` on all vertices of
/// the complex, recomputed from labels and geometry alone.
pub fn rotation_for_complex(addr: &ComplexAddress, labeling: &Labeling) -> Result<u32> {
    let w = labeling.window();
    let spec = w.spec();
    let anchor = addr.anchor(spec);
    let bm = spec.barycenter_at(addr.level);
    let verts = addr.vertices(spec);
    let primary = w.primary_cell();
    let lab = |v: &FieldElement| {
        labeling
            .label_of(v)
            .ok_or_else(|| Error::domain(format!("{v} is not labelled")))
    };
    let labels: Vec<Label> = verts.iter().map(lab).collect::<Result<_>>()?;
    'r: for r in 0..spec.k() {
        for (v, &l) in verts.iter().zip(&labels) {
            let img = rotate_about(&(v - &anchor), &bm, r as i64);
            match w.vertex_id(&img) {
                Some(id) if primary.contains(&id) && labeling.label(id) == l => {}
                _ => continue 'r,
            }
        }
        return Ok(r);
    }
    Err(Error::integrity(format!(
        "no rotation matches the labels of {addr}"
    )))
}

/// Outcome of the extension criterion on `V_0^{<1>}`.
#[derive(Debug, Clone)]
pub struct GlpVerdict {
    pub glp: bool,
    pub outcome: Propagation,
}

/// Decides the good labelling property by propagating the identity seed on
/// the depth-1 window at order 0, and verifies every rotation.
pub fn check_glp(spec: &FractalSpec) -> Result<GlpVerdict> {
    let window = Arc::new(Window::new(spec, 0, 1, &Budget::unlimited())?);
    let outcome = propagate_labels(window, &identity_seed(spec.k()))?;
    if let Propagation::Labelled(l) = &outcome {
        for c in 0..l.window().num_complexes() {
            let r = rotation_for_complex(&l.window().address(c), l)?;
            if r != l.rotation(c) {
                return Err(Error::integrity(format!(
                    "rotation mismatch on complex {c}"
                )));
            }
        }
    }
    Ok(GlpVerdict {
        glp: outcome.labeling().is_some(),
        outcome,
    })
}

/// A good labelling of order `M` on the whole unbounded fractal, available on
/// demand. Built from the depth-1 rotations, which are the same at every order.
#[derive(Debug, Clone)]
pub struct GoodLabelling {
    spec: Arc<FractalSpec>,
    level: i32,
    seed: Vec<Label>,
    /// Rotation of the `i`-th subcomplex of a primary complex.
    rot1: Vec<u32>,
    /// `perm[s][i]`: subcomplex that subcomplex `i` is carried to by `R_s` about the barycenter.
    perm: Vec<Vec<u16>>,
    max_search_depth: u32,
}

impl GoodLabelling {
    pub fn new(spec: &FractalSpec, level: i32, seed: &[Label]) -> Result<Self> {
        Self::with_spec(Arc::new(spec.clone()), level, seed)
    }

    pub fn with_spec(spec: Arc<FractalSpec>, level: i32, seed: &[Label]) -> Result<Self> {
        check_seed(seed, spec.k())?;
        let verdict = check_glp(&spec)?;
        let lab = match verdict.outcome {
            Propagation::Labelled(l) => l,
            Propagation::Conflict(c) => {
                return Err(Error::domain(format!(
                    "{} does not have the good labelling property (conflict at {})",
                    spec.name(),
                    c.vertex
                )))
            }
        };
        let rot1 = lab.rotations().to_vec();
        let perm = rotation_permutations(&spec)?;
        Ok(GoodLabelling {
            spec,
            level,
            seed: seed.to_vec(),
            rot1,
            perm,
            max_search_depth: DEFAULT_MAX_SEARCH_DEPTH,
        })
    }

    pub fn with_max_search_depth(mut self, d: u32) -> Self {
        self.max_search_depth = d;
        self
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
    pub fn seed(&self) -> &[Label] {
        &self.seed
    }
    pub fn depth_one_rotations(&self) -> &[u32] {
        &self.rot1
    }

    /// Rotation of the M-complex with this word (relative to any primary
    /// complex containing it): descend the word, carrying earlier rotations
    /// down to the digits below.
    pub fn rotation_of_word(&self, word: &[u16]) -> u32 {
        let k = self.spec.k() as usize;
        let mut s = 0usize;
        for &d in word {
            let eff = self.perm[s][d as usize] as usize;
            s = (s + self.rot1[eff] as usize) % k;
        }
        s as u32
    }

    pub fn rotation_of(&self, addr: &ComplexAddress) -> Result<u32> {
        if addr.level != self.level {
            return Err(Error::domain(format!(
                "{addr} is not a level-{} complex",
                self.level
            )));
        }
        Ok(self.rotation_of_word(&addr.word))
    }

    /// Label of the `t`-th vertex of the complex `addr`.
    pub fn label_in_complex(&self, addr: &ComplexAddress, t: usize) -> Result<Label> {
        let k = self.spec.k() as usize;
        Ok(self.seed[(t + self.rotation_of(addr)? as usize) % k])
    }

    /// A level-M complex containing the level-M vertex `v` and `v`'s index in it.
    pub fn locate(&self, v: &FieldElement) -> Result<(ComplexAddress, usize)> {
        let inc = incident_complexes(&self.spec, v, self.level, self.max_search_depth)?;
        let addr = inc.into_iter().next().expect("incident set is non-empty");
        let t = addr
            .vertices(&self.spec)
            .iter()
            .position(|x| x == v)
            .expect("located complex has v as a vertex");
        Ok((addr, t))
    }

    /// `ℓ_M(v)` by the expansion recursion: with `Δ` the `(T-1)`-complex of
    /// `K^{<T>}` holding `v`, `ℓ_M(v) = ℓ_M(R_Δ(v − ν_Δ))`, down to `T = M`.
    pub fn label_vertex(&self, v: &FieldElement) -> Result<Label> {
        let spec = &self.spec;
        let m = self.level;
        let (addr, _) = self.locate(v)?;
        let mut top = m + addr.depth() as i32;
        let mut x = v.clone();
        while top > m {
            let found = locate_vertex(spec, &x, m, &ComplexAddress::primary(top));
            let d = *found
                .first()
                .and_then(|a| a.word.first())
                .ok_or_else(|| Error::integrity(format!("{x} lost during descent")))?
                as usize;
            let shifted = &x - &spec.nu()[d].scale(&spec.l_pow(top));
            x = rotate_about(&shifted, &spec.barycenter_at(top - 1), self.rot1[d] as i64);
            top -= 1;
        }
        let t = spec
            .primary_vertices(m)
            .iter()
            .position(|p| *p == x)
            .ok_or_else(|| {
                Error::integrity(format!("descent of {v} ended off the primary vertices"))
            })?;
        Ok(self.seed[t])
    }

    /// Same label through the rotation of the containing complex.
    pub fn label_fast(&self, v: &FieldElement) -> Result<Label> {
        let (addr, t) = self.locate(v)?;
        self.label_in_complex(&addr, t)
    }
}

/// `perm[s][i] = j` when rotating `K^{<1>}` by `2πs/k` about its barycenter
/// carries its `i`-th subcomplex onto the `j`-th.
fn rotation_permutations(spec: &FractalSpec) -> Result<Vec<Vec<u16>>> {
    let b0 = spec.barycenter();
    let b1 = spec.barycenter_at(1);
    let l = spec.l_pow(1);
    let centers: Vec<FieldElement> = spec.nu().iter().map(|v| b0 + &v.scale(&l)).collect();
    (0..spec.k() as i64)
        .map(|s| {
            centers
                .iter()
                .map(|c| {
                    let img = rotate_about(c, &b1, s);
                    centers
                        .iter()
                        .position(|x| *x == img)
                        .map(|j| j as u16)
                        .ok_or_else(|| Error::integrity("subcomplexes are not rotation symmetric"))
                })
                .collect()
        })
        .collect()
}

/// `(p_1^{n1} ∘ p_2^{n2})(a)` with `p_1 = (a b c)` and `p_2 = (a c b)`.
pub fn triangle_closed_form(k: u32, n1: i64, n2: i64) -> Result<Label> {
    if k != 3 {
        return Err(Error::domain(format!("closed form needs k = 3, got {k}")));
    }
    Ok((n1 - n2).rem_euclid(3) as Label)
}

/// Lattice coordinates `(n1, n2)` of `v = n1 e_1 + n2 e_2` for the triangle
/// lattice at `e_1 = L^M`, `e_2 = L^M e^{iπ/3}` (k = 3 only).
pub fn triangle_coordinates(v: &FieldElement, unit: &num::BigRational) -> Option<(i64, i64)> {
    use num::ToPrimitive;
    if v.order() != 3 {
        return None;
    }
    // e_2 = 1 + ζ, so v = (n1 + n2) + n2 ζ.
    let c = v.scale(&unit.recip());
    let c0 = c.coeffs()[0].clone();
    let c1 = c.coeffs()[1].clone();
    if !c0.is_integer() || !c1.is_integer() {
        return None;
    }
    let n2 = c1.to_integer().to_i64()?;
    let n1 = (c0 - c1).to_integer().to_i64()?;
    Some((n1, n2))
}

/// Two-colouring of the 0-complexes of `K^{<1>}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoClass {
    /// 1-based complex indices; `identity` contains the primary complex.
    Bipartite {
        identity: Vec<usize>,
        half_turn: Vec<usize>,
    },
    /// 1-based complex indices along an odd cycle.
    OddCycle(Vec<usize>),
}

impl TwoClass {
    pub fn is_bipartite(&self) -> bool {
        matches!(self, TwoClass::Bipartite { .. })
    }
}

/// For even `k`: splits the 0-complexes of `K^{<1>}` into two classes such that
/// neighbours lie in different classes, or returns an odd cycle.
pub fn two_class_partition(spec: &FractalSpec) -> Result<TwoClass> {
    if !spec.k().is_multiple_of(2) {
        return Err(Error::domain(format!(
            "two-class partition needs even k, got {}",
            spec.k()
        )));
    }
    let w = Window::new(spec, 0, 1, &Budget::unlimited())?;
    let n = w.num_complexes();
    let mut colour: Vec<Option<u8>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    colour[0] = Some(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(a) = queue.pop_front() {
        for &b in w.neighbours(a) {
            match colour[b] {
                None => {
                    colour[b] = Some(1 - colour[a].unwrap());
                    parent[b] = a;
                    depth[b] = depth[a] + 1;
                    queue.push_back(b);
                }
                Some(cb) if cb == colour[a].unwrap() => {
                    // Join the two tree paths at their lowest common ancestor.
                    let (mut x, mut y) = (a, b);
                    let mut left = vec![x];
                    let mut right = vec![y];
                    while x != y {
                        if depth[x] >= depth[y] {
                            x = parent[x];
                            left.push(x);
                        } else {
                            y = parent[y];
                            right.push(y);
                        }
                    }
                    right.pop();
                    right.reverse();
                    left.extend(right);
                    return Ok(TwoClass::OddCycle(
                        left.into_iter().map(|c| c + 1).collect(),
                    ));
                }
                Some(_) => {}
            }
        }
    }
    if colour.iter().any(Option::is_none) {
        return Err(Error::Validation(
            "0-complexes of K^<1> are not connected".into(),
        ));
    }
    let class = |c: u8| {
        (0..n)
            .filter(|&i| colour[i] == Some(c))
            .map(|i| i + 1)
            .collect()
    };
    Ok(TwoClass::Bipartite {
        identity: class(0),
        half_turn: class(1),
    })
}

/// Data of the ring construction for `N = k`: the 1-based index `r` of the
/// vertex where the primary complex meets its counter-clockwise neighbour, and
/// the predicted label index of the junction of ring complexes `l` and `l+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingOracle {
    pub r: usize,
    pub k: usize,
}

impl RingOracle {
    pub fn new(spec: &FractalSpec) -> Result<Self> {
        if spec.n() != spec.k() as usize {
            return Err(Error::domain("ring construction needs N = k"));
        }
        let w = Window::new(spec, 0, 1, &Budget::unlimited())?;
        let shared =
            ring_junction(&w, 0, 1).ok_or_else(|| Error::domain("ring neighbours do not meet"))?;
        let r = w.cell(0).iter().position(|&v| v == shared).unwrap() + 1;
        Ok(RingOracle {
            r,
            k: spec.k() as usize,
        })
    }

    /// 0-based label index predicted at the junction of complexes `l` and `l+1` (1-based `l`).
    pub fn junction_label(&self, l: usize) -> Label {
        let (r, k) = (self.r as i64, self.k as i64);
        let idx = (r + (l as i64 - 1) * 2 * (r - 1)).rem_euclid(k);
        // a_0 is a_k
        ((idx + k - 1) % k) as Label
    }
}

/// Vertex id shared by window complexes `a` and `b`, if any.
pub fn ring_junction(w: &Window, a: usize, b: usize) -> Option<usize> {
    w.cell(a).iter().copied().find(|v| w.cell(b).contains(v))
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "vertex {} forced to labels {} (via {}) and {} (via {})",
            self.vertex,
            self.label_a,
            self.complex_a(),
            self.label_b,
            self.complex_b()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldElement as F;
    use std::collections::HashMap;

    fn spec(name: &str) -> FractalSpec {
        FractalSpec::builtin(name).unwrap()
    }

    fn labelled(name: &str, depth: usize, seed: &[Label]) -> Labeling {
        let w = Arc::new(Window::new(&spec(name), 0, depth, &Budget::unlimited()).unwrap());
        match propagate_labels(w, seed).unwrap() {
            Propagation::Labelled(l) => l,
            Propagation::Conflict(c) => panic!("{name}: {c}"),
        }
    }

    #[test]
    fn glp_verdicts() {
        for (name, expect) in [
            ("gasket", true),
            ("vicsek", true),
            ("hexagon", true),
            ("snowflake", false),
        ] {
            assert_eq!(check_glp(&spec(name)).unwrap().glp, expect, "{name}");
        }
    }

    #[test]
    fn snowflake_conflict_replays() {
        let s = spec("snowflake");
        let v = check_glp(&s).unwrap();
        let c = v.outcome.conflict().unwrap();
        assert_ne!(c.label_a, c.label_b);
        assert_eq!(
            c.replay(&s, &identity_seed(6)).unwrap(),
            (c.label_a, c.label_b)
        );
        // One chain passes through the central complex.
        let center = ComplexAddress {
            level: 0,
            word: vec![6],
        };
        assert!(c
            .chain_a
            .iter()
            .chain(&c.chain_b)
            .any(|st| st.complex == center));
        let text = serde_json::to_string(c).unwrap();
        assert_eq!(&serde_json::from_str::<Conflict>(&text).unwrap(), c);
    }

    #[test]
    fn gasket_depth_one() {
        let l = labelled("gasket", 1, &[0, 1, 2]);
        assert_eq!(l.labels().len(), 6);
        assert_eq!(l.rotations(), &[0, 1, 2]);
        let unit = crate::field::rat(1, 1);
        for (id, v) in l.window().vertices().iter().enumerate() {
            let (n1, n2) = triangle_coordinates(v, &unit).unwrap();
            assert_eq!(l.label(id), triangle_closed_form(3, n1, n2).unwrap());
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(triangle_closed_form(3, 0, 0).unwrap(), 0);
        assert_eq!(triangle_closed_form(3, 1, 0).unwrap(), 1);
        assert_eq!(triangle_closed_form(3, 1, 1).unwrap(), 0);
        assert_eq!(triangle_closed_form(3, 2, 0).unwrap(), 2);
        assert!(triangle_closed_form(4, 0, 0).is_err());
    }

    #[test]
    fn rotations_match_geometry_and_fast_path() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let s = spec(name);
            let g = GoodLabelling::new(&s, 0, &identity_seed(s.k())).unwrap();
            for depth in 1..=3 {
                if s.n().pow(depth as u32) > 400 {
                    continue;
                }
                let l = labelled(name, depth, &identity_seed(s.k()));
                for c in 0..l.window().num_complexes() {
                    let a = l.window().address(c);
                    assert_eq!(rotation_for_complex(&a, &l).unwrap(), l.rotation(c));
                    assert_eq!(g.rotation_of_word(&a.word), l.rotation(c), "{name} {a}");
                }
            }
        }
    }

    #[test]
    fn label_vertex_agrees_with_bfs() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let s = spec(name);
            let seed: Vec<Label> = (0..s.k()).rev().collect();
            let g = GoodLabelling::new(&s, 0, &seed).unwrap();
            let l = labelled(name, 2, &seed);
            for (id, v) in l.window().vertices().iter().enumerate() {
                assert_eq!(g.label_vertex(v).unwrap(), l.label(id), "{name} {v}");
                assert_eq!(g.label_fast(v).unwrap(), l.label(id), "{name} {v}");
            }
        }
    }

    #[test]
    fn label_vertex_examples() {
        let s = spec("gasket");
        let g = GoodLabelling::new(&s, 0, &[0, 1, 2]).unwrap();
        for (t, v) in s.v0().iter().enumerate() {
            assert_eq!(g.label_vertex(v).unwrap(), t as Label);
        }
        assert_eq!(g.label_vertex(&F::from_int(3, 2)).unwrap(), 2);
        assert!(g.label_vertex(&F::parse(3, "[1/2]").unwrap()).is_err());
        assert!(GoodLabelling::new(&spec("snowflake"), 0, &identity_seed(6)).is_err());
    }

    #[test]
    fn uniqueness_up_to_permutation() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let k = spec(name).k();
            let a = labelled(name, 2, &identity_seed(k));
            let seed_b: Vec<Label> = (0..k).map(|t| (t * (k - 1) + 1) % k).collect();
            let b = labelled(name, 2, &seed_b);
            let mut sigma = HashMap::new();
            for (x, y) in a.labels().iter().zip(b.labels()) {
                assert_eq!(*sigma.entry(*x).or_insert(*y), *y);
            }
        }
    }

    #[test]
    fn per_complex_bijection() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let l = labelled(name, 2, &identity_seed(spec(name).k()));
            for cell in l.window().cells() {
                let mut ls: Vec<Label> = cell.iter().map(|&v| l.label(v)).collect();
                ls.sort_unstable();
                assert_eq!(ls, identity_seed(l.window().spec().k()));
            }
        }
    }

    #[test]
    fn two_class_examples() {
        match two_class_partition(&spec("vicsek")).unwrap() {
            TwoClass::Bipartite {
                identity,
                half_turn,
            } => {
                assert_eq!(identity, vec![1, 2, 3, 4]);
                assert_eq!(half_turn, vec![5]);
            }
            other => panic!("{other:?}"),
        }
        assert!(two_class_partition(&spec("hexagon"))
            .unwrap()
            .is_bipartite());
        match two_class_partition(&spec("snowflake")).unwrap() {
            TwoClass::OddCycle(c) => {
                assert_eq!(c.len() % 2, 1);
                assert!(c.contains(&7));
            }
            other => panic!("{other:?}"),
        }
        assert!(two_class_partition(&spec("gasket")).is_err());
    }

    #[test]
    fn even_k_rotations_are_identity_or_half_turn() {
        for name in ["vicsek", "hexagon"] {
            let k = spec(name).k();
            let l = labelled(name, 2, &identity_seed(k));
            assert!(
                l.rotations().iter().all(|&r| r == 0 || r == k / 2),
                "{name}"
            );
        }
    }

    #[test]
    fn hexagon_ring_steps() {
        let s = spec("hexagon");
        let o = RingOracle::new(&s).unwrap();
        assert_eq!(o.r, 3);
        let l = labelled("hexagon", 1, &identity_seed(6));
        let w = l.window();
        for i in 0..6 {
            let v = ring_junction(w, i, (i + 1) % 6).unwrap();
            assert_eq!(l.label(v), o.junction_label(i + 1), "junction {}", i + 1);
        }
        assert!(RingOracle::new(&spec("vicsek")).is_err());
    }

    #[test]
    fn depth_independence() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let k = spec(name).k();
            let one = labelled(name, 1, &identity_seed(k));
            let two = labelled(name, 2, &identity_seed(k));
            for (id, v) in one.window().vertices().iter().enumerate() {
                assert_eq!(two.label_of(v), Some(one.label(id)));
            }
        }
    }

    #[test]
    fn alphabet_names() {
        let a = Alphabet::new(6);
        assert_eq!(a.name(2), "c");
        assert_eq!(a.parse("f").unwrap(), 5);
        assert!(a.parse("g").is_err());
        let big = Alphabet::new(30);
        assert_eq!(big.name(29), "a30");
        assert_eq!(big.parse("a30").unwrap(), 29);
    }

    #[test]
    fn bad_seed_rejected() {
        let w = Arc::new(Window::new(&spec("gasket"), 0, 1, &Budget::unlimited()).unwrap());
        assert!(propagate_labels(w, &[0, 0, 1]).is_err());
    }
}
