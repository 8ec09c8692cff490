//! The folding projection `π_M` onto `K^{<M>}`, unfolding onto a given
//! complex, projection onto an arbitrary complex, and fibers.

use std::collections::HashSet;
use std::sync::Arc;

use crate::complexes::{locate_point, locate_vertex, ComplexAddress, Point, Window};
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::geometry::{rotate_about, FractalSpec};
use crate::labeling::{GoodLabelling, Label};

/// `π_M(x) = R_Δ(x − ν_Δ)` for the good labelling of order `M`.
#[derive(Debug, Clone)]
pub struct FoldingMap {
    glp: Arc<GoodLabelling>,
    barycenter: FieldElement,
}

impl FoldingMap {
    pub fn new(glp: GoodLabelling) -> Self {
        Self::from_arc(Arc::new(glp))
    }

    pub fn from_arc(glp: Arc<GoodLabelling>) -> Self {
        let barycenter = glp.spec().barycenter_at(glp.level());
        FoldingMap { glp, barycenter }
    }

    /// Folding map of order `M` seeded with the identity labelling.
    pub fn for_spec(spec: &FractalSpec, level: i32) -> Result<Self> {
        let seed: Vec<Label> = (0..spec.k()).collect();
        Ok(Self::new(GoodLabelling::new(spec, level, &seed)?))
    }

    pub fn labelling(&self) -> &GoodLabelling {
        &self.glp
    }
    pub fn spec(&self) -> &FractalSpec {
        self.glp.spec()
    }
    pub fn level(&self) -> i32 {
        self.glp.level()
    }

    fn check_level(&self, addr: &ComplexAddress) -> Result<()> {
        if addr.level != self.level() {
            return Err(Error::domain(format!(
                "{addr} is not a complex of order {}",
                self.level()
            )));
        }
        Ok(())
    }

    /// `R_Δ(x − ν_Δ)` for a given complex, without checking membership.
    pub fn fold_through(&self, x: &FieldElement, addr: &ComplexAddress) -> Result<FieldElement> {
        self.check_level(addr)?;
        let r = self.glp.rotation_of(addr)?;
        let shifted = x - &addr.anchor(self.spec());
        Ok(rotate_about(&shifted, &self.barycenter, r as i64))
    }

    /// The M-complexes containing `x`.
    pub fn containing(&self, x: &Point) -> Result<Vec<ComplexAddress>> {
        locate_point(
            self.spec(),
            x,
            self.level(),
            crate::complexes::DEFAULT_MAX_SEARCH_DEPTH,
        )
    }

    /// `π_M(x)`. At level-M vertices every incident complex is used and the
    /// images are required to coincide.
    pub fn project(&self, x: &Point) -> Result<Point> {
        let addrs = self.containing(x)?;
        let mut image: Option<FieldElement> = None;
        for a in &addrs {
            let y = self.fold_through(&x.pos, a)?;
            match &image {
                None => image = Some(y),
                Some(prev) if *prev != y => {
                    return Err(Error::integrity(format!(
                        "{x} folds to {prev} and {y} through different complexes"
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(Point::new(
            image.expect("located at least one complex"),
            x.level,
        ))
    }

    /// The preimage of `y ∈ K^{<M>}` in the complex `addr`: `R_Δ^{-1}(y) + ν_Δ`.
    pub fn unfold(&self, y: &Point, addr: &ComplexAddress) -> Result<Point> {
        self.check_level(addr)?;
        let fine = y.level.min(self.level());
        if locate_vertex(
            self.spec(),
            &y.pos,
            fine,
            &ComplexAddress::primary(self.level()),
        )
        .is_empty()
        {
            return Err(Error::domain(format!(
                "{y} is not a point of K^<{}>",
                self.level()
            )));
        }
        Ok(Point::new(self.unfold_unchecked(&y.pos, addr)?, y.level))
    }

    fn unfold_unchecked(&self, y: &FieldElement, addr: &ComplexAddress) -> Result<FieldElement> {
        let r = self.glp.rotation_of(addr)? as i64;
        Ok(&rotate_about(y, &self.barycenter, -r) + &addr.anchor(self.spec()))
    }

    /// `π_Δ(x) = unfold(π_M(x), Δ)`.
    pub fn project_to(&self, x: &Point, addr: &ComplexAddress) -> Result<Point> {
        let y = self.project(x)?;
        Ok(Point::new(self.unfold_unchecked(&y.pos, addr)?, x.level))
    }

    /// `π_M^{-1}(y)` within the window, deduplicated, in window complex order.
    pub fn fiber(&self, y: &Point, window: &Window) -> Result<Vec<Point>> {
        if window.level() != self.level() {
            return Err(Error::domain(
                "window order differs from the projection order",
            ));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for c in 0..window.num_complexes() {
            let p = self.unfold(y, &window.address(c))?;
            if seen.insert(p.pos.clone()) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Rotation indices of every complex of a window, by complex index.
    pub fn window_rotations(&self, window: &Window) -> Result<Vec<u32>> {
        (0..window.num_complexes())
            .map(|c| self.glp.rotation_of(&window.address(c)))
            .collect()
    }

    /// `π_M` restricted to level-M window vertices, as window vertex id → index
    /// into `V(K^{<M>})` (the `V0` order).
    pub fn vertex_fold_table(&self, window: &Window) -> Result<Vec<usize>> {
        let k = self.spec().k() as usize;
        let rot = self.window_rotations(window)?;
        let mut table = vec![usize::MAX; window.vertices().len()];
        for (c, cell) in window.cells().iter().enumerate() {
            for (t, &v) in cell.iter().enumerate() {
                let img = (t + rot[c] as usize) % k;
                if table[v] == usize::MAX {
                    table[v] = img;
                } else if table[v] != img {
                    return Err(Error::integrity(format!(
                        "vertex {} folds to two primary vertices",
                        window.vertex(v)
                    )));
                }
            }
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Budget;
    use crate::complexes::rank;
    use crate::field::FieldElement as F;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fold(name: &str, level: i32) -> FoldingMap {
        FoldingMap::for_spec(&FractalSpec::builtin(name).unwrap(), level).unwrap()
    }

    /// A random level-`p` vertex inside `K^{<top>}` and its fine address.
    fn random_point(spec: &FractalSpec, rng: &mut ChaCha8Rng, top: i32, p: i32) -> Point {
        let word: Vec<u16> = (0..top - p)
            .map(|_| rng.random_range(0..spec.n()) as u16)
            .collect();
        let addr = ComplexAddress { level: p, word };
        let t = rng.random_range(0..spec.k() as usize);
        Point::new(addr.vertices(spec)[t].clone(), p)
    }

    #[test]
    fn primary_complex_is_fixed() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let f = fold(name, 1);
            let s = f.spec().clone();
            let w = Window::new(&s, -1, 2, &Budget::unlimited()).unwrap();
            for v in w.vertices() {
                let x = Point::new(v.clone(), -1);
                assert_eq!(f.project(&x).unwrap(), x);
            }
        }
    }

    #[test]
    fn gasket_examples() {
        let f = fold("gasket", 1);
        let x = Point::new(F::from_int(3, 4), 1);
        let y = f.project(&x).unwrap();
        assert_eq!(y.pos, F::parse(3, "[2,2]").unwrap());
        let (a, b) = y.pos.to_complex();
        assert!((a - 1.0).abs() < 1e-12 && (b - 3f64.sqrt()).abs() < 1e-12);
        // The vertex carrying label c at order 1.
        assert_eq!(f.labelling().label_vertex(&y.pos).unwrap(), 2);
        let addr = ComplexAddress {
            level: 1,
            word: vec![1],
        };
        assert_eq!(f.unfold(&y, &addr).unwrap(), x);
        assert!(f.unfold(&x, &addr).is_err());
    }

    #[test]
    fn idempotent_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in ["gasket", "vicsek", "hexagon"] {
            let f = fold(name, 1);
            let s = f.spec().clone();
            for _ in 0..100 {
                let p = rng.random_range(-1..=1);
                let x = random_point(&s, &mut rng, 4, p);
                let y = f.project(&x).unwrap();
                assert_eq!(f.project(&y).unwrap(), y);
                let word: Vec<u16> = (0..2).map(|_| rng.random_range(0..s.n()) as u16).collect();
                let addr = ComplexAddress { level: 1, word };
                let u = f.unfold(&y, &addr).unwrap();
                assert_eq!(f.project(&u).unwrap(), y, "{name} {x} {addr}");
                assert!(!locate_vertex(&s, &u.pos, u.level.min(1), &addr).is_empty());
            }
        }
    }

    #[test]
    fn unfold_is_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = fold("vicsek", 0);
        let s = f.spec().clone();
        for _ in 0..50 {
            let a = random_point(&s, &mut rng, 0, -2);
            let b = random_point(&s, &mut rng, 0, -2);
            let word: Vec<u16> = (0..2).map(|_| rng.random_range(0..s.n()) as u16).collect();
            let addr = ComplexAddress { level: 0, word };
            let ua = f.unfold(&a, &addr).unwrap();
            let ub = f.unfold(&b, &addr).unwrap();
            assert_eq!((&ua.pos - &ub.pos).norm_sq(), (&a.pos - &b.pos).norm_sq());
        }
    }

    #[test]
    fn composition_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in ["gasket", "vicsek", "hexagon"] {
            let s = FractalSpec::builtin(name).unwrap();
            let k = s.k();
            let fine =
                FoldingMap::new(GoodLabelling::new(&s, 0, &(0..k).collect::<Vec<_>>()).unwrap());
            let coarse_seed: Vec<Label> = (0..k).map(|t| (t + 1) % k).collect();
            let coarse = FoldingMap::new(GoodLabelling::new(&s, 1, &coarse_seed).unwrap());
            for _ in 0..40 {
                let x = random_point(&s, &mut rng, 3, -1);
                let outer = ComplexAddress {
                    level: 1,
                    word: (0..2).map(|_| rng.random_range(0..s.n()) as u16).collect(),
                };
                let inner = outer.child(rng.random_range(0..s.n()) as u16);
                let direct = fine.project_to(&x, &inner).unwrap();
                let via = fine
                    .project_to(&coarse.project_to(&x, &outer).unwrap(), &inner)
                    .unwrap();
                let rev = coarse
                    .project_to(&fine.project_to(&x, &inner).unwrap(), &outer)
                    .unwrap();
                assert_eq!(via, direct, "{name}");
                assert_eq!(rev, direct, "{name}");
            }
        }
    }

    #[test]
    fn fibers() {
        let f = fold("gasket", 0);
        let s = f.spec().clone();
        let w = Window::new(&s, 0, 2, &Budget::unlimited()).unwrap();
        let interior = Point::new(F::parse(3, "[1/2]").unwrap(), -1);
        let fib = f.fiber(&interior, &w).unwrap();
        assert_eq!(fib.len(), 9);
        for v in s.v0() {
            let y = Point::new(v.clone(), 0);
            let fib = f.fiber(&y, &w).unwrap();
            assert!(fib.len() < 9);
            for p in &fib {
                assert!(rank(&s, &p.pos, 0).unwrap() >= 1);
                assert_eq!(f.project(p).unwrap(), y);
            }
        }
        // Fibers of the three corners partition the window vertices.
        let mut all: Vec<F> = s
            .v0()
            .iter()
            .flat_map(|v| f.fiber(&Point::new(v.clone(), 0), &w).unwrap())
            .map(|p| p.pos)
            .collect();
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
        assert_eq!(n, w.vertices().len());
    }

    #[test]
    fn vertex_well_defined_and_fold_table() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let f = fold(name, 0);
            let w = Window::new(f.spec(), 0, 2, &Budget::unlimited()).unwrap();
            let table = f.vertex_fold_table(&w).unwrap();
            let prim = f.spec().primary_vertices(0);
            for (id, v) in w.vertices().iter().enumerate() {
                let y = f.project(&Point::new(v.clone(), 0)).unwrap();
                assert_eq!(y.pos, prim[table[id]]);
            }
        }
    }
}
