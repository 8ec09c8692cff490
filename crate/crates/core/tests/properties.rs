use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;
use snf_core::budget::Budget;
use snf_core::complexes::{rank, ComplexAddress, Point, Window};
use snf_core::labeling::{propagate_labels, Label};
use snf_core::metric::graph_distance;
use snf_core::projection::FoldingMap;
use snf_core::walk::{kernel, GridGraph, Mode};
use snf_core::{FieldElement, FractalSpec, Rational};

fn glp_spec() -> impl Strategy<Value = FractalSpec> {
    prop::sample::select(vec!["gasket", "vicsek", "hexagon"])
        .prop_map(|n| FractalSpec::builtin(n).unwrap())
}

fn any_spec() -> impl Strategy<Value = FractalSpec> {
    prop::sample::select(vec!["gasket", "vicsek", "hexagon", "snowflake"])
        .prop_map(|n| FractalSpec::builtin(n).unwrap())
}

fn window(s: &FractalSpec, level: i32, depth: usize) -> Window {
    Window::new(s, level, depth, &Budget::unlimited()).unwrap()
}

fn seed(k: usize) -> impl Strategy<Value = Vec<Label>> {
    Just((0..k as Label).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn window_vertex_count_bounded(s in any_spec(), depth in 0usize..3) {
        let w = window(&s, 0, depth);
        let cells = s.n().pow(depth as u32);
        prop_assert!(w.vertices().len() <= s.k() as usize * cells);
        if depth == 0 {
            prop_assert_eq!(w.vertices().len(), s.k() as usize);
        }
        prop_assert!(w.nesting_violations().is_empty());
    }

    #[test]
    fn windows_scale_by_l(s in any_spec(), level in -1i32..2, depth in 0usize..3) {
        let fine: HashSet<FieldElement> = window(&s, level - 1, depth)
            .vertices()
            .iter()
            .map(|v| v.scale(&Rational::from_integer(s.scale().into())))
            .collect();
        let coarse: HashSet<FieldElement> = window(&s, level, depth).vertices().iter().cloned().collect();
        prop_assert_eq!(fine, coarse);
    }

    #[test]
    fn labellings_are_bijective_per_complex_and_unique(
        (s, s1, s2) in glp_spec().prop_flat_map(|s| { let k = s.k() as usize; (Just(s), seed(k), seed(k)) })
    ) {
        let k = s.k() as usize;
        let w = Arc::new(window(&s, 0, 2));
        let a = propagate_labels(w.clone(), &s1).unwrap();
        let b = propagate_labels(w.clone(), &s2).unwrap();
        let (a, b) = (a.labeling().unwrap(), b.labeling().unwrap());
        for cell in w.cells() {
            let mut seen: Vec<Label> = cell.iter().map(|&v| a.label(v)).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..k as Label).collect::<Vec<_>>());
        }
        let mut sigma = vec![0; k];
        for t in 0..k {
            sigma[s1[t] as usize] = s2[t];
        }
        for v in 0..w.vertices().len() {
            prop_assert_eq!(sigma[a.label(v) as usize], b.label(v));
        }
    }

    #[test]
    fn unfolding_is_an_isometry(s in glp_spec(), word in prop::collection::vec(0u16..5, 2), i in 0usize..6, j in 0usize..6) {
        let f = FoldingMap::for_spec(&s, 1).unwrap();
        let word: Vec<u16> = word.into_iter().map(|d| d % s.n() as u16).collect();
        let addr = ComplexAddress { level: 1, word };
        let prim = window(&s, 0, 1);
        let vs = prim.vertices();
        let (y1, y2) = (&vs[i % vs.len()], &vs[j % vs.len()]);
        let u1 = f.unfold(&Point::new(y1.clone(), 0), &addr).unwrap();
        let u2 = f.unfold(&Point::new(y2.clone(), 0), &addr).unwrap();
        prop_assert_eq!((&u1.pos - &u2.pos).norm_sq(), (y1 - y2).norm_sq());
        // Folding undoes unfolding.
        prop_assert_eq!(f.project(&u1).unwrap().pos, y1.clone());
    }

    #[test]
    fn vertex_images_agree_across_incident_complexes(s in glp_spec(), pick in 0usize..1000) {
        let f = FoldingMap::for_spec(&s, 0).unwrap();
        let w = window(&s, 0, 2);
        let v = &w.vertices()[pick % w.vertices().len()];
        let images: HashSet<FieldElement> = f
            .containing(&Point::new(v.clone(), 0))
            .unwrap()
            .iter()
            .map(|a| f.fold_through(v, a).unwrap())
            .collect();
        prop_assert_eq!(images.len(), 1);
        prop_assert!(s.primary_vertices(0).contains(images.iter().next().unwrap()));
    }

    #[test]
    fn graph_distance_is_a_metric(s in any_spec(), p in 0usize..1000, q in 0usize..1000, r in 0usize..1000) {
        let w = window(&s, 0, 2);
        let n = w.vertices().len();
        let pt = |i: usize| Point::new(w.vertices()[i % n].clone(), 0);
        let (x, y, z) = (pt(p), pt(q), pt(r));
        let d = |a: &Point, b: &Point| graph_distance(&w, a, b).unwrap();
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        prop_assert_eq!(d(&x, &y) == 0, x.pos == y.pos);
    }

    #[test]
    fn graph_distance_scale_covariant(s in any_spec(), p in 0usize..1000, q in 0usize..1000) {
        let w1 = window(&s, 1, 2);
        let w0 = window(&s, 0, 2);
        let n = w1.vertices().len();
        let inv = Rational::new(1.into(), s.scale().into());
        let (x, y) = (&w1.vertices()[p % n], &w1.vertices()[q % n]);
        let d1 = graph_distance(&w1, &Point::new(x.clone(), 1), &Point::new(y.clone(), 1)).unwrap();
        let d0 = graph_distance(&w0, &Point::new(x.scale(&inv), 0), &Point::new(y.scale(&inv), 0)).unwrap();
        prop_assert_eq!(d1, d0);
    }

    #[test]
    fn kernel_conserves_mass_and_degree_law(s in any_spec(), pick in 0usize..1000, steps in 0usize..12) {
        let g = GridGraph::new(&s, 0, 2, &Budget::unlimited()).unwrap();
        let x0 = pick % g.num_vertices();
        let t = kernel(&g, x0, steps, Mode::Exact).unwrap();
        for step in 0..=steps {
            let total: Rational = (0..g.num_vertices()).map(|v| t.prob_exact(step, v).unwrap()).sum();
            prop_assert_eq!(total + t.escape_exact(step).unwrap(), Rational::from_integer(1.into()));
        }
        if !g.is_frontier(x0) {
            let r = rank(&s, g.window().vertex(x0), 0).unwrap();
            prop_assert_eq!(g.degree(x0), r * (s.k() as usize - 1));
        }
    }
}
