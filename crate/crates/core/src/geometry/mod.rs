//! Planar geometry over the cyclotomic field: similitudes, rotations,
//! bisector reflections and the simple-nested-fractal axioms.

mod spec;

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

pub use spec::{builtin_names, FractalSpec, SpecFile};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::field::{rat, FieldElement};

/// `center + ζ^j (p − center)`.
pub fn rotate_about(p: &FieldElement, center: &FieldElement, j: i64) -> FieldElement {
    let z = FieldElement::zeta_pow(p.order(), j);
    center + &(&z * &(p - center))
}

/// Reflection across the perpendicular bisector of `[a, b]`.
pub fn reflect_bisector(
    p: &FieldElement,
    a: &FieldElement,
    b: &FieldElement,
) -> Result<FieldElement> {
    let d = b - a;
    if d.is_zero() {
        return Err(Error::Degenerate(format!(
            "bisector of {a} and itself is undefined"
        )));
    }
    let m = (a + b).scale(&rat(1, 2));
    let u = d.checked_div(&d.conj())?;
    Ok(&m - &(&u * &(p - &m).conj()))
}

/// The essential fixed points, by exhaustive search (see [`FractalSpec::essential_indices`]).
pub fn essential_fixed_points(spec: &FractalSpec) -> Vec<FieldElement> {
    spec.essential_indices()
        .iter()
        .map(|&i| spec.fixed_points()[i].clone())
        .collect()
}

/// Counterexample attached to a failed axiom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<String>,
    /// 1-based similitude or vertex indices.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    fn ok() -> Self {
        Verdict {
            pass: true,
            witness: None,
        }
    }
    fn fail(detail: impl Into<String>, points: &[&FieldElement], indices: &[usize]) -> Self {
        Verdict {
            pass: false,
            witness: Some(Witness {
                detail: detail.into(),
                points: points.iter().map(|p| p.to_string()).collect(),
                indices: indices.to_vec(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub spec: String,
    pub k: u32,
    pub n: usize,
    pub d_f: f64,
    pub essential_fixed_points: Vec<String>,
    /// 1-based indices of the similitudes whose fixed points are essential.
    pub essential_indices: Vec<usize>,
    pub regular_polygon: Verdict,
    pub symmetry: Verdict,
    pub nesting_depth: u32,
    pub nesting: Verdict,
    pub connectivity: Verdict,
    pub koch_uniqueness: Verdict,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        [
            &self.regular_polygon,
            &self.symmetry,
            &self.nesting,
            &self.connectivity,
            &self.koch_uniqueness,
        ]
        .iter()
        .all(|v| v.pass)
    }
}

pub const DEFAULT_NESTING_DEPTH: u32 = 3;

/// Checks the axioms exactly. A failed axiom is a verdict; only an exhausted
/// budget is an error.
pub fn validate_spec(
    spec: &FractalSpec,
    nesting_depth: u32,
    budget: &Budget,
) -> Result<ValidationReport> {
    budget.check_pow("nesting check cells", spec.n(), nesting_depth + 1)?;
    let images: Vec<Vec<FieldElement>> = (0..spec.n())
        .map(|i| spec.v0().iter().map(|v| spec.psi(i, v)).collect())
        .collect();
    Ok(ValidationReport {
        spec: spec.name().to_string(),
        k: spec.k(),
        n: spec.n(),
        d_f: spec.d_f(),
        essential_fixed_points: essential_fixed_points(spec)
            .iter()
            .map(|p| p.to_string())
            .collect(),
        essential_indices: spec.essential_indices().iter().map(|i| i + 1).collect(),
        regular_polygon: check_regular(spec),
        symmetry: check_symmetry(spec, &images)?,
        nesting_depth,
        nesting: check_nesting(spec, &images, nesting_depth),
        connectivity: check_connectivity(&images),
        koch_uniqueness: check_koch(spec, &images),
        warnings: vec!["open set condition is not checked".to_string()],
    })
}

fn check_regular(spec: &FractalSpec) -> Verdict {
    let v = spec.v0();
    let k = v.len();
    let b = spec.barycenter();
    let side = (&v[1] - &v[0]).norm_sq();
    let turn = match (&v[1] - b).checked_div(&(&v[0] - b)) {
        Ok(t) => t,
        Err(_) => return Verdict::fail("vertex coincides with barycenter", &[&v[0]], &[1]),
    };
    for i in 0..k {
        let (p, q) = (&v[i], &v[(i + 1) % k]);
        if (q - p).norm_sq() != side {
            return Verdict::fail("unequal side lengths", &[p, q], &[i + 1, (i + 1) % k + 1]);
        }
        match (q - b).checked_div(&(p - b)) {
            Ok(t) if t == turn => {}
            _ => {
                return Verdict::fail("unequal central angles", &[p, q], &[i + 1, (i + 1) % k + 1])
            }
        }
    }
    // Equal turns of a k-gon around b must be ζ, i.e. counter-clockwise and convex.
    if turn != FieldElement::zeta_pow(spec.k(), 1) {
        return Verdict::fail("central angle is not 2π/k", &[&v[0], &v[1]], &[1, 2]);
    }
    Verdict::ok()
}

fn set_of(points: &[FieldElement]) -> HashSet<&FieldElement> {
    points.iter().collect()
}

fn check_symmetry(spec: &FractalSpec, images: &[Vec<FieldElement>]) -> Result<Verdict> {
    let v = spec.v0();
    let sets: Vec<HashSet<&FieldElement>> = images.iter().map(|im| set_of(im)).collect();
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            for (i, im) in images.iter().enumerate() {
                let reflected: Vec<FieldElement> = im
                    .iter()
                    .map(|p| reflect_bisector(p, &v[a], &v[b]))
                    .collect::<Result<_>>()?;
                let rs = set_of(&reflected);
                if !sets.contains(&rs) {
                    return Ok(Verdict::fail(
                        format!("reflection swapping V0 vertices {} and {} maps Ψ_{}(V0) outside the family", a + 1, b + 1, i + 1),
                        &[&v[a], &v[b]],
                        &[a + 1, b + 1, i + 1],
                    ));
                }
            }
        }
    }
    Ok(Verdict::ok())
}

/// Vertices of all depth-`d` cells of `K^{<0>}`.
fn cell_vertices(spec: &FractalSpec, d: u32) -> Vec<FieldElement> {
    let mut layer: HashSet<FieldElement> = spec.v0().iter().cloned().collect();
    for _ in 0..d {
        let mut next = HashSet::with_capacity(layer.len() * spec.n());
        for p in &layer {
            for i in 0..spec.n() {
                next.insert(spec.psi(i, p));
            }
        }
        layer = next;
    }
    layer.into_iter().collect()
}

fn check_nesting(spec: &FractalSpec, images: &[Vec<FieldElement>], depth: u32) -> Verdict {
    let base = cell_vertices(spec, depth);
    let approx: Vec<HashSet<FieldElement>> = (0..spec.n())
        .map(|i| base.iter().map(|p| spec.psi(i, p)).collect())
        .collect();
    for i in 0..spec.n() {
        for j in i + 1..spec.n() {
            let allowed: HashSet<&FieldElement> =
                images[i].iter().filter(|p| images[j].contains(p)).collect();
            if let Some(p) = approx[i]
                .iter()
                .filter(|p| approx[j].contains(*p) && !allowed.contains(p))
                .min()
            {
                return Verdict::fail(
                    format!(
                        "Ψ_{}(K) and Ψ_{}(K) meet outside their common vertices",
                        i + 1,
                        j + 1
                    ),
                    &[p],
                    &[i + 1, j + 1],
                );
            }
        }
    }
    Verdict::ok()
}

fn check_connectivity(images: &[Vec<FieldElement>]) -> Verdict {
    let mut index: HashMap<&FieldElement, usize> = HashMap::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    for im in images {
        let ids: Vec<usize> = im
            .iter()
            .map(|p| {
                let next = index.len();
                *index.entry(p).or_insert_with(|| {
                    adj.push(Vec::new());
                    next
                })
            })
            .collect();
        for &a in &ids {
            for &b in &ids {
                if a != b {
                    adj[a].push(b);
                }
            }
        }
    }
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(a) = queue.pop_front() {
        for &b in &adj[a] {
            if !seen[b] {
                seen[b] = true;
                queue.push_back(b);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        None => Verdict::ok(),
        Some(u) => {
            let p = index
                .iter()
                .find(|(_, &i)| i == u)
                .map(|(p, _)| *p)
                .unwrap();
            Verdict::fail("vertex unreachable from Ψ_1(V0)", &[p], &[])
        }
    }
}

fn check_koch(spec: &FractalSpec, images: &[Vec<FieldElement>]) -> Verdict {
    for (t, v) in spec.v0().iter().enumerate() {
        let owners: Vec<usize> = images
            .iter()
            .enumerate()
            .filter(|(_, im)| im.contains(v))
            .map(|(i, _)| i + 1)
            .collect();
        if owners.len() != 1 {
            let mut idx = vec![t + 1];
            idx.extend(owners.iter().copied());
            return Verdict::fail(
                format!("V0 vertex lies in {} of the sets Ψ_i(V0)", owners.len()),
                &[v],
                &idx,
            );
        }
    }
    Verdict::ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldElement as F;
    use proptest::prelude::*;

    fn pt(k: u32, c: &[&str]) -> F {
        F::from_coeff_strs(k, c).unwrap()
    }

    #[test]
    fn half_turn_and_full_turn() {
        let one = F::one(6);
        assert_eq!(rotate_about(&one, &F::zero(6), 3), F::from_int(6, -1));
        let p = pt(6, &["1/3", "2"]);
        let c = pt(6, &["5", "-1/7"]);
        assert_eq!(rotate_about(&p, &c, 6), p);
    }

    #[test]
    fn gasket_rotation_about_barycenter() {
        let s = FractalSpec::builtin("gasket").unwrap();
        let r = rotate_about(&F::zero(3), s.barycenter(), 1);
        assert_eq!(r, F::one(3));
        let (bx, by) = s.barycenter().to_complex();
        let (c, sn) = (std::f64::consts::TAU / 3.0).sin_cos();
        let (x, y) = (-bx, -by);
        let fx = bx + sn * x - c * y;
        let fy = by + c * x + sn * y;
        let (rx, ry) = r.to_complex();
        assert!((rx - fx).abs() < 1e-12 && (ry - fy).abs() < 1e-12);
    }

    #[test]
    fn bisector_examples() {
        let a = F::zero(4);
        let b = F::one(4);
        assert_eq!(reflect_bisector(&a, &a, &b).unwrap(), b);
        let on = pt(4, &["1/2", "17/5"]);
        assert_eq!(reflect_bisector(&on, &a, &b).unwrap(), on);
        assert_eq!(
            reflect_bisector(&F::from_int(4, 2), &a, &b).unwrap(),
            F::from_int(4, -1)
        );
        assert!(matches!(
            reflect_bisector(&b, &a, &a),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn builtin_specs_validate() {
        for name in builtin_names() {
            let s = FractalSpec::builtin(name).unwrap();
            let r = validate_spec(&s, DEFAULT_NESTING_DEPTH, &Budget::unlimited()).unwrap();
            assert!(r.all_pass(), "{name}: {r:?}");
            assert_eq!(r.essential_fixed_points.len(), s.k() as usize);
            assert!(!r.warnings.is_empty());
        }
    }

    #[test]
    fn essential_points_match_examples() {
        let v = FractalSpec::builtin("vicsek").unwrap();
        assert_eq!(v.essential_indices(), &[0, 1, 2, 3]);
        // Ψ_5(v1) = Ψ_1(v3)
        let x = v.fixed_points();
        assert_eq!(v.psi(4, &x[0]), v.psi(0, &x[2]));
        let s = FractalSpec::builtin("snowflake").unwrap();
        assert_eq!(s.fixed_points().len(), 7);
        assert_eq!(s.essential_indices(), &[0, 1, 2, 3, 4, 5]);
        let g = FractalSpec::builtin("gasket").unwrap();
        assert_eq!(essential_fixed_points(&g).len(), 3);
    }

    #[test]
    fn overlapping_copy_fails_nesting() {
        // Vicsek plus a copy of the center shifted by 1/9: same essential corners,
        // but the two central copies cross at (5/9, 5/9).
        let mut f = FractalSpec::builtin("vicsek").unwrap().to_file();
        f.n = 6;
        f.nu.push(vec!["4/9".into(), "1/3".into(), "0".into(), "0".into()]);
        let s = FractalSpec::from_file(&f).unwrap();
        assert_eq!(s.essential_indices(), &[0, 1, 2, 3]);
        let r = validate_spec(&s, 2, &Budget::unlimited()).unwrap();
        assert!(!r.nesting.pass);
        assert_eq!(r.nesting.witness.as_ref().unwrap().indices[1], 6);
        assert!(!r.all_pass());
    }

    #[test]
    fn nesting_budget() {
        let s = FractalSpec::builtin("snowflake").unwrap();
        let b = Budget { max_complexes: 100 };
        assert!(matches!(
            validate_spec(&s, 3, &b),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn report_round_trips() {
        let s = FractalSpec::builtin("vicsek").unwrap();
        let r = validate_spec(&s, 2, &Budget::unlimited()).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: ValidationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
    }

    fn element(k: u32) -> impl Strategy<Value = F> {
        prop::collection::vec((-20i64..20, 1i64..6), k as usize).prop_map(move |c| {
            F::from_coeffs(k, &c.iter().map(|&(n, d)| rat(n, d)).collect::<Vec<_>>())
        })
    }

    fn triple() -> impl Strategy<Value = (F, F, F, F)> {
        prop::sample::select(vec![3u32, 4, 6, 8])
            .prop_flat_map(|k| (element(k), element(k), element(k), element(k)))
    }

    proptest! {
        #[test]
        fn rotations_compose((p, c, _, _) in triple(), j1 in -12i64..12, j2 in -12i64..12) {
            let k = p.order() as i64;
            let lhs = rotate_about(&rotate_about(&p, &c, j2), &c, j1);
            prop_assert_eq!(lhs, rotate_about(&p, &c, (j1 + j2).rem_euclid(k)));
        }

        #[test]
        fn reflection_is_isometric_involution((p, q, a, b) in triple()) {
            prop_assume!(a != b);
            let sp = reflect_bisector(&p, &a, &b).unwrap();
            let sq = reflect_bisector(&q, &a, &b).unwrap();
            prop_assert_eq!(&reflect_bisector(&sp, &a, &b).unwrap(), &p);
            prop_assert_eq!((&sp - &sq).norm_sq(), (&p - &q).norm_sq());
            prop_assert_eq!(reflect_bisector(&a, &a, &b).unwrap(), b);
        }
    }
}
