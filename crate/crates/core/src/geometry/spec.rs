use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num::{BigInt, One};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldElement, Rational};

/// On-disk form of a fractal spec.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpecFile {
    pub name: String,
    pub k: u32,
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(rename = "N")]
    pub n: usize,
    /// `N` translations, each `k` coefficients over `1, ζ, …, ζ^{k-1}`.
    pub nu: Vec<Vec<String>>,
    /// Walk/spectral/chemical exponents, carried for report annotations only.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub exponents: BTreeMap<String, String>,
}

const BUILTINS: &[(&str, &str)] = &[
    ("gasket", include_str!("../../specs/gasket.json")),
    ("vicsek", include_str!("../../specs/vicsek.json")),
    ("hexagon", include_str!("../../specs/hexagon.json")),
    ("snowflake", include_str!("../../specs/snowflake.json")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// An iterated function system `Ψ_i(x) = x/L + ν_i` in the plane together with
/// its derived data: fixed points, the essential fixed points `V0` in
/// counter-clockwise order, and the barycenter of `V0`.
#[derive(Clone)]
pub struct FractalSpec {
    name: String,
    k: u32,
    l: u32,
    nu: Vec<FieldElement>,
    fixed_points: Vec<FieldElement>,
    essential: Vec<usize>,
    v0: Vec<FieldElement>,
    v0_source: Vec<usize>,
    barycenter: FieldElement,
    regular_order: bool,
    exponents: BTreeMap<String, String>,
    radius: f64,
    bary_radius: f64,
}

impl fmt::Debug for FractalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FractalSpec")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("L", &self.l)
            .field("N", &self.nu.len())
            .finish()
    }
}

impl FractalSpec {
    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::domain(format!("unknown builtin spec {name:?}")))?;
        Self::from_json(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpecFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("spec file: {e}")))?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &SpecFile) -> Result<Self> {
        if file.nu.len() != file.n {
            return Err(Error::Parse(format!(
                "N = {} but {} translations given",
                file.n,
                file.nu.len()
            )));
        }
        let mut nu = Vec::with_capacity(file.n);
        for (i, row) in file.nu.iter().enumerate() {
            if row.len() != file.k as usize {
                return Err(Error::Parse(format!(
                    "nu[{}] has {} coefficients, expected k = {}",
                    i + 1,
                    row.len(),
                    file.k
                )));
            }
            nu.push(FieldElement::from_coeff_strs(file.k, row)?);
        }
        let mut spec = Self::new(&file.name, file.k, file.l, nu)?;
        spec.exponents = file.exponents.clone();
        Ok(spec)
    }

    pub fn to_file(&self) -> SpecFile {
        SpecFile {
            name: self.name.clone(),
            k: self.k,
            l: self.l,
            n: self.nu.len(),
            nu: self.nu.iter().map(FieldElement::to_coeff_strings).collect(),
            exponents: self.exponents.clone(),
        }
    }

    /// Builds and derives a spec. Fails on malformed input or when the number of
    /// essential fixed points differs from `k`; geometric axioms are checked
    /// separately by [`crate::geometry::validate_spec`].
    pub fn new(name: &str, k: u32, l: u32, nu: Vec<FieldElement>) -> Result<Self> {
        if k < 3 {
            return Err(Error::Parse(format!("k must be >= 3, got {k}")));
        }
        if l < 2 {
            return Err(Error::Parse(format!("L must be an integer >= 2, got {l}")));
        }
        if nu.len() < k as usize {
            return Err(Error::Parse(format!("N = {} must be >= k = {k}", nu.len())));
        }
        if nu.iter().any(|v| v.order() != k) {
            return Err(Error::Parse(
                "translations live in a different field".into(),
            ));
        }
        if !nu[0].is_zero() {
            return Err(Error::Parse("nu[1] must be zero".into()));
        }
        let lr = Rational::from_integer(BigInt::from(l));
        // Ψ_i(x_i) = x_i  ⇔  x_i = ν_i · L/(L-1)
        let factor = &lr / (&lr - Rational::one());
        let fixed_points: Vec<FieldElement> = nu.iter().map(|v| v.scale(&factor)).collect();
        {
            let mut seen = HashSet::new();
            for (i, x) in fixed_points.iter().enumerate() {
                if !seen.insert(x.clone()) {
                    return Err(Error::Parse(format!("duplicate translation nu[{}]", i + 1)));
                }
            }
        }
        let essential = essential_indices(l, &nu, &fixed_points);
        if essential.len() != k as usize {
            return Err(Error::Validation(format!(
                "found {} essential fixed points, spec declares k = {k}",
                essential.len()
            )));
        }
        let kr = Rational::from_integer(BigInt::from(k));
        let barycenter = essential
            .iter()
            .fold(FieldElement::zero(k), |acc, &i| &acc + &fixed_points[i])
            .scale(&kr.recip());

        let (v0_source, regular_order) = order_vertices(k, &essential, &fixed_points, &barycenter);
        let v0 = v0_source.iter().map(|&i| fixed_points[i].clone()).collect();

        let radius = fixed_points
            .iter()
            .map(FieldElement::abs_f64)
            .fold(0.0, f64::max);
        let bary_radius = fixed_points
            .iter()
            .map(|x| (x - &barycenter).abs_f64())
            .fold(0.0, f64::max);

        Ok(FractalSpec {
            name: name.to_string(),
            k,
            l,
            nu,
            fixed_points,
            essential,
            v0,
            v0_source,
            barycenter,
            regular_order,
            exponents: BTreeMap::new(),
            radius,
            bary_radius,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    /// The scaling factor `L`.
    pub fn scale(&self) -> u32 {
        self.l
    }
    /// Number of similitudes `N`.
    pub fn n(&self) -> usize {
        self.nu.len()
    }
    pub fn nu(&self) -> &[FieldElement] {
        &self.nu
    }
    pub fn fixed_points(&self) -> &[FieldElement] {
        &self.fixed_points
    }
    /// Indices (0-based) of the similitudes whose fixed points are essential.
    pub fn essential_indices(&self) -> &[usize] {
        &self.essential
    }
    /// Essential fixed points in counter-clockwise order, starting at the
    /// lowest-indexed one.
    pub fn v0(&self) -> &[FieldElement] {
        &self.v0
    }
    /// For each entry of [`Self::v0`], the similitude it is the fixed point of.
    pub fn v0_source(&self) -> &[usize] {
        &self.v0_source
    }
    pub fn barycenter(&self) -> &FieldElement {
        &self.barycenter
    }
    /// Whether `V0` is exactly `b + ζ^i (v_0 - b)`, i.e. a regular CCW k-gon.
    pub fn is_regular_ordered(&self) -> bool {
        self.regular_order
    }
    pub fn exponents(&self) -> &BTreeMap<String, String> {
        &self.exponents
    }

    /// Hausdorff dimension `log N / log L`.
    pub fn d_f(&self) -> f64 {
        (self.n() as f64).ln() / (self.l as f64).ln()
    }

    /// `L^p` as an exact rational, any sign of `p`.
    pub fn l_pow(&self, p: i32) -> Rational {
        let l = Rational::from_integer(BigInt::from(self.l));
        if p >= 0 {
            num::pow(l, p as usize)
        } else {
            num::pow(l.recip(), (-p) as usize)
        }
    }

    pub fn l_pow_f64(&self, p: i32) -> f64 {
        (self.l as f64).powi(p)
    }

    /// `Ψ_i(x) = x/L + ν_i`, `i` 0-based.
    pub fn psi(&self, i: usize, x: &FieldElement) -> FieldElement {
        &x.scale(&self.l_pow(-1)) + &self.nu[i]
    }

    /// Vertices of `K^{<M>}`: `L^M · V0`.
    pub fn primary_vertices(&self, level: i32) -> Vec<FieldElement> {
        let s = self.l_pow(level);
        self.v0.iter().map(|v| v.scale(&s)).collect()
    }

    /// Barycenter of `K^{<M>}`.
    pub fn barycenter_at(&self, level: i32) -> FieldElement {
        self.barycenter.scale(&self.l_pow(level))
    }

    /// Radius of a disk about the corner `0` containing `K^{<0>}`.
    pub fn corner_radius(&self) -> f64 {
        self.radius
    }

    /// Radius of a disk about the barycenter containing `K^{<0>}`.
    pub fn barycentric_radius(&self) -> f64 {
        self.bary_radius
    }
}

/// Exhaustive search: `x_a` is essential iff `Ψ_i(x_a) = Ψ_j(x_b)` for some `b` and `i ≠ j`.
fn essential_indices(l: u32, nu: &[FieldElement], fixed: &[FieldElement]) -> Vec<usize> {
    let inv_l = Rational::new(BigInt::one(), BigInt::from(l));
    let mut images: HashMap<FieldElement, Vec<(usize, usize)>> = HashMap::new();
    for (a, x) in fixed.iter().enumerate() {
        let scaled = x.scale(&inv_l);
        for (i, t) in nu.iter().enumerate() {
            images.entry(&scaled + t).or_default().push((i, a));
        }
    }
    let mut essential = vec![false; fixed.len()];
    for hits in images.values() {
        for (p, &(i, a)) in hits.iter().enumerate() {
            for &(j, b) in &hits[p + 1..] {
                if i != j {
                    essential[a] = true;
                    essential[b] = true;
                }
            }
        }
    }
    (0..fixed.len()).filter(|&a| essential[a]).collect()
}

fn order_vertices(
    k: u32,
    essential: &[usize],
    fixed: &[FieldElement],
    bary: &FieldElement,
) -> (Vec<usize>, bool) {
    let start = essential[0];
    let lookup: HashMap<&FieldElement, usize> = essential.iter().map(|&i| (&fixed[i], i)).collect();
    let d = &fixed[start] - bary;
    let mut order = Vec::with_capacity(k as usize);
    for j in 0..k as i64 {
        let p = bary + &(&FieldElement::zeta_pow(k, j) * &d);
        match lookup.get(&p) {
            Some(&i) => order.push(i),
            None => break,
        }
    }
    if order.len() == k as usize {
        return (order, true);
    }
    // Not a regular polygon: counter-clockwise by angle, for reporting only.
    let (bx, by) = bary.to_complex();
    let angle = |i: usize| {
        let (x, y) = fixed[i].to_complex();
        (y - by).atan2(x - bx)
    };
    let a0 = angle(start);
    let mut idx = essential.to_vec();
    idx.sort_by(|&a, &b| {
        let ta = (angle(a) - a0).rem_euclid(std::f64::consts::TAU);
        let tb = (angle(b) - a0).rem_euclid(std::f64::consts::TAU);
        ta.total_cmp(&tb)
    });
    (idx, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for name in builtin_names() {
            let s = FractalSpec::builtin(name).unwrap();
            assert_eq!(s.name(), name);
            assert!(s.is_regular_ordered(), "{name}");
        }
    }

    #[test]
    fn file_round_trip() {
        for name in builtin_names() {
            let s = FractalSpec::builtin(name).unwrap();
            let text = serde_json::to_string(&s.to_file()).unwrap();
            let t = FractalSpec::from_json(&text).unwrap();
            assert_eq!(s.nu(), t.nu());
        }
    }

    #[test]
    fn translation_is_fixed_point_times_one_minus_inverse_l() {
        for name in builtin_names() {
            let s = FractalSpec::builtin(name).unwrap();
            let f = Rational::one() - s.l_pow(-1);
            for (x, v) in s.fixed_points().iter().zip(s.nu()) {
                assert_eq!(&x.scale(&f), v);
                assert_eq!(&s.psi(0, x) - &s.nu()[0], x.scale(&s.l_pow(-1)));
            }
            for (i, x) in s.fixed_points().iter().enumerate() {
                assert_eq!(&s.psi(i, x), x);
            }
        }
    }

    #[test]
    fn gasket_vertices() {
        let s = FractalSpec::builtin("gasket").unwrap();
        let v: Vec<(f64, f64)> = s.v0().iter().map(FieldElement::to_complex).collect();
        let expect = [(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0)];
        for (a, b) in v.iter().zip(expect) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        assert!((s.d_f() - 3f64.ln() / 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs_rejected() {
        let mut f = FractalSpec::builtin("gasket").unwrap().to_file();
        f.nu[0][0] = "1/3".into();
        assert!(matches!(FractalSpec::from_file(&f), Err(Error::Parse(_))));
        let mut f = FractalSpec::builtin("gasket").unwrap().to_file();
        f.l = 1;
        assert!(FractalSpec::from_file(&f).is_err());
        let mut f = FractalSpec::builtin("gasket").unwrap().to_file();
        f.nu[1].pop();
        assert!(FractalSpec::from_file(&f).is_err());
    }
}
