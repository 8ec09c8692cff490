use std::collections::HashSet;
use std::sync::Arc;

use num::{BigInt, Integer, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::grid::{build_grid, fold_table};
use super::hitting::Template;
use super::kernel::{kernel, Mode};
use super::{rational_to_f64, total_variation};
use crate::budget::Budget;
use crate::complexes::Window;
use crate::error::{Error, Result};
use crate::field::{FieldElement, Rational};
use crate::projection::FoldingMap;

/// Square rational matrix stored as integers over one denominator, kept in
/// lowest terms so equal matrices have equal representations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    n: usize,
    den: BigInt,
    num: Vec<BigInt>,
}

impl ExactMatrix {
    pub fn identity(n: usize) -> Self {
        let mut num = vec![BigInt::zero(); n * n];
        for i in 0..n {
            num[i * n + i] = BigInt::one();
        }
        ExactMatrix {
            n,
            den: BigInt::one(),
            num,
        }
    }

    fn normalized(mut self) -> Self {
        let g = self.num.iter().fold(self.den.clone(), |g, x| g.gcd(x));
        if !g.is_one() && !g.is_zero() {
            self.den /= &g;
            for x in self.num.iter_mut() {
                *x /= &g;
            }
        }
        self
    }

    pub fn size(&self) -> usize {
        self.n
    }
    pub fn get(&self, i: usize, j: usize) -> Rational {
        Rational::new(self.num[i * self.n + j].clone(), self.den.clone())
    }
    pub fn row(&self, i: usize) -> Vec<Rational> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }

    pub fn mul(&self, other: &ExactMatrix) -> ExactMatrix {
        let n = self.n;
        let mut num = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for l in 0..n {
                let a = &self.num[i * n + l];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other.num[l * n + j];
                    if !b.is_zero() {
                        num[i * n + j] += a * b;
                    }
                }
            }
        }
        ExactMatrix {
            n,
            den: &self.den * &other.den,
            num,
        }
        .normalized()
    }

    pub fn pow(&self, e: usize) -> ExactMatrix {
        (0..e).fold(ExactMatrix::identity(self.n), |acc, _| acc.mul(self))
    }

    pub fn rows_sum_to_one(&self) -> bool {
        (0..self.n).all(|i| {
            self.num[i * self.n..(i + 1) * self.n]
                .iter()
                .sum::<BigInt>()
                == self.den
        })
    }
    pub fn is_nonnegative(&self) -> bool {
        self.num.iter().all(|x| !x.is_negative())
    }
}

/// The folded walk on `V_m ∩ K^{<M>}`.
pub struct QuotientWalk {
    pub level: i32,
    pub grid_level: i32,
    template: Template,
    q: ExactMatrix,
    qdeg: Vec<usize>,
    representatives: usize,
}

/// Folds one-step kernels through `π_M`, building each row from every
/// representative in `K^{<M+1>}` and requiring them to agree.
pub fn build_quotient(fold: &FoldingMap, m: i32, budget: &Budget) -> Result<QuotientWalk> {
    let spec = fold.spec();
    let big_m = fold.level();
    if m >= big_m {
        return Err(Error::domain(format!(
            "grid level {m} must be below the order {big_m}"
        )));
    }
    let template = Template::new(spec, big_m, m, budget)?;
    let guard = build_grid(Arc::new(Window::new(
        spec,
        m,
        (big_m - m + 1) as usize,
        budget,
    )?))?;
    let ft = fold_table(&guard, fold, &template.window)?;
    let nq = template.window.vertices().len();
    let mut rows: Vec<Option<(Vec<u64>, u64)>> = vec![None; nq];
    let mut representatives = 0;
    for v in 0..guard.num_vertices() {
        if guard.is_frontier(v) {
            continue;
        }
        let mut counts = vec![0u64; nq];
        for &w in guard.neighbours(v) {
            counts[ft[w]] += 1;
        }
        let deg = guard.degree(v) as u64;
        representatives += 1;
        match &rows[ft[v]] {
            None => rows[ft[v]] = Some((counts, deg)),
            Some((c0, d0)) => {
                if c0.iter().zip(&counts).any(|(a, b)| a * deg != b * d0) {
                    return Err(Error::integrity(format!(
                        "folded one-step laws differ between {} and another representative of {}",
                        guard.window().vertex(v),
                        template.window.vertex(ft[v])
                    )));
                }
            }
        }
    }
    let rows: Vec<(Vec<u64>, u64)> = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or_else(|| {
                Error::integrity(format!(
                    "no representative of {}",
                    template.window.vertex(i)
                ))
            })
        })
        .collect::<Result<_>>()?;
    let den = rows.iter().fold(1u64, |l, r| l.lcm(&r.1));
    let num = rows
        .iter()
        .flat_map(|(c, d)| c.iter().map(move |x| BigInt::from(x * (den / d))))
        .collect();
    let q = ExactMatrix {
        n: nq,
        den: BigInt::from(den),
        num,
    }
    .normalized();
    let qdeg = (0..nq)
        .map(|v| {
            let mut nb = HashSet::new();
            for &c in template.window.incident(v) {
                nb.extend(template.window.cell(c).iter().copied().filter(|&w| w != v));
            }
            nb.len()
        })
        .collect();
    Ok(QuotientWalk {
        level: big_m,
        grid_level: m,
        template,
        q,
        qdeg,
        representatives,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub level: i32,
    pub grid_level: i32,
    pub vertices: Vec<String>,
    pub quotient_degree: Vec<usize>,
    pub representatives_checked: usize,
    pub kernel: Vec<Vec<String>>,
    pub rows_stochastic: bool,
    pub detailed_balance_violations: usize,
    pub chapman_kolmogorov_violations: usize,
    /// Pairs with `Q^n(x,y) != Q^n(y,x)`, reported only.
    pub unweighted_asymmetric_pairs: usize,
}

impl QuotientWalk {
    pub fn num_vertices(&self) -> usize {
        self.qdeg.len()
    }
    pub fn window(&self) -> &Arc<Window> {
        &self.template.window
    }
    pub fn vertex(&self, i: usize) -> &FieldElement {
        self.template.window.vertex(i)
    }
    pub fn vertex_id(&self, v: &FieldElement) -> Option<usize> {
        self.template.window.vertex_id(v)
    }
    pub fn matrix(&self) -> &ExactMatrix {
        &self.q
    }
    pub fn quotient_degree(&self, i: usize) -> usize {
        self.qdeg[i]
    }
    pub fn representatives_checked(&self) -> usize {
        self.representatives
    }
    pub fn power(&self, n: usize) -> ExactMatrix {
        self.q.pow(n)
    }

    /// Pairs violating `deḡ(x) Q^n(x,y) = deḡ(y) Q^n(y,x)`.
    pub fn detailed_balance_violations(&self, qn: &ExactMatrix) -> Vec<(usize, usize)> {
        let n = self.num_vertices();
        let mut out = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                let a = qn.get(x, y) * Rational::from_integer(self.qdeg[x].into());
                let b = qn.get(y, x) * Rational::from_integer(self.qdeg[y].into());
                if a != b {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn asymmetric_pairs(&self, qn: &ExactMatrix) -> usize {
        let n = self.num_vertices();
        (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .filter(|&(x, y)| qn.get(x, y) != qn.get(y, x))
            .count()
    }

    /// `(a, b)` with `Q^{a+b} != Q^a Q^b`, for `a <= max_a`, `b <= max_b`.
    pub fn chapman_kolmogorov_violations(&self, max_a: usize, max_b: usize) -> Vec<(usize, usize)> {
        let mut pw = vec![ExactMatrix::identity(self.num_vertices())];
        for _ in 0..max_a + max_b {
            let next = pw.last().unwrap().mul(&self.q);
            pw.push(next);
        }
        let mut out = Vec::new();
        for a in 0..=max_a {
            for b in 0..=max_b {
                if pw[a].mul(&pw[b]) != pw[a + b] {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn report(&self, n: usize) -> QuotientReport {
        let qn = self.power(n);
        QuotientReport {
            level: self.level,
            grid_level: self.grid_level,
            vertices: self
                .template
                .window
                .vertices()
                .iter()
                .map(|v| v.to_string())
                .collect(),
            quotient_degree: self.qdeg.clone(),
            representatives_checked: self.representatives,
            kernel: (0..self.num_vertices())
                .map(|i| self.q.row(i).iter().map(|r| r.to_string()).collect())
                .collect(),
            rows_stochastic: self.q.rows_sum_to_one() && self.q.is_nonnegative(),
            detailed_balance_violations: self.detailed_balance_violations(&qn).len(),
            chapman_kolmogorov_violations: self
                .chapman_kolmogorov_violations(n.min(10), n.min(10))
                .len(),
            unweighted_asymmetric_pairs: self.asymmetric_pairs(&qn),
        }
    }
}

/// `Q^n(x̄, ·)` and the rank-weighted density `ĝ = Q^n / (k−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedKernel {
    pub start: usize,
    pub steps: usize,
    pub dist: Vec<Rational>,
    pub g_hat: Vec<Rational>,
}

pub fn folded_kernel(q: &QuotientWalk, start: usize, n: usize) -> Result<FoldedKernel> {
    let nv = q.num_vertices();
    if start >= nv {
        return Err(Error::domain(format!(
            "quotient vertex {start} out of range"
        )));
    }
    let mut dist = vec![Rational::zero(); nv];
    dist[start] = Rational::one();
    for _ in 0..n {
        let mut next = vec![Rational::zero(); nv];
        for (x, p) in dist.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (y, slot) in next.iter_mut().enumerate() {
                let e = q.q.get(x, y);
                if !e.is_zero() {
                    *slot += p * e;
                }
            }
        }
        dist = next;
    }
    let k1 = Rational::from_integer(BigInt::from(q.template.window.spec().k() - 1));
    let g_hat = dist.iter().map(|p| p / &k1).collect();
    Ok(FoldedKernel {
        start,
        steps: n,
        dist,
        g_hat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberInvariance {
    pub target: String,
    pub representatives: Vec<String>,
    pub grid_ranks: Vec<usize>,
    pub steps: usize,
    pub window_depth: usize,
    /// Escape mass at the last step per representative.
    pub escape: Vec<f64>,
    pub max_tv: f64,
    /// All pairs satisfy `TV ≤ escape(x′) + escape(x″)` at every step.
    pub within_bound: bool,
    /// Exact equality of every folded law; only decided with zero escape.
    pub exact_equal: Option<bool>,
    /// Folded laws equal the rows of `Q^t`; only decided with zero escape.
    pub matches_quotient: Option<bool>,
}

/// Folded `t`-step laws (`t ≤ n`) of the level-m walk from every
/// representative of `x̄` in `K^{<M+1>}`, computed on a depth-`depth` window.
pub fn fiber_invariance(
    fold: &FoldingMap,
    m: i32,
    target: &FieldElement,
    n: usize,
    depth: usize,
    budget: &Budget,
) -> Result<FiberInvariance> {
    let spec = fold.spec();
    let big_m = fold.level();
    let quotient = build_quotient(fold, m, budget)?;
    let xbar = quotient.vertex_id(target).ok_or_else(|| {
        Error::domain(format!("{target} is not a level-{m} vertex of K^<{big_m}>"))
    })?;
    if (m + depth as i32) < big_m + 1 {
        return Err(Error::domain("window must contain K^<M+1>"));
    }
    let grid = build_grid(Arc::new(Window::new(spec, m, depth, budget)?))?;
    let ft = fold_table(&grid, fold, quotient.window())?;
    let inner = Window::new(spec, m, (big_m + 1 - m) as usize, budget)?;
    let reps: Vec<usize> = inner
        .vertices()
        .iter()
        .map(|v| grid.window().vertex_id(v).unwrap())
        .filter(|&v| ft[v] == xbar && !grid.is_frontier(v))
        .collect();
    let nq = quotient.num_vertices();
    let tables = reps
        .iter()
        .map(|&r| kernel(&grid, r, n, Mode::Exact))
        .collect::<Result<Vec<_>>>()?;
    let laws: Vec<Vec<Vec<Rational>>> = tables
        .iter()
        .map(|t| {
            (0..=n)
                .map(|s| t.pushforward_exact(s, &ft, nq).unwrap())
                .collect()
        })
        .collect();
    let mut max_tv = 0.0f64;
    let mut within = true;
    for a in 0..reps.len() {
        for b in a + 1..reps.len() {
            for s in 0..=n {
                let tv = total_variation(&laws[a][s], &laws[b][s]);
                let bound = tables[a].escape_exact(s).unwrap() + tables[b].escape_exact(s).unwrap();
                max_tv = max_tv.max(rational_to_f64(&tv));
                within &= tv <= bound;
            }
        }
    }
    let no_escape = tables.iter().all(|t| t.escape_exact(n).unwrap().is_zero());
    let (exact_equal, matches_quotient) = if no_escape {
        let eq = laws.iter().all(|l| l == &laws[0]);
        let mut row = vec![Rational::zero(); nq];
        row[xbar] = Rational::one();
        let mut mq = true;
        for s in 0..=n {
            mq &= laws.iter().all(|l| l[s] == row);
            let mut next = vec![Rational::zero(); nq];
            for (x, p) in row.iter().enumerate() {
                if !p.is_zero() {
                    for (y, slot) in next.iter_mut().enumerate() {
                        *slot += p * quotient.q.get(x, y);
                    }
                }
            }
            row = next;
        }
        (Some(eq), Some(mq))
    } else {
        (None, None)
    };
    let k1 = spec.k() as usize - 1;
    Ok(FiberInvariance {
        target: target.to_string(),
        representatives: reps
            .iter()
            .map(|&r| grid.window().vertex(r).to_string())
            .collect(),
        grid_ranks: reps.iter().map(|&r| grid.degree(r) / k1).collect(),
        steps: n,
        window_depth: depth,
        escape: tables.iter().map(|t| t.escape(n)).collect(),
        max_tv,
        within_bound: within,
        exact_equal,
        matches_quotient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;
    use crate::geometry::FractalSpec;

    fn quotient(name: &str) -> QuotientWalk {
        let f = FoldingMap::for_spec(&FractalSpec::builtin(name).unwrap(), 1).unwrap();
        build_quotient(&f, 0, &Budget::unlimited()).unwrap()
    }

    #[test]
    fn gasket_corner_row() {
        let q = quotient("gasket");
        assert_eq!(q.num_vertices(), 6);
        let o = q.vertex_id(&FieldElement::zero(3)).unwrap();
        let row = q.matrix().row(o);
        let halves: Vec<usize> = (0..6).filter(|&j| row[j] == rat(1, 2)).collect();
        assert_eq!(halves.len(), 2);
        for j in halves {
            assert_eq!(q.quotient_degree(j), 4);
        }
        let two = q.vertex_id(&FieldElement::from_int(3, 2)).unwrap();
        assert_eq!(
            q.matrix()
                .row(two)
                .iter()
                .filter(|r| **r == rat(1, 2))
                .count(),
            2
        );
    }

    #[test]
    fn stochastic_and_balanced() {
        for name in ["gasket", "vicsek", "hexagon"] {
            let q = quotient(name);
            assert!(
                q.matrix().rows_sum_to_one() && q.matrix().is_nonnegative(),
                "{name}"
            );
            assert!(
                q.detailed_balance_violations(q.matrix()).is_empty(),
                "{name}"
            );
            assert!(q.representatives_checked() > q.num_vertices());
        }
    }

    #[test]
    fn powers_and_kernel() {
        let q = quotient("gasket");
        assert!(q.chapman_kolmogorov_violations(3, 3).is_empty());
        let f0 = folded_kernel(&q, 2, 0).unwrap();
        assert_eq!(f0.dist.iter().filter(|p| !p.is_zero()).count(), 1);
        let f5 = folded_kernel(&q, 2, 5).unwrap();
        assert_eq!(f5.dist, q.power(5).row(2));
        assert_eq!(f5.g_hat[0].clone() * rat(2, 1), f5.dist[0]);
        assert!(folded_kernel(&q, 99, 1).is_err());
    }

    #[test]
    fn fibers_small_and_guarded() {
        let f = FoldingMap::for_spec(&FractalSpec::builtin("gasket").unwrap(), 1).unwrap();
        let o = FieldElement::zero(3);
        let tight = fiber_invariance(&f, 0, &o, 12, 2, &Budget::unlimited()).unwrap();
        assert!(tight.within_bound);
        assert!(tight.escape.iter().any(|&e| e > 0.0));
        assert_eq!(tight.exact_equal, None);
        let wide = fiber_invariance(&f, 0, &o, 12, 4, &Budget::unlimited()).unwrap();
        assert!(wide.representatives.len() >= 2);
        assert_eq!(wide.exact_equal, Some(true));
        assert_eq!(wide.matches_quotient, Some(true));
    }

    #[test]
    fn matrix_normal_form() {
        let a = ExactMatrix {
            n: 1,
            den: BigInt::from(4),
            num: vec![BigInt::from(2)],
        }
        .normalized();
        assert_eq!(
            a,
            ExactMatrix {
                n: 1,
                den: BigInt::from(2),
                num: vec![BigInt::from(1)]
            }
        );
        assert_eq!(a.pow(3).get(0, 0), rat(1, 8));
    }
}
