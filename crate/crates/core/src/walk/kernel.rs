use num::{BigInt, One, Zero};
use serde::{Deserialize, Serialize};

use super::grid::GridGraph;
use super::{powers, rational_to_f64, scaled};
use crate::error::{Error, Result};
use crate::field::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            _ => Err(Error::Parse(format!("unknown mode {s:?} (exact|float)"))),
        }
    }
}

pub const EXACT_MAX_VERTICES: usize = 20_000;
pub const EXACT_MAX_HORIZON: usize = 1_000;

#[derive(Debug, Clone)]
enum Steps {
    /// Numerators over `lambda^t`; escape numerators likewise.
    Exact {
        lambda: u64,
        pow: Vec<BigInt>,
        num: Vec<Vec<BigInt>>,
        escape: Vec<BigInt>,
    },
    Float {
        p: Vec<Vec<f64>>,
        escape: Vec<f64>,
    },
}

/// `p_t(x0, ·)` for `t = 0..=n`, frontier absorbing.
#[derive(Debug, Clone)]
pub struct KernelTable {
    start: usize,
    horizon: usize,
    steps: Steps,
}

pub fn kernel(graph: &GridGraph, x0: usize, n: usize, mode: Mode) -> Result<KernelTable> {
    let nv = graph.num_vertices();
    if x0 >= nv {
        return Err(Error::domain(format!(
            "start vertex {x0} not in the graph ({nv} vertices)"
        )));
    }
    let chain = &graph.chain;
    let steps = match mode {
        Mode::Exact => {
            if nv > EXACT_MAX_VERTICES {
                return Err(Error::Resource {
                    what: "exact kernel vertices (use float mode)".into(),
                    requested: nv as u128,
                    limit: EXACT_MAX_VERTICES as u128,
                });
            }
            if n > EXACT_MAX_HORIZON {
                return Err(Error::Resource {
                    what: "exact kernel horizon (use float mode)".into(),
                    requested: n as u128,
                    limit: EXACT_MAX_HORIZON as u128,
                });
            }
            let lambda = chain.scale();
            let pow = powers(lambda, n);
            let mut cur = vec![BigInt::zero(); nv];
            let mut esc = BigInt::zero();
            if chain.absorbing[x0] {
                esc = BigInt::one();
            } else {
                cur[x0] = BigInt::one();
            }
            let mut num = vec![cur.clone()];
            let mut escape = vec![esc.clone()];
            for t in 1..=n {
                let mut next = chain.step_exact(&cur, lambda);
                esc *= lambda;
                for (v, x) in next.iter_mut().enumerate() {
                    if chain.absorbing[v] {
                        esc += &*x;
                        *x = BigInt::zero();
                    }
                }
                let total: BigInt = next.iter().sum::<BigInt>() + &esc;
                if total != pow[t] {
                    return Err(Error::integrity(format!("mass not conserved at step {t}")));
                }
                num.push(next.clone());
                escape.push(esc.clone());
                cur = next;
            }
            Steps::Exact {
                lambda,
                pow,
                num,
                escape,
            }
        }
        Mode::Float => {
            let mut cur = vec![0.0; nv];
            let mut esc = 0.0;
            if chain.absorbing[x0] {
                esc = 1.0;
            } else {
                cur[x0] = 1.0;
            }
            let mut p = vec![cur.clone()];
            let mut escape = vec![esc];
            for t in 1..=n {
                let mut next = chain.step_float(&cur);
                for (v, x) in next.iter_mut().enumerate() {
                    if chain.absorbing[v] {
                        esc += *x;
                        *x = 0.0;
                    }
                }
                let total: f64 = next.iter().sum::<f64>() + esc;
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::integrity(format!(
                        "mass drift {} at step {t}",
                        total - 1.0
                    )));
                }
                p.push(next.clone());
                escape.push(esc);
                cur = next;
            }
            Steps::Float { p, escape }
        }
    };
    Ok(KernelTable {
        start: x0,
        horizon: n,
        steps,
    })
}

impl KernelTable {
    pub fn start(&self) -> usize {
        self.start
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn mode(&self) -> Mode {
        match self.steps {
            Steps::Exact { .. } => Mode::Exact,
            Steps::Float { .. } => Mode::Float,
        }
    }
    pub fn num_vertices(&self) -> usize {
        match &self.steps {
            Steps::Exact { num, .. } => num[0].len(),
            Steps::Float { p, .. } => p[0].len(),
        }
    }

    /// Exact `p_t(x0, v)`; `None` in float mode.
    pub fn prob_exact(&self, t: usize, v: usize) -> Option<Rational> {
        match &self.steps {
            Steps::Exact { pow, num, .. } => Some(scaled(&num[t][v], &pow[t])),
            Steps::Float { .. } => None,
        }
    }
    pub fn prob(&self, t: usize, v: usize) -> f64 {
        match &self.steps {
            Steps::Exact { pow, num, .. } => rational_to_f64(&scaled(&num[t][v], &pow[t])),
            Steps::Float { p, .. } => p[t][v],
        }
    }
    pub fn escape_exact(&self, t: usize) -> Option<Rational> {
        match &self.steps {
            Steps::Exact { pow, escape, .. } => Some(scaled(&escape[t], &pow[t])),
            Steps::Float { .. } => None,
        }
    }
    pub fn escape(&self, t: usize) -> f64 {
        match &self.steps {
            Steps::Exact { pow, escape, .. } => rational_to_f64(&scaled(&escape[t], &pow[t])),
            Steps::Float { escape, .. } => escape[t],
        }
    }

    /// Push-forward of `p_t` along `map` into `size` bins, exactly.
    pub fn pushforward_exact(&self, t: usize, map: &[usize], size: usize) -> Option<Vec<Rational>> {
        match &self.steps {
            Steps::Exact { pow, num, .. } => {
                let mut acc = vec![BigInt::zero(); size];
                for (v, x) in num[t].iter().enumerate() {
                    if !x.is_zero() {
                        acc[map[v]] += x;
                    }
                }
                Some(acc.iter().map(|a| scaled(a, &pow[t])).collect())
            }
            Steps::Float { .. } => None,
        }
    }
    pub fn pushforward(&self, t: usize, map: &[usize], size: usize) -> Vec<f64> {
        let mut acc = vec![0.0; size];
        for v in 0..self.num_vertices() {
            let p = self.prob(t, v);
            if p != 0.0 {
                acc[map[v]] += p;
            }
        }
        acc
    }

    pub fn lambda(&self) -> Option<u64> {
        match &self.steps {
            Steps::Exact { lambda, .. } => Some(*lambda),
            Steps::Float { .. } => None,
        }
    }

    /// `step,vertex,prob` rows for nonzero entries, plus `escape` rows.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("step,vertex,prob,exact\n");
        for t in 0..=self.horizon {
            for v in 0..self.num_vertices() {
                let p = self.prob(t, v);
                if p != 0.0 {
                    let exact = self
                        .prob_exact(t, v)
                        .map(|r| r.to_string())
                        .unwrap_or_default();
                    out.push_str(&format!("{t},{},{p:.17e},{exact}\n", names[v]));
                }
            }
            let exact = self
                .escape_exact(t)
                .map(|r| r.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{t},escape,{:.17e},{exact}\n", self.escape(t)));
        }
        out
    }
}
