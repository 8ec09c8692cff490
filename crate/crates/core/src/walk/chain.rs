use num::{BigInt, Integer, Zero};
use rayon::prelude::*;

/// Simple random walk on an undirected graph, stopped at absorbing vertices.
#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub adj: Vec<Vec<usize>>,
    pub absorbing: Vec<bool>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    /// lcm of the degrees of transient vertices.
    pub fn scale(&self) -> u64 {
        self.adj
            .iter()
            .zip(&self.absorbing)
            .filter(|(_, &a)| !a)
            .fold(1u64, |l, (n, _)| l.lcm(&(n.len().max(1) as u64)))
    }

    /// Numerators over `lambda^{t+1}` from numerators over `lambda^t`.
    /// Absorbing entries of the result hold the mass arriving at this step.
    pub fn step_exact(&self, num: &[BigInt], lambda: u64) -> Vec<BigInt> {
        let weight: Vec<u64> = self
            .adj
            .iter()
            .zip(&self.absorbing)
            .map(|(n, &a)| {
                if a || n.is_empty() {
                    0
                } else {
                    lambda / n.len() as u64
                }
            })
            .collect();
        (0..self.len())
            .into_par_iter()
            .map(|y| {
                let mut s = BigInt::zero();
                for &x in &self.adj[y] {
                    if weight[x] != 0 && !num[x].is_zero() {
                        s += &num[x] * weight[x];
                    }
                }
                s
            })
            .collect()
    }

    pub fn step_float(&self, p: &[f64]) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|y| {
                self.adj[y]
                    .iter()
                    .filter(|&&x| !self.absorbing[x] && p[x] != 0.0)
                    .map(|&x| p[x] / self.adj[x].len() as f64)
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_with_one_trap() {
        let c = Chain {
            adj: vec![vec![1, 2], vec![0, 2], vec![0, 1]],
            absorbing: vec![false, false, true],
        };
        assert_eq!(c.scale(), 2);
        let p1 = c.step_exact(&[BigInt::from(1), BigInt::zero(), BigInt::zero()], 2);
        assert_eq!(p1, vec![BigInt::zero(), BigInt::from(1), BigInt::from(1)]);
        let f = c.step_float(&[1.0, 0.0, 0.0]);
        assert_eq!(f, vec![0.0, 0.5, 0.5]);
    }
}
