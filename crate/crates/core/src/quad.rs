//! Gauss–Legendre rules on intervals and panel unions.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// Nodes and weights of a quadrature rule, nodes ascending.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `n`-point Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
    let Some(n) = NonZeroUsize::new(n) else {
        return Rule { nodes: vec![], weights: vec![] };
    };
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    Rule {
        nodes: pairs.iter().map(|p| mid + half * p.0).collect(),
        weights: pairs.iter().map(|p| half * p.1).collect(),
    }
}

/// Composite rule: `counts[i]` Gauss–Legendre nodes on `[breaks[i], breaks[i+1]]`.
pub fn panels(breaks: &[f64], counts: &[usize]) -> Rule {
    assert_eq!(breaks.len(), counts.len() + 1, "one count per panel");
    let mut nodes = Vec::with_capacity(counts.iter().sum());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (w, &n) in breaks.windows(2).zip(counts) {
        let r = gauss_legendre(n, w[0], w[1]);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    Rule { nodes, weights }
}

/// Two panels meeting at `split`, nodes allotted evenly.
pub fn split_panels(a: f64, split: f64, b: f64, n: usize) -> Rule {
    let left = n / 2;
    panels(&[a, split, b], &[left, n - left])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exactness() {
        let r = gauss_legendre(5, 0.0, 2.0);
        // degree 9 exact
        assert_relative_eq!(r.integrate(|x| x.powi(9)), 2f64.powi(10) / 10.0, max_relative = 1e-13);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn panels_concatenate() {
        let r = split_panels(0.0, 1.0, 4.0, 40);
        assert_eq!(r.len(), 40);
        assert_relative_eq!(r.integrate(|x| x * x * x), 64.0, max_relative = 1e-13);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_rule() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_empty());
    }
}
