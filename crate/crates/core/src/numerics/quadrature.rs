use super::error::{invalid, Result};
use super::real::Real;

/// Gauss–Hermite rule for the weight function exp(−x²) (physicists'
/// convention). Nodes are sorted in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ w_k f(x_k) ≈ ∫ f(x) e^{−x²} dx.
    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    /// Tensor-product rule in `dim` dimensions, as (node vector, weight)
    /// pairs with the last coordinate varying fastest.
    pub fn tensor(&self, dim: usize) -> Vec<(Vec<T>, T)> {
        let mut out: Vec<(Vec<T>, T)> = vec![(Vec::with_capacity(dim), T::one())];
        for _ in 0..dim {
            let mut next = Vec::with_capacity(out.len() * self.len());
            for (x, w) in &out {
                for (&xi, &wi) in self.nodes.iter().zip(&self.weights) {
                    let mut node = x.clone();
                    node.push(xi);
                    next.push((node, *w * wi));
                }
            }
            out = next;
        }
        out
    }
}

/// Gauss–Hermite rule with `n` nodes, exact for polynomials of degree
/// ≤ 2n − 1 against exp(−x²).
///
/// Roots are found by Newton iteration on the orthonormal Hermite
/// recurrence in double precision and then converted to `T`.
pub fn gauss_hermite<T: Real>(n: usize) -> Result<QuadratureRule<T>> {
    if n == 0 {
        return Err(invalid("Gauss-Hermite rule needs at least one node"));
    }
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut x = vec![0.0_f64; n];
    let mut w = vec![0.0_f64; n];
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(QuadratureRule {
        nodes: pairs.iter().map(|p| T::c(p.0)).collect(),
        weights: pairs.iter().map(|p| T::c(p.1)).collect(),
    })
}
