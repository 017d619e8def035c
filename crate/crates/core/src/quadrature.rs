//! Gauss–Legendre quadrature on the reference interval (0,1), tensorized
//! element rules, and facet rules carrying the physical surface measure.

use crate::geometry::{Facet, MultiPatchDomain};
use crate::{Error, Result};

/// Quadrature points (parametric coordinates) with positive weights.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Univariate Gauss–Legendre rule on (0,1), exact for degree 2n−1.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// n-point Gauss–Legendre rule on (0,1).
///
/// Nodes are the Legendre roots found by Newton iteration from the Chebyshev
/// initial guess; weights follow from the derivative formula.
pub fn gauss_rule(n: usize) -> Result<GaussRule> {
    if n == 0 || n > 16 {
        return Err(Error::Argument(format!(
            "gauss rule size {n} outside supported range 1..=16"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from (-1,1) to (0,1); roots come in symmetric pairs.
        nodes[k] = 0.5 * (1.0 - x);
        nodes[n - 1 - k] = 0.5 * (1.0 + x);
        weights[k] = 0.5 * w;
        weights[n - 1 - k] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    Ok(GaussRule { nodes, weights })
}

/// Tensor-product rule over a parametric box; weights include the box measure.
pub fn element_rule(lo: &[f64], hi: &[f64], orders: &[usize]) -> Result<QuadRule> {
    assert_eq!(lo.len(), hi.len());
    assert_eq!(lo.len(), orders.len());
    let rules = orders.iter().map(|&n| gauss_rule(n)).collect::<Result<Vec<_>>>()?;
    let total: usize = orders.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for mut q in 0..total {
        let mut point = Vec::with_capacity(lo.len());
        let mut weight = 1.0;
        for (d, rule) in rules.iter().enumerate() {
            let i = q % orders[d];
            q /= orders[d];
            let len = hi[d] - lo[d];
            point.push(lo[d] + len * rule.nodes[i]);
            weight *= len * rule.weights[i];
        }
        points.push(point);
        weights.push(weight);
    }
    Ok(QuadRule { points, weights })
}

/// Quadrature on one element face of a facet, owner side.
///
/// `face_lo`/`face_hi` bound the face element in the owner's tangential
/// coordinates (the facet's fixed direction is omitted). Points are returned
/// as full owner parametric coordinates; weights carry the physical surface
/// measure |det J| · |J^{-T} e_dir| at each point.
pub fn facet_rule(
    domain: &MultiPatchDomain,
    facet: &Facet,
    face_lo: &[f64],
    face_hi: &[f64],
    orders: &[usize],
) -> Result<QuadRule> {
    let patch = domain.patch(facet.owner);
    let face = facet.owner_face;
    let tangential = element_rule(face_lo, face_hi, orders)?;
    let mut points = Vec::with_capacity(tangential.len());
    let mut weights = Vec::with_capacity(tangential.len());
    for (pt, &w) in tangential.points.iter().zip(&tangential.weights) {
        let xi = face.embed(pt);
        let surf = patch.geometry.surface_measure(&xi, face.dir)?;
        points.push(xi);
        weights.push(w * surf);
    }
    Ok(QuadRule { points, weights })
}
