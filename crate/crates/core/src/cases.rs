//! Built-in manufactured problems: a unit-box smoke case and the two
//! moving-domain benchmarks (one and two spatial dimensions).
//!
//! Each case pairs a multi-patch space-time geometry with an analytic
//! solution, its derivatives, the induced source f = ∂t u − Δu, and boundary
//! data. Physical points are passed as slices [x_1, …, x_d, t].

use crate::bspline::{KnotVector, TensorBasis};
use crate::geometry::{build_multipatch, GeometryMap, MultiPatchDomain, Patch, DEFAULT_MATCHING_TOL};
use crate::{Error, Result};
use std::f64::consts::PI;
use std::sync::Arc;

type Scalar = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Vector = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Analytic problem data for a manufactured solution.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub name: String,
    /// Spatial dimension d.
    pub spatial_dims: usize,
    pub exact: Scalar,
    pub grad_x: Vector,
    pub dt: Scalar,
    pub source: Scalar,
    /// Dirichlet trace on the lateral boundary Σ.
    pub dirichlet: Scalar,
    /// Initial trace on Σ0.
    pub initial: Scalar,
}

impl std::fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("name", &self.name)
            .field("spatial_dims", &self.spatial_dims)
            .finish()
    }
}

impl ManufacturedProblem {
    /// Boundary data for a facet kind: the Dirichlet or initial trace.
    pub fn boundary_value(&self, kind: crate::geometry::FacetKind, xt: &[f64]) -> f64 {
        match kind {
            crate::geometry::FacetKind::Initial => (self.initial)(xt),
            _ => (self.dirichlet)(xt),
        }
    }

    /// Finite-difference residual |f − (∂t u − Δu)| / max(|f|, 1) at a point.
    pub fn source_residual_fd(&self, xt: &[f64], step: f64) -> f64 {
        let d = self.spatial_dims;
        let u0 = (self.exact)(xt);
        let mut lap = 0.0;
        for k in 0..d {
            let mut xp = xt.to_vec();
            let mut xm = xt.to_vec();
            xp[k] += step;
            xm[k] -= step;
            lap += ((self.exact)(&xp) - 2.0 * u0 + (self.exact)(&xm)) / (step * step);
        }
        let f = (self.source)(xt);
        let resid = f - ((self.dt)(xt) - lap);
        resid.abs() / f.abs().max(1.0)
    }
}

/// The moving-domain manufactured solution, reusable for custom geometries:
/// u = sin(πx₁) sin(πt) with the induced source and boundary data.
pub fn manufactured_sin(name: &str, spatial_dims: usize) -> ManufacturedProblem {
    sin_pi_problem(name, spatial_dims)
}

fn sin_pi_problem(name: &str, spatial_dims: usize) -> ManufacturedProblem {
    // u = sin(pi x_1) sin(pi t), f = pi sin(pi x_1)(cos(pi t) + pi sin(pi t)).
    let d = spatial_dims;
    let exact: Scalar = Arc::new(move |xt: &[f64]| (PI * xt[0]).sin() * (PI * xt[d]).sin());
    let grad_x: Vector = Arc::new(move |xt: &[f64]| {
        let mut g = vec![0.0; d];
        g[0] = PI * (PI * xt[0]).cos() * (PI * xt[d]).sin();
        g
    });
    let dt: Scalar = Arc::new(move |xt: &[f64]| PI * (PI * xt[0]).sin() * (PI * xt[d]).cos());
    let source: Scalar = Arc::new(move |xt: &[f64]| {
        PI * (PI * xt[0]).sin() * ((PI * xt[d]).cos() + PI * (PI * xt[d]).sin())
    });
    ManufacturedProblem {
        name: name.to_string(),
        spatial_dims,
        exact: exact.clone(),
        grad_x,
        dt,
        source,
        dirichlet: exact.clone(),
        initial: exact,
    }
}

/// Identity-mapped unit space-time box with exact solution u = x_1 · t.
pub fn case_unit_box(spatial_dims: usize) -> Result<(MultiPatchDomain, ManufacturedProblem)> {
    if !(1..=2).contains(&spatial_dims) {
        return Err(Error::Argument(format!(
            "unit box supports 1 or 2 spatial dimensions, got {spatial_dims}"
        )));
    }
    let dims = spatial_dims + 1;
    let basis = TensorBasis::single_span(1, dims);
    let points: Vec<Vec<f64>> = (0..basis.dim())
        .map(|g| basis.multi_index(g).iter().map(|&i| i as f64).collect())
        .collect();
    let geometry = GeometryMap::new(basis, points)?;
    let patch = Patch::new(0, geometry, TensorBasis::single_span(1, dims))?;
    let domain = build_multipatch(vec![patch], DEFAULT_MATCHING_TOL)?;

    let d = spatial_dims;
    let exact: Scalar = Arc::new(move |xt: &[f64]| xt[0] * xt[d]);
    let grad_x: Vector = Arc::new(move |xt: &[f64]| {
        let mut g = vec![0.0; d];
        g[0] = xt[d];
        g
    });
    let dt: Scalar = Arc::new(move |xt: &[f64]| xt[0]);
    let source: Scalar = Arc::new(move |xt: &[f64]| xt[0]);
    let problem = ManufacturedProblem {
        name: "unit-box".to_string(),
        spatial_dims,
        exact: exact.clone(),
        grad_x,
        dt,
        source,
        dirichlet: exact.clone(),
        initial: exact,
    };
    Ok((domain, problem))
}

/// Two-patch moving domain in one spatial dimension over t in (0,2).
///
/// The slab has unit width for all t; both edges follow a(t) = -t(1-t)/2 on
/// the lower patch and its mirrored continuation on the upper patch. Geometry
/// degrees are (1,2); the quadratic in time bulges the lateral edges.
pub fn case_moving_2d() -> Result<(MultiPatchDomain, ManufacturedProblem)> {
    let kv_x = KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1)?;
    let kv_t = KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2)?;
    let basis = TensorBasis::new(vec![kv_x, kv_t])?;

    // Lower patch, t in (0,1): edges a(t) = -t(1-t)/2, b(t) = 1 - t(1-t)/2.
    let lower = GeometryMap::new(
        basis.clone(),
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![-0.25, 0.5],
            vec![0.75, 0.5],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ],
    )?;
    // Upper patch, t in (1,2): edges mirror with a(t) = -(t-1)(t-2)/2,
    // b(t) = a(t) + 1, keeping the slab width exactly one.
    let upper = GeometryMap::new(
        basis,
        vec![
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.25, 1.5],
            vec![1.25, 1.5],
            vec![0.0, 2.0],
            vec![1.0, 2.0],
        ],
    )?;
    let space = TensorBasis::single_span(1, 2);
    let patches = vec![
        Patch::new(0, lower, space.clone())?,
        Patch::new(1, upper, space)?,
    ];
    let domain = build_multipatch(patches, DEFAULT_MATCHING_TOL)?;
    Ok((domain, sin_pi_problem("moving-2d", 1)))
}

/// Edge positions of the moving 2D domain.
pub fn moving_2d_edges(t: f64) -> (f64, f64) {
    let a = if t <= 1.0 {
        -t * (1.0 - t) / 2.0
    } else {
        -(t - 1.0) * (t - 2.0) / 2.0
    };
    (a, a + 1.0)
}

/// Two-patch moving domain in two spatial dimensions over t in (0,2), with
/// the control net of the second benchmark (motion in the first coordinate
/// only; the lower patch widens, the upper patch narrows back).
pub fn case_moving_3d() -> Result<(MultiPatchDomain, ManufacturedProblem)> {
    let kv_lin = KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1)?;
    let kv_t = KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2)?;
    let basis = TensorBasis::new(vec![kv_lin.clone(), kv_lin, kv_t])?;

    // Control nets, lexicographic with i1 fastest, then i2, then i3.
    let lower_net = vec![
        vec![0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![1.0, 1.0, 0.0],
        vec![-0.25, 0.0, 0.5],
        vec![1.25, 0.0, 0.5],
        vec![-0.25, 1.0, 0.5],
        vec![1.25, 1.0, 0.5],
        vec![0.0, 0.0, 1.0],
        vec![1.0, 0.0, 1.0],
        vec![0.0, 1.0, 1.0],
        vec![1.0, 1.0, 1.0],
    ];
    let upper_net = vec![
        vec![0.0, 0.0, 1.0],
        vec![1.0, 0.0, 1.0],
        vec![0.0, 1.0, 1.0],
        vec![1.0, 1.0, 1.0],
        vec![0.25, 0.0, 1.5],
        vec![0.75, 0.0, 1.5],
        vec![0.25, 1.0, 1.5],
        vec![0.75, 1.0, 1.5],
        vec![0.0, 0.0, 2.0],
        vec![1.0, 0.0, 2.0],
        vec![0.0, 1.0, 2.0],
        vec![1.0, 1.0, 2.0],
    ];
    let lower = GeometryMap::new(basis.clone(), lower_net)?;
    let upper = GeometryMap::new(basis, upper_net)?;
    let space = TensorBasis::single_span(1, 3);
    let patches = vec![
        Patch::new(0, lower, space.clone())?,
        Patch::new(1, upper, space)?,
    ];
    let domain = build_multipatch(patches, DEFAULT_MATCHING_TOL)?;
    Ok((domain, sin_pi_problem("moving-3d", 2)))
}

/// Looks up a built-in case by CLI name.
pub fn case_by_name(name: &str) -> Result<(MultiPatchDomain, ManufacturedProblem)> {
    match name {
        "unit-box" => case_unit_box(1),
        "moving-2d" => case_moving_2d(),
        "moving-3d" => case_moving_3d(),
        other => Err(Error::Config(format!(
            "unknown case '{other}'; expected unit-box, moving-2d or moving-3d"
        ))),
    }
}
