//! Error measurement: the mesh-dependent dG norm, dG and L2 errors of a
//! discrete solution against a manufactured solution, and convergence rates.
//!
//! The dG norm combines per-patch broken gradients and scaled time
//! derivatives, terminal traces, and interface jumps:
//!   ‖v‖_h² = Σ_i (‖∇x v‖² + θh_i‖∂t v‖²)
//!          + Σ_{F_T} (½‖v‖² + (θh/2)‖∇x v‖²)
//!          + `Σ_{F_I} (½‖[v]_t‖² + (θh/2)‖[∇x v]_t‖² + (δ1/h)‖[v]_x‖² + δ2 θh‖[∂t v]_x‖²)`
//!
//! Error quadrature uses one more Gauss point per direction than assembly.

use crate::assembly::DGParameters;
use crate::cases::ManufacturedProblem;
use crate::geometry::{physical_derivs_at, FacetKind, GeoFrame, MultiPatchDomain};
use crate::linalg::DenseLu;
use crate::par::{map_collect, ExecMode};
use crate::quadrature::element_rule;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-level error record of a convergence study.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ErrorReport {
    pub level: usize,
    pub dofs: usize,
    pub h: f64,
    pub err_dg: f64,
    pub err_l2: f64,
}

/// Pointwise sample of a scalar space-time field: value, spatial gradient,
/// and time derivative.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub dt: f64,
}

impl FieldSample {
    fn zero(d: usize) -> Self {
        Self {
            value: 0.0,
            grad_x: vec![0.0; d],
            dt: 0.0,
        }
    }
}

/// A scalar field evaluable on each patch of a multi-patch domain.
pub trait SpaceTimeField: Sync {
    /// Sample on a patch at parametric point `xi` with its geometry frame.
    fn sample(
        &self,
        domain: &MultiPatchDomain,
        patch: usize,
        xi: &[f64],
        frame: &GeoFrame,
    ) -> Result<FieldSample>;

    /// Two-sided interface difference (owner minus neighbor). Continuous
    /// fields return zero; differences drop their continuous part.
    #[allow(clippy::too_many_arguments)]
    fn jump(
        &self,
        domain: &MultiPatchDomain,
        own: usize,
        own_xi: &[f64],
        own_frame: &GeoFrame,
        nb: usize,
        nb_xi: &[f64],
        nb_frame: &GeoFrame,
    ) -> Result<FieldSample> {
        let a = self.sample(domain, own, own_xi, own_frame)?;
        let b = self.sample(domain, nb, nb_xi, nb_frame)?;
        Ok(FieldSample {
            value: a.value - b.value,
            grad_x: a.grad_x.iter().zip(&b.grad_x).map(|(x, y)| x - y).collect(),
            dt: a.dt - b.dt,
        })
    }
}

/// Spline field from a full coefficient vector (all patches concatenated).
pub struct DiscreteField<'a> {
    coeffs: &'a [f64],
    offsets: Vec<usize>,
}

impl<'a> DiscreteField<'a> {
    pub fn new(domain: &MultiPatchDomain, coeffs: &'a [f64]) -> Self {
        let mut offsets = Vec::with_capacity(domain.patches().len());
        let mut total = 0;
        for patch in domain.patches() {
            offsets.push(total);
            total += patch.space.dim();
        }
        assert_eq!(coeffs.len(), total, "coefficient vector length mismatch");
        Self { coeffs, offsets }
    }
}

impl SpaceTimeField for DiscreteField<'_> {
    fn sample(
        &self,
        domain: &MultiPatchDomain,
        patch: usize,
        xi: &[f64],
        frame: &GeoFrame,
    ) -> Result<FieldSample> {
        let p = domain.patch(patch);
        let d = domain.spatial_dims();
        let phys = physical_derivs_at(frame, &p.space, xi, 1)?;
        let offset = self.offsets[patch];
        let mut out = FieldSample::zero(d);
        for l in 0..phys.len() {
            let c = self.coeffs[offset + phys.indices[l]];
            out.value += c * phys.values[l];
            for (o, g) in out.grad_x.iter_mut().zip(phys.grad_x(l)) {
                *o += c * g;
            }
            out.dt += c * phys.dt(l);
        }
        Ok(out)
    }
}

/// Analytic field from callbacks on physical points.
pub struct AnalyticField<'a> {
    pub value: &'a (dyn Fn(&[f64]) -> f64 + Send + Sync),
    pub grad_x: &'a (dyn Fn(&[f64]) -> Vec<f64> + Send + Sync),
    pub dt: &'a (dyn Fn(&[f64]) -> f64 + Send + Sync),
}

impl<'a> AnalyticField<'a> {
    pub fn from_problem(problem: &'a ManufacturedProblem) -> Self {
        Self {
            value: &*problem.exact,
            grad_x: &*problem.grad_x,
            dt: &*problem.dt,
        }
    }
}

impl SpaceTimeField for AnalyticField<'_> {
    fn sample(
        &self,
        _domain: &MultiPatchDomain,
        _patch: usize,
        _xi: &[f64],
        frame: &GeoFrame,
    ) -> Result<FieldSample> {
        Ok(FieldSample {
            value: (self.value)(&frame.point),
            grad_x: (self.grad_x)(&frame.point),
            dt: (self.dt)(&frame.point),
        })
    }

    fn jump(
        &self,
        domain: &MultiPatchDomain,
        _own: usize,
        _own_xi: &[f64],
        _own_frame: &GeoFrame,
        _nb: usize,
        _nb_xi: &[f64],
        _nb_frame: &GeoFrame,
    ) -> Result<FieldSample> {
        // Analytic fields are single-valued across interfaces.
        Ok(FieldSample::zero(domain.spatial_dims()))
    }
}

/// Difference u − u_h of an analytic and a discrete field. Interface jumps
/// reduce to the discrete jumps (the analytic part is continuous).
pub struct ErrorField<'a> {
    pub analytic: AnalyticField<'a>,
    pub discrete: DiscreteField<'a>,
}

impl SpaceTimeField for ErrorField<'_> {
    fn sample(
        &self,
        domain: &MultiPatchDomain,
        patch: usize,
        xi: &[f64],
        frame: &GeoFrame,
    ) -> Result<FieldSample> {
        let a = self.analytic.sample(domain, patch, xi, frame)?;
        let b = self.discrete.sample(domain, patch, xi, frame)?;
        Ok(FieldSample {
            value: a.value - b.value,
            grad_x: a.grad_x.iter().zip(&b.grad_x).map(|(x, y)| x - y).collect(),
            dt: a.dt - b.dt,
        })
    }

    fn jump(
        &self,
        domain: &MultiPatchDomain,
        own: usize,
        own_xi: &[f64],
        own_frame: &GeoFrame,
        nb: usize,
        nb_xi: &[f64],
        nb_frame: &GeoFrame,
    ) -> Result<FieldSample> {
        let j = self
            .discrete
            .jump(domain, own, own_xi, own_frame, nb, nb_xi, nb_frame)?;
        Ok(FieldSample {
            value: -j.value,
            grad_x: j.grad_x.iter().map(|v| -v).collect(),
            dt: -j.dt,
        })
    }
}

fn error_orders(params: &DGParameters, degrees: &[usize]) -> Vec<usize> {
    params.orders_for(degrees).iter().map(|&n| n + 1).collect()
}

/// The space-time dG norm of a field.
pub fn dg_norm(
    field: &dyn SpaceTimeField,
    domain: &MultiPatchDomain,
    params: &DGParameters,
) -> Result<f64> {
    dg_norm_with(field, domain, params, ExecMode::default())
}

pub fn dg_norm_with(
    field: &dyn SpaceTimeField,
    domain: &MultiPatchDomain,
    params: &DGParameters,
    mode: ExecMode,
) -> Result<f64> {
    let mut total = 0.0;

    // Volume: ‖∇x v‖² + θh ‖∂t v‖² per patch.
    for patch in domain.patches() {
        let orders = error_orders(params, &patch.space.degrees());
        let th = params.theta * patch.h;
        let mesh = patch.space.mesh();
        let parts = map_collect(mode, mesh.num_elements(), |e| -> Result<f64> {
            let (lo, hi) = mesh.element(e);
            let rule = element_rule(&lo, &hi, &orders)?;
            let mut acc = 0.0;
            for (xi, &w) in rule.points.iter().zip(&rule.weights) {
                let frame = patch.geometry.frame(xi, 1)?;
                let s = field.sample(domain, patch.id, xi, &frame)?;
                let g2: f64 = s.grad_x.iter().map(|g| g * g).sum();
                acc += w * frame.jac.det * (g2 + th * s.dt * s.dt);
            }
            Ok(acc)
        });
        for p in parts {
            total += p?;
        }
    }

    for facet in domain.facets() {
        match facet.kind {
            FacetKind::Terminal => {
                let patch = domain.patch(facet.owner);
                let th = params.theta * patch.h;
                let orders = error_orders(params, &patch.space.degrees());
                total += facet_integral(domain, facet, &orders, mode, |own_xi, own_frame, _, _| {
                    let s = field.sample(domain, facet.owner, own_xi, own_frame)?;
                    let g2: f64 = s.grad_x.iter().map(|g| g * g).sum();
                    Ok(0.5 * s.value * s.value + 0.5 * th * g2)
                })?;
            }
            FacetKind::Interior => {
                let patch = domain.patch(facet.owner);
                let th = params.theta * patch.h;
                let pen1 = params.delta1 / patch.h;
                let pen2 = params.delta2 * th;
                let orders = error_orders(params, &patch.space.degrees());
                let (nb, _) = facet.neighbor.unwrap();
                total += facet_integral(
                    domain,
                    facet,
                    &orders,
                    mode,
                    |own_xi, own_frame, nb_xi, nb_frame| {
                        let j = field.jump(
                            domain,
                            facet.owner,
                            own_xi,
                            own_frame,
                            nb,
                            nb_xi,
                            nb_frame.unwrap(),
                        )?;
                        let normal = own_frame
                            .jac
                            .outward_normal(facet.owner_face.dir, facet.owner_face.side)?;
                        let d = normal.len() - 1;
                        let n_t = normal[d];
                        let nx2: f64 = normal[..d].iter().map(|v| v * v).sum();
                        let jg2: f64 = j.grad_x.iter().map(|g| g * g).sum();
                        Ok(0.5 * j.value * j.value * n_t * n_t
                            + 0.5 * th * jg2 * n_t * n_t
                            + pen1 * j.value * j.value * nx2
                            + pen2 * j.dt * j.dt * nx2)
                    },
                )?;
            }
            _ => {}
        }
    }

    Ok(total.sqrt())
}

/// Integrates a pointwise callback over a facet (owner-side face mesh), with
/// the physical surface measure. The callback receives owner and, for
/// interior facets, neighbor evaluation data.
fn facet_integral<F>(
    domain: &MultiPatchDomain,
    facet: &crate::geometry::Facet,
    orders: &[usize],
    mode: ExecMode,
    f: F,
) -> Result<f64>
where
    F: Fn(&[f64], &GeoFrame, &[f64], Option<&GeoFrame>) -> Result<f64> + Sync + Send,
{
    let patch = domain.patch(facet.owner);
    let face = facet.owner_face;
    let dims = patch.space.num_dims();
    let tangential = face.tangential(dims);
    let mesh = patch.space.mesh();
    let breaks: Vec<&Vec<f64>> = tangential.iter().map(|&d| &mesh.breakpoints()[d]).collect();
    let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
    let n_faces: usize = counts.iter().product();
    let t_orders: Vec<usize> = tangential.iter().map(|&d| orders[d]).collect();
    let interior = facet.kind == FacetKind::Interior;
    let nb_patch = facet.neighbor.map(|(id, _)| domain.patch(id));

    let parts = map_collect(mode, n_faces, |mut e| -> Result<f64> {
        let mut lo = Vec::with_capacity(counts.len());
        let mut hi = Vec::with_capacity(counts.len());
        for (k, &c) in counts.iter().enumerate() {
            let i = e % c;
            e /= c;
            lo.push(breaks[k][i]);
            hi.push(breaks[k][i + 1]);
        }
        let rule = element_rule(&lo, &hi, &t_orders)?;
        let mut acc = 0.0;
        for (pt, &w) in rule.points.iter().zip(&rule.weights) {
            let own_xi = face.embed(pt);
            let own_frame = patch.geometry.frame(&own_xi, 1)?;
            let ws = w * own_frame.jac.surface_factor(face.dir)?;
            if interior {
                let nb_xi = facet.neighbor_xi(&own_xi);
                let nb_frame = nb_patch.unwrap().geometry.frame(&nb_xi, 1)?;
                acc += ws * f(&own_xi, &own_frame, &nb_xi, Some(&nb_frame))?;
            } else {
                acc += ws * f(&own_xi, &own_frame, &[], None)?;
            }
        }
        Ok(acc)
    });
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total)
}

/// dG-norm error ‖u − u_h‖_h of a discrete solution (full coefficients).
pub fn dg_error(
    coeffs: &[f64],
    problem: &ManufacturedProblem,
    domain: &MultiPatchDomain,
    params: &DGParameters,
) -> Result<f64> {
    let field = ErrorField {
        analytic: AnalyticField::from_problem(problem),
        discrete: DiscreteField::new(domain, coeffs),
    };
    dg_norm(&field, domain, params)
}

/// L2 error ‖u − u_h‖_{L2(Q)} of a discrete solution (full coefficients),
/// with degree+2 Gauss points per direction.
pub fn l2_error(
    coeffs: &[f64],
    problem: &ManufacturedProblem,
    domain: &MultiPatchDomain,
) -> Result<f64> {
    l2_error_with(coeffs, problem, domain, ExecMode::default())
}

pub fn l2_error_with(
    coeffs: &[f64],
    problem: &ManufacturedProblem,
    domain: &MultiPatchDomain,
    mode: ExecMode,
) -> Result<f64> {
    let discrete = DiscreteField::new(domain, coeffs);
    let mut total = 0.0;
    for patch in domain.patches() {
        let orders: Vec<usize> = patch.space.degrees().iter().map(|&p| p + 2).collect();
        let mesh = patch.space.mesh();
        let parts = map_collect(mode, mesh.num_elements(), |e| -> Result<f64> {
            let (lo, hi) = mesh.element(e);
            let rule = element_rule(&lo, &hi, &orders)?;
            let mut acc = 0.0;
            for (xi, &w) in rule.points.iter().zip(&rule.weights) {
                let frame = patch.geometry.frame(xi, 1)?;
                let s = discrete.sample(domain, patch.id, xi, &frame)?;
                let e = (problem.exact)(&frame.point) - s.value;
                acc += w * frame.jac.det * e * e;
            }
            Ok(acc)
        });
        for p in parts {
            total += p?;
        }
    }
    Ok(total.sqrt())
}

/// Rates log2(e_i / e_{i+1}); positive under convergence.
pub fn convergence_rates(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.iter().any(|&e| e <= 0.0 || !e.is_finite()) {
        return Err(Error::Argument(
            "convergence rates require strictly positive errors".into(),
        ));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Greville interpolant of a physical-space function on every patch: solves
/// the tensor collocation problem at the mapped Greville grid.
pub fn greville_interpolant(
    domain: &MultiPatchDomain,
    f: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    let mut coeffs = Vec::new();
    for patch in domain.patches() {
        let dims = patch.space.dims();
        let kvs = patch.space.directions();
        let mut grev = Vec::new();
        let mut solvers = Vec::new();
        for kv in kvs {
            let g = kv.greville();
            let n = kv.num_basis();
            let mut a = vec![0.0; n * n];
            for (r, &x) in g.iter().enumerate() {
                let t = kv.eval_basis_derivs(x, 0)?;
                for (j, v) in t.ders[0].iter().enumerate() {
                    a[r * n + t.first + j] = *v;
                }
            }
            solvers.push(DenseLu::factor(a, n).map_err(|_| {
                Error::Constraint("singular Greville collocation".into())
            })?);
            grev.push(g);
        }
        let total: usize = dims.iter().product();
        let mut data = vec![0.0; total];
        for (g, value) in data.iter_mut().enumerate() {
            let mut rem = g;
            let mut xi = Vec::with_capacity(dims.len());
            for (k, &n) in dims.iter().enumerate() {
                xi.push(grev[k][rem % n]);
                rem /= n;
            }
            let xt = patch.geometry.map_point(&xi)?;
            *value = f(&xt);
        }
        for (axis, solver) in solvers.iter().enumerate() {
            let n = dims[axis];
            let stride_before: usize = dims[..axis].iter().product();
            let lines = total / n;
            let mut line = vec![0.0; n];
            for l in 0..lines {
                let inner = l % stride_before.max(1);
                let outer = l / stride_before.max(1);
                let base = outer * stride_before * n + inner;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * stride_before];
                }
                let c = solver.solve(&line);
                for (k, &v) in c.iter().enumerate() {
                    data[base + k * stride_before] = v;
                }
            }
        }
        coeffs.extend(data);
    }
    Ok(coeffs)
}
