//! Assembly of the stabilized space-time dG system.
//!
//! The bilinear form combines, per patch, the volume terms
//! −u ∂t v + θh ∂t u ∂t v + ∇x u·∇x v − θh ∂t∇x u·∇x v, terminal-facet terms
//! u v + θh ∇x u·∇x v, and interior-facet terms: time-upwind coupling of
//! values and spatial gradients, antisymmetric spatial flux terms, and jump
//! penalties. The right-hand side tests the source against the time-upwind
//! test function v + θh ∂t v. Dirichlet and initial data are imposed strongly
//! by Greville interpolation on the boundary layers of each control net, and
//! the constrained columns are moved to the right-hand side.

use crate::cases::ManufacturedProblem;
use crate::geometry::{physical_derivs_at, Facet, FacetKind, MultiPatchDomain, Patch};
use crate::linalg::DenseLu;
use crate::par::{map_collect, ExecMode};
use crate::quadrature::element_rule;
use crate::{Error, Result};

/// Stabilization and penalty parameters of the dG form.
#[derive(Debug, Clone)]
pub struct DGParameters {
    /// Time-upwind parameter θ (one global value, applied per patch as θ·h_i).
    pub theta: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Quadrature points per parametric direction; `None` selects degree+1.
    pub quad_orders: Option<Vec<usize>>,
}

impl DGParameters {
    /// θ = 0.1 with the default penalty rule for degree `p` and spatial
    /// dimension `d`.
    pub fn standard(p: usize, d: usize) -> Self {
        let (delta1, delta2) = default_penalties(p, d);
        Self {
            theta: 0.1,
            delta1,
            delta2,
            quad_orders: None,
        }
    }

    /// Per-direction quadrature orders for a space with the given degrees.
    pub fn orders_for(&self, degrees: &[usize]) -> Vec<usize> {
        match &self.quad_orders {
            Some(orders) if orders.len() == degrees.len() => orders.clone(),
            Some(orders) => vec![orders[0]; degrees.len()],
            None => degrees.iter().map(|&p| p + 1).collect(),
        }
    }
}

/// Penalty rule δ1 = δ2 = 2(p+d+1)(p+1).
pub fn default_penalties(p: usize, d: usize) -> (f64, f64) {
    let v = (2 * (p + d + 1) * (p + 1)) as f64;
    (v, v)
}

/// Jump, average and upwind values of a scalar across a facet point.
#[derive(Debug, Clone)]
pub struct TraceOps {
    /// Spatial jump v_i n_{i,x} + v_j n_{j,x}.
    pub jump_x: Vec<f64>,
    /// Temporal jump v_i n_{i,t} + v_j n_{j,t}.
    pub jump_t: f64,
    pub average: f64,
    pub upwind: f64,
    pub downwind: f64,
}

/// Interior-facet trace operations; `normal` is the owner's outward normal
/// (the neighbor normal is its negation).
pub fn trace_ops(v_own: f64, v_nb: f64, normal: &[f64]) -> TraceOps {
    let d = normal.len() - 1;
    let n_t = normal[d];
    let jump_x = normal[..d].iter().map(|nx| (v_own - v_nb) * nx).collect();
    let jump_t = (v_own - v_nb) * n_t;
    let average = 0.5 * (v_own + v_nb);
    let (upwind, downwind) = if n_t >= 0.0 { (v_own, v_nb) } else { (v_nb, v_own) };
    TraceOps {
        jump_x,
        jump_t,
        average,
        upwind,
        downwind,
    }
}

/// One-sided trace operations on a boundary facet.
pub fn trace_ops_boundary(v: f64, normal: &[f64]) -> TraceOps {
    let d = normal.len() - 1;
    TraceOps {
        jump_x: normal[..d].iter().map(|nx| v * nx).collect(),
        jump_t: v * normal[d],
        average: v,
        upwind: v,
        downwind: v,
    }
}

/// Basis traces at one facet point: owner-side tables, neighbor-side tables
/// for interior facets, the owner's outward normal, and the facet
/// coefficient h (owner patch mesh size).
#[derive(Debug, Clone)]
pub struct TraceSample {
    pub owner: crate::geometry::PhysicalBasis,
    pub neighbor: Option<crate::geometry::PhysicalBasis>,
    pub normal: Vec<f64>,
    pub h: f64,
}

impl TraceSample {
    /// Evaluates both sides of a facet at a point on the owner's face.
    /// `max_deriv` = 2 additionally fills the ∂t∇x tables.
    pub fn at(
        domain: &MultiPatchDomain,
        facet: &Facet,
        own_xi: &[f64],
        max_deriv: usize,
    ) -> Result<Self> {
        let own = domain.patch(facet.owner);
        let own_frame = own.geometry.frame(own_xi, max_deriv)?;
        let owner = physical_derivs_at(&own_frame, &own.space, own_xi, max_deriv)?;
        let normal = own_frame
            .jac
            .outward_normal(facet.owner_face.dir, facet.owner_face.side)?;
        let neighbor = match facet.neighbor {
            Some((nb_id, _)) => {
                let nb = domain.patch(nb_id);
                let nb_xi = facet.neighbor_xi(own_xi);
                let nb_frame = nb.geometry.frame(&nb_xi, max_deriv)?;
                Some(physical_derivs_at(&nb_frame, &nb.space, &nb_xi, max_deriv)?)
            }
            None => None,
        };
        Ok(Self {
            owner,
            neighbor,
            normal,
            h: own.h,
        })
    }
}

/// Global dof bookkeeping: per-patch offsets and strong constraints.
#[derive(Debug, Clone)]
pub struct DofMap {
    /// Basis functions per direction, per patch.
    pub patch_dims: Vec<Vec<usize>>,
    /// Global offset of each patch's first dof.
    pub offsets: Vec<usize>,
    pub total: usize,
    /// Fixed value per constrained dof; `None` marks a free dof.
    pub constrained: Vec<Option<f64>>,
    /// Free index of each global dof.
    pub free_of_global: Vec<Option<usize>>,
    /// Global dof of each free index.
    pub global_of_free: Vec<usize>,
}

impl DofMap {
    fn from_constraints(domain: &MultiPatchDomain, constrained: Vec<Option<f64>>) -> Self {
        let mut patch_dims = Vec::new();
        let mut offsets = Vec::new();
        let mut total = 0;
        for patch in domain.patches() {
            offsets.push(total);
            patch_dims.push(patch.space.dims());
            total += patch.space.dim();
        }
        let mut free_of_global = vec![None; total];
        let mut global_of_free = Vec::new();
        for (g, c) in constrained.iter().enumerate() {
            if c.is_none() {
                free_of_global[g] = Some(global_of_free.len());
                global_of_free.push(g);
            }
        }
        Self {
            patch_dims,
            offsets,
            total,
            constrained,
            free_of_global,
            global_of_free,
        }
    }

    pub fn n_free(&self) -> usize {
        self.global_of_free.len()
    }

    /// (patch, multi-index) of a global dof.
    pub fn patch_and_multi(&self, global: usize) -> (usize, Vec<usize>) {
        let patch = match self.offsets.binary_search(&global) {
            Ok(p) => p,
            Err(p) => p - 1,
        };
        let mut local = global - self.offsets[patch];
        let mut multi = Vec::with_capacity(self.patch_dims[patch].len());
        for &n in &self.patch_dims[patch] {
            multi.push(local % n);
            local /= n;
        }
        (patch, multi)
    }

    /// Full coefficient vector from a free-dof solution: constrained dofs take
    /// their fixed values.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.n_free());
        (0..self.total)
            .map(|g| match self.constrained[g] {
                Some(v) => v,
                None => free[self.free_of_global[g].unwrap()],
            })
            .collect()
    }
}

/// Assembled linear system on the free dofs. Triplets may contain duplicates;
/// consumers sum them.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub dof_map: DofMap,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.dof_map.n_free()
    }

    /// y = A x summed directly from the triplets.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        for &(i, j, v) in &self.triplets {
            y[i] += v * x[j];
        }
        y
    }

    /// xᵀ A x from the triplets.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.triplets.iter().map(|&(i, j, v)| v * x[i] * x[j]).sum()
    }

    /// max |A_ij − A_ji| over the summed entries.
    pub fn asymmetry(&self) -> f64 {
        use std::collections::HashMap;
        let mut summed: HashMap<(usize, usize), f64> = HashMap::new();
        for &(i, j, v) in &self.triplets {
            *summed.entry((i, j)).or_insert(0.0) += v;
        }
        let mut worst: f64 = 0.0;
        for (&(i, j), &v) in &summed {
            let vt = summed.get(&(j, i)).copied().unwrap_or(0.0);
            worst = worst.max((v - vt).abs());
        }
        worst
    }
}

/// Computes the strongly constrained dofs: every control-net layer supported
/// on a Dirichlet or initial facet, with values from Greville interpolation
/// of the boundary data on that face.
pub fn apply_constraints(
    domain: &MultiPatchDomain,
    problem: &ManufacturedProblem,
) -> Result<DofMap> {
    let mut total = 0;
    let mut offsets = Vec::new();
    for patch in domain.patches() {
        offsets.push(total);
        total += patch.space.dim();
    }
    let mut constrained = vec![None; total];

    for facet in domain.facets() {
        if !matches!(facet.kind, FacetKind::Dirichlet | FacetKind::Initial) {
            continue;
        }
        let patch = domain.patch(facet.owner);
        let face = facet.owner_face;
        let dims = patch.space.dims();
        let tangential = face.tangential(patch.space.num_dims());
        let kvs = patch.space.directions();

        // Greville grids and collocation solvers per tangential direction.
        let mut grev = Vec::new();
        let mut solvers = Vec::new();
        for &dir in &tangential {
            let kv = &kvs[dir];
            let g = kv.greville();
            let n = kv.num_basis();
            let mut a = vec![0.0; n * n];
            for (r, &x) in g.iter().enumerate() {
                let t = kv.eval_basis_derivs(x, 0)?;
                for (j, v) in t.ders[0].iter().enumerate() {
                    a[r * n + t.first + j] = *v;
                }
            }
            let lu = DenseLu::factor(a, n).map_err(|_| {
                Error::Constraint(format!(
                    "singular Greville collocation on patch {} direction {dir}",
                    facet.owner
                ))
            })?;
            grev.push(g);
            solvers.push(lu);
        }

        // Boundary data sampled at the face Greville grid.
        let face_sizes: Vec<usize> = tangential.iter().map(|&dd| dims[dd]).collect();
        let grid: usize = face_sizes.iter().product();
        let mut data = vec![0.0; grid];
        for (g, value) in data.iter_mut().enumerate() {
            let mut rem = g;
            let mut coords = Vec::with_capacity(face_sizes.len());
            for (k, &n) in face_sizes.iter().enumerate() {
                coords.push(grev[k][rem % n]);
                rem /= n;
            }
            let xi = face.embed(&coords);
            let xt = patch.geometry.map_point(&xi)?;
            *value = problem.boundary_value(facet.kind, &xt);
        }

        // Tensor interpolation: successive 1D collocation solves per axis.
        for (axis, solver) in solvers.iter().enumerate() {
            let n = face_sizes[axis];
            let stride_before: usize = face_sizes[..axis].iter().product();
            let lines = grid / n;
            let mut line = vec![0.0; n];
            for l in 0..lines {
                // Decompose the line index into (inner, outer) around `axis`.
                let inner = l % stride_before.max(1);
                let outer = l / stride_before.max(1);
                let base = outer * stride_before * n + inner;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * stride_before];
                }
                let coeffs = solver.solve(&line);
                for (k, &c) in coeffs.iter().enumerate() {
                    data[base + k * stride_before] = c;
                }
            }
        }

        // Scatter into the fixed boundary layer of the owner patch.
        let fixed_index = if face.side == 0 { 0 } else { dims[face.dir] - 1 };
        for (g, &value) in data.iter().enumerate() {
            let mut rem = g;
            let mut multi = vec![0usize; dims.len()];
            multi[face.dir] = fixed_index;
            for (k, &dir) in tangential.iter().enumerate() {
                multi[dir] = rem % face_sizes[k];
                rem /= face_sizes[k];
            }
            let global = offsets[facet.owner] + patch.space.global_index(&multi);
            constrained[global] = Some(value);
        }
    }

    Ok(DofMap::from_constraints(domain, constrained))
}

struct Contribution {
    dofs: Vec<usize>,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

/// Assembles the full space-time dG system for a manufactured problem.
pub fn assemble_system(
    domain: &MultiPatchDomain,
    problem: &ManufacturedProblem,
    params: &DGParameters,
) -> Result<SparseSystem> {
    assemble_system_with(domain, problem, params, ExecMode::default())
}

/// As [`assemble_system`], with an explicit execution mode for the element
/// loops. Both modes produce bit-identical systems.
pub fn assemble_system_with(
    domain: &MultiPatchDomain,
    problem: &ManufacturedProblem,
    params: &DGParameters,
    mode: ExecMode,
) -> Result<SparseSystem> {
    if problem.spatial_dims != domain.spatial_dims() {
        return Err(Error::Config(format!(
            "problem has {} spatial dimensions but domain has {}",
            problem.spatial_dims,
            domain.spatial_dims()
        )));
    }
    if params.theta <= 0.0 || params.delta1 <= 0.0 || params.delta2 <= 0.0 {
        return Err(Error::Argument(
            "theta and penalty parameters must be positive".into(),
        ));
    }
    let dof_map = apply_constraints(domain, problem)?;
    let mut merger = Merger::new(&dof_map);

    for patch in domain.patches() {
        let mesh = patch.space.mesh();
        let orders = params.orders_for(&patch.space.degrees());
        let offset = dof_map.offsets[patch.id];
        let locals = map_collect(mode, mesh.num_elements(), |e| {
            volume_element(patch, problem, params, &orders, offset, e)
        });
        for c in locals {
            merger.add(c?);
        }
    }

    for facet in domain.facets() {
        match facet.kind {
            FacetKind::Terminal => {
                let patch = domain.patch(facet.owner);
                let orders = params.orders_for(&patch.space.degrees());
                let offset = dof_map.offsets[facet.owner];
                let faces = face_elements(patch, facet);
                let locals = map_collect(mode, faces.len(), |k| {
                    terminal_face(patch, params, &orders, offset, facet, &faces[k])
                });
                for c in locals {
                    merger.add(c?);
                }
            }
            FacetKind::Interior => {
                let own = domain.patch(facet.owner);
                let (nb_id, _) = facet.neighbor.unwrap();
                let nb = domain.patch(nb_id);
                let orders = params.orders_for(&own.space.degrees());
                let faces = face_elements(own, facet);
                let own_offset = dof_map.offsets[own.id];
                let nb_offset = dof_map.offsets[nb.id];
                let locals = map_collect(mode, faces.len(), |k| {
                    interface_face(own, nb, params, &orders, own_offset, nb_offset, facet, &faces[k])
                });
                for c in locals {
                    merger.add(c?);
                }
            }
            _ => {}
        }
    }

    let (triplets, rhs) = merger.finish();
    Ok(SparseSystem {
        dof_map,
        triplets,
        rhs,
    })
}

/// Accumulates local contributions, eliminating constrained dofs on the fly.
struct Merger<'a> {
    dof_map: &'a DofMap,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl<'a> Merger<'a> {
    fn new(dof_map: &'a DofMap) -> Self {
        Self {
            dof_map,
            triplets: Vec::new(),
            rhs: vec![0.0; dof_map.n_free()],
        }
    }

    fn add(&mut self, c: Contribution) {
        let n = c.dofs.len();
        for (i, &gi) in c.dofs.iter().enumerate() {
            let Some(fi) = self.dof_map.free_of_global[gi] else {
                continue;
            };
            self.rhs[fi] += c.rhs[i];
            for (j, &gj) in c.dofs.iter().enumerate() {
                let v = c.matrix[i * n + j];
                if v == 0.0 {
                    continue;
                }
                match self.dof_map.free_of_global[gj] {
                    Some(fj) => self.triplets.push((fi, fj, v)),
                    None => self.rhs[fi] -= v * self.dof_map.constrained[gj].unwrap(),
                }
            }
        }
    }

    fn finish(self) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
        (self.triplets, self.rhs)
    }
}

fn volume_element(
    patch: &Patch,
    problem: &ManufacturedProblem,
    params: &DGParameters,
    orders: &[usize],
    offset: usize,
    e: usize,
) -> Result<Contribution> {
    let mesh = patch.space.mesh();
    let (lo, hi) = mesh.element(e);
    let rule = element_rule(&lo, &hi, orders)?;
    let th = params.theta * patch.h;
    let d = patch.space.num_dims() - 1;

    let mut dofs: Option<Vec<usize>> = None;
    let mut matrix = Vec::new();
    let mut rhs = Vec::new();
    for (xi, &w) in rule.points.iter().zip(&rule.weights) {
        let frame = patch
            .geometry
            .frame(xi, 2)
            .map_err(|e| Error::Geometry(format!("patch {}: {e}", patch.id)))?;
        let phys = physical_derivs_at(&frame, &patch.space, xi, 2)?;
        let n = phys.len();
        if dofs.is_none() {
            dofs = Some(phys.indices.iter().map(|&g| offset + g).collect());
            matrix = vec![0.0; n * n];
            rhs = vec![0.0; n];
        }
        let wq = w * frame.jac.det;
        let f = (problem.source)(&frame.point);
        for i in 0..n {
            let gx_i = phys.grad_x(i);
            let dt_i = phys.dt(i);
            rhs[i] += wq * f * (phys.values[i] + th * dt_i);
            for j in 0..n {
                let mut a = -phys.values[j] * dt_i + th * phys.dt(j) * dt_i;
                let gx_j = phys.grad_x(j);
                let dtgx_j = phys.dt_grad_x(j);
                for k in 0..d {
                    a += (gx_j[k] - th * dtgx_j[k]) * gx_i[k];
                }
                matrix[i * n + j] += wq * a;
            }
        }
    }
    Ok(Contribution {
        dofs: dofs.unwrap(),
        matrix,
        rhs,
    })
}

/// Face elements of a facet on the owner side: boxes in the owner's
/// tangential coordinates, from the trace of the owner's parametric mesh.
fn face_elements(patch: &Patch, facet: &Facet) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mesh = patch.space.mesh();
    let tangential = facet.owner_face.tangential(patch.space.num_dims());
    let breaks: Vec<&Vec<f64>> = tangential.iter().map(|&d| &mesh.breakpoints()[d]).collect();
    let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut e in 0..total {
        let mut lo = Vec::with_capacity(counts.len());
        let mut hi = Vec::with_capacity(counts.len());
        for (k, &c) in counts.iter().enumerate() {
            let i = e % c;
            e /= c;
            lo.push(breaks[k][i]);
            hi.push(breaks[k][i + 1]);
        }
        out.push((lo, hi));
    }
    out
}

fn terminal_face(
    patch: &Patch,
    params: &DGParameters,
    orders: &[usize],
    offset: usize,
    facet: &Facet,
    face_box: &(Vec<f64>, Vec<f64>),
) -> Result<Contribution> {
    let face = facet.owner_face;
    let tangential = face.tangential(patch.space.num_dims());
    let t_orders: Vec<usize> = tangential.iter().map(|&d| orders[d]).collect();
    let rule = element_rule(&face_box.0, &face_box.1, &t_orders)?;
    let th = params.theta * patch.h;
    let d = patch.space.num_dims() - 1;

    let mut dofs: Option<Vec<usize>> = None;
    let mut matrix = Vec::new();
    for (pt, &w) in rule.points.iter().zip(&rule.weights) {
        let xi = face.embed(pt);
        let frame = patch
            .geometry
            .frame(&xi, 1)
            .map_err(|e| Error::Geometry(format!("patch {}: {e}", patch.id)))?;
        let phys = physical_derivs_at(&frame, &patch.space, &xi, 1)?;
        let n = phys.len();
        if dofs.is_none() {
            dofs = Some(phys.indices.iter().map(|&g| offset + g).collect());
            matrix = vec![0.0; n * n];
        }
        let ws = w * frame.jac.surface_factor(face.dir)?;
        for i in 0..n {
            let gx_i = phys.grad_x(i);
            for j in 0..n {
                let mut a = phys.values[j] * phys.values[i];
                let gx_j = phys.grad_x(j);
                for k in 0..d {
                    a += th * gx_j[k] * gx_i[k];
                }
                matrix[i * n + j] += ws * a;
            }
        }
    }
    let dofs = dofs.unwrap();
    let n = dofs.len();
    Ok(Contribution {
        dofs,
        matrix,
        rhs: vec![0.0; n],
    })
}

#[allow(clippy::too_many_arguments)]
fn interface_face(
    own: &Patch,
    nb: &Patch,
    params: &DGParameters,
    orders: &[usize],
    own_offset: usize,
    nb_offset: usize,
    facet: &Facet,
    face_box: &(Vec<f64>, Vec<f64>),
) -> Result<Contribution> {
    let face = facet.owner_face;
    let dims = own.space.num_dims();
    let d = dims - 1;
    let tangential = face.tangential(dims);
    let t_orders: Vec<usize> = tangential.iter().map(|&dd| orders[dd]).collect();
    let rule = element_rule(&face_box.0, &face_box.1, &t_orders)?;
    let th = params.theta * own.h;
    let pen1 = params.delta1 / own.h;
    let pen2 = params.delta2 * th;

    let mut dofs: Option<Vec<usize>> = None;
    let mut matrix = Vec::new();
    for (pt, &w) in rule.points.iter().zip(&rule.weights) {
        let own_xi = face.embed(pt);
        let nb_xi = facet.neighbor_xi(&own_xi);
        let own_frame = own.geometry.frame(&own_xi, 1)?;
        let own_phys = physical_derivs_at(&own_frame, &own.space, &own_xi, 1)?;
        let nb_frame = nb.geometry.frame(&nb_xi, 1)?;
        let nb_phys = physical_derivs_at(&nb_frame, &nb.space, &nb_xi, 1)?;

        let normal = own_frame.jac.outward_normal(face.dir, face.side)?;
        let n_t = normal[d];
        let n_x = &normal[..d];
        let nx2: f64 = n_x.iter().map(|v| v * v).sum();
        let upwind_own = n_t >= 0.0;
        let ws = w * own_frame.jac.surface_factor(face.dir)?;

        let n_own = own_phys.len();
        let n = n_own + nb_phys.len();
        match &dofs {
            None => {
                let mut all: Vec<usize> = own_phys.indices.iter().map(|&g| own_offset + g).collect();
                all.extend(nb_phys.indices.iter().map(|&g| nb_offset + g));
                dofs = Some(all);
                matrix = vec![0.0; n * n];
            }
            Some(all) => {
                // One owner face element must map into one neighbor element.
                let consistent = all.len() == n
                    && own_phys.indices.iter().enumerate().all(|(k, &g)| all[k] == own_offset + g)
                    && nb_phys.indices.iter().enumerate().all(|(k, &g)| all[n_own + k] == nb_offset + g);
                if !consistent {
                    return Err(Error::Unsupported(
                        "non-matching interface meshes: neighbor elements change within an owner face element".into(),
                    ));
                }
            }
        }

        // Loop over (trial side r, test side s); the sign is the factor the
        // owner normal picks up in that side's jump terms.
        let sides = [(&own_phys, 1.0, true, 0usize), (&nb_phys, -1.0, false, n_own)];
        for &(r_phys, sgn_r, r_is_own, r_base) in &sides {
            let r_up = r_is_own == upwind_own;
            for &(s_phys, sgn_s, _, s_base) in &sides {
                for j in 0..r_phys.len() {
                    let val_j = r_phys.values[j];
                    let gx_j = r_phys.grad_x(j);
                    let dt_j = r_phys.dt(j);
                    for i in 0..s_phys.len() {
                        let val_i = s_phys.values[i];
                        let gx_i = s_phys.grad_x(i);
                        let dt_i = s_phys.dt(i);

                        let mut gjgi = 0.0;
                        let mut gj_nx = 0.0;
                        let mut gi_nx = 0.0;
                        for k in 0..d {
                            gjgi += gx_j[k] * gx_i[k];
                            gj_nx += gx_j[k] * n_x[k];
                            gi_nx += gx_i[k] * n_x[k];
                        }
                        // {u}^up [[v]]_t + θh {∇x u}^up · [[∇x v]]_t
                        let mut a = 0.0;
                        if r_up {
                            a += val_j * n_t * sgn_s * val_i + th * gjgi * n_t * sgn_s;
                        }
                        // −{∇x u}·[[v]]_x + {∇x v}·[[u]]_x
                        a += -0.5 * gj_nx * sgn_s * val_i + 0.5 * gi_nx * sgn_r * val_j;
                        // θh(−{∇x u}·[[∂t v]]_x + {∇x v}·[[∂t u]]_x)
                        a += th * (-0.5 * gj_nx * sgn_s * dt_i + 0.5 * gi_nx * sgn_r * dt_j);
                        // penalties on the spatial jumps
                        a += (pen1 * val_j * val_i + pen2 * dt_j * dt_i) * sgn_r * sgn_s * nx2;

                        matrix[(s_base + i) * n + (r_base + j)] += ws * a;
                    }
                }
            }
        }
    }
    let dofs = dofs.unwrap();
    let n = dofs.len();
    Ok(Contribution {
        dofs,
        matrix,
        rhs: vec![0.0; n],
    })
}
