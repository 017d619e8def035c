//! Geometry mappings from control nets, physical derivatives of basis
//! functions, and multi-patch topology with classified facets.
//!
//! Coordinates are space-time: the last parametric and physical axis is time.
//! Patches are images Φ_i of the unit parameter box under a B-spline map; the
//! multi-patch domain classifies every parametric face as an interior facet
//! (with an affine face correspondence to the neighbor), a lateral Dirichlet
//! facet, or an initial/terminal facet at the time extremes.

use crate::bspline::TensorBasis;
use crate::linalg;
use crate::quadrature::gauss_rule;
use crate::{Error, Result};
use serde::Deserialize;

/// B-spline geometry map Φ(ξ) = Σ C_i B_i(ξ) from the unit box into R^{d+1}.
#[derive(Debug, Clone)]
pub struct GeometryMap {
    basis: TensorBasis,
    /// Control point coordinates, flat: point i occupies [i*dim, (i+1)*dim).
    control_points: Vec<f64>,
    dim: usize,
}

/// Jacobian of a geometry map at one parametric point, with determinant and
/// inverse. Row-major: `matrix[k*dim + a]` = ∂Φ_k/∂ξ_a.
#[derive(Debug, Clone)]
pub struct Jacobian {
    pub matrix: Vec<f64>,
    pub inverse: Vec<f64>,
    pub det: f64,
    pub dim: usize,
}

impl Jacobian {
    /// J^{-T} e_dir: the (unnormalized) face normal direction.
    pub fn cofactor_dir(&self, dir: usize) -> Vec<f64> {
        (0..self.dim).map(|k| self.inverse[dir * self.dim + k]).collect()
    }

    /// Physical surface measure factor |det J| · |J^{-T} e_dir|.
    pub fn surface_factor(&self, dir: usize) -> Result<f64> {
        let n = self.cofactor_dir(dir);
        let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Geometry("degenerate tangent plane".into()));
        }
        Ok(self.det.abs() * norm)
    }

    /// Outward unit normal on the face ξ_dir = side.
    pub fn outward_normal(&self, dir: usize, side: usize) -> Result<Vec<f64>> {
        let sign = if side == 0 { -1.0 } else { 1.0 };
        let mut n = self.cofactor_dir(dir);
        let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Geometry("degenerate tangent plane".into()));
        }
        for v in &mut n {
            *v *= sign / norm;
        }
        Ok(n)
    }
}

/// Geometry evaluation at one point: physical point, Jacobian, and optional
/// parametric second derivatives of the map components.
#[derive(Debug, Clone)]
pub struct GeoFrame {
    pub point: Vec<f64>,
    pub jac: Jacobian,
    /// `hessian[k*dim*dim + a*dim + b]` = ∂²Φ_k/∂ξ_a∂ξ_b, if requested.
    pub hessian: Option<Vec<f64>>,
}

impl GeometryMap {
    /// Builds a geometry map and verifies a positive Jacobian determinant at
    /// the Gauss points of every element of the underlying basis mesh.
    pub fn new(basis: TensorBasis, control_points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = basis.num_dims();
        if control_points.len() != basis.dim() {
            return Err(Error::Geometry(format!(
                "control net size {} does not match basis dimension {}",
                control_points.len(),
                basis.dim()
            )));
        }
        let mut flat = Vec::with_capacity(control_points.len() * dim);
        for (i, p) in control_points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Geometry(format!(
                    "control point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            flat.extend_from_slice(p);
        }
        let map = Self {
            basis,
            control_points: flat,
            dim,
        };
        map.check_orientation()?;
        Ok(map)
    }

    fn check_orientation(&self) -> Result<()> {
        let orders: Vec<usize> = self.basis.degrees().iter().map(|&p| p + 2).collect();
        let mesh = self.basis.mesh();
        let rules: Vec<_> = orders.iter().map(|&n| gauss_rule(n)).collect::<Result<Vec<_>>>()?;
        for e in 0..mesh.num_elements() {
            let (lo, hi) = mesh.element(e);
            let total: usize = orders.iter().product();
            for mut q in 0..total {
                let mut xi = Vec::with_capacity(self.dim);
                for d in 0..self.dim {
                    let i = q % orders[d];
                    q /= orders[d];
                    xi.push(lo[d] + (hi[d] - lo[d]) * rules[d].nodes[i]);
                }
                self.jacobian(&xi)?;
            }
        }
        Ok(())
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    /// Space-time dimension d+1.
    pub fn num_dims(&self) -> usize {
        self.dim
    }

    pub fn control_point(&self, i: usize) -> &[f64] {
        &self.control_points[i * self.dim..(i + 1) * self.dim]
    }

    /// Φ(ξ): the control-point expansion.
    pub fn map_point(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let table = self.basis.eval(xi, 0)?;
        let mut out = vec![0.0; self.dim];
        for l in 0..table.len() {
            let g = table.global_index(l);
            let v = table.value(l);
            let cp = self.control_point(g);
            for k in 0..self.dim {
                out[k] += v * cp[k];
            }
        }
        Ok(out)
    }

    /// Jacobian with determinant and inverse; errors on non-positive det.
    pub fn jacobian(&self, xi: &[f64]) -> Result<Jacobian> {
        Ok(self.frame(xi, 0)?.jac)
    }

    /// Physical point, Jacobian and (optionally) parametric second derivatives
    /// from a single basis evaluation. `max_deriv` of 2 fills the Hessian.
    pub fn frame(&self, xi: &[f64], max_deriv: usize) -> Result<GeoFrame> {
        let dim = self.dim;
        let table = self.basis.eval(xi, max_deriv.max(1))?;
        let mut point = vec![0.0; dim];
        let mut m = vec![0.0; dim * dim];
        let mut orders = vec![0usize; dim];
        for l in 0..table.len() {
            let cp = self.control_point(table.global_index(l));
            let v = table.value(l);
            for k in 0..dim {
                point[k] += v * cp[k];
            }
            for a in 0..dim {
                orders.fill(0);
                orders[a] = 1;
                let db = table.partial(l, &orders);
                for k in 0..dim {
                    m[k * dim + a] += db * cp[k];
                }
            }
        }
        let (inverse, det) = linalg::invert(&m, dim)
            .map_err(|_| Error::Geometry(format!("singular Jacobian at xi = {xi:?}")))?;
        if det <= 0.0 {
            return Err(Error::Geometry(format!(
                "non-positive Jacobian determinant {det} at xi = {xi:?}"
            )));
        }
        let hessian = if max_deriv >= 2 {
            let mut hess = vec![0.0; dim * dim * dim];
            for a in 0..dim {
                for b in a..dim {
                    orders.fill(0);
                    orders[a] += 1;
                    orders[b] += 1;
                    for l in 0..table.len() {
                        let d2 = table.partial(l, &orders);
                        if d2 == 0.0 {
                            continue;
                        }
                        let cp = self.control_point(table.global_index(l));
                        for k in 0..dim {
                            hess[k * dim * dim + a * dim + b] += d2 * cp[k];
                            if a != b {
                                hess[k * dim * dim + b * dim + a] += d2 * cp[k];
                            }
                        }
                    }
                }
            }
            Some(hess)
        } else {
            None
        };
        Ok(GeoFrame {
            point,
            jac: Jacobian {
                matrix: m,
                inverse,
                det,
                dim,
            },
            hessian,
        })
    }

    /// Physical surface measure factor |det J| · |J^{-T} e_dir| for a face
    /// with fixed parametric direction `dir`.
    pub fn surface_measure(&self, xi: &[f64], dir: usize) -> Result<f64> {
        self.jacobian(xi)?.surface_factor(dir)
    }

    /// Outward unit normal on the face `ξ_dir = side` at the face point `xi`.
    pub fn face_normal(&self, xi: &[f64], dir: usize, side: usize) -> Result<Vec<f64>> {
        self.jacobian(xi)?.outward_normal(dir, side)
    }
}

/// Physical values and derivatives of all nonzero basis functions at a point:
/// value, full gradient (spatial components then time), and the mixed
/// second derivatives ∂t∇x needed by the stabilized form.
#[derive(Debug, Clone)]
pub struct PhysicalBasis {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    grads: Vec<f64>,
    dt_grad_x: Vec<f64>,
}

impl PhysicalBasis {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Full physical gradient of basis j (length d+1, last entry is ∂t).
    pub fn grad(&self, j: usize) -> &[f64] {
        &self.grads[j * self.dim..(j + 1) * self.dim]
    }

    /// Spatial gradient ∇x of basis j (length d).
    pub fn grad_x(&self, j: usize) -> &[f64] {
        &self.grads[j * self.dim..j * self.dim + self.dim - 1]
    }

    /// Time derivative ∂t of basis j.
    pub fn dt(&self, j: usize) -> f64 {
        self.grads[j * self.dim + self.dim - 1]
    }

    /// Mixed derivatives ∂t∇x of basis j (length d); empty if not requested.
    pub fn dt_grad_x(&self, j: usize) -> &[f64] {
        let d = self.dim - 1;
        &self.dt_grad_x[j * d..(j + 1) * d]
    }
}

/// Physical derivatives of the space's basis functions at `xi`, mapped through
/// the geometry. `max_deriv` = 1 gives values and gradients; 2 adds ∂t∇x via
/// the second-order chain rule
/// ∇²B = J^{-T} (∇̂²B̂ − Σ_k (∇B)_k ∇̂²Φ_k) J^{-1}.
pub fn physical_derivs(
    geometry: &GeometryMap,
    space: &TensorBasis,
    xi: &[f64],
    max_deriv: usize,
) -> Result<PhysicalBasis> {
    let frame = geometry.frame(xi, max_deriv)?;
    physical_derivs_at(&frame, space, xi, max_deriv)
}

/// As [`physical_derivs`], reusing an already-computed geometry frame.
pub fn physical_derivs_at(
    frame: &GeoFrame,
    space: &TensorBasis,
    xi: &[f64],
    max_deriv: usize,
) -> Result<PhysicalBasis> {
    let dim = frame.jac.dim;
    let jac = &frame.jac;
    let table = space.eval(xi, max_deriv)?;
    let n_loc = table.len();
    let d = dim - 1;

    let mut indices = Vec::with_capacity(n_loc);
    let mut values = Vec::with_capacity(n_loc);
    let mut grads = vec![0.0; n_loc * dim];
    let mut dt_grad_x = Vec::new();

    let mut orders = vec![0usize; dim];
    let mut param_grad = vec![0.0; dim];
    for l in 0..n_loc {
        indices.push(table.global_index(l));
        values.push(table.value(l));
        for (a, pg) in param_grad.iter_mut().enumerate() {
            orders.fill(0);
            orders[a] = 1;
            *pg = table.partial(l, &orders);
        }
        // ∂B/∂x_k = Σ_a ∂B̂/∂ξ_a · (J^{-1})_{a,k}
        for k in 0..dim {
            let g: f64 = param_grad
                .iter()
                .enumerate()
                .map(|(a, pg)| pg * jac.inverse[a * dim + k])
                .sum();
            grads[l * dim + k] = g;
        }
    }

    if max_deriv >= 2 {
        dt_grad_x = vec![0.0; n_loc * d];
        let geo_hess = frame
            .hessian
            .as_ref()
            .expect("frame built without second derivatives");
        let mut corrected = vec![0.0; dim * dim];
        for l in 0..n_loc {
            // Corrected parametric Hessian: ∇̂²B̂ − Σ_k (∇B)_k ∇̂²Φ_k.
            for a in 0..dim {
                for b in a..dim {
                    orders.fill(0);
                    orders[a] += 1;
                    orders[b] += 1;
                    let mut v = table.partial(l, &orders);
                    for k in 0..dim {
                        v -= grads[l * dim + k] * geo_hess[k * dim * dim + a * dim + b];
                    }
                    corrected[a * dim + b] = v;
                    corrected[b * dim + a] = v;
                }
            }
            // Only the ∂t∇x rows of J^{-T} C J^{-1} are needed:
            // H_{k,t} = Σ_{a,b} (J^{-1})_{a,k} C_{a,b} (J^{-1})_{b,t}.
            let t = dim - 1;
            for k in 0..d {
                let mut h = 0.0;
                for a in 0..dim {
                    let mut inner = 0.0;
                    for b in 0..dim {
                        inner += corrected[a * dim + b] * jac.inverse[b * dim + t];
                    }
                    h += jac.inverse[a * dim + k] * inner;
                }
                dt_grad_x[l * d + k] = h;
            }
        }
    }

    Ok(PhysicalBasis {
        dim,
        indices,
        values,
        grads,
        dt_grad_x,
    })
}

/// One parametric face of a patch: fixed direction and side (0 or 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceId {
    pub dir: usize,
    pub side: usize,
}

impl FaceId {
    pub fn all(dims: usize) -> impl Iterator<Item = FaceId> {
        (0..dims).flat_map(|dir| [FaceId { dir, side: 0 }, FaceId { dir, side: 1 }])
    }

    /// Tangential directions, in increasing order.
    pub fn tangential(&self, dims: usize) -> Vec<usize> {
        (0..dims).filter(|&d| d != self.dir).collect()
    }

    /// Embeds face coordinates into full parametric coordinates.
    pub fn embed(&self, face_coords: &[f64]) -> Vec<f64> {
        let dims = face_coords.len() + 1;
        let mut xi = Vec::with_capacity(dims);
        let mut it = face_coords.iter();
        for d in 0..dims {
            if d == self.dir {
                xi.push(self.side as f64);
            } else {
                xi.push(*it.next().unwrap());
            }
        }
        xi
    }

    /// Extracts the tangential coordinates from full parametric coordinates.
    pub fn extract(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter()
            .enumerate()
            .filter(|(d, _)| *d != self.dir)
            .map(|(_, &v)| v)
            .collect()
    }
}

/// Facet classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetKind {
    Interior,
    Dirichlet,
    Initial,
    Terminal,
}

/// Affine correspondence between two matched parametric faces:
/// `v[k] = flip[k] ? 1 − u[perm[k]] : u[perm[k]]`.
#[derive(Debug, Clone)]
pub struct AffineFaceMap {
    pub perm: Vec<usize>,
    pub flip: Vec<bool>,
}

impl AffineFaceMap {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.perm
            .iter()
            .zip(&self.flip)
            .map(|(&p, &f)| if f { 1.0 - u[p] } else { u[p] })
            .collect()
    }
}

/// A classified facet: an interior interface between two patches or a piece
/// of the domain boundary.
#[derive(Debug, Clone)]
pub struct Facet {
    pub kind: FacetKind,
    pub owner: usize,
    pub owner_face: FaceId,
    pub neighbor: Option<(usize, FaceId)>,
    pub correspondence: Option<AffineFaceMap>,
}

impl Facet {
    /// Maps full owner parametric coordinates on this facet to the neighbor's
    /// full parametric coordinates (interior facets only).
    pub fn neighbor_xi(&self, owner_xi: &[f64]) -> Vec<f64> {
        let (_, nb_face) = self.neighbor.expect("boundary facet has no neighbor");
        let corr = self.correspondence.as_ref().expect("missing correspondence");
        nb_face.embed(&corr.apply(&self.owner_face.extract(owner_xi)))
    }
}

/// One patch: geometry map, discretization space on the same parameter
/// domain, and mesh-size data for the stabilization coefficients.
#[derive(Debug, Clone)]
pub struct Patch {
    pub id: usize,
    pub geometry: GeometryMap,
    pub space: TensorBasis,
    /// Physical mesh size h_i = max element diagonal.
    pub h: f64,
    /// Quasi-uniformity ratio max_K h_i / h_K.
    pub quasi_uniformity: f64,
}

impl Patch {
    pub fn new(id: usize, geometry: GeometryMap, space: TensorBasis) -> Result<Self> {
        if space.num_dims() != geometry.num_dims() {
            return Err(Error::Geometry(
                "discretization space and geometry dimensions differ".into(),
            ));
        }
        let (h, quasi_uniformity) = mesh_size(&geometry, &space)?;
        Ok(Self {
            id,
            geometry,
            space,
            h,
            quasi_uniformity,
        })
    }
}

/// h_i and quasi-uniformity ratio from element corner diagonals.
fn mesh_size(geometry: &GeometryMap, space: &TensorBasis) -> Result<(f64, f64)> {
    let mesh = space.mesh();
    let dim = space.num_dims();
    let mut h_max: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    for e in 0..mesh.num_elements() {
        let (lo, hi) = mesh.element(e);
        let mut h_k: f64 = 0.0;
        // Diagonal pairs: corner c against its fully flipped opposite.
        for c in 0..(1usize << dim) / 2 {
            let corner: Vec<f64> = (0..dim)
                .map(|d| if c >> d & 1 == 1 { hi[d] } else { lo[d] })
                .collect();
            let opposite: Vec<f64> = (0..dim)
                .map(|d| if c >> d & 1 == 1 { lo[d] } else { hi[d] })
                .collect();
            let a = geometry.map_point(&corner)?;
            let b = geometry.map_point(&opposite)?;
            let dist = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            h_k = h_k.max(dist);
        }
        h_max = h_max.max(h_k);
        h_min = h_min.min(h_k);
    }
    Ok((h_max, h_max / h_min))
}

/// Non-overlapping collection of patches with classified facets.
#[derive(Debug, Clone)]
pub struct MultiPatchDomain {
    patches: Vec<Patch>,
    facets: Vec<Facet>,
    time_range: (f64, f64),
    matching_tol: f64,
}

/// Default face matching tolerance.
pub const DEFAULT_MATCHING_TOL: f64 = 1e-9;

struct FaceSamples {
    patch: usize,
    face: FaceId,
    /// Physical corner points, indexed by tangential corner bits.
    corners: Vec<Vec<f64>>,
    /// Physical interior sample points.
    interior: Vec<Vec<f64>>,
    /// Tangential coordinates of the interior samples.
    interior_coords: Vec<Vec<f64>>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Classifies every parametric face of every patch.
///
/// Faces that coincide as point sets become interior facets with an affine
/// correspondence (owner = smaller patch id). Remaining faces at the time
/// extremes become initial/terminal facets; everything else is Dirichlet.
pub fn build_multipatch(patches: Vec<Patch>, matching_tol: f64) -> Result<MultiPatchDomain> {
    if patches.is_empty() {
        return Err(Error::Topology("empty patch list".into()));
    }
    let dims = patches[0].geometry.num_dims();
    if patches.iter().any(|p| p.geometry.num_dims() != dims) {
        return Err(Error::Unsupported("patches of mixed dimension".into()));
    }
    let d = dims - 1;

    // Sample every face: 2^d corners and a 3^d interior grid.
    let mut faces = Vec::new();
    for patch in &patches {
        for face in FaceId::all(dims) {
            let mut corners = Vec::new();
            for c in 0..(1usize << d) {
                let coords: Vec<f64> = (0..d).map(|k| (c >> k & 1) as f64).collect();
                corners.push(patch.geometry.map_point(&face.embed(&coords))?);
            }
            let mut interior = Vec::new();
            let mut interior_coords = Vec::new();
            let offsets = [0.25, 0.5, 0.75];
            for mut q in 0..3usize.pow(d as u32) {
                let mut coords = Vec::with_capacity(d);
                for _ in 0..d {
                    coords.push(offsets[q % 3]);
                    q /= 3;
                }
                interior.push(patch.geometry.map_point(&face.embed(&coords))?);
                interior_coords.push(coords);
            }
            faces.push(FaceSamples {
                patch: patch.id,
                face,
                corners,
                interior,
                interior_coords,
            });
        }
    }

    let t_axis = dims - 1;
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    for f in &faces {
        for p in f.corners.iter().chain(&f.interior) {
            t_min = t_min.min(p[t_axis]);
            t_max = t_max.max(p[t_axis]);
        }
    }

    let mut matched = vec![false; faces.len()];
    let mut facets = Vec::new();
    for i in 0..faces.len() {
        if matched[i] {
            continue;
        }
        for j in (i + 1)..faces.len() {
            if matched[j] || faces[i].patch == faces[j].patch {
                continue;
            }
            if let Some(corr) = try_match(&patches, &faces[i], &faces[j], matching_tol)? {
                if matched[i] {
                    return Err(Error::Topology(format!(
                        "patch {} face {:?} matches more than one neighbor",
                        faces[i].patch, faces[i].face
                    )));
                }
                matched[i] = true;
                matched[j] = true;
                facets.push(Facet {
                    kind: FacetKind::Interior,
                    owner: faces[i].patch,
                    owner_face: faces[i].face,
                    neighbor: Some((faces[j].patch, faces[j].face)),
                    correspondence: Some(corr),
                });
            }
        }
    }

    // Boundary classification plus a partial-overlap guard: interior samples
    // of two unmatched faces of different patches must not coincide.
    for i in 0..faces.len() {
        if matched[i] {
            continue;
        }
        for j in (i + 1)..faces.len() {
            if matched[j] || faces[i].patch == faces[j].patch {
                continue;
            }
            let collisions = faces[i]
                .interior
                .iter()
                .filter(|p| faces[j].interior.iter().any(|q| dist(p, q) <= matching_tol))
                .count();
            if collisions > 0 {
                return Err(Error::Unsupported(format!(
                    "patch {} face {:?} and patch {} face {:?} overlap partially",
                    faces[i].patch, faces[i].face, faces[j].patch, faces[j].face
                )));
            }
        }
    }

    for (i, f) in faces.iter().enumerate() {
        if matched[i] {
            continue;
        }
        let patch = &patches[f.patch];
        let all_at = |t0: f64| {
            f.corners
                .iter()
                .chain(&f.interior)
                .all(|p| (p[t_axis] - t0).abs() <= matching_tol)
        };
        let center = f.face.embed(&vec![0.5; d]);
        let normal = patch.geometry.face_normal(&center, f.face.dir, f.face.side)?;
        let kind = if all_at(t_min) {
            if (normal[t_axis] + 1.0).abs() > 1e-6 {
                return Err(Error::Topology(format!(
                    "patch {} face {:?} lies at t_min but its normal is not -e_t",
                    f.patch, f.face
                )));
            }
            FacetKind::Initial
        } else if all_at(t_max) && (normal[t_axis] - 1.0).abs() <= 1e-6 {
            FacetKind::Terminal
        } else {
            FacetKind::Dirichlet
        };
        facets.push(Facet {
            kind,
            owner: f.patch,
            owner_face: f.face,
            neighbor: None,
            correspondence: None,
        });
    }

    // Deterministic facet order: interior facets first by construction order
    // is fine, but sort for stable downstream iteration.
    facets.sort_by_key(|f| (f.owner, f.owner_face.dir, f.owner_face.side));

    let domain = MultiPatchDomain {
        patches,
        facets,
        time_range: (t_min, t_max),
        matching_tol,
    };
    domain.validate_interfaces()?;
    Ok(domain)
}

/// Tries to match two faces as coinciding point sets; returns the affine
/// correspondence from face `a` coordinates to face `b` coordinates.
fn try_match(
    patches: &[Patch],
    a: &FaceSamples,
    b: &FaceSamples,
    tol: f64,
) -> Result<Option<AffineFaceMap>> {
    let d = a.interior_coords[0].len();
    // Corner correspondence: every corner of a must hit exactly one corner of b.
    let mut corner_map = Vec::with_capacity(a.corners.len());
    for ca in &a.corners {
        let mut found = None;
        for (jb, cb) in b.corners.iter().enumerate() {
            if dist(ca, cb) <= tol {
                found = Some(jb);
                break;
            }
        }
        match found {
            Some(jb) => corner_map.push(jb),
            None => return Ok(None),
        }
    }
    {
        let mut seen = vec![false; corner_map.len()];
        for &m in &corner_map {
            if seen[m] {
                return Ok(None);
            }
            seen[m] = true;
        }
    }
    // Derive per-axis permutation and flips from the corner bijection.
    // Corner bits: bit k of the index is the k-th tangential coordinate.
    let mut perm = vec![usize::MAX; d];
    let mut flip = vec![false; d];
    let base = corner_map[0];
    for k in 0..d {
        let toggled = corner_map[1 << k];
        let diff = base ^ toggled;
        if diff.count_ones() != 1 {
            return Ok(None);
        }
        let axis = diff.trailing_zeros() as usize;
        perm[axis] = k;
        flip[axis] = base >> axis & 1 == 1;
    }
    if perm.contains(&usize::MAX) {
        return Ok(None);
    }
    let corr = AffineFaceMap { perm, flip };
    // Validate: interior samples of a must land on the same physical points
    // through b's geometry.
    let nb_geometry = &patches[b.patch].geometry;
    for (coords, pa) in a.interior_coords.iter().zip(&a.interior) {
        let pb = nb_geometry.map_point(&b.face.embed(&corr.apply(coords)))?;
        if dist(pa, &pb) > tol {
            return Ok(None);
        }
    }
    Ok(Some(corr))
}

impl MultiPatchDomain {
    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn patch(&self, id: usize) -> &Patch {
        &self.patches[id]
    }

    /// Mutable patch access, e.g. to pin the stabilization mesh size h.
    pub fn patch_mut(&mut self, id: usize) -> &mut Patch {
        &mut self.patches[id]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn num_dims(&self) -> usize {
        self.patches[0].geometry.num_dims()
    }

    /// Spatial dimension d.
    pub fn spatial_dims(&self) -> usize {
        self.num_dims() - 1
    }

    pub fn time_range(&self) -> (f64, f64) {
        self.time_range
    }

    pub fn matching_tol(&self) -> f64 {
        self.matching_tol
    }

    /// Facet counts as (interior, dirichlet, initial, terminal).
    pub fn facet_counts(&self) -> (usize, usize, usize, usize) {
        let mut c = (0, 0, 0, 0);
        for f in &self.facets {
            match f.kind {
                FacetKind::Interior => c.0 += 1,
                FacetKind::Dirichlet => c.1 += 1,
                FacetKind::Initial => c.2 += 1,
                FacetKind::Terminal => c.3 += 1,
            }
        }
        c
    }

    /// Outward unit normal of the owner patch at a point on the facet.
    pub fn facet_normal(&self, facet: &Facet, owner_xi: &[f64]) -> Result<Vec<f64>> {
        self.patch(facet.owner)
            .geometry
            .face_normal(owner_xi, facet.owner_face.dir, facet.owner_face.side)
    }

    /// Rebuilds every patch with a fresh equal-degree discretization space,
    /// refined `level` times, and re-derives the facet topology.
    pub fn with_discretization(&self, degree: usize, level: usize) -> Result<MultiPatchDomain> {
        let dims = self.num_dims();
        let space = TensorBasis::single_span(degree, dims).refine_uniform(level);
        let patches = self
            .patches
            .iter()
            .map(|p| Patch::new(p.id, p.geometry.clone(), space.clone()))
            .collect::<Result<Vec<_>>>()?;
        build_multipatch(patches, self.matching_tol)
    }

    fn validate_interfaces(&self) -> Result<()> {
        let d = self.spatial_dims();
        let tol = self.matching_tol.max(1e-10);
        for facet in &self.facets {
            if facet.kind != FacetKind::Interior {
                continue;
            }
            let (nb, nb_face) = facet.neighbor.unwrap();
            for q in 0..5usize.pow(d as u32) {
                let mut qq = q;
                let mut coords = Vec::with_capacity(d);
                for _ in 0..d {
                    coords.push(0.1 + 0.2 * (qq % 5) as f64);
                    qq /= 5;
                }
                let own_xi = facet.owner_face.embed(&coords);
                let nb_xi = facet.neighbor_xi(&own_xi);
                let pa = self.patch(facet.owner).geometry.map_point(&own_xi)?;
                let pb = self.patch(nb).geometry.map_point(&nb_xi)?;
                if dist(&pa, &pb) > 10.0 * tol {
                    return Err(Error::Topology(format!(
                        "interface between patches {} and {} mismatches by {}",
                        facet.owner,
                        nb,
                        dist(&pa, &pb)
                    )));
                }
                let na = self.facet_normal(facet, &own_xi)?;
                let nb_n = self
                    .patch(nb)
                    .geometry
                    .face_normal(&nb_xi, nb_face.dir, nb_face.side)?;
                let anti = na.iter().zip(&nb_n).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
                if anti > 1e-8 {
                    return Err(Error::Topology(format!(
                        "interface normals between patches {} and {} are not antipodal ({anti})",
                        facet.owner, nb
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct GeometryFile {
    patches: Vec<PatchSpec>,
}

#[derive(Deserialize)]
struct PatchSpec {
    degrees: Vec<usize>,
    knots: Vec<Vec<f64>>,
    control_points: Vec<Vec<f64>>,
}

/// Parses geometry maps from the JSON schema
/// `{ "patches": [ { "degrees", "knots", "control_points" } ] }` with control
/// points in lexicographic order, first parametric index fastest.
pub fn geometry_from_json(text: &str) -> Result<Vec<GeometryMap>> {
    let file: GeometryFile = serde_json::from_str(text)?;
    if file.patches.is_empty() {
        return Err(Error::Config("geometry file contains no patches".into()));
    }
    file.patches
        .into_iter()
        .enumerate()
        .map(|(i, spec)| {
            if spec.degrees.len() != spec.knots.len() {
                return Err(Error::Config(format!(
                    "patch {i}: {} degrees but {} knot vectors",
                    spec.degrees.len(),
                    spec.knots.len()
                )));
            }
            let kvs = spec
                .degrees
                .iter()
                .zip(spec.knots)
                .map(|(&p, knots)| crate::bspline::KnotVector::new(knots, p))
                .collect::<Result<Vec<_>>>()?;
            GeometryMap::new(TensorBasis::new(kvs)?, spec.control_points)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    fn identity_map(dims: usize) -> GeometryMap {
        let basis = TensorBasis::single_span(1, dims);
        let n = basis.dim();
        let points: Vec<Vec<f64>> = (0..n)
            .map(|g| basis.multi_index(g).iter().map(|&i| i as f64).collect())
            .collect();
        GeometryMap::new(basis, points).unwrap()
    }

    fn affine_box() -> GeometryMap {
        // Corners (0,0),(2,0),(0,3),(2,3).
        let basis = TensorBasis::single_span(1, 2);
        GeometryMap::new(
            basis,
            vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 3.0], vec![2.0, 3.0]],
        )
        .unwrap()
    }

    #[test]
    fn identity_map_is_identity() {
        let g = identity_map(2);
        let xi = vec![0.3, 0.7];
        let x = g.map_point(&xi).unwrap();
        assert!(dist(&x, &xi) < 1e-15);
        let jac = g.jacobian(&xi).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((jac.matrix[r * 2 + c] - want).abs() < 1e-15);
            }
        }
        assert!((jac.det - 1.0).abs() < 1e-15);
    }

    #[test]
    fn affine_jacobian_is_diagonal() {
        let g = affine_box();
        let jac = g.jacobian(&[0.4, 0.9]).unwrap();
        assert!((jac.matrix[0] - 2.0).abs() < 1e-14);
        assert!((jac.matrix[3] - 3.0).abs() < 1e-14);
        assert!(jac.matrix[1].abs() < 1e-14 && jac.matrix[2].abs() < 1e-14);
        assert!((jac.det - 6.0).abs() < 1e-13);
    }

    #[test]
    fn moving_2d_lower_patch_map_and_jacobian() {
        let (domain, _) = cases::case_moving_2d().unwrap();
        let g = &domain.patch(0).geometry;
        let x = g.map_point(&[0.5, 0.5]).unwrap();
        assert!((x[0] - 0.375).abs() < 1e-14);
        assert!((x[1] - 0.5).abs() < 1e-14);
        let origin = g.map_point(&[0.0, 0.0]).unwrap();
        assert!(dist(&origin, &[0.0, 0.0]) < 1e-15);
        let jac = g.jacobian(&[0.5, 0.5]).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((jac.matrix[r * 2 + c] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn physical_derivs_identity_and_affine() {
        let g = identity_map(2);
        let space = TensorBasis::single_span(2, 2);
        let xi = [0.3, 0.6];
        let phys = physical_derivs(&g, &space, &xi, 2).unwrap();
        let table = space.eval(&xi, 2).unwrap();
        for l in 0..table.len() {
            assert!((phys.values[l] - table.value(l)).abs() < 1e-14);
            assert!((phys.grad(l)[0] - table.partial(l, &[1, 0])).abs() < 1e-13);
            assert!((phys.dt(l) - table.partial(l, &[0, 1])).abs() < 1e-13);
            assert!((phys.dt_grad_x(l)[0] - table.partial(l, &[1, 1])).abs() < 1e-12);
        }

        let g = affine_box();
        let phys = physical_derivs(&g, &space, &xi, 2).unwrap();
        for l in 0..table.len() {
            assert!((phys.grad(l)[0] - table.partial(l, &[1, 0]) / 2.0).abs() < 1e-13);
            assert!((phys.dt(l) - table.partial(l, &[0, 1]) / 3.0).abs() < 1e-13);
            assert!((phys.dt_grad_x(l)[0] - table.partial(l, &[1, 1]) / 6.0).abs() < 1e-12);
        }
    }

    /// Newton inversion of the geometry map, verified against map_point, so
    /// the finite-difference oracle below depends only on map_point.
    fn invert_map(g: &GeometryMap, x: &[f64], guess: &[f64]) -> Vec<f64> {
        let mut xi = guess.to_vec();
        for _ in 0..50 {
            let fx = g.map_point(&xi).unwrap();
            let jac = g.jacobian(&xi).unwrap();
            let dim = xi.len();
            let r: Vec<f64> = x.iter().zip(&fx).map(|(a, b)| a - b).collect();
            let mut step = 0.0;
            for (a, xia) in xi.iter_mut().enumerate() {
                let dxi: f64 = r.iter().enumerate().map(|(k, rk)| jac.inverse[a * dim + k] * rk).sum();
                *xia += dxi;
                step += dxi * dxi;
            }
            if step.sqrt() < 1e-14 {
                break;
            }
        }
        let check = g.map_point(&xi).unwrap();
        assert!(dist(&check, x) < 1e-11, "map inversion failed");
        xi
    }

    #[test]
    fn physical_derivs_match_finite_differences_on_curved_patch() {
        let (domain, _) = cases::case_moving_2d().unwrap();
        let g = &domain.patch(0).geometry;
        let space = TensorBasis::single_span(2, 2).refine_uniform(1);
        let xi0 = [0.37, 0.61];
        let phys = physical_derivs(g, &space, &xi0, 2).unwrap();
        let x0 = g.map_point(&xi0).unwrap();

        // B_l as a function of the physical point.
        let eval_phys = |l: usize, x: &[f64]| {
            let xi = invert_map(g, x, &xi0);
            let t = space.eval(&xi, 0).unwrap();
            // Same local window: the perturbed point stays in the same element.
            assert_eq!(t.global_index(l), phys.indices[l]);
            t.value(l)
        };

        let delta = 1e-5;
        for l in 0..phys.len() {
            for k in 0..2 {
                let mut xp = x0.clone();
                let mut xm = x0.clone();
                xp[k] += delta;
                xm[k] -= delta;
                let fd = (eval_phys(l, &xp) - eval_phys(l, &xm)) / (2.0 * delta);
                let exact = phys.grad(l)[k];
                let scale = exact.abs().max(1.0);
                assert!(
                    ((fd - exact) / scale).abs() <= 1e-5,
                    "l={l} k={k}: fd={fd} exact={exact}"
                );
            }
            // Mixed derivative: finite difference of the spatial gradient in time.
            let big = 1e-4;
            let grad_x_at = |t_shift: f64| {
                let mut x = x0.clone();
                x[1] += t_shift;
                let xi = invert_map(g, &x, &xi0);
                let p = physical_derivs(g, &space, &xi, 1).unwrap();
                p.grad(l)[0]
            };
            let fd = (grad_x_at(big) - grad_x_at(-big)) / (2.0 * big);
            let exact = phys.dt_grad_x(l)[0];
            let scale = exact.abs().max(1.0);
            assert!(
                ((fd - exact) / scale).abs() <= 1e-5,
                "l={l} mixed: fd={fd} exact={exact}"
            );
        }
    }

    #[test]
    fn differentiated_partition_of_unity() {
        let (domain, _) = cases::case_moving_2d().unwrap();
        let patch = domain.patch(0);
        let space = TensorBasis::single_span(2, 2).refine_uniform(1);
        for &xi in &[[0.21, 0.43], [0.5, 0.5], [0.93, 0.08]] {
            let phys = physical_derivs(&patch.geometry, &space, &xi, 2).unwrap();
            let mut grad_sum = [0.0, 0.0];
            let mut mixed_sum = 0.0;
            for l in 0..phys.len() {
                grad_sum[0] += phys.grad(l)[0];
                grad_sum[1] += phys.grad(l)[1];
                mixed_sum += phys.dt_grad_x(l)[0];
            }
            assert!(grad_sum[0].abs() <= 1e-9 && grad_sum[1].abs() <= 1e-9);
            assert!(mixed_sum.abs() <= 1e-9);
        }
    }

    #[test]
    fn unit_box_facet_classification_and_normals() {
        let (domain, _) = cases::case_unit_box(1).unwrap();
        assert_eq!(domain.facet_counts(), (0, 2, 1, 1));
        for facet in domain.facets() {
            let xi = facet.owner_face.embed(&[0.5]);
            let n = domain.facet_normal(facet, &xi).unwrap();
            match facet.kind {
                FacetKind::Terminal => assert!(dist(&n, &[0.0, 1.0]) < 1e-14),
                FacetKind::Initial => assert!(dist(&n, &[0.0, -1.0]) < 1e-14),
                FacetKind::Dirichlet => assert!(n[1].abs() < 1e-14 && (n[0].abs() - 1.0).abs() < 1e-14),
                FacetKind::Interior => unreachable!(),
            }
        }
    }

    #[test]
    fn moving_2d_facet_classification() {
        let (domain, _) = cases::case_moving_2d().unwrap();
        assert_eq!(domain.facet_counts(), (1, 4, 1, 1));
        let interior = domain
            .facets()
            .iter()
            .find(|f| f.kind == FacetKind::Interior)
            .unwrap();
        assert_eq!(interior.owner, 0);
        // Owner (lower slab) normal (0,1); neighbor normal (0,-1).
        let xi = interior.owner_face.embed(&[0.33]);
        let n = domain.facet_normal(interior, &xi).unwrap();
        assert!(dist(&n, &[0.0, 1.0]) < 1e-12);
        let (nb, nb_face) = interior.neighbor.unwrap();
        let nb_xi = interior.neighbor_xi(&xi);
        let nn = domain.patch(nb).geometry.face_normal(&nb_xi, nb_face.dir, nb_face.side).unwrap();
        assert!(dist(&nn, &[0.0, -1.0]) < 1e-12);
    }

    #[test]
    fn moving_3d_facet_classification() {
        let (domain, _) = cases::case_moving_3d().unwrap();
        assert_eq!(domain.facet_counts(), (1, 8, 1, 1));
    }

    #[test]
    fn interface_matching_and_antipodal_normals() {
        let (domain, _) = cases::case_moving_2d().unwrap();
        let facet = domain
            .facets()
            .iter()
            .find(|f| f.kind == FacetKind::Interior)
            .unwrap();
        let (nb, nb_face) = facet.neighbor.unwrap();
        for k in 0..=20 {
            let s = k as f64 / 20.0;
            let own_xi = facet.owner_face.embed(&[s]);
            let nb_xi = facet.neighbor_xi(&own_xi);
            let pa = domain.patch(facet.owner).geometry.map_point(&own_xi).unwrap();
            let pb = domain.patch(nb).geometry.map_point(&nb_xi).unwrap();
            assert!(dist(&pa, &pb) <= 1e-10);
            let na = domain.facet_normal(facet, &own_xi).unwrap();
            let nn = domain.patch(nb).geometry.face_normal(&nb_xi, nb_face.dir, nb_face.side).unwrap();
            for (a, b) in na.iter().zip(&nn) {
                assert!((a + b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        // Folded quad: control points produce a sign-changing determinant.
        let basis = TensorBasis::single_span(1, 2);
        let r = GeometryMap::new(
            basis,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
        );
        assert!(r.is_err());
    }

    #[test]
    fn partial_overlap_is_rejected() {
        // Two unit boxes side by side in x but shifted by half in t.
        let unit = |x0: f64, t0: f64| {
            let basis = TensorBasis::single_span(1, 2);
            GeometryMap::new(
                basis,
                vec![
                    vec![x0, t0],
                    vec![x0 + 1.0, t0],
                    vec![x0, t0 + 1.0],
                    vec![x0 + 1.0, t0 + 1.0],
                ],
            )
            .unwrap()
        };
        let space = TensorBasis::single_span(1, 2);
        let p0 = Patch::new(0, unit(0.0, 0.0), space.clone()).unwrap();
        let p1 = Patch::new(1, unit(1.0, 0.5), space).unwrap();
        let err = build_multipatch(vec![p0, p1], 1e-9).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn geometry_json_roundtrip() {
        let text = r#"{
            "patches": [
                {
                    "degrees": [1, 1],
                    "knots": [[0, 0, 1, 1], [0, 0, 1, 1]],
                    "control_points": [[0, 0], [1, 0], [0, 1], [1, 1]]
                }
            ]
        }"#;
        let maps = geometry_from_json(text).unwrap();
        assert_eq!(maps.len(), 1);
        let x = maps[0].map_point(&[0.25, 0.75]).unwrap();
        assert!(dist(&x, &[0.25, 0.75]) < 1e-15);
    }

    #[test]
    fn mesh_size_and_quasi_uniformity() {
        let (domain, _) = cases::case_unit_box(1).unwrap();
        let refined = domain.with_discretization(2, 2).unwrap();
        let p = refined.patch(0);
        assert!((p.quasi_uniformity - 1.0).abs() < 1e-12);
        // Level 2: 4x4 elements of side 0.25, diagonal 0.25*sqrt(2).
        assert!((p.h - 0.25 * 2.0_f64.sqrt()).abs() < 1e-14);
    }
}
