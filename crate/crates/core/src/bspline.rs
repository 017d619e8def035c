//! Univariate and tensor-product B-spline spaces.
//!
//! Knot vectors live on the parameter interval \[0,1\] and are open: the first
//! and last knots are repeated degree+1 times. Evaluation uses the Cox–de Boor
//! recursion (divisions by zero defined as zero) and the standard derivative
//! recurrence, returning only the degree+1 basis functions that are nonzero on
//! the containing span.

use crate::{Error, Result};

/// An open knot vector on \[0,1\] together with its polynomial degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    /// Builds a knot vector, normalizing the parameter interval to \[0,1\] and
    /// validating openness, monotonicity and interior multiplicities.
    pub fn new(mut values: Vec<f64>, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Argument("spline degree must be at least 1".into()));
        }
        if values.len() < 2 * (degree + 1) {
            return Err(Error::Argument(format!(
                "knot vector of length {} too short for degree {degree}",
                values.len()
            )));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Argument("knot vector must be non-decreasing".into()));
        }
        let (lo, hi) = (values[0], *values.last().unwrap());
        if hi <= lo {
            return Err(Error::Argument("knot vector spans an empty interval".into()));
        }
        if (lo, hi) != (0.0, 1.0) {
            for v in &mut values {
                *v = (*v - lo) / (hi - lo);
            }
            // Pin the endpoints exactly after normalization.
            let len = values.len();
            for v in values.iter_mut().take(degree + 1) {
                *v = 0.0;
            }
            for v in values.iter_mut().skip(len - degree - 1) {
                *v = 1.0;
            }
        }
        let open_start = values.iter().take_while(|&&v| v == 0.0).count() > degree;
        let open_end = values.iter().rev().take_while(|&&v| v == 1.0).count() > degree;
        if !open_start || !open_end {
            return Err(Error::Argument(format!(
                "knot vector must be open: endpoints repeated {} times",
                degree + 1
            )));
        }
        let kv = Self { values, degree };
        if kv.num_basis() < degree + 1 {
            return Err(Error::Argument("too few basis functions".into()));
        }
        for b in kv.breakpoints() {
            if b > 0.0 && b < 1.0 {
                let mult = kv.values.iter().filter(|&&v| v == b).count();
                if mult > degree {
                    return Err(Error::Argument(format!(
                        "interior knot {b} has multiplicity {mult} > degree {degree}"
                    )));
                }
            }
        }
        Ok(kv)
    }

    /// Open knot vector with a single span: {0 × (p+1), 1 × (p+1)}.
    pub fn single_span(degree: usize) -> Self {
        let mut values = vec![0.0; degree + 1];
        values.extend(std::iter::repeat_n(1.0, degree + 1));
        Self { values, degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of basis functions n = len − p − 1.
    pub fn num_basis(&self) -> usize {
        self.values.len() - self.degree - 1
    }

    /// Distinct knot values.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &v in &self.values {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Support interval `[ξ_i, ξ_{i+p+1}]` of basis function i.
    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.values[i], self.values[i + self.degree + 1])
    }

    /// Index s of the span containing xi, with the right-closed convention at
    /// xi = 1 (the last nonzero span is used).
    pub fn span_of(&self, xi: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::Domain(format!("parameter {xi} outside [0,1]")));
        }
        let n = self.num_basis();
        if xi >= 1.0 {
            // Last span with nonzero length ends at index n (values[n] < values[n+1] = 1).
            let mut s = n;
            while self.values[s] >= 1.0 {
                s -= 1;
            }
            return Ok(s);
        }
        // Binary search: largest s with values[s] <= xi.
        let mut lo = self.degree;
        let mut hi = n;
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if self.values[mid] <= xi {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        Ok(lo)
    }

    /// Values and derivatives of the p+1 nonzero basis functions at xi.
    ///
    /// Returns the span index and a table `ders[k][j]` holding the k-th
    /// derivative of basis function `span − p + j`. Standard triangular-table
    /// algorithm; divisions by zero in the recursion are defined as zero by
    /// construction (zero-length spans never enter a denominator).
    pub fn eval_basis_derivs(&self, xi: f64, max_deriv: usize) -> Result<BasisTable> {
        if max_deriv > self.degree {
            return Err(Error::Argument(format!(
                "derivative order {max_deriv} exceeds degree {}",
                self.degree
            )));
        }
        let span = self.span_of(xi)?;
        let p = self.degree;
        let u = &self.values;

        // ndu[j][r]: basis values of degree r plus knot differences (Piegl–Tiller A2.3 layout).
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = xi - u[span + 1 - j];
            right[j] = u[span + j] - xi;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![0.0; p + 1]; max_deriv + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let mut s1 = 0;
            let mut s2 = 1;
            a[0][0] = 1.0;
            for k in 1..=max_deriv {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][(rk + j as isize) as usize];
                    d += a[s2][j] * ndu[(rk + j as isize) as usize][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for (k, row) in ders.iter_mut().enumerate().skip(1) {
            for v in row.iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        Ok(BasisTable {
            span,
            first: span - p,
            ders,
        })
    }

    /// Bisects every nonzero span `levels` times.
    pub fn refine_uniform(&self, levels: usize) -> KnotVector {
        let mut kv = self.clone();
        for _ in 0..levels {
            let mut values = Vec::with_capacity(kv.values.len() * 2);
            for w in kv.values.windows(2) {
                values.push(w[0]);
                if w[1] > w[0] {
                    values.push(0.5 * (w[0] + w[1]));
                }
            }
            values.push(*kv.values.last().unwrap());
            kv = KnotVector {
                values,
                degree: kv.degree,
            };
        }
        kv
    }

    /// Greville abscissae γ_i = (ξ_{i+1} + … + ξ_{i+p}) / p.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| self.values[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }
}

/// Nonzero basis values and derivatives on one span.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub span: usize,
    /// Index of the first nonzero basis function (= span − degree).
    pub first: usize,
    /// `ders[k][j]` = k-th derivative of basis function first + j.
    pub ders: Vec<Vec<f64>>,
}

/// Tensor-product B-spline basis, one knot vector per parametric direction.
/// Multi-indices are lexicographic with the first direction running fastest.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    directions: Vec<KnotVector>,
}

impl TensorBasis {
    pub fn new(directions: Vec<KnotVector>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::Argument("tensor basis needs at least one direction".into()));
        }
        Ok(Self { directions })
    }

    /// Equal-degree basis with a single span per direction.
    pub fn single_span(degree: usize, dims: usize) -> Self {
        Self {
            directions: vec![KnotVector::single_span(degree); dims],
        }
    }

    pub fn directions(&self) -> &[KnotVector] {
        &self.directions
    }

    /// Number of parametric directions (spatial dimensions + 1).
    pub fn num_dims(&self) -> usize {
        self.directions.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.directions.iter().map(|kv| kv.degree()).collect()
    }

    /// Basis functions per direction.
    pub fn dims(&self) -> Vec<usize> {
        self.directions.iter().map(|kv| kv.num_basis()).collect()
    }

    /// Total dimension Π_α n_α.
    pub fn dim(&self) -> usize {
        self.directions.iter().map(|kv| kv.num_basis()).product()
    }

    /// Global index of a multi-index (first direction fastest).
    pub fn global_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (kv, &i) in self.directions.iter().zip(multi) {
            idx += i * stride;
            stride *= kv.num_basis();
        }
        idx
    }

    /// Multi-index of a global index.
    pub fn multi_index(&self, mut global: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_dims());
        for kv in &self.directions {
            let n = kv.num_basis();
            out.push(global % n);
            global /= n;
        }
        out
    }

    pub fn refine_uniform(&self, levels: usize) -> TensorBasis {
        TensorBasis {
            directions: self.directions.iter().map(|kv| kv.refine_uniform(levels)).collect(),
        }
    }

    /// Evaluates all nonzero tensor-product basis functions and partial
    /// derivatives up to total order `max_deriv` at `xi`.
    pub fn eval(&self, xi: &[f64], max_deriv: usize) -> Result<TensorTable> {
        assert_eq!(xi.len(), self.num_dims());
        // Per-direction order is clamped at the direction's degree; higher
        // orders are structurally zero (broken, elementwise derivatives).
        let tables = self
            .directions
            .iter()
            .zip(xi)
            .map(|(kv, &x)| kv.eval_basis_derivs(x, max_deriv.min(kv.degree())))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorTable::new(tables, self.dims()))
    }

    /// Parametric mesh induced by the distinct knots.
    pub fn mesh(&self) -> ParametricMesh {
        ParametricMesh::new(self.directions.iter().map(|kv| kv.breakpoints()).collect())
    }
}

/// Per-point tensor evaluation: univariate tables plus index bookkeeping.
#[derive(Debug, Clone)]
pub struct TensorTable {
    tables: Vec<BasisTable>,
    counts: Vec<usize>,
    dims: Vec<usize>,
}

impl TensorTable {
    fn new(tables: Vec<BasisTable>, dims: Vec<usize>) -> Self {
        let counts = tables.iter().map(|t| t.ders[0].len()).collect();
        Self { tables, counts, dims }
    }

    /// Number of nonzero basis functions, Π (p_α + 1).
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Local multi-offset of local index `l` (first direction fastest).
    pub fn local_multi(&self, mut l: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.counts.len());
        for &c in &self.counts {
            out.push(l % c);
            l /= c;
        }
        out
    }

    /// Global (flattened) basis index of local index `l`.
    pub fn global_index(&self, l: usize) -> usize {
        let multi = self.local_multi(l);
        let mut idx = 0;
        let mut stride = 1;
        for (d, &m) in multi.iter().enumerate() {
            idx += (self.tables[d].first + m) * stride;
            stride *= self.dims[d];
        }
        idx
    }

    /// Partial derivative with per-direction orders `orders` of local basis `l`.
    /// Orders beyond a direction's stored table are structurally zero.
    pub fn partial(&self, l: usize, orders: &[usize]) -> f64 {
        let multi = self.local_multi(l);
        let mut prod = 1.0;
        for (d, (&m, &k)) in multi.iter().zip(orders).enumerate() {
            let t = &self.tables[d];
            if k >= t.ders.len() {
                return 0.0;
            }
            prod *= t.ders[k][m];
        }
        prod
    }

    pub fn value(&self, l: usize) -> f64 {
        let multi = self.local_multi(l);
        let mut prod = 1.0;
        for (d, &m) in multi.iter().enumerate() {
            prod *= self.tables[d].ders[0][m];
        }
        prod
    }
}

/// Axis-aligned partition of the parameter box induced by distinct knots.
#[derive(Debug, Clone)]
pub struct ParametricMesh {
    breakpoints: Vec<Vec<f64>>,
}

impl ParametricMesh {
    pub fn new(breakpoints: Vec<Vec<f64>>) -> Self {
        Self { breakpoints }
    }

    pub fn breakpoints(&self) -> &[Vec<f64>] {
        &self.breakpoints
    }

    pub fn num_dims(&self) -> usize {
        self.breakpoints.len()
    }

    /// Elements per direction.
    pub fn counts(&self) -> Vec<usize> {
        self.breakpoints.iter().map(|b| b.len() - 1).collect()
    }

    pub fn num_elements(&self) -> usize {
        self.counts().iter().product()
    }

    /// Element `e` as a (lo, hi) box, first direction fastest.
    pub fn element(&self, mut e: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = Vec::with_capacity(self.num_dims());
        let mut hi = Vec::with_capacity(self.num_dims());
        for b in &self.breakpoints {
            let n = b.len() - 1;
            let i = e % n;
            e /= n;
            lo.push(b[i]);
            hi.push(b[i + 1]);
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn hat() -> KnotVector {
        KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1).unwrap()
    }

    fn bernstein2() -> KnotVector {
        KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2).unwrap()
    }

    #[test]
    fn linear_hats_at_quarter() {
        let t = hat().eval_basis_derivs(0.25, 1).unwrap();
        assert_eq!(t.first, 0);
        assert!((t.ders[0][0] - 0.75).abs() < 1e-15);
        assert!((t.ders[0][1] - 0.25).abs() < 1e-15);
        assert!((t.ders[1][0] + 1.0).abs() < 1e-15);
        assert!((t.ders[1][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bernstein_case_by_hand() {
        // Hand-applied recursion at xi = 0.5: degree-0 indicator on the single
        // span, degree-1 pair (0.5, 0.5), degree-2 triple (0.25, 0.5, 0.25).
        let t = bernstein2().eval_basis_derivs(0.5, 0).unwrap();
        assert!((t.ders[0][0] - 0.25).abs() < 1e-15);
        assert!((t.ders[0][1] - 0.5).abs() < 1e-15);
        assert!((t.ders[0][2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_random_points() {
        let mut rng = StdRng::seed_from_u64(7);
        for p in 1..=4 {
            let kv = KnotVector::single_span(p).refine_uniform(2);
            for _ in 0..1000 {
                let xi: f64 = rng.gen();
                let t = kv.eval_basis_derivs(xi, 0).unwrap();
                let sum: f64 = t.ders[0].iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12, "p={p} xi={xi} sum={sum}");
                assert!(t.ders[0].iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(11);
        let step = 1e-6;
        for p in 1..=4 {
            let kv = KnotVector::single_span(p).refine_uniform(2);
            let breaks = kv.breakpoints();
            let mut checked = 0;
            while checked < 200 {
                let xi: f64 = rng.gen_range(step..1.0 - step);
                if breaks.iter().any(|b| (b - xi).abs() < 1e-3) {
                    continue;
                }
                checked += 1;
                let t = kv.eval_basis_derivs(xi, 1).unwrap();
                let tp = kv.eval_basis_derivs(xi + step, 0).unwrap();
                let tm = kv.eval_basis_derivs(xi - step, 0).unwrap();
                assert_eq!(tp.first, t.first);
                assert_eq!(tm.first, t.first);
                for j in 0..=p {
                    let fd = (tp.ders[0][j] - tm.ders[0][j]) / (2.0 * step);
                    let exact = t.ders[1][j];
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (fd - exact).abs() / scale <= 1e-6,
                        "p={p} xi={xi} j={j}: {fd} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn local_support_is_structural() {
        let kv = KnotVector::single_span(3).refine_uniform(3);
        let t = kv.eval_basis_derivs(0.4, 0).unwrap();
        // Any basis function outside the returned window has a support
        // interval that excludes 0.4 entirely.
        for i in 0..kv.num_basis() {
            let inside_window = i >= t.first && i <= t.span;
            let (lo, hi) = kv.support(i);
            let in_support = 0.4 >= lo && 0.4 < hi;
            assert_eq!(inside_window, in_support, "i={i}");
        }
    }

    #[test]
    fn refine_uniform_examples() {
        let r = hat().refine_uniform(1);
        assert_eq!(r.values(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
        let same = bernstein2().refine_uniform(0);
        assert_eq!(same.values(), bernstein2().values());
        let r2 = bernstein2().refine_uniform(2);
        assert_eq!(r2.values(), &[0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn greville_examples() {
        assert_eq!(hat().greville(), vec![0.0, 1.0]);
        assert_eq!(bernstein2().greville(), vec![0.0, 0.5, 1.0]);
        let kv = KnotVector::new(vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(kv.greville(), vec![0.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn refinement_reproduces_coarse_splines() {
        // Spline space nesting: a coarse spline re-interpolated at fine
        // Greville points is reproduced exactly.
        use crate::linalg::DenseLu;
        let mut rng = StdRng::seed_from_u64(3);
        for p in 1..=3 {
            let coarse = KnotVector::single_span(p).refine_uniform(1);
            let coeffs: Vec<f64> = (0..coarse.num_basis()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let eval = |kv: &KnotVector, c: &[f64], x: f64| {
                let t = kv.eval_basis_derivs(x, 0).unwrap();
                t.ders[0].iter().enumerate().map(|(j, v)| v * c[t.first + j]).sum::<f64>()
            };
            let fine = coarse.refine_uniform(1);
            let n = fine.num_basis();
            let grev = fine.greville();
            let mut a = vec![0.0; n * n];
            let mut b = vec![0.0; n];
            for (r, &g) in grev.iter().enumerate() {
                let t = fine.eval_basis_derivs(g, 0).unwrap();
                for (j, v) in t.ders[0].iter().enumerate() {
                    a[r * n + t.first + j] = *v;
                }
                b[r] = eval(&coarse, &coeffs, g);
            }
            let fine_coeffs = DenseLu::factor(a, n).unwrap().solve(&b);
            for _ in 0..100 {
                let x: f64 = rng.gen();
                let diff = (eval(&coarse, &coeffs, x) - eval(&fine, &fine_coeffs, x)).abs();
                assert!(diff <= 1e-12, "p={p} x={x} diff={diff}");
            }
        }
    }

    #[test]
    fn endpoint_uses_last_span() {
        let kv = KnotVector::single_span(2).refine_uniform(1);
        let t = kv.eval_basis_derivs(1.0, 0).unwrap();
        let sum: f64 = t.ders[0].iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
        assert_eq!(t.first + kv.degree(), kv.num_basis() - 1);
    }

    #[test]
    fn argument_and_domain_errors() {
        assert!(hat().eval_basis_derivs(1.5, 0).is_err());
        assert!(hat().eval_basis_derivs(-0.1, 0).is_err());
        assert!(hat().eval_basis_derivs(0.5, 2).is_err());
        assert!(KnotVector::new(vec![0.0, 0.5, 1.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 0.7, 0.5, 1.0, 1.0], 1).is_err());
    }

    #[test]
    fn interval_normalization() {
        let kv = KnotVector::new(vec![2.0, 2.0, 3.0, 4.0, 4.0], 1).unwrap();
        assert_eq!(kv.values(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn tensor_bilinear_values() {
        let tb = TensorBasis::single_span(1, 2);
        let t = tb.eval(&[0.5, 0.5], 0).unwrap();
        assert_eq!(t.len(), 4);
        for l in 0..4 {
            assert!((t.value(l) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn tensor_partition_of_unity() {
        let mut rng = StdRng::seed_from_u64(5);
        let tb = TensorBasis::new(vec![
            KnotVector::single_span(2).refine_uniform(2),
            KnotVector::single_span(3).refine_uniform(1),
        ])
        .unwrap();
        for _ in 0..200 {
            let xi = [rng.gen::<f64>(), rng.gen::<f64>()];
            let t = tb.eval(&xi, 0).unwrap();
            let sum: f64 = (0..t.len()).map(|l| t.value(l)).sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn tensor_mixed_derivative_of_corner_function() {
        // Bilinear basis with corner (1,1) support is xi1*xi2; its mixed
        // derivative is 1 everywhere.
        let tb = TensorBasis::single_span(1, 2);
        let t = tb.eval(&[0.5, 0.5], 1).unwrap();
        let corner = (0..t.len())
            .find(|&l| t.global_index(l) == tb.global_index(&[1, 1]))
            .unwrap();
        assert!((t.partial(corner, &[1, 1]) - 1.0).abs() < 1e-15);
        assert!((t.value(corner) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tensor_indexing_roundtrip() {
        let tb = TensorBasis::new(vec![
            KnotVector::single_span(2).refine_uniform(1),
            KnotVector::single_span(1).refine_uniform(2),
        ])
        .unwrap();
        assert_eq!(tb.dim(), 4 * 5);
        for g in 0..tb.dim() {
            assert_eq!(tb.global_index(&tb.multi_index(g)), g);
        }
        let mesh = tb.mesh();
        assert_eq!(mesh.num_elements(), 2 * 4);
        let (lo, hi) = mesh.element(0);
        assert_eq!(lo, vec![0.0, 0.0]);
        assert_eq!(hi, vec![0.5, 0.25]);
    }
}
