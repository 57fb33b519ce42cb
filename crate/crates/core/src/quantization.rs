//! Quantum bookkeeping along a Mabuchi ray: the lattice-point basis, the
//! half-form corrected norms at finite time, the gCST as a diagonal map, and
//! the limit constants `c_m`.
//!
//! Norms are the x-space integrals
//!
//! ```text
//! |s^m_s|^2 = int_P exp(-2((x - m).y_s - g_s)) sqrt(det G_s) dx
//! ```
//!
//! with `y_s = grad g_s`. No `(2 pi)^{-n}` torus factor is included. Along the
//! ray, `(x - m).y_s - g_s = (x - m).y - g + s(1/2 |x - m|_p^2 - H(m))`, so the
//! `exp(2 s H(m))` growth factors out exactly. Only the concentrating inner
//! integral, which is the tilde norm, is passed to quadrature. Its limit is
//! `c_m pi^{p/2}`, where `c_m` is computed separately by slice quadrature.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Result, ToricError};
use crate::exact::{rat, Rational};
use crate::geodesic::MabuchiRay;
use crate::polytope::{DelzantPolytope, FrameChange};
use crate::quadrature::{
    integrate, integrate_slice, triangulate_polytope, IntegralResult, IntegrationRegion,
    QuadratureOptions,
};

/// Fraction of the target allowed between extrapolated and limit norms.
pub const LIMIT_RELATIVE_TOLERANCE: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantumBasisElement {
    pub m: Vec<i64>,
    /// `H(m) = 1/2 sum_{j<=p} m_j^2`.
    pub hamiltonian: f64,
    /// Position in lexicographic order.
    pub index: usize,
}

fn check_p(poly: &DelzantPolytope, p: usize) -> Result<()> {
    if p == 0 || p > poly.dim {
        return Err(ToricError::invalid(
            "p",
            format!("need 1 <= p <= {}, got {p}", poly.dim),
        ));
    }
    Ok(())
}

fn hamiltonian(m: &[i64], p: usize) -> f64 {
    0.5 * m[..p].iter().map(|&v| (v * v) as f64).sum::<f64>()
}

/// Lattice points of `poly` in lexicographic order with `H(m)` attached.
pub fn quantum_basis(poly: &DelzantPolytope, p: usize) -> Result<Vec<QuantumBasisElement>> {
    check_p(poly, p)?;
    Ok(poly
        .lattice_points()?
        .into_iter()
        .enumerate()
        .map(|(index, m)| QuantumBasisElement {
            hamiltonian: hamiltonian(&m, p),
            m,
            index,
        })
        .collect())
}

/// Groups the basis by the first `p` coordinates. Levels without lattice
/// points do not appear.
pub fn decomposition(
    poly: &DelzantPolytope,
    p: usize,
) -> Result<BTreeMap<Vec<i64>, Vec<QuantumBasisElement>>> {
    let mut out: BTreeMap<Vec<i64>, Vec<QuantumBasisElement>> = BTreeMap::new();
    for e in quantum_basis(poly, p)? {
        out.entry(e.m[..p].to_vec()).or_default().push(e);
    }
    Ok(out)
}

/// The gCST factor `exp(-s H(m))`.
pub fn gcst_factor(element: &QuantumBasisElement, s: f64) -> f64 {
    (-s * element.hamiltonian).exp()
}

/// The gCST between two times as a diagonal map on the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct GcstMap {
    pub source: f64,
    pub target: f64,
    hamiltonians: Vec<f64>,
}

impl GcstMap {
    pub fn new(basis: &[QuantumBasisElement], source: f64, target: f64) -> Result<Self> {
        if !(source.is_finite() && target.is_finite() && source >= 0.0 && target >= 0.0) {
            return Err(ToricError::invalid(
                "s",
                format!("times must be finite and >= 0, got {source} -> {target}"),
            ));
        }
        Ok(Self {
            source,
            target,
            hamiltonians: basis.iter().map(|e| e.hamiltonian).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.hamiltonians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hamiltonians.is_empty()
    }

    pub fn factors(&self) -> Vec<f64> {
        let dt = self.target - self.source;
        self.hamiltonians.iter().map(|h| (-dt * h).exp()).collect()
    }

    /// `self ∘ earlier`; requires `earlier.target == self.source`.
    pub fn compose(&self, earlier: &GcstMap) -> Result<GcstMap> {
        if earlier.target != self.source || earlier.hamiltonians != self.hamiltonians {
            return Err(ToricError::invalid(
                "gcst",
                "maps are not composable (time or basis mismatch)",
            ));
        }
        Ok(GcstMap {
            source: earlier.source,
            target: self.target,
            hamiltonians: self.hamiltonians.clone(),
        })
    }

    pub fn inverse(&self) -> GcstMap {
        GcstMap {
            source: self.target,
            target: self.source,
            hamiltonians: self.hamiltonians.clone(),
        }
    }

    /// Applies the map to coefficients in the basis.
    pub fn apply(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        if coefficients.len() != self.len() {
            return Err(ToricError::DimensionMismatch {
                expected: self.len(),
                got: coefficients.len(),
            });
        }
        Ok(coefficients
            .iter()
            .zip(self.factors())
            .map(|(c, f)| c * f)
            .collect())
    }
}

/// A norm at time `s`, stored as the tilde norm plus the exact exponent
/// `2 s H(m)` so large `s` never overflows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormValue {
    pub m: Vec<i64>,
    pub s: f64,
    pub tilde_norm_squared: f64,
    pub log_amplification: f64,
    pub error_estimate: f64,
    pub cells_used: usize,
    pub converged: bool,
}

impl NormValue {
    pub fn norm_squared(&self) -> f64 {
        self.tilde_norm_squared * self.log_amplification.exp()
    }

    pub fn ln_norm_squared(&self) -> f64 {
        self.tilde_norm_squared.ln() + self.log_amplification
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitConstant {
    pub m: Vec<i64>,
    pub c_m: f64,
    /// `c_m pi^{p/2}`.
    pub limit: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub m: Vec<i64>,
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolated: f64,
    pub target: f64,
    pub abs_error: f64,
    pub quadrature_converged: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormTableEntry {
    pub element: QuantumBasisElement,
    pub values: Vec<NormValue>,
    pub limit: LimitConstant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormTable {
    pub p: usize,
    pub s_grid: Vec<f64>,
    pub entries: Vec<NormTableEntry>,
}

/// A polytope in a fixed frame together with its ray, triangulation and basis.
#[derive(Clone, Debug)]
pub struct QuantizationModel {
    poly: DelzantPolytope,
    ray: MabuchiRay,
    region: IntegrationRegion,
    basis: Vec<QuantumBasisElement>,
}

impl QuantizationModel {
    /// Guillemin ray with `H = 1/2 sum_{j<=p} x_j^2` in the given coordinates.
    pub fn new(poly: &DelzantPolytope, p: usize) -> Result<Self> {
        check_p(poly, p)?;
        Self::with_frame(poly, &FrameChange::identity(poly.dim, p)?)
    }

    /// Works in the frame `x -> B x`; the basis is indexed by the lattice
    /// points of the transformed polytope.
    pub fn with_frame(poly: &DelzantPolytope, frame: &FrameChange) -> Result<Self> {
        poly.require_delzant()?;
        let poly = poly.apply_frame_change(frame)?;
        let ray = MabuchiRay::from_polytope(&poly, &FrameChange::identity(poly.dim, frame.p())?)?;
        let region = triangulate_polytope(&poly)?;
        let basis = quantum_basis(&poly, frame.p())?;
        Ok(Self {
            poly,
            ray,
            region,
            basis,
        })
    }

    pub fn polytope(&self) -> &DelzantPolytope {
        &self.poly
    }

    pub fn ray(&self) -> &MabuchiRay {
        &self.ray
    }

    pub fn p(&self) -> usize {
        self.ray.p()
    }

    pub fn basis(&self) -> &[QuantumBasisElement] {
        &self.basis
    }

    pub fn element(&self, m: &[i64]) -> Result<&QuantumBasisElement> {
        self.basis.iter().find(|e| e.m == m).ok_or_else(|| {
            ToricError::invalid("m", format!("{m:?} is not a lattice point of the polytope"))
        })
    }

    /// `ln` of the tilde-norm integrand at `x`, or `None` off the interior.
    fn log_integrand(&self, x: &[f64], m: &[f64], s: f64) -> Option<f64> {
        let p = self.p();
        let (g, y, mut gs) = self.ray.base().local_jet(x).ok()?;
        for j in 0..p {
            gs[(j, j)] += s;
        }
        let log_det = log_det_spd(gs)?;
        let pairing: f64 = x.iter().zip(m).zip(y.iter()).map(|((a, b), c)| (a - b) * c).sum();
        let gauss: f64 = x[..p].iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum();
        Some(-s * gauss - 2.0 * (pairing - g) + 0.5 * log_det)
    }

    /// The norm of the corrected section `s^m_s`; the tilde norm is
    /// `exp(-2 s H(m))` times it.
    pub fn norm(&self, element: &QuantumBasisElement, s: f64, tol: f64) -> Result<NormValue> {
        check_positive("tol", tol)?;
        if !(s.is_finite() && s >= 0.0) {
            return Err(ToricError::invalid("s", format!("need finite s >= 0, got {s}")));
        }
        let m: Vec<f64> = element.m.iter().map(|&v| v as f64).collect();
        let result = integrate(
            |x: &[f64]| self.log_integrand(x, &m, s).map_or(0.0, f64::exp),
            &self.region,
            &QuadratureOptions::new(tol).with_resolution(concentration_scale(s)),
        );
        Ok(NormValue {
            m: element.m.clone(),
            s,
            tilde_norm_squared: result.value,
            log_amplification: 2.0 * s * element.hamiltonian,
            error_estimate: result.error_estimate,
            cells_used: result.cells_used,
            converged: result.converged,
        })
    }

    pub fn norm_squared(&self, element: &QuantumBasisElement, s: f64, tol: f64) -> Result<f64> {
        Ok(self.norm(element, s, tol)?.norm_squared())
    }

    pub fn tilde_norm_squared(&self, element: &QuantumBasisElement, s: f64, tol: f64) -> Result<f64> {
        Ok(self.norm(element, s, tol)?.tilde_norm_squared)
    }

    /// `c_m`: the slice integral over `x_{1..p} = m_{1..p}` of
    /// `exp(-2(sum_{j>p} (x_j - m_j) y_j - g)) sqrt(det D)`; for `p = n` it is
    /// `exp(2 g(m))` in closed form.
    pub fn limit_constant(&self, element: &QuantumBasisElement, tol: f64) -> Result<LimitConstant> {
        check_positive("tol", tol)?;
        let p = self.p();
        let n = self.poly.dim;
        let m: Vec<f64> = element.m.iter().map(|&v| v as f64).collect();
        let result = if p == n {
            let g = self.ray.base().value(&m)?;
            IntegralResult {
                value: (2.0 * g).exp(),
                error_estimate: 0.0,
                cells_used: 0,
                converged: true,
            }
        } else {
            let c: Vec<Rational> = element.m[..p].iter().map(|&v| rat(v as i128)).collect();
            let f = |x: &[f64]| -> f64 {
                let Ok((g, y, hess)) = self.ray.base().local_jet(x) else {
                    return 0.0;
                };
                let d = hess.view((p, p), (n - p, n - p)).into_owned();
                let Some(log_det) = log_det_spd(d) else {
                    return 0.0;
                };
                let pairing: f64 = (p..n).map(|j| (x[j] - m[j]) * y[j]).sum();
                (-2.0 * (pairing - g) + 0.5 * log_det).exp()
            };
            integrate_slice(f, &self.poly, p, &c, &QuadratureOptions::new(tol))?
        };
        Ok(LimitConstant {
            m: element.m.clone(),
            c_m: result.value,
            limit: result.value * PI.powf(p as f64 / 2.0),
            error_estimate: result.error_estimate,
            converged: result.converged,
        })
    }

    /// `m -> c_m pi^{p/2}` over the whole basis. The basis is orthogonal, so
    /// the limit hermitian structure is diagonal.
    pub fn hermitian_limit_table(&self, tol: f64) -> Result<Vec<LimitConstant>> {
        self.basis.iter().map(|e| self.limit_constant(e, tol)).collect()
    }

    /// Extrapolates tilde norms on `s_grid` to `1/s = 0` and compares with the
    /// slice-quadrature limit. Quadrature trouble is reported, not raised.
    pub fn verify_norm_limit(
        &self,
        element: &QuantumBasisElement,
        s_grid: &[f64],
        tol: f64,
    ) -> Result<ConvergenceReport> {
        check_grid(s_grid, 3)?;
        let norms = s_grid
            .iter()
            .map(|&s| self.norm(element, s, tol))
            .collect::<Result<Vec<_>>>()?;
        let limit = self.limit_constant(element, tol)?;
        let values: Vec<f64> = norms.iter().map(|v| v.tilde_norm_squared).collect();
        let h: Vec<f64> = s_grid.iter().map(|s| 1.0 / s).collect();
        let extrapolated = neville_at_zero(&h, &values);
        let abs_error = (extrapolated - limit.limit).abs();
        let pass = abs_error <= tol.max(LIMIT_RELATIVE_TOLERANCE * limit.limit);
        Ok(ConvergenceReport {
            m: element.m.clone(),
            s_grid: s_grid.to_vec(),
            values,
            extrapolated,
            target: limit.limit,
            abs_error,
            quadrature_converged: norms.iter().all(|v| v.converged) && limit.converged,
            pass,
        })
    }

    /// Finite-time norms and limits for every basis element.
    pub fn norm_table(&self, s_grid: &[f64], tol: f64) -> Result<NormTable> {
        check_grid(s_grid, 1)?;
        let entries = self
            .basis
            .iter()
            .map(|e| {
                Ok(NormTableEntry {
                    element: e.clone(),
                    values: s_grid
                        .iter()
                        .map(|&s| self.norm(e, s, tol))
                        .collect::<Result<_>>()?,
                    limit: self.limit_constant(e, tol)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(NormTable {
            p: self.p(),
            s_grid: s_grid.to_vec(),
            entries,
        })
    }
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ToricError::invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn check_grid(s_grid: &[f64], min_len: usize) -> Result<()> {
    if s_grid.len() < min_len {
        return Err(ToricError::invalid(
            "s_grid",
            format!("need at least {min_len} points, got {}", s_grid.len()),
        ));
    }
    if s_grid.iter().any(|s| !(s.is_finite() && *s >= 0.0))
        || s_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(ToricError::invalid(
            "s_grid",
            "must be finite, nonnegative and strictly increasing",
        ));
    }
    if min_len > 1 && s_grid[0] <= 0.0 {
        return Err(ToricError::invalid("s_grid", "extrapolation needs s > 0"));
    }
    Ok(())
}

/// Edge length that resolves `exp(-s |x - m|^2)`.
fn concentration_scale(s: f64) -> f64 {
    if s > 1.0 {
        1.0 / s.sqrt()
    } else {
        f64::INFINITY
    }
}

fn log_det_spd(m: DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(0.0);
    }
    let chol = m.cholesky()?;
    let l = chol.l_dirty();
    Some(2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Value at `h = 0` of the interpolating polynomial through `(h_i, v_i)`.
pub fn neville_at_zero(h: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    let n = p.len();
    for k in 1..n {
        for i in 0..(n - k) {
            p[i] = (h[i + k] * p[i] - h[i] * p[i + 1]) / (h[i + k] - h[i]);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn segment() -> DelzantPolytope {
        DelzantPolytope::interval(Rational::new(-1, 2), Rational::new(3, 2))
    }

    fn square() -> DelzantPolytope {
        let b = (Rational::new(-1, 2), Rational::new(3, 2));
        DelzantPolytope::cube(&[b, b])
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    /// Guillemin data on [-1/2, 3/2]: (g, g', g'').
    fn g1(x: f64) -> (f64, f64, f64) {
        let (a, b) = (x + 0.5, 1.5 - x);
        (
            0.5 * (a * a.ln() + b * b.ln()),
            0.5 * (a.ln() - b.ln()),
            0.5 * (1.0 / a + 1.0 / b),
        )
    }

    #[test]
    fn basis_examples() {
        let b = quantum_basis(&segment(), 1).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].m.clone(), b[0].hamiltonian), (vec![0], 0.0));
        assert_eq!((b[1].m.clone(), b[1].hamiltonian), (vec![1], 0.5));
        let h: Vec<f64> = quantum_basis(&square(), 1).unwrap().iter().map(|e| e.hamiltonian).collect();
        assert_eq!(h, vec![0.0, 0.0, 0.5, 0.5]);
        let h: Vec<f64> = quantum_basis(&square(), 2).unwrap().iter().map(|e| e.hamiltonian).collect();
        assert_eq!(h, vec![0.0, 0.5, 0.5, 1.0]);
        assert!(quantum_basis(&square(), 3).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let d = decomposition(&square(), 1).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[&vec![0]].len(), 2);
        assert_eq!(d[&vec![1]].len(), 2);
        let full = decomposition(&square(), 2).unwrap();
        assert!(full.values().all(|v| v.len() == 1));
        // x in [1/4, 3/4] has no integral level
        let thin = DelzantPolytope::cube(&[
            (Rational::new(1, 4), Rational::new(3, 4)),
            (rat(0), rat(2)),
        ]);
        assert!(decomposition(&thin, 1).unwrap().is_empty());
    }

    #[test]
    fn gcst_laws() {
        let basis = quantum_basis(&square(), 2).unwrap();
        assert_eq!(gcst_factor(&basis[0], 7.0), 1.0);
        assert_eq!(gcst_factor(&basis[1], 2.0), (-1.0f64).exp());
        for e in &basis {
            let lhs = gcst_factor(e, 1.3) * gcst_factor(e, 2.9);
            assert!((lhs - gcst_factor(e, 4.2)).abs() < 1e-15);
        }
        let a = GcstMap::new(&basis, 0.0, 1.5).unwrap();
        let b = GcstMap::new(&basis, 1.5, 4.0).unwrap();
        let ab = b.compose(&a).unwrap();
        let direct = GcstMap::new(&basis, 0.0, 4.0).unwrap();
        for (x, y) in ab.factors().iter().zip(direct.factors()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(a.compose(&b).is_err());
        let v = vec![1.0, 2.0, 3.0, 4.0];
        let back = a.inverse().apply(&a.apply(&v).unwrap()).unwrap();
        for (x, y) in back.iter().zip(&v) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn segment_norm_at_zero_matches_simpson_oracle() {
        let model = QuantizationModel::new(&segment(), 1).unwrap();
        let e = model.element(&[0]).unwrap().clone();
        let v = model.norm(&e, 0.0, 1e-10).unwrap();
        assert!(v.converged);
        let oracle = simpson(
            |x| {
                let (g, gp, gpp) = g1(x);
                (-2.0 * (x * gp - g)).exp() * gpp.sqrt()
            },
            -0.5 + 1e-13,
            1.5 - 1e-13,
            2_000_000,
        );
        assert!(v.tilde_norm_squared > 0.0);
        assert!((v.tilde_norm_squared - oracle).abs() < 1e-6, "{} vs {oracle}", v.tilde_norm_squared);
    }

    #[test]
    fn segment_limit_constants_closed_form() {
        let model = QuantizationModel::new(&segment(), 1).unwrap();
        let c0 = 0.5f64.sqrt() * 1.5f64.powf(1.5);
        for m in [[0], [1]] {
            let e = model.element(&m).unwrap().clone();
            let lc = model.limit_constant(&e, 1e-10).unwrap();
            assert_relative_eq!(lc.c_m, c0, max_relative = 1e-12);
            assert_relative_eq!(lc.limit, PI.sqrt() * c0, max_relative = 1e-12);
        }
        let table = model.hermitian_limit_table(1e-10).unwrap();
        assert_eq!(table.len(), model.basis().len());
        assert!((table[0].limit - 2.3025).abs() < 1e-4);
    }

    #[test]
    fn tilde_norm_identity_and_growth() {
        let model = QuantizationModel::new(&segment(), 1).unwrap();
        let e1 = model.element(&[1]).unwrap().clone();
        let v = model.norm(&e1, 3.0, 1e-9).unwrap();
        assert_eq!(v.log_amplification, 3.0);
        assert_relative_eq!(
            v.norm_squared() * (-2.0 * 3.0 * e1.hamiltonian).exp(),
            v.tilde_norm_squared,
            max_relative = 1e-14
        );
        let e0 = model.element(&[0]).unwrap().clone();
        // the sequence climbs monotonically from the s = 0 value toward the limit
        let mut last = 0.0;
        for s in [0.0, 1.0, 10.0, 100.0] {
            let t = model.tilde_norm_squared(&e0, s, 1e-9).unwrap();
            assert!(t > last);
            last = t;
        }
        assert!((last - 2.3025).abs() < 1e-3);
    }

    #[test]
    fn square_limit_constant_matches_product_oracle() {
        let model = QuantizationModel::new(&square(), 1).unwrap();
        let e = model.element(&[0, 0]).unwrap().clone();
        let lc = model.limit_constant(&e, 1e-10).unwrap();
        let (g0, _, _) = g1(0.0);
        let inner = simpson(
            |t| {
                let (g, gp, gpp) = g1(t);
                (-2.0 * (t * gp - g)).exp() * gpp.sqrt()
            },
            -0.5 + 1e-13,
            1.5 - 1e-13,
            2_000_000,
        );
        let oracle = (2.0 * g0).exp() * inner;
        assert!((lc.c_m - oracle).abs() < 1e-5 * oracle, "{} vs {oracle}", lc.c_m);
    }

    #[test]
    fn norms_factorize_on_products() {
        let seg = QuantizationModel::new(&segment(), 1).unwrap();
        let sq = QuantizationModel::new(&square(), 1).unwrap();
        let e_seg = seg.element(&[1]).unwrap().clone();
        let s = 5.0;
        let a = seg.norm(&e_seg, s, 1e-10).unwrap().tilde_norm_squared;
        // second factor is the s = 0 norm with m_2 = 0
        let e0 = seg.element(&[0]).unwrap().clone();
        let b0 = seg.norm(&e0, 0.0, 1e-10).unwrap().tilde_norm_squared;
        let e_sq = sq.element(&[1, 0]).unwrap().clone();
        let ab = sq.norm(&e_sq, s, 1e-9).unwrap().tilde_norm_squared;
        assert!((ab - a * b0).abs() < 1e-6 * ab, "{ab} vs {}", a * b0);
    }

    #[test]
    fn verify_limit_on_segment() {
        let model = QuantizationModel::new(&segment(), 1).unwrap();
        for m in [[0], [1]] {
            let e = model.element(&m).unwrap().clone();
            let r = model.verify_norm_limit(&e, &[10.0, 20.0, 40.0, 80.0], 1e-9).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.quadrature_converged);
        }
        let e = model.element(&[0]).unwrap().clone();
        assert!(model.verify_norm_limit(&e, &[10.0, 20.0], 1e-9).is_err());
        assert!(model.verify_norm_limit(&e, &[10.0, 5.0, 20.0], 1e-9).is_err());
    }

    #[test]
    fn neville_recovers_polynomials() {
        let h = [0.1, 0.05, 0.025];
        let v: Vec<f64> = h.iter().map(|x| 2.0 + 3.0 * x - 7.0 * x * x).collect();
        assert!((neville_at_zero(&h, &v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn frame_change_preserves_basis_size() {
        let fc = FrameChange::new(vec![vec![1, 1], vec![0, 1]], 1).unwrap();
        let model = QuantizationModel::with_frame(&square(), &fc).unwrap();
        assert_eq!(model.basis().len(), 4);
        let h: Vec<f64> = model.basis().iter().map(|e| e.hamiltonian).collect();
        assert_eq!(h.iter().sum::<f64>(), 0.0 + 0.5 + 0.5 + 2.0);
    }
}
