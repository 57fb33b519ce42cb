//! Symplectic potentials `g = g_P + h` on the interior of a polytope and the
//! toric Kähler data they induce.
//!
//! The Guillemin term `g_P = 1/2 sum_r l_r log l_r` is evaluated in closed
//! form together with its gradient, Hessian and third derivatives. The
//! correction `h` is restricted to a diagonal quadratic family, which also
//! covers the Hamiltonian `H = 1/2 sum_{j<=p} x_j^2` added along a Mabuchi ray.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ToricError};
use crate::exact::to_f64;
use crate::polytope::{DelzantPolytope, HalfSpaces};

/// Facet values below this count as boundary for `l log l`.
const BOUNDARY_EPS: f64 = f64::EPSILON;

/// Condition number past which [`ComplexStructure`] flags the Hessian.
pub const CONDITION_WARNING: f64 = 1e12;

/// Smooth correction `h` added to the Guillemin term.
#[derive(Clone, Debug, PartialEq)]
pub enum Correction {
    None,
    /// `h(x) = 1/2 sum_j c_j x_j^2`.
    Quadratic(Vec<f64>),
}

impl Correction {
    /// Parses `"none"` or `"quadratic:[c1,c2,...]"`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let spec = spec.trim();
        if spec.eq_ignore_ascii_case("none") {
            return Ok(Correction::None);
        }
        let body = spec
            .strip_prefix("quadratic:")
            .ok_or_else(|| ToricError::invalid("correction", format!("unknown correction {spec:?}")))?;
        let coeffs: Vec<f64> = serde_json::from_str(body)
            .map_err(|e| ToricError::invalid("correction", e.to_string()))?;
        if coeffs.len() != dim {
            return Err(ToricError::DimensionMismatch {
                expected: dim,
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(ToricError::invalid(
                "correction",
                "quadratic coefficients must be finite and nonnegative",
            ));
        }
        Ok(Correction::Quadratic(coeffs))
    }

    fn coefficients(&self, dim: usize) -> Vec<f64> {
        match self {
            Correction::None => vec![0.0; dim],
            Correction::Quadratic(c) => c.clone(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Correction::None => 0.0,
            Correction::Quadratic(c) => 0.5 * c.iter().zip(x).map(|(c, x)| c * x * x).sum::<f64>(),
        }
    }
}

/// Evaluator bundle for `g = g_P + h`. Immutable and shareable.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticPotential {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    correction: Correction,
    start: Vec<f64>,
}

/// Pointwise Kähler data at an interior point.
#[derive(Clone, Debug)]
pub struct KahlerPointData {
    pub x: Vec<f64>,
    pub g: f64,
    pub y: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// Kähler potential value `x . y - g`.
    pub kahler_potential: f64,
    pub complex_structure: DMatrix<f64>,
}

/// `J = [[0, -G^{-1}], [G, 0]]` with a conditioning diagnostic.
#[derive(Clone, Debug)]
pub struct ComplexStructure {
    pub matrix: DMatrix<f64>,
    pub condition: f64,
    pub ill_conditioned: bool,
}

impl SymplecticPotential {
    pub fn guillemin(poly: &DelzantPolytope) -> Result<Self> {
        Self::from_halfspaces(&poly.halfspaces())
    }

    /// Guillemin-form potential over any half-space system with a nonempty
    /// interior, e.g. a slice with non-primitive or rational normals.
    pub fn from_halfspaces(hs: &HalfSpaces) -> Result<Self> {
        let start = hs
            .interior_point()
            .ok_or(ToricError::EmptyInterior)?
            .iter()
            .map(to_f64)
            .collect();
        Ok(Self {
            dim: hs.dim,
            normals: hs
                .normals
                .iter()
                .map(|n| n.iter().map(to_f64).collect())
                .collect(),
            offsets: hs.offsets.iter().map(to_f64).collect(),
            correction: Correction::None,
            start,
        })
    }

    pub fn with_correction(mut self, correction: Correction) -> Result<Self> {
        if let Correction::Quadratic(c) = &correction {
            if c.len() != self.dim {
                return Err(ToricError::DimensionMismatch {
                    expected: self.dim,
                    got: c.len(),
                });
            }
        }
        self.correction = correction;
        Ok(self)
    }

    /// Returns the potential with `1/2 sum_j extra_j x_j^2` added.
    pub fn with_added_quadratic(&self, extra: &[f64]) -> Self {
        let coeffs: Vec<f64> = self
            .correction
            .coefficients(self.dim)
            .iter()
            .zip(extra)
            .map(|(a, b)| a + b)
            .collect();
        let mut out = self.clone();
        out.correction = if coeffs.iter().all(|c| *c == 0.0) {
            Correction::None
        } else {
            Correction::Quadratic(coeffs)
        };
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn correction(&self) -> &Correction {
        &self.correction
    }

    pub fn num_facets(&self) -> usize {
        self.normals.len()
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    /// Interior point used to start Newton iterations.
    pub fn start_point(&self) -> &[f64] {
        &self.start
    }

    pub fn facet_values(&self, x: &[f64]) -> Vec<f64> {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, o)| n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + o)
            .collect()
    }

    pub fn is_interior(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && x.iter().all(|v| v.is_finite())
            && self.facet_values(x).iter().all(|&l| l > 0.0)
    }

    /// Facet values, or a domain error when `x` is not strictly interior.
    pub fn interior_facet_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(ToricError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let ls = self.facet_values(x);
        let min = ls.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) || x.iter().any(|v| !v.is_finite()) {
            return Err(ToricError::Domain {
                point: x.to_vec(),
                min_facet: min,
            });
        }
        Ok(ls)
    }

    /// Euclidean distance from `x` to the nearest facet hyperplane.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.facet_values(x)
            .iter()
            .zip(&self.normals)
            .map(|(l, n)| l / n.iter().map(|a| a * a).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let ls = self.interior_facet_values(x)?;
        Ok(0.5 * ls.iter().map(|&l| xlogx(l)).sum::<f64>() + self.correction.value(x))
    }

    /// Value on the closed polytope; boundary terms `0 log 0` count as zero.
    pub fn value_closed(&self, x: &[f64]) -> Result<f64> {
        let ls = self.facet_values(x);
        let scale = ls.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        if ls.iter().any(|&l| l < -BOUNDARY_EPS * scale) {
            return Err(ToricError::Domain {
                point: x.to_vec(),
                min_facet: ls.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        let g = ls
            .iter()
            .map(|&l| if l <= BOUNDARY_EPS * scale { 0.0 } else { xlogx(l) })
            .sum::<f64>();
        Ok(0.5 * g + self.correction.value(x))
    }

    /// `y = grad g`.
    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        let ls = self.interior_facet_values(x)?;
        Ok(self.gradient_from(x, &ls))
    }

    fn gradient_from(&self, x: &[f64], ls: &[f64]) -> DVector<f64> {
        let c = self.correction.coefficients(self.dim);
        DVector::from_fn(self.dim, |j, _| {
            0.5 * self
                .normals
                .iter()
                .zip(ls)
                .map(|(n, &l)| n[j] * (l.ln() + 1.0))
                .sum::<f64>()
                + c[j] * x[j]
        })
    }

    /// `(g, grad g, Hess g)` from a single facet evaluation.
    pub fn local_jet(&self, x: &[f64]) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let ls = self.interior_facet_values(x)?;
        let g = 0.5 * ls.iter().map(|&l| xlogx(l)).sum::<f64>() + self.correction.value(x);
        Ok((g, self.gradient_from(x, &ls), self.hessian_from(&ls)))
    }

    /// `G = Hess g`.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let ls = self.interior_facet_values(x)?;
        Ok(self.hessian_from(&ls))
    }

    fn hessian_from(&self, ls: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        for (nu, &l) in self.normals.iter().zip(ls) {
            for j in 0..n {
                for k in 0..n {
                    g[(j, k)] += 0.5 * nu[j] * nu[k] / l;
                }
            }
        }
        for (j, c) in self.correction.coefficients(n).iter().enumerate() {
            g[(j, j)] += c;
        }
        g
    }

    /// `dG/dx_i` for each `i`: `-1/2 sum_r nu_i nu_j nu_k / l_r^2`. The
    /// quadratic correction has no third derivative.
    pub fn hessian_derivatives(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let ls = self.interior_facet_values(x)?;
        let n = self.dim;
        Ok((0..n)
            .map(|i| {
                let mut d = DMatrix::zeros(n, n);
                for (nu, &l) in self.normals.iter().zip(&ls) {
                    let w = -0.5 * nu[i] / (l * l);
                    for j in 0..n {
                        for k in 0..n {
                            d[(j, k)] += w * nu[j] * nu[k];
                        }
                    }
                }
                d
            })
            .collect())
    }

    pub fn inverse_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.hessian(x)?;
        invert_spd(&g)
    }

    pub fn legendre_forward(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.gradient(x)
    }

    /// Solves `grad g(x) = y` by damped Newton from the start point; every
    /// iterate stays interior and the residual decreases monotonically.
    pub fn legendre_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        const TOL: f64 = 1e-10;
        const MAX_ITER: usize = 200;
        if y.len() != self.dim {
            return Err(ToricError::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        let target = DVector::from_column_slice(y);
        let mut x = self.start.clone();
        let mut ls = self.interior_facet_values(&x)?;
        let mut r = self.gradient_from(&x, &ls) - &target;
        let mut res = r.norm();
        for _ in 0..MAX_ITER {
            if res <= TOL {
                return Ok(x);
            }
            let g = self.hessian_from(&ls);
            let step = g
                .cholesky()
                .ok_or_else(|| ToricError::NotPositiveDefinite("Hessian".into()))?
                .solve(&(-&r));
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-20 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
                if self.is_interior(&trial) {
                    let tls = self.facet_values(&trial);
                    let tr = self.gradient_from(&trial, &tls) - &target;
                    let tres = tr.norm();
                    if tres < res {
                        x = trial;
                        ls = tls;
                        r = tr;
                        res = tres;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res <= TOL {
            Ok(x)
        } else {
            Err(ToricError::NotConverged {
                iterations: MAX_ITER,
                residual: res,
            })
        }
    }

    /// `delta(x) = (det G(x) prod_r l_r(x))^{-1}`.
    pub fn regularity_delta(&self, x: &[f64]) -> Result<f64> {
        let ls = self.interior_facet_values(x)?;
        let det = self.hessian_from(&ls).determinant();
        // product accumulated in log space to survive many small facet values
        let log_prod: f64 = ls.iter().map(|l| l.ln()).sum();
        Ok((-(det.ln() + log_prod)).exp())
    }

    pub fn complex_structure(&self, x: &[f64]) -> Result<ComplexStructure> {
        let g = self.hessian(x)?;
        let n = self.dim;
        let ginv = invert_spd(&g)?;
        let eig = g.clone().symmetric_eigenvalues();
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e.abs()), hi.max(e.abs())));
        let condition = hi / lo;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, n), (n, n)).copy_from(&(-ginv));
        j.view_mut((n, 0), (n, n)).copy_from(&g);
        Ok(ComplexStructure {
            matrix: j,
            condition,
            ill_conditioned: condition > CONDITION_WARNING,
        })
    }

    pub fn kahler_data(&self, x: &[f64]) -> Result<KahlerPointData> {
        let g = self.value(x)?;
        let y = self.gradient(x)?;
        let hessian = self.hessian(x)?;
        let kahler_potential = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>() - g;
        let complex_structure = self.complex_structure(x)?.matrix;
        Ok(KahlerPointData {
            x: x.to_vec(),
            g,
            y,
            hessian,
            kahler_potential,
            complex_structure,
        })
    }

    /// Abreu scalar curvature `S = -1/2 sum_{jk} d_j d_k (G^{-1})_{jk}` by
    /// central differences of the analytic inverse Hessian with two levels of
    /// Richardson extrapolation. The step adapts to the distance from the
    /// boundary.
    pub fn abreu_scalar_curvature(&self, x: &[f64]) -> Result<f64> {
        self.interior_facet_values(x)?;
        let dist = self.boundary_distance(x);
        if dist < 1e-6 {
            return Err(ToricError::Domain {
                point: x.to_vec(),
                min_facet: dist,
            });
        }
        self.abreu_scalar_curvature_with_step(x, (dist / 4.0).min(0.05))
    }

    /// As [`Self::abreu_scalar_curvature`] with an explicit base step `h`; the
    /// stencil must stay at least `2h` inside the polytope.
    pub fn abreu_scalar_curvature_with_step(&self, x: &[f64], h: f64) -> Result<f64> {
        if !(h > 0.0) || self.boundary_distance(x) < 2.0 * h {
            return Err(ToricError::Domain {
                point: x.to_vec(),
                min_facet: self.boundary_distance(x),
            });
        }
        let d1 = self.second_difference_trace(x, h)?;
        let d2 = self.second_difference_trace(x, h / 2.0)?;
        let d4 = self.second_difference_trace(x, h / 4.0)?;
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d4 - d2) / 3.0;
        let sum = (16.0 * r2 - r1) / 15.0;
        Ok(-0.5 * sum)
    }

    /// `sum_{jk} d_j d_k (G^{-1})_{jk}` by a central stencil with step `h`.
    fn second_difference_trace(&self, x: &[f64], h: f64) -> Result<f64> {
        let n = self.dim;
        let shifted = |offsets: &[(usize, f64)]| -> Result<DMatrix<f64>> {
            let mut p = x.to_vec();
            for &(i, d) in offsets {
                p[i] += d;
            }
            self.inverse_hessian(&p)
        };
        let center = self.inverse_hessian(x)?;
        let mut total = 0.0;
        for j in 0..n {
            let plus = shifted(&[(j, h)])?;
            let minus = shifted(&[(j, -h)])?;
            total += (plus[(j, j)] - 2.0 * center[(j, j)] + minus[(j, j)]) / (h * h);
            for k in (j + 1)..n {
                let pp = shifted(&[(j, h), (k, h)])?;
                let pm = shifted(&[(j, h), (k, -h)])?;
                let mp = shifted(&[(j, -h), (k, h)])?;
                let mm = shifted(&[(j, -h), (k, -h)])?;
                let mixed = |m: &DMatrix<f64>| m[(j, k)] + m[(k, j)];
                total += (mixed(&pp) - mixed(&pm) - mixed(&mp) + mixed(&mm)) / (4.0 * h * h);
            }
        }
        Ok(total)
    }
}

fn xlogx(l: f64) -> f64 {
    if l <= 0.0 {
        0.0
    } else {
        l * l.ln()
    }
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn invert_spd(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| ToricError::NotPositiveDefinite(format!("{}x{} matrix", g.nrows(), g.ncols())))
}
