//! Mabuchi geodesic rays `g_s = g_0 + s H`, `H = 1/2 sum_{j<=p} x_j^2`, and
//! their infinite-time limits.
//!
//! Along the ray the Hessian is `G_s = G + s T` with `T = diag(I_p, 0)`. Writing
//! `G = [[A1, A2], [A3, D]]`, the inverse of `G_s` is assembled from the Schur
//! complement `S(s) = A1 + s I - A2 D^{-1} A3`, which makes the limit
//! `G_s^{-1} -> diag(0, D^{-1})` explicit. Polarizations are stored as generator
//! matrices and only compared through principal angles.

use nalgebra::{Complex, DMatrix};

use crate::error::{Result, ToricError};
use crate::polytope::{DelzantPolytope, FrameChange, VertexChart};
use crate::potential::{invert_spd, SymplecticPotential};

pub type C64 = Complex<f64>;

/// Condition number past which the Schur complement counts as singular.
const SCHUR_CONDITION_LIMIT: f64 = 1e14;

#[derive(Clone, Debug, PartialEq)]
pub struct MabuchiRay {
    base: SymplecticPotential,
    p: usize,
}

impl MabuchiRay {
    pub fn new(base: SymplecticPotential, p: usize) -> Result<Self> {
        if p == 0 || p > base.dim() {
            return Err(ToricError::invalid(
                "p",
                format!("need 1 <= p <= {}, got {p}", base.dim()),
            ));
        }
        Ok(Self { base, p })
    }

    /// Guillemin ray on the frame-changed polytope, with `p` from the frame.
    pub fn from_polytope(poly: &DelzantPolytope, frame: &FrameChange) -> Result<Self> {
        let tilde = poly.apply_frame_change(frame)?;
        Self::new(SymplecticPotential::guillemin(&tilde)?, frame.p())
    }

    pub fn base(&self) -> &SymplecticPotential {
        &self.base
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `H(x) = 1/2 sum_{j<=p} x_j^2`.
    pub fn hamiltonian(&self, x: &[f64]) -> f64 {
        0.5 * x[..self.p].iter().map(|v| v * v).sum::<f64>()
    }

    /// The potential `g_s = g_0 + s H`.
    pub fn potential_at(&self, s: f64) -> Result<SymplecticPotential> {
        check_time(s)?;
        let extra: Vec<f64> = (0..self.dim())
            .map(|j| if j < self.p { s } else { 0.0 })
            .collect();
        Ok(self.base.with_added_quadratic(&extra))
    }

    /// Blocks of the base Hessian at `x`.
    pub fn blocks_at(&self, x: &[f64]) -> Result<HessianBlocks> {
        HessianBlocks::split(&self.base.hessian(x)?, self.p)
    }
}

fn check_time(s: f64) -> Result<()> {
    if s.is_finite() && s >= 0.0 {
        Ok(())
    } else {
        Err(ToricError::invalid("s", format!("geodesic time must be finite and >= 0, got {s}")))
    }
}

/// `G = [[A1, A2], [A3, D]]` with `A1` of size `p x p`.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianBlocks {
    pub p: usize,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub a3: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl HessianBlocks {
    pub fn split(g: &DMatrix<f64>, p: usize) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(ToricError::DimensionMismatch {
                expected: n,
                got: g.ncols(),
            });
        }
        if p == 0 || p > n {
            return Err(ToricError::invalid("p", format!("need 1 <= p <= {n}, got {p}")));
        }
        let q = n - p;
        let d = g.view((p, p), (q, q)).into_owned();
        if q > 0 && d.clone().cholesky().is_none() {
            return Err(ToricError::NotPositiveDefinite("lower block D".into()));
        }
        Ok(Self {
            p,
            a1: g.view((0, 0), (p, p)).into_owned(),
            a2: g.view((0, p), (p, q)).into_owned(),
            a3: g.view((p, 0), (q, p)).into_owned(),
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.p + self.d.nrows()
    }

    pub fn reassemble(&self) -> DMatrix<f64> {
        let (n, p) = (self.dim(), self.p);
        let q = n - p;
        let mut g = DMatrix::zeros(n, n);
        g.view_mut((0, 0), (p, p)).copy_from(&self.a1);
        g.view_mut((0, p), (p, q)).copy_from(&self.a2);
        g.view_mut((p, 0), (q, p)).copy_from(&self.a3);
        g.view_mut((p, p), (q, q)).copy_from(&self.d);
        g
    }

    /// `G + s T`.
    pub fn shifted(&self, s: f64) -> DMatrix<f64> {
        let mut g = self.reassemble();
        for j in 0..self.p {
            g[(j, j)] += s;
        }
        g
    }

    fn d_inverse(&self) -> Result<DMatrix<f64>> {
        if self.d.nrows() == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        invert_spd(&self.d)
    }

    /// `S(s) = A1 + s I - A2 D^{-1} A3`.
    pub fn schur_complement(&self, s: f64) -> Result<DMatrix<f64>> {
        let dinv = self.d_inverse()?;
        let mut schur = &self.a1 - &self.a2 * &dinv * &self.a3;
        for j in 0..self.p {
            schur[(j, j)] += s;
        }
        Ok(schur)
    }
}

/// Block inverse of `G + s T` through the Schur complement.
pub fn inverse_hessian_s(blocks: &HessianBlocks, s: f64) -> Result<DMatrix<f64>> {
    let (n, p) = (blocks.dim(), blocks.p);
    let q = n - p;
    let dinv = blocks.d_inverse()?;
    let schur = blocks.schur_complement(s)?;
    let schur_inv = schur.clone().try_inverse().ok_or(ToricError::Singular {
        condition: f64::INFINITY,
    })?;
    let condition = schur.norm() * schur_inv.norm();
    if !condition.is_finite() || condition > SCHUR_CONDITION_LIMIT {
        return Err(ToricError::Singular { condition });
    }
    let upper_right = -&schur_inv * &blocks.a2 * &dinv;
    let lower_left = -&dinv * &blocks.a3 * &schur_inv;
    let lower_right = &dinv + &dinv * &blocks.a3 * &schur_inv * &blocks.a2 * &dinv;
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (p, p)).copy_from(&schur_inv);
    out.view_mut((0, p), (p, q)).copy_from(&upper_right);
    out.view_mut((p, 0), (q, p)).copy_from(&lower_left);
    out.view_mut((p, p), (q, q)).copy_from(&lower_right);
    Ok(out)
}

/// `lim_{s -> inf} (G + s T)^{-1} = diag(0, D^{-1})`.
pub fn inverse_hessian_limit(blocks: &HessianBlocks) -> Result<DMatrix<f64>> {
    let (n, p) = (blocks.dim(), blocks.p);
    let q = n - p;
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((p, p), (q, q)).copy_from(&blocks.d_inverse()?);
    Ok(out)
}

/// `(det(G + s T), s^p det D)`; the ratio tends to one.
pub fn det_growth_check(blocks: &HessianBlocks, s: f64) -> (f64, f64) {
    let full = blocks.shifted(s).determinant();
    let det_d = if blocks.d.nrows() == 0 {
        1.0
    } else {
        blocks.d.determinant()
    };
    (full, s.powi(blocks.p as i32) * det_d)
}

/// `n` generators of a Lagrangian subspace of `C^{2n}` in the coordinates
/// `(d/dx_1..d/dx_n, d/dtheta_1..d/dtheta_n)`. Only the span is meaningful.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationFrame {
    pub basepoint: Vec<f64>,
    pub generators: DMatrix<C64>,
}

impl PolarizationFrame {
    /// Frame with rows `[M | i I]`.
    pub fn from_real_block(basepoint: &[f64], m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut gens = DMatrix::from_element(n, 2 * n, C64::new(0.0, 0.0));
        for j in 0..n {
            for k in 0..n {
                gens[(j, k)] = C64::new(m[(j, k)], 0.0);
            }
            gens[(j, n + j)] = C64::new(0.0, 1.0);
        }
        Self {
            basepoint: basepoint.to_vec(),
            generators: gens,
        }
    }

    /// Frame with rows `[I | i M]` (row-equivalent to `[M^{-1} | i I]`).
    pub fn from_holomorphic_block(basepoint: &[f64], m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut gens = DMatrix::from_element(n, 2 * n, C64::new(0.0, 0.0));
        for j in 0..n {
            gens[(j, j)] = C64::new(1.0, 0.0);
            for k in 0..n {
                gens[(j, n + k)] = C64::new(0.0, m[(j, k)]);
            }
        }
        Self {
            basepoint: basepoint.to_vec(),
            generators: gens,
        }
    }

    pub fn dim(&self) -> usize {
        self.generators.nrows()
    }

    /// Largest `|omega(v, w)|` over generator pairs, `omega = sum dx_j ^ dtheta_j`
    /// extended complex-bilinearly.
    pub fn lagrangian_defect(&self) -> f64 {
        let n = self.dim();
        let g = &self.generators;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let mut w = C64::new(0.0, 0.0);
                for j in 0..n {
                    w += g[(a, j)] * g[(b, n + j)] - g[(a, n + j)] * g[(b, j)];
                }
                worst = worst.max(w.norm());
            }
        }
        worst
    }

    /// Orthonormal basis (columns) of the span of the generators.
    fn orthonormal_basis(&self) -> Result<DMatrix<C64>> {
        let n = self.dim();
        let m = self.generators.transpose();
        let qr = m.qr();
        let r = qr.r();
        let scale = (0..n).map(|i| r[(i, i)].norm()).fold(0.0f64, f64::max);
        let rank = (0..n)
            .filter(|&i| r[(i, i)].norm() > 1e-12 * scale.max(1e-300))
            .count();
        if rank < n {
            return Err(ToricError::RankDeficient { rank, expected: n });
        }
        Ok(qr.q())
    }
}

/// Largest principal angle between the spans of two frames.
pub fn grassmann_distance(f1: &PolarizationFrame, f2: &PolarizationFrame) -> Result<f64> {
    if f1.generators.shape() != f2.generators.shape() {
        return Err(ToricError::DimensionMismatch {
            expected: f1.generators.nrows(),
            got: f2.generators.nrows(),
        });
    }
    if f1.basepoint.len() != f2.basepoint.len()
        || f1.basepoint.iter().zip(&f2.basepoint).any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(ToricError::invalid("basepoint", "frames live over different points"));
    }
    let q1 = f1.orthonormal_basis()?;
    let q2 = f2.orthonormal_basis()?;
    let cross = q2.adjoint() * &q1;
    let cos_min = cross
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .min(1.0);
    let residual = &q1 - &q2 * &cross;
    let sin_max = residual
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
        .min(1.0);
    Ok(sin_max.atan2(cos_min))
}

/// Kähler polarization of `g_s` at `x`: rows `[G_s^{-1} | i I]`.
pub fn polarization_frame_s(ray: &MabuchiRay, x: &[f64], s: f64) -> Result<PolarizationFrame> {
    check_time(s)?;
    let blocks = ray.blocks_at(x)?;
    Ok(PolarizationFrame::from_real_block(x, &inverse_hessian_s(&blocks, s)?))
}

/// Limit mixed polarization at `x`: rows `[diag(0, D^{-1}) | i I]`.
pub fn polarization_frame_limit(ray: &MabuchiRay, x: &[f64]) -> Result<PolarizationFrame> {
    let blocks = ray.blocks_at(x)?;
    Ok(PolarizationFrame::from_real_block(x, &inverse_hessian_limit(&blocks)?))
}

/// `Theta = sum_k c_k dtheta_k` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionFormValue {
    pub basepoint: Vec<f64>,
    pub coefficients: Vec<C64>,
}

impl ConnectionFormValue {
    pub fn distance(&self, other: &Self) -> f64 {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `d/dx_j log det G_s = tr(G_s^{-1} dG/dx_j)` from the closed-form third
/// derivatives.
pub fn log_det_gradient_s(ray: &MabuchiRay, x: &[f64], s: f64) -> Result<Vec<f64>> {
    check_time(s)?;
    let ginv = inverse_hessian_s(&ray.blocks_at(x)?, s)?;
    let dg = ray.base().hessian_derivatives(x)?;
    Ok(dg.iter().map(|d| (&ginv * d).trace()).collect())
}

/// `Theta_0^s = -i x . dtheta + (i/4) (d log det G_s) . G_s^{-1} dtheta`.
pub fn connection_form_s(ray: &MabuchiRay, x: &[f64], s: f64) -> Result<ConnectionFormValue> {
    check_time(s)?;
    let ginv = inverse_hessian_s(&ray.blocks_at(x)?, s)?;
    let dg = ray.base().hessian_derivatives(x)?;
    let grad: Vec<f64> = dg.iter().map(|d| (&ginv * d).trace()).collect();
    let n = ray.dim();
    let coefficients = (0..n)
        .map(|k| {
            let corr: f64 = (0..n).map(|j| grad[j] * ginv[(j, k)]).sum();
            C64::new(0.0, -x[k] + 0.25 * corr)
        })
        .collect();
    Ok(ConnectionFormValue {
        basepoint: x.to_vec(),
        coefficients,
    })
}

/// `d/dx_j log det D = tr(D^{-1} dD/dx_j)` for all `j`.
fn log_det_d_gradient(ray: &MabuchiRay, x: &[f64], blocks: &HessianBlocks) -> Result<Vec<f64>> {
    let (n, p) = (ray.dim(), ray.p());
    let q = n - p;
    if q == 0 {
        return Ok(vec![0.0; n]);
    }
    let dinv = invert_spd(&blocks.d)?;
    let dg = ray.base().hessian_derivatives(x)?;
    Ok(dg
        .iter()
        .map(|d| (&dinv * d.view((p, p), (q, q))).trace())
        .collect())
}

/// Limit connection form on the open orbit:
/// `-i x . dtheta + (i/4) sum_{j,k>p} (d_j log det D) D^{-1}_{j-p,k-p} dtheta_k`.
/// The first `p` coefficients are exactly `-i x_k`.
pub fn connection_form_limit(ray: &MabuchiRay, x: &[f64]) -> Result<ConnectionFormValue> {
    let (n, p) = (ray.dim(), ray.p());
    let blocks = ray.blocks_at(x)?;
    let grad = log_det_d_gradient(ray, x, &blocks)?;
    let dinv = blocks.d_inverse()?;
    let coefficients = (0..n)
        .map(|k| {
            if k < p {
                C64::new(0.0, -x[k])
            } else {
                let corr: f64 = (p..n).map(|j| grad[j] * dinv[(j - p, k - p)]).sum();
                C64::new(0.0, -x[k] + 0.25 * corr)
            }
        })
        .collect();
    Ok(ConnectionFormValue {
        basepoint: x.to_vec(),
        coefficients,
    })
}

/// Limit connection form in a vertex chart `x_v = A_v x + lambda_v`, in the
/// `dtheta_v` coframe:
/// `-i x_v + (i/2) 1 + (i/4) sum (d log det D / d x_v^j) (A_v)_{jq} D^{-1}_{q-p,l-p} (A_v)_{il}`.
/// Only defined at interior points of the chart.
pub fn connection_form_limit_vertex(
    ray: &MabuchiRay,
    chart: &VertexChart,
    x: &[f64],
) -> Result<ConnectionFormValue> {
    let (n, p) = (ray.dim(), ray.p());
    let blocks = ray.blocks_at(x)?;
    let grad = log_det_d_gradient(ray, x, &blocks)?;
    let dinv = blocks.d_inverse()?;
    let a = DMatrix::from_fn(n, n, |i, j| chart.matrix[i][j] as f64);
    let a_inv = a
        .clone()
        .try_inverse()
        .ok_or(ToricError::Singular { condition: f64::INFINITY })?;
    // chain rule: d/dx_v^j = sum_k (A_v^{-1})_{kj} d/dx_k
    let grad_v: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|k| a_inv[(k, j)] * grad[k]).sum())
        .collect();
    let xv = chart.apply(x);
    let coefficients = (0..n)
        .map(|i| {
            let mut corr = 0.0;
            for (j, gj) in grad_v.iter().enumerate() {
                for qq in p..n {
                    for l in p..n {
                        corr += gj * a[(j, qq)] * dinv[(qq - p, l - p)] * a[(i, l)];
                    }
                }
            }
            C64::new(0.0, -xv[i] + 0.5 + 0.25 * corr)
        })
        .collect();
    Ok(ConnectionFormValue {
        basepoint: x.to_vec(),
        coefficients,
    })
}
