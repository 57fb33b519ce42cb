//! Delzant polytopes in half-space form `l_r(x) = <x, nu_r> + lambda_r >= 0`.
//!
//! Everything combinatorial here is exact: offsets are rationals (the
//! corrected polytope has half-integral offsets), vertices are found by
//! solving every active-set system over the rationals, and lattice points are
//! enumerated by scanning the integer bounding box.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Result, ToricError};
use crate::exact::{
    self, dot, format_rational, gcd_of, is_nonnegative, null_space, parse_rational, rank, rat,
    solve, to_f64, Rational,
};
use num_traits::{Signed, Zero};

/// One facet inequality `<x, normal> + offset >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: Rational,
}

impl Facet {
    pub fn new(normal: Vec<i64>, offset: Rational) -> Self {
        Self { normal, offset }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.normal
            .iter()
            .zip(x)
            .map(|(&a, b)| rat(a as i128) * b)
            .sum::<Rational>()
            + self.offset
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(x)
            .map(|(&a, b)| a as f64 * b)
            .sum::<f64>()
            + to_f64(&self.offset)
    }
}

/// A vertex of a half-space system together with every facet active there.
#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub point: Vec<Rational>,
    pub active: Vec<usize>,
}

impl Vertex {
    pub fn point_f64(&self) -> Vec<f64> {
        self.point.iter().map(to_f64).collect()
    }
}

/// Rational half-space system `<x, a_j> + b_j >= 0`; the common engine behind
/// Delzant polytopes and their slices.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpaces {
    pub dim: usize,
    pub normals: Vec<Vec<Rational>>,
    pub offsets: Vec<Rational>,
}

impl HalfSpaces {
    pub fn new(dim: usize, normals: Vec<Vec<Rational>>, offsets: Vec<Rational>) -> Self {
        debug_assert_eq!(normals.len(), offsets.len());
        Self {
            dim,
            normals,
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn eval(&self, j: usize, x: &[Rational]) -> Rational {
        dot(&self.normals[j], x) + self.offsets[j]
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        (0..self.len()).all(|j| is_nonnegative(&self.eval(j, x)))
    }

    /// All vertices, sorted lexicographically, each with its full active set.
    pub fn vertices(&self) -> Vec<Vertex> {
        let n = self.dim;
        let d = self.len();
        let mut found: BTreeMap<Vec<Rational>, ()> = BTreeMap::new();
        if n == 0 {
            return Vec::new();
        }
        for combo in combinations(d, n) {
            let a: Vec<Vec<Rational>> = combo.iter().map(|&j| self.normals[j].clone()).collect();
            let b: Vec<Rational> = combo.iter().map(|&j| -self.offsets[j]).collect();
            if let Some(x) = solve(&a, &b) {
                if self.contains(&x) {
                    found.insert(x, ());
                }
            }
        }
        found
            .into_keys()
            .map(|point| {
                let active = (0..d).filter(|&j| self.eval(j, &point).is_zero()).collect();
                Vertex { point, active }
            })
            .collect()
    }

    /// Extreme rays of the recession cone `{u : <u, a_j> >= 0}`; `None` when the
    /// cone contains a line.
    pub fn recession_rays(&self) -> Option<Vec<Vec<Rational>>> {
        let n = self.dim;
        if rank(&self.normals, n) < n {
            return None;
        }
        let mut rays = Vec::new();
        for combo in combinations(self.len(), n - 1) {
            let rows: Vec<Vec<Rational>> =
                combo.iter().map(|&j| self.normals[j].clone()).collect();
            let ns = null_space(&rows, n);
            if ns.len() != 1 {
                continue;
            }
            for sign in [1, -1] {
                let u: Vec<Rational> = ns[0].iter().map(|v| v * rat(sign)).collect();
                if self.normals.iter().all(|a| is_nonnegative(&dot(a, &u))) && !rays.contains(&u)
                {
                    rays.push(u);
                }
            }
        }
        Some(rays)
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.recession_rays(), Some(r) if r.is_empty())
    }

    /// A strict interior point if one exists (vertex average pushed along the
    /// recession rays for unbounded systems).
    pub fn interior_point(&self) -> Option<Vec<Rational>> {
        let verts = self.vertices();
        if verts.is_empty() {
            return None;
        }
        let n = self.dim;
        let mut c = vec![Rational::zero(); n];
        for v in &verts {
            for (ci, vi) in c.iter_mut().zip(&v.point) {
                *ci += vi;
            }
        }
        let count = rat(verts.len() as i128);
        for ci in c.iter_mut() {
            *ci /= count;
        }
        for ray in self.recession_rays().unwrap_or_default() {
            for (ci, ri) in c.iter_mut().zip(&ray) {
                *ci += ri;
            }
        }
        let strict = (0..self.len()).all(|j| self.eval(j, &c).is_positive());
        strict.then_some(c)
    }

    /// Integer bounding box `[lo, hi]` from the vertices (bounded systems only).
    pub fn integer_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let verts = self.vertices();
        if verts.is_empty() {
            return None;
        }
        let n = self.dim;
        let mut lo = vec![i64::MAX; n];
        let mut hi = vec![i64::MIN; n];
        for v in &verts {
            for k in 0..n {
                lo[k] = lo[k].min(v.point[k].floor().to_integer() as i64);
                hi[k] = hi[k].max(v.point[k].ceil().to_integer() as i64);
            }
        }
        Some((lo, hi))
    }

    /// Lattice points in lexicographic order.
    pub fn lattice_points(&self) -> Result<Vec<Vec<i64>>> {
        if !self.is_bounded() {
            return Err(ToricError::Unbounded);
        }
        let Some((lo, hi)) = self.integer_box() else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for m in BoxIter::new(lo, hi) {
            let q: Vec<Rational> = m.iter().map(|&v| rat(v as i128)).collect();
            if self.contains(&q) {
                out.push(m);
            }
        }
        Ok(out)
    }
}

/// Lexicographic iteration over an integer box (last coordinate fastest).
pub struct BoxIter {
    lo: Vec<i64>,
    hi: Vec<i64>,
    cur: Option<Vec<i64>>,
}

impl BoxIter {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        let cur = lo.iter().zip(&hi).all(|(a, b)| a <= b).then(|| lo.clone());
        Self { lo, hi, cur }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let cur = self.cur.take()?;
        let mut next = cur.clone();
        let mut k = next.len();
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            if next[k] < self.hi[k] {
                next[k] += 1;
                self.cur = Some(next);
                break;
            }
            next[k] = self.lo[k];
        }
        Some(cur)
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// A polytope given by integer primitive inward normals and rational offsets.
///
/// The struct only enforces syntactic well-formedness; the Delzant conditions
/// are checked by [`DelzantPolytope::validate`], which returns a report rather
/// than failing, so that non-Delzant inputs can still be inspected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelzantPolytope {
    pub dim: usize,
    pub facets: Vec<Facet>,
    pub name: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Delzant,
    NotDelzant,
    NonPrimitive,
    Redundant,
    Unbounded,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexReport {
    pub point: Vec<String>,
    pub active: Vec<usize>,
    /// Determinant of the active normals; `None` unless exactly `n` are active.
    pub det: Option<i64>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub verdict: Verdict,
    pub vertices: Vec<VertexReport>,
    pub redundant: Vec<usize>,
    pub non_primitive: Vec<usize>,
}

impl ValidationReport {
    pub fn violations(&self) -> impl Iterator<Item = &VertexReport> {
        self.vertices.iter().filter(|v| !v.ok)
    }
}

/// Element of `SL(n, Z)` whose first `p` rows pick the subtorus directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameChange {
    matrix: Vec<Vec<i64>>,
    inverse: Vec<Vec<i64>>,
    p: usize,
}

impl FrameChange {
    pub fn new(matrix: Vec<Vec<i64>>, p: usize) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|r| r.len() != n) {
            return Err(ToricError::invalid("B", "frame change must be a square matrix"));
        }
        if p == 0 || p > n {
            return Err(ToricError::invalid("p", format!("need 1 <= p <= {n}, got {p}")));
        }
        let det = exact::int_det(&matrix);
        if det != 1 {
            return Err(ToricError::InvalidFrameChange { det });
        }
        let inverse = exact::unimodular_inverse(&matrix)?;
        Ok(Self { matrix, inverse, p })
    }

    pub fn identity(n: usize, p: usize) -> Result<Self> {
        let m = (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
            .collect();
        Self::new(m, p)
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn inverse(&self) -> &[Vec<i64>] {
        &self.inverse
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    /// `x~ = B x`.
    pub fn map_point(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(x).map(|(&b, v)| b as f64 * v).sum())
            .collect()
    }

    /// `nu~ = (B^T)^{-1} nu`.
    pub fn map_normal(&self, normal: &[i64]) -> Vec<i64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|k| self.inverse[k][i] * normal[k]).sum())
            .collect()
    }
}

/// Local chart at a vertex: `x_v = A_v x + lambda_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexChart {
    pub vertex: Vec<Rational>,
    /// Rows are the normals active at the vertex, in facet order.
    pub matrix: Vec<Vec<i64>>,
    pub offsets: Vec<Rational>,
    pub facets: Vec<usize>,
}

impl VertexChart {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offsets)
            .map(|(row, off)| {
                row.iter().zip(x).map(|(&a, v)| a as f64 * v).sum::<f64>() + to_f64(off)
            })
            .collect()
    }

    pub fn apply_exact(&self, x: &[Rational]) -> Vec<Rational> {
        self.matrix
            .iter()
            .zip(&self.offsets)
            .map(|(row, off)| {
                row.iter()
                    .zip(x)
                    .map(|(&a, v)| rat(a as i128) * v)
                    .sum::<Rational>()
                    + off
            })
            .collect()
    }
}

/// Affine parametrisation `x = E y + t` of a level set; `E` is `n x k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceMap {
    pub basis: Vec<Vec<Rational>>,
    pub translation: Vec<Rational>,
}

impl SliceMap {
    /// Level set `x_{1..p} = c`, parametrised by `y = x_{p+1..n}`.
    pub fn axis(n: usize, p: usize, c: &[Rational]) -> Self {
        let k = n - p;
        let basis = (0..n)
            .map(|i| {
                (0..k)
                    .map(|j| if i >= p && i - p == j { rat(1) } else { rat(0) })
                    .collect()
            })
            .collect();
        let mut translation = vec![rat(0); n];
        translation[..p].copy_from_slice(c);
        Self { basis, translation }
    }

    /// Hyperplane `x_n = sum_i coeffs_i x_i + c`, parametrised by `x_1..x_{n-1}`.
    pub fn hyperplane(coeffs: &[Rational], c: Rational) -> Self {
        let k = coeffs.len();
        let n = k + 1;
        let mut basis = vec![vec![rat(0); k]; n];
        for i in 0..k {
            basis[i][i] = rat(1);
            basis[k][i] = coeffs[i];
        }
        let mut translation = vec![rat(0); n];
        translation[k] = c;
        Self { basis, translation }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn slice_dim(&self) -> usize {
        self.basis.first().map_or(0, |r| r.len())
    }

    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .zip(&self.translation)
            .map(|(row, t)| row.iter().zip(y).map(|(e, v)| to_f64(e) * v).sum::<f64>() + to_f64(t))
            .collect()
    }
}

/// One inherited facet of a slice, `<y, b_j> + lambda~_j >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceFacet {
    pub normal: Vec<Rational>,
    pub offset: Rational,
    /// Index of the ambient facet it came from.
    pub source: usize,
}

impl SliceFacet {
    pub fn integer_normal(&self) -> Option<Vec<i64>> {
        self.normal
            .iter()
            .map(|q| q.is_integer().then(|| q.to_integer() as i64))
            .collect()
    }
}

/// The level-set polytope inside an ambient polytope. Normals need not be
/// primitive, and the Delzant condition may fail.
#[derive(Clone, Debug, PartialEq)]
pub struct SlicePolytope {
    pub dim: usize,
    pub facets: Vec<SliceFacet>,
    pub map: SliceMap,
    /// A dropped facet had zero normal and negative offset.
    pub infeasible: bool,
}

impl SlicePolytope {
    pub fn halfspaces(&self) -> HalfSpaces {
        HalfSpaces::new(
            self.dim,
            self.facets.iter().map(|f| f.normal.clone()).collect(),
            self.facets.iter().map(|f| f.offset).collect(),
        )
    }

    pub fn is_empty(&self) -> bool {
        if self.infeasible {
            return true;
        }
        if self.facets.is_empty() {
            return false;
        }
        self.halfspaces().vertices().is_empty()
    }

    /// True when the slice has a strict interior point in its own dimension.
    pub fn has_interior(&self) -> bool {
        !self.infeasible && (self.facets.is_empty() || self.halfspaces().interior_point().is_some())
    }

    pub fn lattice_points(&self) -> Result<Vec<Vec<i64>>> {
        if self.infeasible {
            return Ok(Vec::new());
        }
        self.halfspaces().lattice_points()
    }
}

impl DelzantPolytope {
    pub fn new(dim: usize, facets: Vec<Facet>) -> Result<Self> {
        if dim == 0 {
            return Err(ToricError::invalid("dim", "dimension must be positive"));
        }
        for (r, f) in facets.iter().enumerate() {
            if f.normal.len() != dim {
                return Err(ToricError::invalid(
                    format!("facets[{r}].normal"),
                    format!("expected {dim} entries, got {}", f.normal.len()),
                ));
            }
            if f.normal.iter().all(|&a| a == 0) {
                return Err(ToricError::invalid(
                    format!("facets[{r}].normal"),
                    "normal must be nonzero",
                ));
            }
        }
        Ok(Self {
            dim,
            facets,
            name: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Segment `[lo, hi]`.
    pub fn interval(lo: Rational, hi: Rational) -> Self {
        Self::new(1, vec![Facet::new(vec![1], -lo), Facet::new(vec![-1], hi)])
            .expect("interval facets are well formed")
    }

    /// Box `prod [lo_i, hi_i]` with facets ordered `x_i >= lo_i`, `x_i <= hi_i`.
    pub fn cube(bounds: &[(Rational, Rational)]) -> Self {
        let n = bounds.len();
        let mut facets = Vec::with_capacity(2 * n);
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            facets.push(Facet::new(e.clone(), -lo));
            e[i] = -1;
            facets.push(Facet::new(e, hi));
        }
        Self::new(n, facets).expect("box facets are well formed")
    }

    /// Standard simplex `{x_i >= 0, sum x_i <= size}`.
    pub fn simplex(n: usize, size: Rational) -> Self {
        let mut facets: Vec<Facet> = (0..n)
            .map(|i| {
                let mut e = vec![0; n];
                e[i] = 1;
                Facet::new(e, rat(0))
            })
            .collect();
        facets.push(Facet::new(vec![-1; n], size));
        Self::new(n, facets).expect("simplex facets are well formed")
    }

    pub fn halfspaces(&self) -> HalfSpaces {
        HalfSpaces::new(
            self.dim,
            self.facets
                .iter()
                .map(|f| f.normal.iter().map(|&a| rat(a as i128)).collect())
                .collect(),
            self.facets.iter().map(|f| f.offset).collect(),
        )
    }

    pub fn facet_values(&self, x: &[f64]) -> Vec<f64> {
        self.facets.iter().map(|f| f.eval_f64(x)).collect()
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        self.halfspaces().vertices()
    }

    pub fn is_bounded(&self) -> bool {
        self.halfspaces().is_bounded()
    }

    /// Average of the vertices (an interior point for full-dimensional bounded
    /// polytopes).
    pub fn barycenter(&self) -> Vec<f64> {
        let verts = self.vertices();
        let mut c = vec![0.0; self.dim];
        for v in &verts {
            for (ci, vi) in c.iter_mut().zip(v.point_f64()) {
                *ci += vi;
            }
        }
        let k = verts.len().max(1) as f64;
        c.iter().map(|v| v / k).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let hs = self.halfspaces();
        let n = self.dim;
        let non_primitive: Vec<usize> = self
            .facets
            .iter()
            .enumerate()
            .filter(|(_, f)| gcd_of(&f.normal).abs() != 1)
            .map(|(r, _)| r)
            .collect();

        let fail = |verdict| ValidationReport {
            ok: false,
            verdict,
            vertices: Vec::new(),
            redundant: Vec::new(),
            non_primitive: non_primitive.clone(),
        };
        if !hs.is_bounded() {
            return fail(Verdict::Unbounded);
        }
        if hs.interior_point().is_none() {
            return fail(Verdict::Empty);
        }

        let verts = hs.vertices();
        let vertex_reports: Vec<VertexReport> = verts
            .iter()
            .map(|v| {
                let det = (v.active.len() == n).then(|| {
                    let rows: Vec<Vec<i64>> =
                        v.active.iter().map(|&r| self.facets[r].normal.clone()).collect();
                    exact::int_det(&rows)
                });
                VertexReport {
                    point: v.point.iter().map(format_rational).collect(),
                    active: v.active.clone(),
                    det,
                    ok: matches!(det, Some(d) if d.abs() == 1),
                }
            })
            .collect();

        let mut redundant = Vec::new();
        for r in 0..self.facets.len() {
            let duplicate = self.facets[..r].iter().any(|f| *f == self.facets[r]);
            let face: Vec<&Vertex> = verts.iter().filter(|v| v.active.contains(&r)).collect();
            let essential = !duplicate && affine_rank(&face) + 1 == n;
            if !essential {
                redundant.push(r);
            }
        }

        let verdict = if !non_primitive.is_empty() {
            Verdict::NonPrimitive
        } else if !redundant.is_empty() {
            Verdict::Redundant
        } else if vertex_reports.iter().any(|v| !v.ok) {
            Verdict::NotDelzant
        } else {
            Verdict::Delzant
        };
        ValidationReport {
            ok: verdict == Verdict::Delzant,
            verdict,
            vertices: vertex_reports,
            redundant,
            non_primitive,
        }
    }

    pub fn require_delzant(&self) -> Result<()> {
        let report = self.validate();
        match report.verdict {
            Verdict::Delzant => Ok(()),
            Verdict::Unbounded => Err(ToricError::Unbounded),
            Verdict::Empty => Err(ToricError::EmptyInterior),
            other => Err(ToricError::NotDelzant(format!("{other:?}"))),
        }
    }

    pub fn lattice_points(&self) -> Result<Vec<Vec<i64>>> {
        self.halfspaces().lattice_points()
    }

    /// Shifts every offset by one half; the lattice points are unchanged when
    /// the input has integral vertices.
    pub fn corrected(&self) -> Result<Self> {
        self.require_delzant()?;
        if let Some(v) = self
            .vertices()
            .iter()
            .find(|v| v.point.iter().any(|q| !q.is_integer()))
        {
            return Err(ToricError::invalid(
                "facets",
                format!(
                    "line-bundle polytope must have integral vertices, found {:?}",
                    v.point.iter().map(format_rational).collect::<Vec<_>>()
                ),
            ));
        }
        let half = Rational::new(1, 2);
        Ok(Self {
            dim: self.dim,
            facets: self
                .facets
                .iter()
                .map(|f| Facet::new(f.normal.clone(), f.offset + half))
                .collect(),
            name: self.name.as_ref().map(|n| format!("{n} (corrected)")),
        })
    }

    pub fn apply_frame_change(&self, fc: &FrameChange) -> Result<Self> {
        if fc.dim() != self.dim {
            return Err(ToricError::DimensionMismatch {
                expected: self.dim,
                got: fc.dim(),
            });
        }
        Ok(Self {
            dim: self.dim,
            facets: self
                .facets
                .iter()
                .map(|f| Facet::new(fc.map_normal(&f.normal), f.offset))
                .collect(),
            name: self.name.clone(),
        })
    }

    /// Chart at the `index`-th vertex in lexicographic vertex order.
    pub fn vertex_chart(&self, index: usize) -> Result<VertexChart> {
        let verts = self.vertices();
        let v = verts.get(index).ok_or_else(|| {
            ToricError::invalid(
                "vertex_index",
                format!("{index} out of range ({} vertices)", verts.len()),
            )
        })?;
        let matrix: Vec<Vec<i64>> = v
            .active
            .iter()
            .map(|&r| self.facets[r].normal.clone())
            .collect();
        let det = if v.active.len() == self.dim {
            exact::int_det(&matrix)
        } else {
            0
        };
        if det.abs() != 1 {
            return Err(ToricError::NonDelzantVertex {
                vertex: v.point.iter().map(format_rational).collect(),
                active: v.active.len(),
                det,
            });
        }
        Ok(VertexChart {
            vertex: v.point.clone(),
            offsets: v.active.iter().map(|&r| self.facets[r].offset).collect(),
            facets: v.active.clone(),
            matrix,
        })
    }

    /// Restriction to `x = E y + t`.
    pub fn slice(&self, map: &SliceMap) -> SlicePolytope {
        let k = map.slice_dim();
        let mut facets = Vec::new();
        let mut infeasible = false;
        for (j, f) in self.facets.iter().enumerate() {
            let normal: Vec<Rational> = (0..k)
                .map(|col| {
                    f.normal
                        .iter()
                        .zip(&map.basis)
                        .map(|(&a, row)| rat(a as i128) * row[col])
                        .sum()
                })
                .collect();
            let offset = f.eval(&map.translation);
            if normal.iter().all(|q| q.is_zero()) {
                if offset.is_negative() {
                    infeasible = true;
                }
                continue;
            }
            facets.push(SliceFacet {
                normal,
                offset,
                source: j,
            });
        }
        SlicePolytope {
            dim: k,
            facets,
            map: map.clone(),
            infeasible,
        }
    }

    /// Level set `x_{1..p} = c`.
    pub fn axis_slice(&self, p: usize, c: &[Rational]) -> Result<SlicePolytope> {
        if p == 0 || p >= self.dim {
            return Err(ToricError::invalid(
                "p",
                format!("axis slice needs 1 <= p < {}, got {p}", self.dim),
            ));
        }
        if c.len() != p {
            return Err(ToricError::DimensionMismatch {
                expected: p,
                got: c.len(),
            });
        }
        Ok(self.slice(&SliceMap::axis(self.dim, p, c)))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| ToricError::invalid("<json>", e.to_string()))?;
        Self::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| ToricError::invalid("<root>", "expected a JSON object"))?;
        let dim = obj
            .get("dim")
            .ok_or_else(|| ToricError::invalid("dim", "missing"))?
            .as_u64()
            .ok_or_else(|| ToricError::invalid("dim", "expected a positive integer"))?
            as usize;
        let facets_val = obj
            .get("facets")
            .ok_or_else(|| ToricError::invalid("facets", "missing"))?
            .as_array()
            .ok_or_else(|| ToricError::invalid("facets", "expected an array"))?;
        let mut facets = Vec::with_capacity(facets_val.len());
        for (r, f) in facets_val.iter().enumerate() {
            let normal = f
                .get("normal")
                .and_then(Value::as_array)
                .ok_or_else(|| {
                    ToricError::invalid(format!("facets[{r}].normal"), "missing or not an array")
                })?
                .iter()
                .map(|v| {
                    v.as_i64().ok_or_else(|| {
                        ToricError::invalid(format!("facets[{r}].normal"), "entries must be integers")
                    })
                })
                .collect::<Result<Vec<i64>>>()?;
            let offset = match f.get("offset") {
                Some(Value::String(s)) => parse_rational(s),
                Some(Value::Number(num)) => parse_rational(&num.to_string()),
                _ => Err(ToricError::invalid("offset", "missing")),
            }
            .map_err(|e| match e {
                ToricError::InvalidInput { message, .. } => {
                    ToricError::invalid(format!("facets[{r}].offset"), message)
                }
                other => other,
            })?;
            facets.push(Facet::new(normal, offset));
        }
        let mut poly = Self::new(dim, facets)?;
        if let Some(name) = obj.get("name").and_then(Value::as_str) {
            poly.name = Some(name.to_string());
        }
        Ok(poly)
    }

    pub fn to_json(&self) -> Value {
        let facets: Vec<Value> = self
            .facets
            .iter()
            .map(|f| json!({"normal": f.normal, "offset": format_rational(&f.offset)}))
            .collect();
        let mut v = json!({"dim": self.dim, "facets": facets});
        if let Some(name) = &self.name {
            v["name"] = json!(name);
        }
        v
    }
}

/// Affine dimension of a set of vertices.
fn affine_rank(points: &[&Vertex]) -> usize {
    let Some(first) = points.first() else {
        return 0;
    };
    if points.len() == 1 {
        return 0;
    }
    let diffs: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|v| v.point.iter().zip(&first.point).map(|(a, b)| a - b).collect())
        .collect();
    rank(&diffs, first.point.len())
}

/// Affine dimension of the convex hull of rational points.
pub fn affine_dimension(points: &[Vec<Rational>]) -> usize {
    let Some(first) = points.first() else {
        return 0;
    };
    let diffs: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|v| v.iter().zip(first).map(|(a, b)| a - b).collect())
        .collect();
    if diffs.is_empty() {
        0
    } else {
        rank(&diffs, first.len())
    }
}
