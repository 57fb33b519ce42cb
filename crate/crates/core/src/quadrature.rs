//! Deterministic adaptive cubature over polytopes.
//!
//! A polytope is fan-triangulated from its vertex barycenter over recursively
//! triangulated facets. Each simplex carries an interior-node conical-product
//! Gauss rule (degree >= 5); the error of a cell is the difference between the
//! rule on the cell and the sum over its two longest-edge bisection children.
//! The worst cell is split until the summed estimate meets the tolerance or the
//! cell budget runs out. Nodes never touch the boundary.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::sync::OnceLock;

use num_traits::Signed;

use crate::error::{Result, ToricError};
use crate::exact::{det, rat, to_f64, Rational};
use crate::polytope::{affine_dimension, DelzantPolytope, HalfSpaces, SlicePolytope};

pub const DEFAULT_CELL_BUDGET: usize = 200_000;
pub const CELL_BUDGET_ENV: &str = "TORICQ_CELL_BUDGET";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    /// Absolute tolerance on the summed error estimate.
    pub tol: f64,
    pub max_cells: usize,
    /// Longest edge allowed before adaptivity starts. Integrands that
    /// concentrate at a known scale need this, otherwise a narrow peak can
    /// fall between the nodes of both rule levels.
    pub resolution: Option<f64>,
}

impl QuadratureOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_cells: cell_budget(),
            resolution: None,
        }
    }

    pub fn with_resolution(mut self, h: f64) -> Self {
        self.resolution = (h.is_finite() && h > 0.0).then_some(h);
        self
    }

    pub fn with_max_cells(mut self, max_cells: usize) -> Self {
        self.max_cells = max_cells;
        self
    }
}

/// Cell budget, overridable through `TORICQ_CELL_BUDGET`.
pub fn cell_budget() -> usize {
    std::env::var(CELL_BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_CELL_BUDGET)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub cells_used: usize,
    pub converged: bool,
}

/// A simplex as `d + 1` points of `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// `|det(v_i - v_0)|`, i.e. `d!` times the volume.
    fn jacobian(&self) -> f64 {
        let d = self.dim();
        if d == 0 {
            return 1.0;
        }
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| self.vertices[i + 1][j] - self.vertices[0][j]);
        m.determinant().abs()
    }

    pub fn volume(&self) -> f64 {
        self.jacobian() / factorial(self.dim())
    }

    fn longest_edge(&self) -> f64 {
        let k = self.vertices.len();
        let mut best: f64 = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                let len: f64 = self.vertices[i]
                    .iter()
                    .zip(&self.vertices[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                best = best.max(len);
            }
        }
        best.sqrt()
    }

    fn bisect(&self) -> (Simplex, Simplex) {
        let k = self.vertices.len();
        let mut best = (0, 1);
        let mut best_len = -1.0;
        for i in 0..k {
            for j in (i + 1)..k {
                let len: f64 = self.vertices[i]
                    .iter()
                    .zip(&self.vertices[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if len > best_len {
                    best_len = len;
                    best = (i, j);
                }
            }
        }
        let (i, j) = best;
        let mid: Vec<f64> = self.vertices[i]
            .iter()
            .zip(&self.vertices[j])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mut left = self.clone();
        left.vertices[j] = mid.clone();
        let mut right = self.clone();
        right.vertices[i] = mid;
        (left, right)
    }
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// Triangulated polytope.
#[derive(Clone, Debug)]
pub struct IntegrationRegion {
    pub dim: usize,
    pub simplices: Vec<Simplex>,
    /// Exact volume from the same rational vertex data.
    pub exact_volume: Rational,
}

impl IntegrationRegion {
    pub fn volume(&self) -> f64 {
        self.simplices.iter().map(Simplex::volume).sum()
    }
}

/// Fan triangulation of a bounded full-dimensional half-space system.
pub fn triangulate(hs: &HalfSpaces) -> Result<IntegrationRegion> {
    if hs.dim == 0 {
        return Err(ToricError::DegenerateRegion("zero-dimensional region".into()));
    }
    if !hs.is_bounded() {
        return Err(ToricError::Unbounded);
    }
    if hs.interior_point().is_none() {
        return Err(ToricError::DegenerateRegion("empty interior".into()));
    }
    let verts = hs.vertices();
    let points: Vec<Vec<Rational>> = verts.iter().map(|v| v.point.clone()).collect();
    let active: Vec<&[usize]> = verts.iter().map(|v| v.active.as_slice()).collect();
    let all: Vec<usize> = (0..verts.len()).collect();
    let mut exact = Vec::new();
    fan(&points, &active, hs.len(), &all, hs.dim, &mut exact);

    let n = hs.dim;
    let mut exact_volume = rat(0);
    let simplices = exact
        .iter()
        .map(|s| {
            let m: Vec<Vec<Rational>> = s[1..]
                .iter()
                .map(|v| v.iter().zip(&s[0]).map(|(a, b)| a - b).collect())
                .collect();
            exact_volume += det(&m).abs() / rat((1..=n as i128).product());
            Simplex {
                vertices: s.iter().map(|v| v.iter().map(to_f64).collect()).collect(),
            }
        })
        .collect();
    Ok(IntegrationRegion {
        dim: n,
        simplices,
        exact_volume,
    })
}

pub fn triangulate_polytope(poly: &DelzantPolytope) -> Result<IntegrationRegion> {
    triangulate(&poly.halfspaces())
}

/// Recursive fan over a `k`-face given by vertex indices.
fn fan(
    points: &[Vec<Rational>],
    active: &[&[usize]],
    num_facets: usize,
    face: &[usize],
    k: usize,
    out: &mut Vec<Vec<Vec<Rational>>>,
) {
    match k {
        0 => out.push(vec![points[face[0]].clone()]),
        1 => out.push(vec![points[face[0]].clone(), points[face[1]].clone()]),
        _ => {
            let dim = points[0].len();
            let mut center = vec![rat(0); dim];
            for &v in face {
                for (c, x) in center.iter_mut().zip(&points[v]) {
                    *c += x;
                }
            }
            let count = rat(face.len() as i128);
            for c in center.iter_mut() {
                *c /= count;
            }
            let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
            for j in 0..num_facets {
                let sub: Vec<usize> = face
                    .iter()
                    .copied()
                    .filter(|&v| active[v].contains(&j))
                    .collect();
                if sub.is_empty() || seen.contains(&sub) {
                    continue;
                }
                let sub_points: Vec<Vec<Rational>> = sub.iter().map(|&v| points[v].clone()).collect();
                if affine_dimension(&sub_points) + 1 != k {
                    continue;
                }
                seen.insert(sub.clone());
                let mut pieces = Vec::new();
                fan(points, active, num_facets, &sub, k - 1, &mut pieces);
                for mut simplex in pieces {
                    simplex.insert(0, center.clone());
                    out.push(simplex);
                }
            }
        }
    }
}

/// Conical-product Gauss rule on the reference simplex: barycentric
/// coordinates `(lambda_0..lambda_d)` and weights summing to `1/d!`.
struct ReferenceRule {
    bary: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn reference_rule(d: usize) -> &'static ReferenceRule {
    static RULES: OnceLock<Vec<ReferenceRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=6).map(build_rule).collect());
    &rules[d]
}

fn build_rule(d: usize) -> ReferenceRule {
    if d == 0 {
        return ReferenceRule {
            bary: vec![vec![1.0]],
            weights: vec![1.0],
        };
    }
    let q = (d + 6) / 2;
    let (nodes, gw) = gauss_legendre_unit(q);
    let mut bary = Vec::new();
    let mut weights = Vec::new();
    let total = q.pow(d as u32);
    for flat in 0..total {
        let mut idx = flat;
        let mut lam = vec![0.0; d + 1];
        let mut remaining = 1.0;
        let mut w = 1.0;
        for i in 0..d {
            let k = idx % q;
            idx /= q;
            let u = nodes[k];
            w *= gw[k] * (1.0 - u).powi((d - 1 - i) as i32);
            lam[i + 1] = remaining * u;
            remaining *= 1.0 - u;
        }
        lam[0] = remaining;
        bary.push(lam);
        weights.push(w);
    }
    ReferenceRule { bary, weights }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 1 { x } else { p1 };
            let pqm1 = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (x * pq - pqm1) / (x * x - 1.0);
            let dx = pq / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn apply_rule<F: Fn(&[f64]) -> f64>(f: &F, s: &Simplex) -> f64 {
    let d = s.dim();
    let rule = reference_rule(d);
    let dim = s.vertices[0].len();
    let mut point = vec![0.0; dim];
    let mut acc = Neumaier::default();
    for (lam, w) in rule.bary.iter().zip(&rule.weights) {
        point.iter_mut().for_each(|p| *p = 0.0);
        for (l, v) in lam.iter().zip(&s.vertices) {
            for (p, x) in point.iter_mut().zip(v) {
                *p += l * x;
            }
        }
        acc.add(w * f(&point));
    }
    acc.sum() * s.jacobian()
}

/// Kahan-Babuska-Neumaier compensated sum.
#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

struct Cell {
    simplex: Simplex,
    coarse: f64,
    children: (f64, f64),
}

impl Cell {
    fn fine(&self) -> f64 {
        self.children.0 + self.children.1
    }

    fn error(&self) -> f64 {
        (self.fine() - self.coarse).abs()
    }
}

struct HeapEntry {
    error: f64,
    id: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn make_cell<F: Fn(&[f64]) -> f64>(f: &F, simplex: Simplex, coarse: f64) -> Cell {
    let (a, b) = simplex.bisect();
    let children = (apply_rule(f, &a), apply_rule(f, &b));
    Cell {
        simplex,
        coarse,
        children,
    }
}

/// Initial simplices, bisected depth-first down to the requested resolution
/// while staying within half the cell budget.
fn initial_cells(region: &IntegrationRegion, opts: &QuadratureOptions) -> Vec<Simplex> {
    let Some(h) = opts.resolution else {
        return region.simplices.clone();
    };
    let cap = (opts.max_cells / 2).max(region.simplices.len());
    let mut out = Vec::new();
    let mut stack: Vec<Simplex> = region.simplices.iter().rev().cloned().collect();
    while let Some(s) = stack.pop() {
        if s.longest_edge() > h && out.len() + stack.len() + 2 <= cap {
            let (a, b) = s.bisect();
            stack.push(b);
            stack.push(a);
        } else {
            out.push(s);
        }
    }
    out
}

/// Adaptive integration of `f` over a triangulated region.
pub fn integrate<F: Fn(&[f64]) -> f64>(
    f: F,
    region: &IntegrationRegion,
    opts: &QuadratureOptions,
) -> IntegralResult {
    let mut cells: Vec<Option<Cell>> = Vec::new();
    let mut heap = BinaryHeap::new();
    for s in &initial_cells(region, opts) {
        let coarse = apply_rule(&f, s);
        let id = cells.len();
        let cell = make_cell(&f, s.clone(), coarse);
        heap.push(HeapEntry {
            error: cell.error(),
            id,
        });
        cells.push(Some(cell));
    }
    let mut live = cells.len();
    let mut total_error: f64 = cells.iter().flatten().map(Cell::error).sum();

    while total_error > opts.tol && live < opts.max_cells {
        let Some(entry) = heap.pop() else { break };
        let Some(cell) = cells[entry.id].take() else {
            continue;
        };
        let (a, b) = cell.simplex.bisect();
        let (ca, cb) = cell.children;
        total_error -= cell.error();
        for (simplex, coarse) in [(a, ca), (b, cb)] {
            let id = cells.len();
            let child = make_cell(&f, simplex, coarse);
            total_error += child.error();
            heap.push(HeapEntry {
                error: child.error(),
                id,
            });
            cells.push(Some(child));
        }
        live += 1;
        if !(total_error.is_finite()) {
            break;
        }
        // running sum drifts; resynchronise occasionally
        if live % 4096 == 0 {
            total_error = cells.iter().flatten().map(Cell::error).sum();
        }
    }

    let mut value = Neumaier::default();
    let mut error = Neumaier::default();
    for cell in cells.iter().flatten() {
        value.add(cell.fine());
        error.add(cell.error());
    }
    let error_estimate = error.sum();
    IntegralResult {
        value: value.sum(),
        error_estimate,
        cells_used: live,
        converged: error_estimate <= opts.tol && value.sum().is_finite(),
    }
}

/// Integrates `f` (a function of the ambient point) over the slice.
/// Empty or measure-zero slices give zero; a zero-dimensional slice is the
/// point itself and returns `f` there.
pub fn integrate_over_slice<F: Fn(&[f64]) -> f64>(
    f: F,
    slice: &SlicePolytope,
    opts: &QuadratureOptions,
) -> Result<IntegralResult> {
    let zero = IntegralResult {
        value: 0.0,
        error_estimate: 0.0,
        cells_used: 0,
        converged: true,
    };
    if slice.dim == 0 {
        if slice.infeasible {
            return Ok(zero);
        }
        let x = slice.map.lift(&[]);
        return Ok(IntegralResult {
            value: f(&x),
            ..zero
        });
    }
    if slice.is_empty() || !slice.has_interior() {
        return Ok(zero);
    }
    let region = triangulate(&slice.halfspaces())?;
    let map = &slice.map;
    Ok(integrate(|y: &[f64]| f(&map.lift(y)), &region, opts))
}

/// Integral over the level set `x_{1..p} = c` with Lebesgue measure
/// `dx_{p+1}...dx_n`; for `p = n` this is `f(c)`.
pub fn integrate_slice<F: Fn(&[f64]) -> f64>(
    f: F,
    poly: &DelzantPolytope,
    p: usize,
    c: &[Rational],
    opts: &QuadratureOptions,
) -> Result<IntegralResult> {
    if p == poly.dim {
        if c.len() != p {
            return Err(ToricError::DimensionMismatch {
                expected: p,
                got: c.len(),
            });
        }
        let inside = poly.halfspaces().contains(c);
        let x: Vec<f64> = c.iter().map(to_f64).collect();
        return Ok(IntegralResult {
            value: if inside { f(&x) } else { 0.0 },
            error_estimate: 0.0,
            cells_used: 0,
            converged: true,
        });
    }
    let slice = poly.axis_slice(p, c)?;
    integrate_over_slice(f, &slice, opts)
}
