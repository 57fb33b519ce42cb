//! Symplectic reduction at moment-map levels, realised on polytope slices.
//!
//! The reduced potential is the ambient Guillemin potential restricted to the
//! slice, `1/2 sum_j l~_j log l~_j` over the inherited facet functions. The
//! reduced space is classified with exact arithmetic. It is Delzant when every
//! slice vertex has a unimodular set of primitive normals, an orbifold when
//! vertices stay simple but some determinant or label is not 1, and worse when
//! more facet functions than the slice dimension vanish at some point.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Result, ToricError};
use crate::exact::{format_rational, int_det, rat, to_f64, Rational};
use crate::polytope::{DelzantPolytope, SliceMap, SlicePolytope};
use crate::potential::SymplecticPotential;
use crate::quantization::decomposition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducedClass {
    Delzant,
    Orbifold,
    Worse,
}

impl ReducedClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReducedClass::Delzant => "delzant",
            ReducedClass::Orbifold => "orbifold",
            ReducedClass::Worse => "worse",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedVertex {
    pub point: Vec<String>,
    /// Indices of the ambient facets vanishing here.
    pub active: Vec<usize>,
    /// Determinant of the primitive integer normals, when exactly `k` are active.
    pub det: Option<i64>,
}

#[derive(Clone, Debug)]
pub struct ReducedStructure {
    pub slice: SlicePolytope,
    /// Guillemin-form potential over the slice facets; `None` without interior.
    pub potential: Option<SymplecticPotential>,
    /// `1/2 sum l log l` over ambient facets that are constant on the slice.
    pub constant: f64,
    pub class: ReducedClass,
    pub vertices: Vec<ReducedVertex>,
    /// Slice facets whose normal is not a primitive integer vector.
    pub non_primitive: Vec<usize>,
    /// Points where more than `dim` facet functions vanish.
    pub over_vertexed: Vec<Vec<String>>,
}

impl ReducedStructure {
    pub fn dim(&self) -> usize {
        self.slice.dim
    }

    /// `g_red(y)`, equal to the ambient Guillemin potential at the lifted point.
    pub fn potential_value(&self, y: &[f64]) -> Result<f64> {
        Ok(self.require_potential()?.value(y)? + self.constant)
    }

    pub fn require_potential(&self) -> Result<&SymplecticPotential> {
        self.potential.as_ref().ok_or_else(|| {
            ToricError::DegenerateRegion("reduced polytope has no interior".into())
        })
    }

    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        self.slice.map.lift(y)
    }
}

/// Reduction at the level `x_{1..p} = c`.
pub fn reduce(poly: &DelzantPolytope, p: usize, c: &[Rational]) -> Result<ReducedStructure> {
    if p == 0 || p > poly.dim {
        return Err(ToricError::invalid(
            "p",
            format!("need 1 <= p <= {}, got {p}", poly.dim),
        ));
    }
    if c.len() != p {
        return Err(ToricError::DimensionMismatch {
            expected: p,
            got: c.len(),
        });
    }
    reduce_affine(poly, &SliceMap::axis(poly.dim, p, c))
}

/// Reduction along an arbitrary rational affine slice `x = E y + t`.
pub fn reduce_affine(poly: &DelzantPolytope, map: &SliceMap) -> Result<ReducedStructure> {
    if map.ambient_dim() != poly.dim {
        return Err(ToricError::DimensionMismatch {
            expected: poly.dim,
            got: map.ambient_dim(),
        });
    }
    let slice = poly.slice(map);
    if slice.is_empty() {
        return Err(ToricError::invalid("c", "level set does not meet the polytope"));
    }
    let k = slice.dim;
    let kept: BTreeSet<usize> = slice.facets.iter().map(|f| f.source).collect();
    let constant = poly
        .facets
        .iter()
        .enumerate()
        .filter(|(j, _)| !kept.contains(j))
        .map(|(_, f)| {
            let l = to_f64(&f.eval(&map.translation));
            if l > 0.0 {
                0.5 * l * l.ln()
            } else {
                0.0
            }
        })
        .sum();

    let primitive: Vec<(Vec<i64>, bool)> = slice
        .facets
        .iter()
        .map(|f| primitive_integer(&f.normal))
        .collect::<Result<_>>()?;
    let non_primitive: Vec<usize> = primitive
        .iter()
        .enumerate()
        .filter(|(_, (_, exact))| !exact)
        .map(|(j, _)| j)
        .collect();

    let hs = slice.halfspaces();
    let mut vertices = Vec::new();
    let mut over_vertexed = Vec::new();
    let mut all_unimodular = true;
    if k > 0 {
        for v in hs.vertices() {
            let point: Vec<String> = v.point.iter().map(format_rational).collect();
            let det = (v.active.len() == k).then(|| {
                let rows: Vec<Vec<i64>> = v.active.iter().map(|&j| primitive[j].0.clone()).collect();
                int_det(&rows)
            });
            if v.active.len() > k {
                over_vertexed.push(point.clone());
            }
            if !matches!(det, Some(d) if d.abs() == 1) {
                all_unimodular = false;
            }
            vertices.push(ReducedVertex {
                point,
                active: v.active.iter().map(|&j| slice.facets[j].source).collect(),
                det,
            });
        }
    }
    let class = if !over_vertexed.is_empty() {
        ReducedClass::Worse
    } else if all_unimodular && non_primitive.is_empty() {
        ReducedClass::Delzant
    } else {
        ReducedClass::Orbifold
    };

    let potential = if k > 0 && slice.has_interior() {
        Some(SymplecticPotential::from_halfspaces(&hs)?)
    } else {
        None
    };
    Ok(ReducedStructure {
        slice,
        potential,
        constant,
        class,
        vertices,
        non_primitive,
        over_vertexed,
    })
}

/// Scales a rational vector to a primitive integer vector; the flag says
/// whether the input already was one.
fn primitive_integer(v: &[Rational]) -> Result<(Vec<i64>, bool)> {
    let lcm = v.iter().fold(1i128, |acc, q| num_integer::lcm(acc, *q.denom()));
    let ints: Vec<i128> = v.iter().map(|q| (q * rat(lcm)).to_integer()).collect();
    let g = ints.iter().fold(0i128, |acc, &x| num_integer::gcd(acc, x));
    if g == 0 {
        return Err(ToricError::invalid("normal", "zero slice normal"));
    }
    let out: Vec<i64> = ints
        .iter()
        .map(|&x| i64::try_from(x / g).map_err(|_| ToricError::Overflow))
        .collect::<Result<_>>()?;
    let exact = lcm == 1 && g.abs() == 1;
    Ok((out, exact))
}

/// Abreu curvature of the reduced potential at a smooth interior point.
pub fn reduced_scalar_curvature(red: &ReducedStructure, y: &[f64]) -> Result<f64> {
    red.require_potential()?.abreu_scalar_curvature(y)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelReport {
    pub c: Vec<i64>,
    pub dim: usize,
    pub class: ReducedClass,
    /// The level meets the polytope but holds no lattice point, so its
    /// quantization is the zero space.
    pub trivial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionAudit {
    pub p: usize,
    pub levels: Vec<LevelReport>,
    pub total: usize,
    pub basis_size: usize,
    pub consistent: bool,
}

/// Walks every integral level `c` in the projection of the polytope to the
/// first `p` coordinates and compares the level dimensions with the basis.
pub fn reduction_dimension_audit(poly: &DelzantPolytope, p: usize) -> Result<DimensionAudit> {
    let groups = decomposition(poly, p)?;
    let basis_size = poly.lattice_points()?.len();
    let hs = poly.halfspaces();
    let (lo, hi) = hs
        .integer_box()
        .ok_or_else(|| ToricError::DegenerateRegion("polytope has no vertices".into()))?;
    let mut levels = Vec::new();
    for c in crate::polytope::BoxIter::new(lo[..p].to_vec(), hi[..p].to_vec()) {
        let q: Vec<Rational> = c.iter().map(|&v| rat(v as i128)).collect();
        let class = match reduce(poly, p, &q) {
            Ok(red) => red.class,
            Err(ToricError::InvalidInput { .. }) => continue,
            Err(e) => return Err(e),
        };
        let dim = groups.get(&c).map_or(0, Vec::len);
        levels.push(LevelReport {
            c,
            dim,
            class,
            trivial: dim == 0,
        });
    }
    let total = levels.iter().map(|l| l.dim).sum();
    Ok(DimensionAudit {
        p,
        levels,
        total,
        basis_size,
        consistent: total == basis_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::Facet;
    use approx::assert_relative_eq;

    fn square() -> DelzantPolytope {
        let b = (Rational::new(-1, 2), Rational::new(3, 2));
        DelzantPolytope::cube(&[b, b])
    }

    fn orthant() -> DelzantPolytope {
        DelzantPolytope::new(
            3,
            vec![
                Facet::new(vec![1, 0, 0], rat(0)),
                Facet::new(vec![0, 1, 0], rat(0)),
                Facet::new(vec![0, 0, 1], rat(0)),
            ],
        )
        .unwrap()
    }

    fn c3(alpha: Rational) -> ReducedStructure {
        reduce_affine(&orthant(), &SliceMap::hyperplane(&[alpha, alpha], rat(0))).unwrap()
    }

    #[test]
    fn square_reduces_to_delzant_segment() {
        let red = reduce(&square(), 1, &[rat(0)]).unwrap();
        assert_eq!(red.dim(), 1);
        assert_eq!(red.class, ReducedClass::Delzant);
        assert_eq!(red.vertices.len(), 2);
    }

    #[test]
    fn simplex_level_one_is_unit_segment() {
        let red = reduce(&DelzantPolytope::simplex(2, rat(2)), 1, &[rat(1)]).unwrap();
        assert_eq!(red.class, ReducedClass::Delzant);
        let pts: Vec<Vec<String>> = red.vertices.iter().map(|v| v.point.clone()).collect();
        assert_eq!(pts, vec![vec!["0".to_string()], vec!["1".to_string()]]);
    }

    #[test]
    fn c3_hyperplane_is_worse_at_origin() {
        let red = c3(rat(2));
        let normals: Vec<Vec<Rational>> = red.slice.facets.iter().map(|f| f.normal.clone()).collect();
        assert_eq!(
            normals,
            vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)], vec![rat(2), rat(2)]]
        );
        assert_eq!(red.class, ReducedClass::Worse);
        assert_eq!(red.over_vertexed, vec![vec!["0".to_string(), "0".to_string()]]);
        assert_eq!(red.non_primitive, vec![2]);
    }

    #[test]
    fn orbifold_from_non_unimodular_vertex() {
        // triangle with a det-2 corner, sliced trivially along a product factor
        let tri = DelzantPolytope::new(
            3,
            vec![
                Facet::new(vec![1, 0, 0], rat(0)),
                Facet::new(vec![0, 1, 0], rat(0)),
                Facet::new(vec![-1, -2, 0], rat(2)),
                Facet::new(vec![0, 0, 1], rat(0)),
                Facet::new(vec![0, 0, -1], rat(1)),
            ],
        )
        .unwrap();
        let map = SliceMap {
            basis: vec![
                vec![rat(1), rat(0)],
                vec![rat(0), rat(1)],
                vec![rat(0), rat(0)],
            ],
            translation: vec![rat(0), rat(0), Rational::new(1, 2)],
        };
        let red = reduce_affine(&tri, &map).unwrap();
        assert_eq!(red.class, ReducedClass::Orbifold);
    }

    #[test]
    fn curvature_matches_closed_form() {
        let s = |alpha: i128, y: [f64; 2]| reduced_scalar_curvature(&c3(rat(alpha)), &y).unwrap();
        assert!((s(2, [1.0, 1.0]) - 2.0 / 3.0).abs() < 1e-6);
        assert!((s(2, [2.0, 2.0]) - 1.0 / 3.0).abs() < 1e-6);
        assert!((s(1, [1.0, 1.0]) - 0.5).abs() < 1e-6);
        let ratio = s(2, [0.01, 0.01]) / s(2, [0.1, 0.1]);
        assert!((ratio - 10.0).abs() < 0.5, "{ratio}");
        assert!(reduced_scalar_curvature(&c3(rat(2)), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn reduced_potential_is_restriction() {
        let poly = DelzantPolytope::simplex(3, rat(3));
        let red = reduce(&poly, 1, &[rat(1)]).unwrap();
        let ambient = SymplecticPotential::guillemin(&poly).unwrap();
        for y in [[0.3, 0.4], [1.0, 0.5], [0.1, 1.7]] {
            let x = red.lift(&y);
            assert_relative_eq!(
                red.potential_value(&y).unwrap(),
                ambient.value(&x).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn audit_examples() {
        let a = reduction_dimension_audit(&square(), 1).unwrap();
        assert_eq!(a.levels.iter().map(|l| l.dim).collect::<Vec<_>>(), vec![2, 2]);
        assert!(a.consistent);
        let b = reduction_dimension_audit(&DelzantPolytope::simplex(2, rat(2)), 1).unwrap();
        assert_eq!(b.levels.iter().map(|l| l.dim).collect::<Vec<_>>(), vec![3, 2, 1]);
        assert_eq!((b.total, b.basis_size), (6, 6));
        let thin = DelzantPolytope::cube(&[
            (rat(0), rat(1)),
            (Rational::new(1, 4), Rational::new(3, 4)),
        ]);
        let t = reduction_dimension_audit(&thin, 1).unwrap();
        assert_eq!(t.levels.len(), 2);
        assert!(t.levels.iter().all(|l| l.trivial && l.dim == 0));
        assert_eq!(t.total, 0);
        assert!(t.consistent);
    }
}
