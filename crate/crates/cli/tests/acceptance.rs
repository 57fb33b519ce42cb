//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toricq::exact::{rat, to_f64, Rational};
use toricq::geodesic::{
    connection_form_limit, connection_form_s, grassmann_distance, inverse_hessian_limit,
    inverse_hessian_s, polarization_frame_limit, polarization_frame_s, HessianBlocks, MabuchiRay,
};
use toricq::polytope::{DelzantPolytope, Facet, FrameChange, SliceMap};
use toricq::potential::SymplecticPotential;
use toricq::quantization::{decomposition, quantum_basis, QuantizationModel};
use toricq::reduction::{reduce_affine, reduced_scalar_curvature, reduction_dimension_audit};
use toricq_cli::{execute, Command, Format, RunConfig};

type Outcome = Result<String, String>;

fn half(n: i128) -> Rational {
    Rational::new(n, 2)
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn segment() -> DelzantPolytope {
    DelzantPolytope::interval(half(-1), half(3))
}

fn square() -> DelzantPolytope {
    DelzantPolytope::cube(&[(half(-1), half(3)), (half(-1), half(3))])
}

fn shipped() -> Vec<(&'static str, DelzantPolytope)> {
    ["cp1_corrected.json", "cp1xcp1_corrected.json", "cp2_corrected.json", "simplex2.json"]
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(data(f)).expect("shipped data file");
            (*f, DelzantPolytope::from_json_str(&text).expect("valid polytope"))
        })
        .collect()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let model = QuantizationModel::new(&segment(), 1).map_err(|e| e.to_string())?;
    // closed form sqrt(pi) exp(2 g(m)), g = 1/2 sum l log l at m = 0 and m = 1
    let target = std::f64::consts::PI.sqrt() * 0.5f64.sqrt() * 1.5f64.powf(1.5);
    let mut details = Vec::new();
    let mut ok = true;
    for m in [0i64, 1] {
        let e = model.element(&[m]).map_err(|e| e.to_string())?.clone();
        let r = model
            .verify_norm_limit(&e, &[10.0, 20.0, 40.0, 80.0], 1e-10)
            .map_err(|e| e.to_string())?;
        let rel = (r.extrapolated - target).abs() / target;
        ok &= rel <= 0.02 && r.quadrature_converged;
        details.push(format!("m={m}: {:.6} vs {:.6} (rel {rel:.1e})", r.extrapolated, target));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 10.0;
    check(ok, format!("{}; {elapsed:.2}s", details.join(", ")))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let model = QuantizationModel::new(&square(), 1).map_err(|e| e.to_string())?;
    let e = model.element(&[0, 0]).map_err(|e| e.to_string())?.clone();
    let r = model
        .verify_norm_limit(&e, &[10.0, 20.0, 40.0], 1e-9)
        .map_err(|e| e.to_string())?;
    let rel = (r.extrapolated - r.target).abs() / r.target;
    let elapsed = start.elapsed().as_secs_f64();
    check(
        rel <= 0.02 && r.quadrature_converged && elapsed < 60.0,
        format!(
            "extrapolated {:.6} vs c*sqrt(pi) {:.6} (rel {rel:.1e}); {elapsed:.2}s",
            r.extrapolated, r.target
        ),
    )
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(n, n) * 0.5
}

fn limit_error(blocks: &HessianBlocks, s: f64) -> Result<f64, String> {
    let a = inverse_hessian_s(blocks, s).map_err(|e| e.to_string())?;
    let b = inverse_hessian_limit(blocks).map_err(|e| e.to_string())?;
    Ok((a - b).norm())
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for _ in 0..100 {
        let n = rng.random_range(1..=4usize);
        let g = random_spd(&mut rng, n);
        for p in 1..=n {
            let blocks = HessianBlocks::split(&g, p).map_err(|e| e.to_string())?;
            for s in [0.0, 1.0, 10.0, 100.0] {
                let schur = inverse_hessian_s(&blocks, s).map_err(|e| e.to_string())?;
                let dense = blocks.shifted(s).try_inverse().ok_or("dense inverse failed")?;
                worst = worst.max((schur - dense).amax());
            }
            if p < n {
                ratios.push(limit_error(&blocks, 10.0)? / limit_error(&blocks, 20.0)?);
            }
        }
    }
    for (_, poly) in shipped() {
        if poly.dim < 2 {
            continue;
        }
        let ray = MabuchiRay::new(SymplecticPotential::guillemin(&poly).map_err(|e| e.to_string())?, 1)
            .map_err(|e| e.to_string())?;
        let blocks = ray.blocks_at(&poly.barycenter()).map_err(|e| e.to_string())?;
        ratios.push(limit_error(&blocks, 10.0)? / limit_error(&blocks, 20.0)?);
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    check(
        worst <= 1e-10 && lo >= 1.6 && hi <= 2.4,
        format!(
            "max |schur - dense| {worst:.1e}; limit-error ratio s=10/s=20 in [{lo:.3}, {hi:.3}] over {} cases",
            ratios.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let orthant = DelzantPolytope::new(
        3,
        vec![
            Facet::new(vec![1, 0, 0], rat(0)),
            Facet::new(vec![0, 1, 0], rat(0)),
            Facet::new(vec![0, 0, 1], rat(0)),
        ],
    )
    .map_err(|e| e.to_string())?;
    let curvature = |alpha: i128, y: [f64; 2]| -> Result<f64, String> {
        let red = reduce_affine(&orthant, &SliceMap::hyperplane(&[rat(alpha), rat(alpha)], rat(0)))
            .map_err(|e| e.to_string())?;
        reduced_scalar_curvature(&red, &y).map_err(|e| e.to_string())
    };
    let cases = [
        (2, [1.0, 1.0], 2.0 / 3.0),
        (2, [2.0, 2.0], 1.0 / 3.0),
        (1, [1.0, 1.0], 0.5),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (alpha, y, expected) in cases {
        let s = curvature(alpha, y)?;
        ok &= (s - expected).abs() <= 1e-6;
        details.push(format!("a={alpha} y={y:?}: {s:.9}"));
    }
    check(ok, details.join(", "))
}

fn criterion_5() -> Outcome {
    let grid: Vec<f64> = (0..=8).map(|k| 2f64.powi(k)).collect();
    let mut ok = true;
    let mut details = Vec::new();
    for (name, poly) in shipped() {
        for p in 1..=poly.dim {
            let ray = MabuchiRay::from_polytope(&poly, &FrameChange::identity(poly.dim, p).unwrap())
                .map_err(|e| e.to_string())?;
            let x = poly.barycenter();
            let limit = polarization_frame_limit(&ray, &x).map_err(|e| e.to_string())?;
            let d: Vec<f64> = grid
                .iter()
                .map(|&s| {
                    polarization_frame_s(&ray, &x, s)
                        .and_then(|f| grassmann_distance(&f, &limit))
                        .map_err(|e| e.to_string())
                })
                .collect::<Result<_, _>>()?;
            let monotone = d.windows(2).all(|w| w[1] < w[0]);
            let last = *d.last().unwrap();
            ok &= monotone && last < 1e-2;
            details.push(format!("{name} p={p}: d(256)={last:.2e}{}", if monotone { "" } else { " NOT MONOTONE" }));
        }
    }
    check(ok, details.join(", "))
}

fn sl2(rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut m = [[1i64, 0], [0, 1]];
    for _ in 0..rng.random_range(1..4) {
        let k = rng.random_range(-3..=3i64);
        m = if rng.random_bool(0.5) {
            [[m[0][0] + k * m[1][0], m[0][1] + k * m[1][1]], m[1]]
        } else {
            [m[0], [m[1][0] + k * m[0][0], m[1][1] + k * m[0][1]]]
        };
    }
    m.iter().map(|r| r.to_vec()).collect()
}

fn criterion_6() -> Outcome {
    let simplex = DelzantPolytope::simplex(2, rat(2));
    let audit = reduction_dimension_audit(&simplex, 1).map_err(|e| e.to_string())?;
    let dims: Vec<usize> = audit.levels.iter().map(|l| l.dim).collect();
    let count = simplex.lattice_points().map_err(|e| e.to_string())?.len();
    let mut ok = dims == vec![3, 2, 1] && audit.total == 6 && count == 6;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = 0;
    for _ in 0..20 {
        let (a, b) = (rng.random_range(-3..3i128), rng.random_range(-3..3i128));
        let (w, h) = (rng.random_range(1..4i128), rng.random_range(1..4i128));
        let poly = if rng.random_bool(0.5) {
            DelzantPolytope::cube(&[(rat(a), rat(a + w)), (rat(b), rat(b + h))])
        } else {
            DelzantPolytope::new(
                2,
                vec![
                    Facet::new(vec![1, 0], rat(-a)),
                    Facet::new(vec![0, 1], rat(-b)),
                    Facet::new(vec![-1, -1], rat(a + b + w)),
                ],
            )
            .unwrap()
        };
        let p = rng.random_range(1..=2usize);
        let fc = FrameChange::new(sl2(&mut rng), p).map_err(|e| e.to_string())?;
        let moved = poly.apply_frame_change(&fc).map_err(|e| e.to_string())?;
        let original = poly.lattice_points().map_err(|e| e.to_string())?.len();
        let basis = quantum_basis(&moved, p).map_err(|e| e.to_string())?.len();
        let levels: usize = decomposition(&moved, p)
            .map_err(|e| e.to_string())?
            .values()
            .map(Vec::len)
            .sum();
        let audit = reduction_dimension_audit(&moved, p).map_err(|e| e.to_string())?;
        if !(moved.validate().ok && basis == original && levels == original && audit.consistent) {
            failures += 1;
        }
    }
    ok &= failures == 0;
    check(ok, format!("simplex levels {dims:?} total {} of {count}; random frames failing: {failures}/20", audit.total))
}

fn interior_points(poly: &DelzantPolytope, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let verts = poly.vertices();
    (0..count)
        .map(|_| {
            let w: Vec<f64> = verts.iter().map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            let mut x = vec![0.0; poly.dim];
            for (v, wi) in verts.iter().zip(&w) {
                for (xi, vi) in x.iter_mut().zip(&v.point) {
                    *xi += wi / total * to_f64(vi);
                }
            }
            x
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut grad_err, mut hess_err, mut leg_err, mut j_err): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for (_, poly) in shipped() {
        let g = SymplecticPotential::guillemin(&poly).map_err(|e| e.to_string())?;
        let n = poly.dim;
        for x in interior_points(&poly, 50, &mut rng) {
            let y = g.gradient(&x).map_err(|e| e.to_string())?;
            let hess = g.hessian(&x).map_err(|e| e.to_string())?;
            for j in 0..n {
                let h = 1e-5;
                let (mut a, mut b) = (x.clone(), x.clone());
                a[j] += h;
                b[j] -= h;
                let fd = (g.value(&a).unwrap() - g.value(&b).unwrap()) / (2.0 * h);
                grad_err = grad_err.max((fd - y[j]).abs() / y[j].abs().max(1.0));
                let h = 1e-6;
                let (mut a, mut b) = (x.clone(), x.clone());
                a[j] += h;
                b[j] -= h;
                let col = (g.gradient(&a).unwrap() - g.gradient(&b).unwrap()) / (2.0 * h);
                for i in 0..n {
                    hess_err = hess_err.max((col[i] - hess[(i, j)]).abs() / hess[(i, j)].abs().max(1.0));
                }
            }
            let back = g.legendre_inverse(y.as_slice()).map_err(|e| e.to_string())?;
            leg_err = leg_err.max(back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            let jm = g.complex_structure(&x).map_err(|e| e.to_string())?.matrix;
            j_err = j_err.max((&jm * &jm + DMatrix::<f64>::identity(2 * n, 2 * n)).amax());
        }
    }
    let mut delta_err: f64 = 0.0;
    for lambda in [1i128, 2, 3, 5, 10] {
        let g = SymplecticPotential::guillemin(&DelzantPolytope::interval(rat(0), rat(lambda))).unwrap();
        for t in [0.1, 0.37, 0.5, 0.81] {
            let d = g.regularity_delta(&[t * lambda as f64]).map_err(|e| e.to_string())?;
            delta_err = delta_err.max((d - 2.0 / lambda as f64).abs());
        }
    }
    check(
        grad_err <= 1e-7 && hess_err <= 1e-7 && leg_err <= 1e-9 && j_err <= 1e-12 && delta_err <= 1e-12,
        format!(
            "grad {grad_err:.1e}, hess {hess_err:.1e}, legendre {leg_err:.1e}, J^2+I {j_err:.1e}, delta {delta_err:.1e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_factor = f64::INFINITY;
    let mut exact = true;
    let mut checked = 0;
    for (_, poly) in shipped() {
        if poly.dim < 2 {
            continue;
        }
        let ray = MabuchiRay::new(SymplecticPotential::guillemin(&poly).map_err(|e| e.to_string())?, 1)
            .map_err(|e| e.to_string())?;
        for x in interior_points(&poly, 10, &mut rng) {
            let limit = connection_form_limit(&ray, &x).map_err(|e| e.to_string())?;
            let gap = |s: f64| -> Result<f64, String> {
                Ok(connection_form_s(&ray, &x, s).map_err(|e| e.to_string())?.distance(&limit))
            };
            let factor = gap(10.0)? / gap(100.0)?;
            worst_factor = worst_factor.min(factor);
            for k in 0..ray.p() {
                let c = limit.coefficients[k];
                exact &= c.re == 0.0 && c.im == -x[k];
            }
            checked += 1;
        }
    }
    check(
        worst_factor >= 5.0 && exact,
        format!("{checked} points: min gap(10)/gap(100) = {worst_factor:.3}; first p limit coefficients equal -i x: {exact}"),
    )
}

fn config(command: Command, input: &str, p: usize, grid: &str) -> RunConfig {
    RunConfig {
        input: data(input),
        command,
        p: Some(p),
        frame: None,
        s_grid: Some(toricq_cli::parse_grid(grid).unwrap()),
        m: None,
        alpha: None,
        tol: 1e-8,
        format: Format::Csv,
        out: None,
        points: None,
    }
}

fn criterion_9() -> Outcome {
    let runs = [
        config(Command::Norms, "cp1xcp1_corrected.json", 1, "10,20,40"),
        config(Command::Norms, "cp1_corrected.json", 1, "10,20,40,80"),
        config(Command::Flow, "cp2_corrected.json", 1, "0,1,4,16,64,256"),
        RunConfig {
            points: Some(vec![vec![0.1, 0.2], vec![0.7, -0.3], vec![2.0, 2.0]]),
            ..config(Command::Flow, "cp1xcp1_corrected.json", 1, "1,10,100")
        },
    ];
    let mut identical = 0;
    for cfg in &runs {
        let a = execute(cfg).map_err(|e| e.to_string())?;
        let b = execute(cfg).map_err(|e| e.to_string())?;
        let json_a = execute(&RunConfig { format: Format::Json, ..cfg.clone() }).map_err(|e| e.to_string())?;
        let json_b = execute(&RunConfig { format: Format::Json, ..cfg.clone() }).map_err(|e| e.to_string())?;
        if a == b && json_a == json_b {
            identical += 1;
        }
    }
    check(identical == runs.len(), format!("{identical}/{} configurations bit-identical across runs", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("norm limit, corrected CP1", criterion_1),
        ("mixed norm limit, CP1 x CP1, p=1", criterion_2),
        ("Schur block inverse and limit rate", criterion_3),
        ("reduced scalar curvature", criterion_4),
        ("polarization convergence", criterion_5),
        ("dimension bookkeeping", criterion_6),
        ("potential calculus", criterion_7),
        ("connection-form limit", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} [{name}]: {tag} - {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
