use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::linalg::{loglog_slope, sigma_min};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn e(n: usize, i: usize) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(n, 1);
    v[(i, 0)] = 1.0;
    v
}

fn shapefit_like_affine() -> AffineSubspace {
    // A small affine slice: rows of a 4x2 matrix sum to zero, plus one
    // normalization row.
    let ambient = 8;
    let mut a = DMatrix::zeros(3, ambient);
    for col in 0..2 {
        for row in 0..4 {
            a[(col, col * 4 + row)] = 1.0;
        }
    }
    for j in 0..ambient {
        a[(2, j)] = (j % 3) as f64 - 1.0;
    }
    let b = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    AffineSubspace::new(4, 2, a, b).unwrap()
}

fn all_manifolds() -> Vec<Box<dyn Manifold>> {
    vec![
        Box::new(Euclidean::new(3, 2)),
        Box::new(Sphere::new(7)),
        Box::new(Sphere::with_exponential(7)),
        Box::new(Stiefel::new(6, 2)),
        Box::new(Grassmann::new(6, 2)),
        Box::new(Oblique::new(4, 3)),
        Box::new(Rotations::new(3, 2)),
        Box::new(Rotations::with_exponential(3, 2)),
        Box::new(shapefit_like_affine()),
        Box::new(ProductManifold::new(vec![
            Box::new(Sphere::new(4)),
            Box::new(Stiefel::new(5, 2)),
        ])),
    ]
}

#[test]
fn retraction_at_zero_is_identity() {
    let mut r = rng(1);
    for m in all_manifolds() {
        for _ in 0..5 {
            let x = m.rand_point(&mut r);
            assert!(m.check_point(&x, 1e-10), "{} rand_point invalid", m.name());
            let zero = Tangent::zero_like(&x);
            let y = m.retract(&x, &zero);
            assert!(
                (y.0 - &x.0).norm() <= 1e-12,
                "{}: retract(x, 0) != x",
                m.name()
            );
        }
    }
}

#[test]
fn dretract_at_zero_is_identity() {
    let mut r = rng(2);
    for m in all_manifolds() {
        for _ in 0..5 {
            let x = m.rand_point(&mut r);
            let z = m.rand_tangent(&x, &mut r);
            let zero = Tangent::zero_like(&x);
            let d = m.dretract(&x, &zero, &z);
            assert!(
                (d.vector.0 - &z.0).norm() <= 1e-10,
                "{}: dretract(x, 0, z) != z",
                m.name()
            );
        }
    }
}

#[test]
fn dretract_matches_central_differences() {
    // Closed-form DR must agree with central differences at O(h^2): the
    // log-log error slope over h in {1e-2 .. 1e-5} lies in [1.7, 2.3].
    let mut r = rng(3);
    for m in all_manifolds() {
        let x = m.rand_point(&mut r);
        let s = {
            let t = m.rand_tangent(&x, &mut r);
            Tangent(0.8 * t.0)
        };
        let z = m.rand_tangent(&x, &mut r);
        let d = m.dretract(&x, &s, &z);
        if d.finite_difference {
            continue;
        }
        let y = m.retract(&x, &s);
        let hs = [1e-2, 1e-3, 1e-4, 1e-5];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let plus = m.retract(&x, &Tangent(&s.0 + h * &z.0));
                let minus = m.retract(&x, &Tangent(&s.0 - h * &z.0));
                // Projection at the foot point reads the difference quotient in
                // the tangent space; on quotient representations it also strips
                // the vertical component the raw quotient cannot see.
                let fd = m.project_tangent(&y, &((plus.0 - minus.0) / (2.0 * h)));
                (&d.vector.0 - fd.0).norm()
            })
            .collect();
        if errs.iter().all(|&e| e < 1e-10) {
            continue; // flat manifolds: DR constant in s, error at roundoff level
        }
        let slope = loglog_slope(&hs, &errs, 1e-14).expect("slope fit");
        assert!(
            (1.7..=2.3).contains(&slope),
            "{}: dretract FD slope {slope} outside [1.7, 2.3] (errors {errs:?})",
            m.name()
        );
    }
}

#[test]
fn dretract_adjoint_consistency() {
    // <adjoint(amb), z> == <amb, dretract(z)> for random ambients and tangents.
    let mut r = rng(4);
    for m in all_manifolds() {
        let x = m.rand_point(&mut r);
        let s = {
            let t = m.rand_tangent(&x, &mut r);
            Tangent(0.5 * t.0)
        };
        let (rows, cols) = m.ambient_shape();
        for _ in 0..4 {
            let amb = gaussian_matrix(rows, cols, &mut r);
            let z = m.rand_tangent(&x, &mut r);
            let lhs = crate::linalg::fdot(&m.dretract_adjoint(&x, &s, &amb).0, &z.0);
            let rhs = crate::linalg::fdot(&amb, &m.dretract(&x, &s, &z).vector.0);
            let tol = if m.dretract(&x, &s, &z).finite_difference {
                1e-5
            } else {
                1e-9
            };
            assert!(
                (lhs - rhs).abs() <= tol * (1.0 + rhs.abs()),
                "{}: adjoint mismatch {lhs} vs {rhs}",
                m.name()
            );
        }
    }
}

#[test]
fn tangency_closure() {
    // Outputs of project_tangent, egrad2rgrad, ehess2rhess and dretract pass
    // check_tangent at 1e-10 (at the appropriate base points).
    let mut r = rng(5);
    for m in all_manifolds() {
        let x = m.rand_point(&mut r);
        let (rows, cols) = m.ambient_shape();
        let z = gaussian_matrix(rows, cols, &mut r);
        let t = m.project_tangent(&x, &z);
        assert!(m.check_tangent(&x, &t, 1e-10), "{} project", m.name());

        let eg = gaussian_matrix(rows, cols, &mut r);
        assert!(
            m.check_tangent(&x, &m.egrad2rgrad(&x, &eg), 1e-10),
            "{} egrad2rgrad",
            m.name()
        );

        let eh = gaussian_matrix(rows, cols, &mut r);
        let s = m.rand_tangent(&x, &mut r);
        assert!(
            m.check_tangent(&x, &m.ehess2rhess(&x, &eg, &eh, &s), 1e-10),
            "{} ehess2rhess",
            m.name()
        );

        let d = m.dretract(&x, &s, &m.rand_tangent(&x, &mut r));
        let y = m.retract(&x, &s);
        let tol = if d.finite_difference { 1e-6 } else { 1e-10 };
        assert!(m.check_tangent(&y, &d.vector, tol), "{} dretract", m.name());
    }
}

#[test]
fn projection_is_idempotent_and_self_adjoint() {
    let mut r = rng(6);
    for m in all_manifolds() {
        let x = m.rand_point(&mut r);
        let (rows, cols) = m.ambient_shape();
        let z = gaussian_matrix(rows, cols, &mut r);
        let w = gaussian_matrix(rows, cols, &mut r);
        let pz = m.project_tangent(&x, &z);
        let ppz = m.project_tangent(&x, &pz.0);
        assert!((pz.0.clone() - ppz.0).norm() <= 1e-10, "{} idempotent", m.name());
        let pw = m.project_tangent(&x, &w);
        let a = crate::linalg::fdot(&pz.0, &w);
        let b = crate::linalg::fdot(&z, &pw.0);
        assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{} self-adjoint", m.name());
    }
}

#[test]
fn inner_product_examples() {
    let m = Euclidean::vector(3);
    let x = Point(DMatrix::zeros(3, 1));
    let u = Tangent(DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 0.0]));
    let v = Tangent(DMatrix::from_column_slice(3, 1, &[3.0, 0.0, 1.0]));
    assert_eq!(m.inner(&x, &u, &v), 3.0);

    // Definiteness: inner(x, 0, 0) = 0 on any manifold.
    let sp = Sphere::new(5);
    let xs = sp.rand_point(&mut rng(7));
    let zero = Tangent::zero_like(&xs);
    assert_eq!(sp.inner(&xs, &zero, &zero), 0.0);

    // Stiefel: Frobenius inner product reproduced by the trace.
    let st = Stiefel::new(4, 2);
    let xp = st.rand_point(&mut rng(8));
    let mut z = DMatrix::zeros(4, 2);
    z[(1, 0)] = 1.0;
    let u = st.project_tangent(&xp, &z);
    let by_trace = (u.0.transpose() * &u.0).trace();
    assert_relative_eq!(st.inner(&xp, &u, &u), by_trace, epsilon = 1e-12);
    assert_relative_eq!(st.inner(&xp, &u, &u), u.0.norm_squared(), epsilon = 1e-12);
}

#[test]
fn projection_examples() {
    let sp = Sphere::new(3);
    let x = Point(e(3, 0));
    let z = e(3, 0) + 2.0 * e(3, 1);
    let t = sp.project_tangent(&x, &z);
    assert_relative_eq!(t.0, 2.0 * e(3, 1), epsilon = 1e-15);

    let eu = Euclidean::new(2, 2);
    let xe = Point(DMatrix::zeros(2, 2));
    let ze = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
    assert_eq!(eu.project_tangent(&xe, &ze).0, ze);

    // Stiefel: projected ambient vectors satisfy X^T S + S^T X = 0 to 1e-12.
    let st = Stiefel::new(5, 3);
    let mut r = rng(9);
    for _ in 0..10 {
        let xp = st.rand_point(&mut r);
        let z = gaussian_matrix(5, 3, &mut r);
        let s = st.project_tangent(&xp, &z);
        let cons = xp.0.transpose() * &s.0 + s.0.transpose() * &xp.0;
        assert!(cons.norm() <= 1e-12 * s.norm().max(1.0));
    }
}

#[test]
fn retraction_examples() {
    let sp = Sphere::new(3);
    let x = Point(e(3, 0));
    let s = Tangent(e(3, 1));
    let y = sp.retract(&x, &s);
    let expected = (e(3, 0) + e(3, 1)) / 2f64.sqrt();
    assert_relative_eq!(y.0, expected, epsilon = 1e-15);

    // Quarter great circle under the exponential retraction.
    let spe = Sphere::with_exponential(3);
    let s2 = Tangent(std::f64::consts::FRAC_PI_2 * e(3, 1));
    let y2 = spe.retract(&x, &s2);
    assert_relative_eq!(y2.0, e(3, 1), epsilon = 1e-14);
}

#[test]
fn sphere_dretract_sigma_min_identity() {
    // sigma_min(DR_x(s)) = 1/(1 + ||s||^2) for the projective retraction.
    let sp = Sphere::new(6);
    let mut r = rng(10);
    for &target in &[0.1, 1.0, 10.0] {
        let x = sp.rand_point(&mut r);
        let s = Tangent(target * sp.rand_tangent(&x, &mut r).0);
        let mat = dretract_matrix(&sp, &x, &s).unwrap();
        let smin = sigma_min(&mat);
        let expected = 1.0 / (1.0 + target * target);
        assert!(
            (smin - expected).abs() <= 1e-8,
            "||s||={target}: sigma_min {smin} vs {expected}"
        );
    }

    // At ||s|| = 1 the smallest stretch over unit tangents is exactly 1/2.
    let x = sp.rand_point(&mut r);
    let s = sp.rand_tangent(&x, &mut r);
    let mat = dretract_matrix(&sp, &x, &s).unwrap();
    assert_relative_eq!(sigma_min(&mat), 0.5, epsilon = 1e-9);
}

#[test]
fn stiefel_dretract_sigma_min_bound() {
    // sigma_min(DR_X(S)) >= 1 - 3 a - a^2/2 with a = ||S||_F, when positive.
    let st = Stiefel::new(7, 3);
    let mut r = rng(11);
    for _ in 0..40 {
        let x = st.rand_point(&mut r);
        let norm: f64 = 0.01 + 0.29 * rand::Rng::gen::<f64>(&mut r);
        let s = Tangent(norm * st.rand_tangent(&x, &mut r).0);
        let a = s.norm();
        let bound = 1.0 - 3.0 * a - 0.5 * a * a;
        if bound <= 0.0 {
            continue;
        }
        let mat = dretract_matrix(&st, &x, &s).unwrap();
        let smin = sigma_min(&mat);
        assert!(
            smin >= bound - 1e-10,
            "a={a}: sigma_min {smin} below bound {bound}"
        );
    }

    // Numeric instance from the bound: ||S||_F = 0.1 gives at least 0.695.
    let x = st.rand_point(&mut r);
    let s = Tangent(0.1 * st.rand_tangent(&x, &mut r).0);
    let smin = sigma_min(&dretract_matrix(&st, &x, &s).unwrap());
    assert!(smin >= 0.695 - 1e-10);
}

#[test]
fn sphere_exponential_sigma_min_bound() {
    // For the unit sphere (curvature 1), sigma_min(DExp_x(s)) >= sin(a)/a, a < pi.
    let sp = Sphere::with_exponential(5);
    let mut r = rng(12);
    for &a in &[0.3, 1.0, 2.5, 3.0] {
        let x = sp.rand_point(&mut r);
        let s = Tangent(a * sp.rand_tangent(&x, &mut r).0);
        let mat = dretract_matrix(&sp, &x, &s).unwrap();
        let smin = sigma_min(&mat);
        let bound = (a as f64).sin() / a;
        assert!(
            smin >= bound - 1e-9,
            "a={a}: sigma_min {smin} below sin(a)/a = {bound}"
        );
    }
}

#[test]
fn egrad2rgrad_examples_and_consistency() {
    let sp = Sphere::new(3);
    let x = Point(e(3, 0));
    let eg = e(3, 0) + e(3, 1);
    assert_relative_eq!(sp.egrad2rgrad(&x, &eg).0, e(3, 1), epsilon = 1e-15);

    // <rgrad, v> = <eg, v> for all tangent v, on every manifold.
    let mut r = rng(13);
    for m in all_manifolds() {
        let x = m.rand_point(&mut r);
        let (rows, cols) = m.ambient_shape();
        let eg = gaussian_matrix(rows, cols, &mut r);
        let g = m.egrad2rgrad(&x, &eg);
        for _ in 0..3 {
            let v = m.rand_tangent(&x, &mut r);
            let a = m.inner(&x, &g, &v);
            let b = crate::linalg::fdot(&eg, &v.0);
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{}", m.name());
        }
    }
}

#[test]
fn sphere_rayleigh_hessian_matches_finite_differences() {
    // f(x) = x^T A x / 2 on the sphere: Hess f(x)[s] = proj(A s) - (x^T A x) s.
    // Cross-check ehess2rhess against second differences of the pullback.
    let n = 6;
    let mut r = rng(14);
    let g = gaussian_matrix(n, n, &mut r);
    let a = 0.5 * (&g + g.transpose());
    let sp = Sphere::new(n);
    let x = sp.rand_point(&mut r);
    let s = sp.rand_tangent(&x, &mut r);

    let eg = &a * &x.0;
    let eh = &a * &s.0;
    let hess = sp.ehess2rhess(&x, &eg, &eh, &s);

    let closed = sp.project_tangent(&x, &eh).0 - crate::linalg::fdot(&x.0, &eg) * &s.0;
    assert_relative_eq!(hess.0, closed, epsilon = 1e-12);

    // Second difference of t -> f(R_x(t s)) at 0 equals <s, Hess[s]>.
    let f = |p: &Point| 0.5 * crate::linalg::fdot(&p.0, &(&a * &p.0));
    let h = 1e-4;
    let fp = f(&sp.retract(&x, &Tangent(h * &s.0)));
    let f0 = f(&x);
    let fm = f(&sp.retract(&x, &Tangent(-h * &s.0)));
    let quad_fd = (fp - 2.0 * f0 + fm) / (h * h);
    let quad = crate::linalg::fdot(&s.0, &hess.0);
    assert!(
        (quad_fd - quad).abs() <= 1e-6 * (1.0 + quad.abs()),
        "fd {quad_fd} vs analytic {quad}"
    );
}

#[test]
fn hessian_operator_is_self_adjoint() {
    // The induced operator s -> ehess2rhess(x, eg, A s, s) for the quadratic
    // f(Y) = tr(Y^T A Y)/2 is self-adjoint w.r.t. the metric at 1e-10. The
    // left-acting quadratic is invariant under Y -> YQ, as required for the
    // quotient (Grassmann) Hessian conversion to be meaningful.
    let mut r = rng(15);
    for m in all_manifolds() {
        let (rows, _) = m.ambient_shape();
        let x = m.rand_point(&mut r);
        let gm = gaussian_matrix(rows, rows, &mut r);
        let a = 0.5 * (&gm + gm.transpose());
        let apply = |v: &DMatrix<f64>| &a * v;
        let eg = apply(&x.0);
        let op = |s: &Tangent| m.ehess2rhess(&x, &eg, &apply(&s.0), s);
        let u = m.rand_tangent(&x, &mut r);
        let v = m.rand_tangent(&x, &mut r);
        let lhs = m.inner(&x, &u, &op(&v));
        let rhs = m.inner(&x, &v, &op(&u));
        assert!(
            (lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()),
            "{}: {lhs} vs {rhs}",
            m.name()
        );
    }
}

#[test]
fn random_generation_is_deterministic_and_valid() {
    for m in all_manifolds() {
        let x1 = m.rand_point(&mut rng(99));
        let x2 = m.rand_point(&mut rng(99));
        assert_eq!(x1.0, x2.0, "{}: rand_point not reproducible", m.name());
        assert!(m.check_point(&x1, 1e-12), "{}", m.name());

        let t1 = m.rand_tangent(&x1, &mut rng(100));
        let t2 = m.rand_tangent(&x1, &mut rng(100));
        assert_eq!(t1.0, t2.0, "{}: rand_tangent not reproducible", m.name());
        assert_relative_eq!(t1.norm(), 1.0, epsilon = 1e-12);
        assert!(m.check_tangent(&x1, &t1, 1e-10), "{}", m.name());
    }
}

#[test]
fn product_dimension_and_inner_sum() {
    let p = ProductManifold::new(vec![
        Box::new(Sphere::new(4)),
        Box::new(Stiefel::new(5, 2)),
    ]);
    assert_eq!(p.dim(), 3 + (10 - 3));
    let mut r = rng(16);
    let x = p.rand_point(&mut r);
    let u = p.rand_tangent(&x, &mut r);
    let v = p.rand_tangent(&x, &mut r);
    let total = p.inner(&x, &u, &v);
    let mut by_factor = 0.0;
    for i in 0..2 {
        let ui = p.factor_slice(&u.0, i);
        let vi = p.factor_slice(&v.0, i);
        by_factor += crate::linalg::fdot(&ui, &vi);
    }
    assert_relative_eq!(total, by_factor, epsilon = 1e-14);
}

#[test]
fn rotations_stay_special_orthogonal() {
    let m = Rotations::new(3, 4);
    let mut r = rng(17);
    let x = m.rand_point(&mut r);
    assert!(m.check_point(&x, 1e-10));
    let s = Tangent(0.7 * m.rand_tangent(&x, &mut r).0);
    let y = m.retract(&x, &s);
    assert!(m.check_point(&y, 1e-10), "Q-factor keeps det = +1");

    let me = Rotations::with_exponential(3, 4);
    let y2 = me.retract(&x, &s);
    assert!(me.check_point(&y2, 1e-10), "exponential keeps det = +1");
}

#[test]
fn sigma_min_tends_to_one_as_step_vanishes() {
    let mut r = rng(18);
    for m in all_manifolds() {
        for &a in &[1e-2, 1e-4] {
            let x = m.rand_point(&mut r);
            let s = Tangent(a * m.rand_tangent(&x, &mut r).0);
            let fd = m.dretract(&x, &s, &m.rand_tangent(&x, &mut r)).finite_difference;
            let mat = dretract_matrix(&*m, &x, &s).unwrap();
            let smin = sigma_min(&mat);
            let slack = if fd { 1e-4 } else { 1e-9 };
            assert!(
                smin >= 1.0 - 5.0 * a - slack,
                "{}: sigma_min {smin} at ||s|| = {a}",
                m.name()
            );
        }
    }
}
