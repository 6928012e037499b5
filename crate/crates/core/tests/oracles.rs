//! Cross-checks of the numeric kernels against nalgebra.

use glyphline::geom::{AABox, Point};
use glyphline::lineshape::fit_order1;
use glyphline::rectify::{tps_fit, tps_kernel};
use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn angle_diff_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}

#[test]
fn order1_direction_matches_nalgebra_pca() {
    let mut r = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let theta = r.random_range(0.0..std::f64::consts::PI);
        let dir = Point::new(theta.cos(), theta.sin());
        let n = r.random_range(3..20usize);
        let boxes: Vec<AABox<f64>> = (0..n)
            .map(|i| {
                let noise = Point::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
                AABox::centered(Point::new(100.0, 80.0) + dir * (i as f64 * 15.0) + noise, 10.0, 18.0)
            })
            .collect();
        let model = fit_order1(&boxes);
        let got = model.center_lines[0].direction();

        let centers: Vec<Point<f64>> = boxes.iter().map(|b| b.center()).collect();
        let mx = centers.iter().map(|c| c.x).sum::<f64>() / n as f64;
        let my = centers.iter().map(|c| c.y).sum::<f64>() / n as f64;
        let mut cov = Matrix2::zeros();
        for c in &centers {
            let d = nalgebra::Vector2::new(c.x - mx, c.y - my);
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov / n as f64);
        let major = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
        let v = eig.eigenvectors.column(major);
        let diff = angle_diff_mod_pi(got.y.atan2(got.x), v[1].atan2(v[0]));
        assert!(diff <= 1e-6, "angle differs by {diff}");
    }
}

/// Dense TPS solve written independently: kernel block bordered by the
/// affine block, one right-hand side per output coordinate.
fn nalgebra_tps(src: &[Point<f64>], dst: &[Point<f64>]) -> impl Fn(Point<f64>) -> Point<f64> {
    let m = src.len();
    let kernel = |a: Point<f64>, b: Point<f64>| {
        let r2 = (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
        if r2 == 0.0 {
            0.0
        } else {
            r2 * r2.ln()
        }
    };
    let mut l = DMatrix::<f64>::zeros(m + 3, m + 3);
    for i in 0..m {
        for j in 0..m {
            l[(i, j)] = kernel(src[i], src[j]);
        }
        let p = [1.0, src[i].x, src[i].y];
        for k in 0..3 {
            l[(i, m + k)] = p[k];
            l[(m + k, i)] = p[k];
        }
    }
    let lu = l.lu();
    let solve = |f: &dyn Fn(&Point<f64>) -> f64| {
        let mut rhs = DVector::<f64>::zeros(m + 3);
        for (i, p) in dst.iter().enumerate() {
            rhs[i] = f(p);
        }
        lu.solve(&rhs).expect("non-singular system")
    };
    let cx = solve(&|p| p.x);
    let cy = solve(&|p| p.y);
    let src = src.to_vec();
    move |q: Point<f64>| {
        let eval = |c: &DVector<f64>| {
            let mut v = c[m] + c[m + 1] * q.x + c[m + 2] * q.y;
            for (i, s) in src.iter().enumerate() {
                v += c[i] * kernel(q, *s);
            }
            v
        };
        Point::new(eval(&cx), eval(&cy))
    }
}

#[test]
fn tps_matches_nalgebra_dense_solve() {
    let mut r = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let src: Vec<Point<f64>> =
            (0..8).map(|_| Point::new(r.random_range(0.0..100.0), r.random_range(0.0..100.0))).collect();
        let dst: Vec<Point<f64>> =
            src.iter().map(|p| *p + Point::new(r.random_range(-10.0..10.0), r.random_range(-10.0..10.0))).collect();
        let ours = tps_fit(&src, &dst).unwrap();
        let oracle = nalgebra_tps(&src, &dst);
        for (s, d) in src.iter().zip(&dst) {
            assert!(ours.apply(*s).dist(*d) <= 1e-6);
        }
        for _ in 0..20 {
            let q = Point::new(r.random_range(-20.0..120.0), r.random_range(-20.0..120.0));
            let (a, b) = (ours.apply(q), oracle(q));
            assert!(a.dist(b) <= 1e-6 * (1.0 + b.norm()), "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn kernel_matches_closed_form() {
    for r in [0.5f64, 1.0, 2.0, 10.0] {
        let r2 = r * r;
        assert!((tps_kernel(r2) - r2 * r2.ln()).abs() <= 1e-12 * (1.0 + r2 * r2.ln().abs()));
    }
    assert_eq!(tps_kernel(0.0f64), 0.0);
}
