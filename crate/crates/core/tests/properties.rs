use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use rotwave::config::RunConfig;
use rotwave::constants::{estimate_constants, DecayBudget};
use rotwave::decay::{fit_decay, RateUnits, RaySample};
use rotwave::grid::{Field, Grid2D};
use rotwave::matrix_analysis::{
    coercivity_constant, constants_bundle, first_antieigenvalue, lp_dissipativity_margin, p_range, simultaneous_diagonalize,
    SquareMatrix,
};
use rotwave::model::{Qcgl, QcglParams, ReactionModel};
use rotwave::pde::Discretization;
use rotwave::special::gauss_2f1;
use rotwave::spectral::{determinant_residual, dispersion_essential};
use rotwave::weights::{discrete_lp_norm, weighted_lp_norm, WeightSpec};

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

fn qcgl_a() -> SquareMatrix {
    SquareMatrix::from_rows(2, &[0.5, -0.5, 0.5, 0.5]).unwrap()
}

fn qcgl_b() -> SquareMatrix {
    SquareMatrix::from_rows(2, &[0.5, 0.0, 0.0, 0.5]).unwrap()
}

fn ray(f: impl Fn(f64) -> f64) -> RaySample {
    let radii: Vec<f64> = (0..1000).map(|i| 20.0 * i as f64 / 999.0).collect();
    let values = radii.iter().map(|&r| f(r)).collect();
    RaySample { direction: [0.0, 1.0], radii, values }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn assumption_chain_and_antieigenvalue_equivalence(m in prop_oneof![matrix(2), matrix(3)], p in 1.01..6.0f64) {
        let a = SquareMatrix::real(m).unwrap();
        let gamma = lp_dissipativity_margin(&a, p).unwrap();
        let beta = coercivity_constant(&a);
        let abscissa = a.eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if gamma > 1e-8 {
            prop_assert!(beta > 0.0, "gamma {gamma} beta {beta}");
        }
        if beta > 1e-8 {
            prop_assert!(abscissa > 0.0);
        }
        let mu1 = first_antieigenvalue(&a).mu1;
        prop_assert!((-1.0..=1.0).contains(&mu1));
        let gap = mu1 - (p - 2.0).abs() / p;
        if gap.abs() > 1e-3 && gamma.abs() > 1e-6 {
            prop_assert_eq!(gamma > 0.0, gap > 0.0, "gamma {} mu1 {} p {}", gamma, mu1, p);
        }
    }

    #[test]
    fn antieigenvalue_is_scale_invariant(m in matrix(2), c in 0.1..10.0f64) {
        let a = SquareMatrix::real(m).unwrap();
        let (u, v) = (first_antieigenvalue(&a).mu1, first_antieigenvalue(&a.scale(c)).mu1);
        prop_assert!((u - v).abs() < 1e-6, "{u} {v}");
    }

    #[test]
    fn simultaneous_diagonalization_residual(m in matrix(3), c in -1.0..1.0f64) {
        let a = SquareMatrix::real(&m * m.transpose() + DMatrix::identity(3, 3)).unwrap();
        let ae = a.entries().clone();
        let b = SquareMatrix::complex(&ae * &ae * Complex64::new(c, 0.0) + &ae * Complex64::new(2.0, 0.0)).unwrap();
        let diag = simultaneous_diagonalize(&a, &b, 1e-10).unwrap();
        let la = &diag.y_inv * a.entries() * &diag.y;
        let lb = &diag.y_inv * b.entries() * &diag.y;
        for i in 0..3 {
            for j in 0..3 {
                let (ta, tb) = if i == j { (diag.lambda_a[i], diag.lambda_b[i]) } else { (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)) };
                prop_assert!((la[(i, j)] - ta).norm() <= 1e-10 * a.norm().max(1.0) * diag.kappa);
                prop_assert!((lb[(i, j)] - tb).norm() <= 1e-10 * b.norm().max(1.0) * diag.kappa);
            }
        }
    }

    #[test]
    fn hypergeometric_binomial_identity(a in 0.01..5.0f64, b in 0.1..5.0f64, z in 0.0..0.9f64) {
        let v = gauss_2f1(a, b, b, z).unwrap();
        let want = (1.0 - z).powf(-a);
        prop_assert!((v - want).abs() <= 1e-12 * want.max(1.0), "{v} {want}");
    }

    #[test]
    fn ndr_is_scale_invariant(a in 0.2..2.0f64, c in 1e-3..1e3f64) {
        let f1 = fit_decay(&ray(|r| (-a * r).exp()), [5.0, 13.0]).unwrap();
        let f2 = fit_decay(&ray(|r| c * (-a * r).exp()), [5.0, 13.0]).unwrap();
        prop_assert!((f1.ndr(RateUnits::Natural) - f2.ndr(RateUnits::Natural)).abs() < 1e-9);
        prop_assert!((f1.ndr(RateUnits::Natural) - a).abs() < 1e-9);
    }

    #[test]
    fn ndr_is_robust_to_ripple(a in 0.2..2.0f64) {
        let f = fit_decay(&ray(|r| (-a * r).exp() * (1.0 + 0.01 * r.sin())), [5.0, 13.0]).unwrap();
        prop_assert!((f.ndr(RateUnits::Natural) - a).abs() < 0.005);
        prop_assert!((f.ndr(RateUnits::Log10) - a / std::f64::consts::LN_10).abs() < 0.005);
    }

    #[test]
    fn dispersion_points_solve_the_determinant(w in 0.0..5.0f64, n in -6i64..=6, s in 0.2..2.0f64) {
        let m = Qcgl::default();
        let curves = dispersion_essential(&m, &[s], &[w], (n, n)).unwrap();
        for (omega, z) in &curves[0].points {
            prop_assert!(determinant_residual(&m, *z, *omega, n as f64 * s) <= 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(re in -1.5..1.5f64, im in -1.5..1.5f64) {
        let m = Qcgl::default();
        let u = [re, im];
        let j = m.df(&u);
        let h = 1e-6;
        for c in 0..2 {
            let (mut up, mut dn) = (u, u);
            up[c] += h;
            dn[c] -= h;
            let (fp, fm) = (m.f(&up), m.f(&dn));
            for r in 0..2 {
                prop_assert!(((fp[r] - fm[r]) / (2.0 * h) - j[(r, c)]).abs() <= 1e-7 * (1.0 + j[(r, c)].abs()));
            }
        }
        // f(u) = g(|u|^2) u with g(v) = delta + beta v + gamma v^2
        let p = QcglParams::default();
        let z = Complex64::new(re, im);
        let v = z.norm_sqr();
        let g = (p.delta + p.beta * v + p.gamma * v * v) * z;
        let f = m.f(&u);
        prop_assert!((f[0] - g.re).abs() < 1e-12 && (f[1] - g.im).abs() < 1e-12);
    }

    #[test]
    fn neumann_laplacian_is_weighted_symmetric_and_dissipative(seed in prop::collection::vec(-1.0..1.0f64, 81 * 2)) {
        let g = Grid2D::new(2.0, 0.5).unwrap();
        let d = Discretization::new(g);
        let (u, v) = seed.split_at(81);
        let (mut lu, mut lv) = (vec![0.0; 81], vec![0.0; 81]);
        d.apply(&d.laplacian, 1, u, &mut lu);
        d.apply(&d.laplacian, 1, v, &mut lv);
        let dot = |a: &[f64], b: &[f64]| (0..81).map(|k| g.trapezoid_weight(k) * a[k] * b[k]).sum::<f64>();
        prop_assert!((dot(&lu, v) - dot(u, &lv)).abs() < 1e-10);
        prop_assert!(dot(&lu, u) <= 1e-12);
        let ones = vec![1.0; 81];
        let mut l1 = vec![0.0; 81];
        d.apply(&d.laplacian, 1, &ones, &mut l1);
        prop_assert!(l1.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn angular_derivative_annihilates_quadratics_in_r2(c0 in -2.0..2.0f64, c1 in -2.0..2.0f64, c2 in -2.0..2.0f64) {
        let g = Grid2D::new(4.0, 0.25).unwrap();
        let d = Discretization::new(g);
        let f: Vec<f64> = (0..g.nodes())
            .map(|k| {
                let (x, y) = g.position(k);
                let s = x * x + y * y;
                c0 + c1 * s + c2 * s * s
            })
            .collect();
        let mut out = vec![0.0; g.nodes()];
        d.apply(&d.d12, 1, &f, &mut out);
        let worst = (0..g.nodes())
            .filter(|&k| {
                let (x, y) = g.position(k);
                x.abs() < 4.0 - 1e-9 && y.abs() < 4.0 - 1e-9
            })
            .map(|k| out[k].abs())
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-9, "{}", worst);
    }

    #[test]
    fn config_round_trips(dx in prop_oneof![Just(0.25), Just(0.5)], sigma in -3.0..-0.1f64, lo in 1.0..5.0f64, neigs in 4usize..60) {
        let mut cfg = RunConfig::default();
        cfg.pde.dx = dx;
        cfg.spectral.sigma = sigma;
        cfg.spectral.neigs = neigs;
        cfg.decay.window = [lo, lo + 6.0];
        let text = serde_json::to_string(&cfg).unwrap();
        let back = RunConfig::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
        let mut moved = cfg.clone();
        moved.output = "elsewhere".into();
        prop_assert_eq!(moved.hash(), cfg.hash());
    }
}

#[test]
fn estimate_constants_increase_in_eps() {
    let c = constants_bundle(&qcgl_a(), &qcgl_b(), 2, 2.0).unwrap();
    let vals: Vec<(f64, f64)> = (0..20)
        .map(|i| {
            let e = estimate_constants(&c, 2, 2.0, 0.05 + 0.9 * i as f64 / 19.0, 1.0).unwrap();
            (e.c0_eps, e.c1_eps)
        })
        .collect();
    assert!(vals.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1), "{vals:?}");
}

#[test]
fn profile_rate_decreases_in_p_and_eigen_rate_is_linear() {
    let a = qcgl_a();
    let c = constants_bundle(&a, &qcgl_b(), 2, 2.0).unwrap();
    let r = p_range(&a).unwrap();
    let b = DecayBudget::new(&c, 2, r, 2.0).unwrap();
    let ps: Vec<f64> = (1..20).map(|i| r.p_min + (r.p_max - r.p_min) * i as f64 / 20.0).collect();
    assert!(ps.windows(2).all(|w| b.mu_pro_at(w[1]) < b.mu_pro_at(w[0])));
    let slope = b.nu / (b.p * b.beta_inf);
    let base = b.eig(Complex64::new(0.0, 0.0)).mu_eig;
    for k in 1..10 {
        let re = -b.beta_inf * k as f64 / 10.0;
        let e = b.eig(Complex64::new(re, 0.7)).mu_eig;
        assert!((e - (base + slope * re)).abs() < 1e-12, "{re}: {e}");
    }
}

#[test]
fn unit_weight_norm_is_the_plain_norm() {
    let g = Grid2D::new(3.0, 0.5).unwrap();
    let f = Field::from_fn(g, 2, |x, y| vec![(x * y).sin(), (-(x * x + y * y)).exp()]);
    for p in [1.5, 2.0, 4.0] {
        assert_eq!(weighted_lp_norm(&f, &WeightSpec::unit(), p), discrete_lp_norm(&f, p));
    }
}
