use neutral_dichotomy::classifier::resolve_gaps;
use neutral_dichotomy::projections::{gap_projection, residue_projection, Kind, ProjectionOperator};
use neutral_dichotomy::rootfinder::{enumerate_eigenvalues, Eigenvalue};
use neutral_dichotomy::{GridFunction, NeutralParams};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 512;

fn smooth(seed: u64, real: bool) -> GridFunction {
    GridFunction::random_smooth(&mut ChaCha8Rng::seed_from_u64(seed), N, 6, real).unwrap()
}

fn low_roots(p: &NeutralParams) -> Vec<Eigenvalue> {
    let spec = enumerate_eigenvalues(p, 4).unwrap();
    spec.roots()
        .iter()
        .filter(|e| e.is_simple() && e.certified && e.value.im.abs() < 20.0)
        .copied()
        .collect()
}

fn params() -> impl Strategy<Value = NeutralParams> {
    (-2.0..2.0f64, -2.0..2.0f64, prop_oneof![-3.0..-0.2f64, 0.2..3.0f64])
        .prop_map(|(a, b, c)| NeutralParams::new(a, b, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residue_projection_is_idempotent(p in params(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let roots = low_roots(&p);
        prop_assume!(!roots.is_empty());
        let e = roots[pick.index(roots.len())];
        let f = smooth(seed, false);
        let g = residue_projection(&p, &e, &f).unwrap();
        let gg = residue_projection(&p, &e, &g).unwrap();
        prop_assert!((&gg - &g).sup_norm() <= 1e-8 * (1.0 + g.sup_norm()));
    }

    #[test]
    fn residue_projection_commutes_with_conjugation(p in params(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let roots = low_roots(&p);
        prop_assume!(!roots.is_empty());
        let e = roots[pick.index(roots.len())];
        let conj = Eigenvalue { value: e.value.conj(), ..e };
        let f = smooth(seed, false);
        let lhs = residue_projection(&p, &conj, &f.conj()).unwrap();
        let rhs = residue_projection(&p, &e, &f).unwrap().conj();
        prop_assert!((&lhs - &rhs).sup_norm() <= 1e-10 * (1.0 + rhs.sup_norm()));
    }

    #[test]
    fn projection_is_linear(p in params(), s1 in any::<u64>(), s2 in any::<u64>(), w in -3.0..3.0f64) {
        let roots = low_roots(&p);
        prop_assume!(!roots.is_empty());
        let op = ProjectionOperator::new(p, roots, Kind::MainEquation).unwrap();
        let (f, g) = (smooth(s1, false), smooth(s2, false));
        let lhs = op.apply(&(&f + &g.scale(Complex64::new(w, 0.5))));
        let rhs = &op.apply(&f) + &op.apply(&g).scale(Complex64::new(w, 0.5));
        prop_assert!((&lhs - &rhs).sup_norm() <= 1e-10 * (1.0 + rhs.sup_norm()));
    }

    #[test]
    fn random_unimodular_inputs_stay_below_the_norm(seed in any::<u64>()) {
        let p = NeutralParams::new(2.0, 0.5, 1.0).unwrap();
        let op = ProjectionOperator::new(p, low_roots(&p), Kind::MainEquation).unwrap();
        let norm = op.operator_norm(N);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = GridFunction::from_samples(
            (0..=N).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))).collect(),
        ).unwrap();
        prop_assert!(op.kernel_form().apply(&phi).sup_norm() <= norm * (1.0 + 1e-6));
    }
}

#[test]
fn gap_split_reassembles_and_stays_real() {
    let p = NeutralParams::new(2.0, 0.5, 1.0).unwrap();
    let res = resolve_gaps(&p, 4, 20).unwrap();
    for seed in 0..5 {
        let f = smooth(seed, true);
        for gap in &res.gaps[1..] {
            let (fin, rest) = gap_projection(&p, gap, &f).unwrap();
            assert!((&(&fin + &rest) - &f).sup_norm() < 1e-12);
            assert_eq!(fin.max_imag(), 0.0);
            let (again, _) = gap_projection(&p, gap, &fin).unwrap();
            assert!((&again - &fin).sup_norm() < 1e-9 * (1.0 + fin.sup_norm()));
        }
    }
}

/// Inputs aligned with the kernel row at the maximising `θ` nearly attain the norm.
#[test]
fn aligned_inputs_attain_the_norm() {
    let p = NeutralParams::new(2.0, 0.5, 1.0).unwrap();
    let res = resolve_gaps(&p, 4, 20).unwrap();
    let op = ProjectionOperator::from_gap(p, &res.gaps[3]).unwrap();
    let kf = op.kernel_form();
    let n = 1024;
    let norm = kf.norm(n);
    let h = 1.0 / n as f64;
    let row = |theta: f64| -> f64 {
        let integral: f64 = (0..=n)
            .map(|j| {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                w * kf.k(theta, -1.0 + j as f64 * h).norm()
            })
            .sum::<f64>()
            * h;
        kf.c0(theta).norm() + kf.c1(theta).norm() + integral
    };
    let theta = (0..=n)
        .map(|i| -1.0 + i as f64 * h)
        .max_by(|x, y| row(*x).total_cmp(&row(*y)))
        .unwrap();
    let unit = |z: Complex64| {
        if z.norm() > 0.0 {
            z.conj() / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    let phi = GridFunction::from_callable(
        |s| {
            if s == 0.0 {
                unit(kf.c0(theta) + kf.k(theta, 0.0) * (0.5 * h))
            } else if s == -1.0 {
                unit(kf.c1(theta) + kf.k(theta, -1.0) * (0.5 * h))
            } else {
                unit(kf.k(theta, s))
            }
        },
        n,
    )
    .unwrap();
    let reached = kf.apply(&phi).sup_norm();
    assert!(reached >= 0.95 * norm, "{reached} vs {norm}");
    assert!(reached <= norm * (1.0 + 1e-6));
}
