use fracmem::*;
use proptest::prelude::*;

fn form_on(dim: usize, n: usize, s: f64, keep: &[bool]) -> QuadraticForm64 {
    let g = if dim == 1 {
        Grid::new(1, &[0.0], 1.0 / n as f64, &[n]).unwrap()
    } else {
        Grid::new(2, &[0.0, 0.0], 1.0 / n as f64, &[n, n]).unwrap()
    };
    let mut inside: Vec<bool> = (0..g.len()).map(|i| keep[i % keep.len()]).collect();
    inside[0] = true;
    let mask = Mask::from_indicator(g, &inside);
    assemble_form(&mask, &FormSpec::new(dim, s).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn form_is_coercive_and_symmetric(
        dim in 1usize..=2,
        n in 3usize..12,
        s in 0.05f64..0.95,
        keep in prop::collection::vec(any::<bool>(), 1..20),
        seed in prop::collection::vec(-1.0f64..1.0, 1..200),
    ) {
        let form = form_on(dim, n, s, &keep);
        let m = form.len();
        let u: Vec<f64> = (0..m).map(|i| seed[i % seed.len()] + 1e-3).collect();
        let v: Vec<f64> = (0..m).map(|i| seed[(i * 7 + 3) % seed.len()]).collect();
        let q = form.quadratic(&u);
        // the exterior tail alone bounds Q from below
        let tail: f64 = form.tail().iter().zip(&u).map(|(t, x)| t * x * x).sum();
        prop_assert!(tail > 0.0);
        prop_assert!(q >= tail * (1.0 - 1e-12));
        prop_assert!((q - form.quadratic_pairwise(&u)).abs() <= 1e-10 * q);
        let (mut au, mut av) = (vec![0.0; m], vec![0.0; m]);
        form.apply(&u, &mut au);
        form.apply(&v, &mut av);
        let uav: f64 = u.iter().zip(&av).map(|(a, b)| a * b).sum();
        let vau: f64 = v.iter().zip(&au).map(|(a, b)| a * b).sum();
        let scale: f64 = form.row_sum() * (u.iter().map(|x| x * x).sum::<f64>() * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
        prop_assert!((uav - vau).abs() <= 1e-12 * scale);
    }

    #[test]
    fn ground_state_is_monotone_in_alpha(
        n in 4usize..40,
        s in 0.1f64..0.9,
        keep in prop::collection::vec(any::<bool>(), 1..8),
        a in 0.0f64..10.0,
        da in 0.0f64..10.0,
    ) {
        let form = form_on(1, n, s, &keep);
        let d = Mask::new(*form.domain().grid(), form.domain().cells().iter().copied().step_by(2).collect()).unwrap();
        let lo = smallest_eigenpair(&form, &d, a, 1e-11).unwrap();
        let hi = smallest_eigenpair(&form, &d, a + da, 1e-11).unwrap();
        prop_assert!(lo.lambda > 0.0);
        prop_assert!(hi.lambda >= lo.lambda - 1e-9 * lo.lambda);
        prop_assert!(hi.lambda <= lo.lambda + da + 1e-9 * hi.lambda);
        prop_assert!(lo.vector.values().iter().all(|&x| x >= -1e-9));
    }
}
