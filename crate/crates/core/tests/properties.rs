use infoflow_core::measures::{
    centralize, euclidean_norm, memory_of, norms, pi_inner, pi_norm, uniform_norm,
};
use proptest::prelude::*;

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn pi_and_vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|n| {
        (
            distribution(n),
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
        )
    })
}

proptest! {
    #[test]
    fn norm_chain((pi, x, _) in pi_and_vectors()) {
        let n = norms(&x, &pi).unwrap();
        let min = pi.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(n.uniform <= n.euclidean + 1e-12);
        prop_assert!(n.euclidean <= n.pi / min.sqrt() + 1e-9);
        prop_assert!(n.pi <= n.uniform + 1e-12);
        prop_assert_eq!(n.uniform, uniform_norm(&x));
        prop_assert_eq!(n.euclidean, euclidean_norm(&x));
    }

    #[test]
    fn triangle_and_cauchy_schwarz((pi, x, y) in pi_and_vectors()) {
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let nx = pi_norm(&x, &pi).unwrap();
        let ny = pi_norm(&y, &pi).unwrap();
        prop_assert!(pi_norm(&s, &pi).unwrap() <= nx + ny + 1e-12);
        prop_assert!(pi_inner(&x, &y, &pi).unwrap().abs() <= nx * ny + 1e-12);
    }

    #[test]
    fn centralize_is_orthogonal_to_constants((pi, x, _) in pi_and_vectors()) {
        let c = centralize(&x, &pi).unwrap();
        let ones = vec![1.0; pi.len()];
        prop_assert!(pi_inner(&c, &ones, &pi).unwrap().abs() < 1e-12);
        // Pythagoras: ‖x‖² = ‖x − ⟨x,1⟩1‖² + ⟨x,1⟩²
        let mean = pi_inner(&x, &ones, &pi).unwrap();
        let lhs = pi_norm(&x, &pi).unwrap().powi(2);
        let rhs = pi_norm(&c, &pi).unwrap().powi(2) + mean * mean;
        prop_assert!((lhs - rhs).abs() < 1e-9 * lhs.max(1.0));
    }

    #[test]
    fn memory_of_normalized_vector((pi, x, _) in pi_and_vectors()) {
        let raw: Vec<f64> = x.iter().map(|v| v.abs() + 1e-3).collect();
        let z: f64 = raw.iter().zip(&pi).map(|(a, p)| a * p).sum();
        let rho_tilde: Vec<f64> = raw.iter().map(|a| a / z).collect();
        let m = memory_of(&rho_tilde);
        let ones = vec![1.0; pi.len()];
        prop_assert!(pi_inner(&m, &ones, &pi).unwrap().abs() < 1e-10);
        let nm = pi_norm(&m, &pi).unwrap().powi(2);
        let nr = pi_norm(&rho_tilde, &pi).unwrap().powi(2);
        prop_assert!((nm - (nr - 1.0)).abs() < 1e-9 * nr.max(1.0));
    }
}
