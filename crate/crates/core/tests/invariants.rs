use proptest::prelude::*;
use qrefl::boundary::{build_k, check_family_invariants, check_kbar_image, check_twisted_reflection, Family};
use qrefl::chain::{check_h_stochastic, ChainSpec, double_row_transfer, left_eigenvalue_of_ones};
use qrefl::exactnum::rat;
use qrefl::harness::Eval;
use qrefl::rmat::{check_stochastic, check_unitarity};
use qrefl::{ExactScalar, Field, ModelConfig, ParamPoint};

fn scalar() -> impl Strategy<Value = ExactScalar> {
    (-12i64..=12, 1i64..=9)
        .prop_filter("nonzero", |(a, _)| *a != 0)
        .prop_map(|(a, b)| rat(a, b).unwrap())
}

fn point(names: &'static [&'static str]) -> impl Strategy<Value = ParamPoint> {
    proptest::collection::vec(scalar(), names.len())
        .prop_map(move |vs| names.iter().zip(vs).fold(ParamPoint::new(), |p, (n, v)| p.bind(n, v)))
}

/// Poles are rejected rather than counted; any mismatch or other error fails.
fn holds(e: Eval) -> Result<(), TestCaseError> {
    match e {
        Ok(None) => Ok(()),
        Ok(Some(w)) => Err(TestCaseError::fail(w.to_string())),
        Err(e) if e.is_resamplable() => Err(TestCaseError::reject("pole")),
        Err(e) => Err(TestCaseError::fail(e.to_string())),
    }
}

fn small_config() -> impl Strategy<Value = ModelConfig> {
    (2usize..=3, 1usize..=2, 1usize..=2).prop_map(|(n, i, j)| ModelConfig::new(n, i, j).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn s_is_stochastic(cfg in small_config(), p in point(&["q", "u"])) {
        holds(check_stochastic(&cfg, &p, None))?;
    }

    #[test]
    fn s_is_unitary(cfg in small_config(), p in point(&["q", "u"])) {
        holds(check_unitarity(&cfg, &p, None))?;
    }

    #[test]
    fn k_columns_sum_to_one(n in 2usize..=3, spin in 1usize..=2, f in 0usize..4, p in point(&["q", "w", "nu"])) {
        holds(check_family_invariants(n, spin, Family::ALL[f], &p, None))?;
    }

    #[test]
    fn twist_preserves_reflection(times in 1usize..=2, p in point(&["q", "u", "w", "nu", "mu"])) {
        let cfg = ModelConfig::new(3, 1, 1).unwrap();
        holds(check_twisted_reflection(&cfg, times, &p, None))?;
    }

    #[test]
    fn kbar_image_solves_bar_equation(spins in (1usize..=2, 1usize..=2), p in point(&["q", "u", "w", "nu"])) {
        let cfg = ModelConfig::new(2, spins.0, spins.1).unwrap();
        holds(check_kbar_image(&cfg, &p, None))?;
    }

    #[test]
    fn k_at_one_is_identity_for_any_nu(nu in scalar(), q in scalar()) {
        let one = ExactScalar::one();
        match build_k(3, 2, Family::RightUpper, &one, &nu, &q) {
            Ok(k) => prop_assert!(k.is_identity()),
            Err(e) if e.is_resamplable() => return Err(TestCaseError::reject("pole")),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn hamiltonian_annihilated_by_ones(right in 0usize..2, p in point(&["q", "nu_r", "nu_l"])) {
        holds(check_h_stochastic(2, 1, 2, Family::ALL[right], &p, None))?;
    }

    #[test]
    fn transfer_row_of_ones_is_eigenvector(right in 0usize..2, p in point(&["q", "nu_r", "nu_l"]), u in scalar()) {
        let spec = ChainSpec::at_point(2, 1, 2, Family::ALL[right], &p).unwrap();
        match double_row_transfer(&spec, &u) {
            Ok(t) => prop_assert!(left_eigenvalue_of_ones(&t).is_some()),
            Err(e) if e.is_resamplable() => return Err(TestCaseError::reject("pole")),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
