use cohawkes::cluster::{
    exp_marked_rates, exp_marked_rates_alternate, simulate_cluster_parking, simulate_cluster_thinning,
    simulate_exp_marked_conditional, simulate_marked_thinning, MarkLaw, MarkedParams,
};
use cohawkes::combinatorics::{
    dyck_path_weight, is_parking_function, kappa_histogram, sample_uniform_parking_function, sample_weighted_dyck_path,
    BorelLaw, DyckPath,
};
use cohawkes::performance::{guaranteed_rate, idealized_rate, poly_kstar, solve_kstar, AsyncMeans};
use cohawkes::queue::{run_replication, EngineParams, FixedDuration};
use cohawkes::{InteractionParams, ResponseKernel, RngStream, SlowdownSpec};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = InteractionParams> {
    (0.0..0.45f64, 0.0..0.45f64, 0.2..5.0f64, 0.2..5.0f64, 0.05..20.0f64)
        .prop_map(|(r1, r2, b1, b2, eta)| InteractionParams::exponential(r1, r2, b1, b2, eta).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cluster_records_are_well_formed(p in params(), seed in any::<u64>()) {
        let mut rng = RngStream::new(seed).rng();
        for rec in [simulate_cluster_thinning(&p, &mut rng).unwrap(), simulate_cluster_parking(&p, &mut rng).unwrap()] {
            rec.check_invariants().unwrap();
            let steps = rec.parent_dyck_steps();
            prop_assert!(DyckPath::new(steps.clone()).is_ok(), "{steps:?}");
            let kids = rec.offspring_counts();
            prop_assert_eq!(&kappa_histogram(&steps)[..], &kids[..rec.size() - 1]);
            prop_assert_eq!(kids[rec.size() - 1], 0);
            prop_assert!(rec.offsets().iter().all(|&o| o > 0.0));
        }
    }

    #[test]
    fn sampled_parking_functions_are_valid(k in 0usize..200, seed in any::<u64>()) {
        let pf = sample_uniform_parking_function(k, &mut RngStream::new(seed).rng()).unwrap();
        prop_assert_eq!(pf.len(), k);
        let entries: Vec<i64> = pf.entries().iter().map(|&x| x as i64).collect();
        prop_assert!(is_parking_function(&entries).unwrap());
        let d = pf.to_dyck_path();
        prop_assert_eq!(d.kappa(), pf.kappa());
        prop_assert_eq!(pf.kappa().iter().sum::<u32>() as usize, k);
    }

    #[test]
    fn shuffled_parking_functions_stay_parking(mut v in prop::collection::vec(1i64..6, 0..6), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let before = is_parking_function(&v).unwrap();
        v.shuffle(&mut RngStream::new(seed).rng());
        prop_assert_eq!(is_parking_function(&v).unwrap(), before);
    }

    #[test]
    fn weighted_dyck_samples_have_positive_weight(
        marks in prop::collection::vec(0.1..4.0f64, 1..10),
        seed in any::<u64>(),
    ) {
        let n = marks.len();
        let d = sample_weighted_dyck_path(n, &marks, &mut RngStream::new(seed).rng()).unwrap();
        prop_assert_eq!(d.len(), n);
        prop_assert!(dyck_path_weight(&d, &marks) > 0.0);
        prop_assert_eq!(DyckPath::from_kappa(&d.kappa()).unwrap(), d.clone());
        let (a, b) = (exp_marked_rates(&d), exp_marked_rates_alternate(&d));
        prop_assert!(a.iter().all(|&r| r >= 1.0));
        let mut sa = a.clone();
        let mut sb = b.clone();
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        prop_assert_eq!(sa, sb);
    }

    #[test]
    fn borel_pmf_is_a_distribution(rho in 0.01..0.9f64) {
        let law = BorelLaw::new(rho).unwrap();
        let total: f64 = (1..5000).map(|n| law.pmf(n).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-6, "{total}");
        prop_assert!((law.mean() - 1.0 / (1.0 - rho)).abs() < 1e-12);
    }

    #[test]
    fn kernel_inverse_cdf_round_trips(mass in 0.05..0.95f64, beta in 0.1..10.0f64, u in 0.001..0.999f64) {
        let g = ResponseKernel::exponential_with_mass(mass, beta).unwrap();
        prop_assert!((g.mass() - mass).abs() < 1e-12);
        let t = g.inverse_cdf(u).unwrap();
        prop_assert!((g.cdf(t).unwrap() - u).abs() < 1e-9);
        prop_assert!(g.is_non_increasing());
    }

    #[test]
    fn slowdown_inverse_round_trips(sigma in 0.1..5.0f64, k in 0.01..50.0f64) {
        let h = SlowdownSpec::polynomial(sigma).unwrap();
        let y = h.eval(k).unwrap();
        prop_assert!((h.inverse(y).unwrap() / k - 1.0).abs() < 1e-9);
        prop_assert!((h.synchronicity(k).unwrap() * y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_concurrency_brackets(t1 in 0.05..20.0f64, t2 in 0.05..20.0f64, sigma in 1.1..4.0f64) {
        let means = AsyncMeans::exact(t1, t2).unwrap();
        let h = SlowdownSpec::polynomial(sigma).unwrap();
        let closed = poly_kstar(&means, sigma).unwrap();
        let solved = solve_kstar(&means, &h).unwrap();
        prop_assert!((closed.k_star / solved.k_star - 1.0).abs() < 1e-9);
        prop_assert!(closed.k_lower <= closed.k_star && closed.k_star <= closed.k_upper);
        prop_assert!((closed.k_upper / solved.k_upper - 1.0).abs() < 1e-6);
        let g = guaranteed_rate(&means, &h, closed.k_star).unwrap();
        for f in [0.5, 0.9, 1.1, 2.0] {
            let k = f * closed.k_star;
            prop_assert!(guaranteed_rate(&means, &h, k).unwrap() <= g * (1.0 + 1e-12));
            prop_assert!(guaranteed_rate(&means, &h, k).unwrap() <= idealized_rate(&means, &h, k).unwrap());
        }
        prop_assert!(closed.g_at_star <= closed.i_at_star);
    }

    #[test]
    fn queue_replications_conserve_customers(
        kappa in 1usize..6,
        rate in 0.5..8.0f64,
        theta in 0.0..2.0f64,
        d in 0.1..3.0f64,
        seed in any::<u64>(),
    ) {
        let params = EngineParams {
            arrival_rate: rate,
            patience_rate: theta,
            max_concurrency: kappa,
            slowdown: SlowdownSpec::polynomial(1.3).unwrap(),
            horizon: 20.0,
        };
        let model = FixedDuration { duration: d };
        let (out, _) = run_replication(&model, &params, RngStream::new(seed).rng(), 0, false).unwrap();
        prop_assert!(out.counts.conserved());
        prop_assert!(out.counts.in_service <= kappa as u64);
        prop_assert!(out.occupancy >= 0.0 && out.occupancy <= kappa as f64);
        if theta == 0.0 {
            prop_assert_eq!(out.counts.abandonments, 0);
        }
    }
}

#[test]
fn marked_clusters_are_well_formed() {
    let p = MarkedParams::new(
        ResponseKernel::exponential_with_mass(0.3, 1.7).unwrap(),
        MarkLaw::Constant { value: 2.0 },
    )
    .unwrap();
    let mut rng = RngStream::new(3).rng();
    for _ in 0..2000 {
        let rec = simulate_marked_thinning(&p, &mut rng).unwrap();
        rec.check_invariants().unwrap();
        assert!(rec.marks.iter().all(|&m| m == 2.0));
    }
    for n in 1..8 {
        let rec = simulate_exp_marked_conditional(1.0, &vec![1.5; n], &mut rng).unwrap();
        rec.check_invariants().unwrap();
        assert_eq!(rec.size(), n);
    }
}
