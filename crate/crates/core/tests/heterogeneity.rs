use feducbvi_core::env::{make_gridworld, make_synthetic, Fleet, GridSpec, HETEROGENEITY_TOL};
use feducbvi_core::rng::env_stream;

/// Recomputes both heterogeneity bounds cell by cell from the agent MDPs,
/// independently of the fleet's own scan helpers.
fn scan(fleet: &Fleet) -> (f64, f64) {
    let c = fleet.common();
    let (hh, ns, na) = (c.horizon(), c.n_states(), c.n_actions());
    let agents: Vec<_> = (0..fleet.n_agents()).map(|i| fleet.agent_mdp(i).unwrap()).collect();
    let mut tv = 0.0f64;
    let mut spread = 0.0f64;
    for h in 0..hh {
        for s in 0..ns {
            for a in 0..na {
                for m in &agents {
                    let l1: f64 = c
                        .kernel_row(h, s, a)
                        .iter()
                        .zip(m.kernel_row(h, s, a))
                        .map(|(x, y)| (x - y).abs())
                        .sum();
                    tv = tv.max(l1);
                    for other in &agents {
                        spread = spread.max((m.reward(h, s, a) - other.reward(h, s, a)).abs());
                    }
                }
            }
        }
    }
    (tv, spread)
}

#[test]
fn generated_fleets_respect_both_bounds() {
    let mut checked = 0;
    for eps_p in [0.0, 0.1, 0.5] {
        for seed in 0..4u64 {
            let eps_r = 0.05 * seed as f64;
            let mut rng = env_stream(seed);
            let syn = make_synthetic(5, 3, 4, 6, eps_p, eps_r, &mut rng).unwrap();
            let mut rng = env_stream(seed);
            let grid = make_gridworld(&GridSpec::default(), 6, eps_p, eps_r, &mut rng).unwrap();
            for fleet in [syn, grid] {
                let (tv, spread) = scan(&fleet);
                assert!(tv <= eps_p + HETEROGENEITY_TOL, "tv {tv} > {eps_p}");
                assert!(spread <= eps_r + HETEROGENEITY_TOL, "spread {spread} > {eps_r}");
                assert!((fleet.max_kernel_deviation() - tv).abs() < 1e-12);
                checked += 1;
            }
        }
    }
    assert!(checked >= 20);
}

#[test]
fn common_reward_is_the_agent_mean() {
    let mut rng = env_stream(4);
    let fleet = make_synthetic(3, 2, 2, 5, 0.2, 0.3, &mut rng).unwrap();
    let c = fleet.common();
    for j in 0..c.rewards().len() {
        let mean: f64 = (0..5).map(|i| fleet.agent_reward(i)[j]).sum::<f64>() / 5.0;
        assert!((c.rewards()[j] - mean).abs() < 1e-12);
    }
}

#[test]
fn adding_agents_keeps_the_common_mdp() {
    let mut r1 = env_stream(8);
    let mut r2 = env_stream(8);
    let a = make_synthetic(4, 2, 3, 1, 0.0, 0.0, &mut r1).unwrap();
    let b = make_synthetic(4, 2, 3, 16, 0.0, 0.0, &mut r2).unwrap();
    assert_eq!(a.common(), b.common());
}
