use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qqt_core::mixture::eval_mixture_loss;
use qqt_core::scaling::eval_loss_at;
use qqt_core::sim::{integrate_mixture, integrate_single, simulate_mixture_at};
use qqt_core::{MixtureSpec, ParamGrid, PoolEntry, SimConfig, UtilityParams};

fn draw(rng: &mut ChaCha8Rng, grid: &ParamGrid) -> UtilityParams {
    let pick = |rng: &mut ChaCha8Rng, v: &[f64]| v[rng.random_range(0..v.len())];
    UtilityParams::new(
        pick(rng, &grid.a_values),
        pick(rng, &grid.b_values),
        pick(rng, &grid.d_values),
        pick(rng, &grid.tau_values),
    )
    .unwrap()
}

#[test]
fn integrator_matches_closed_form_at_boundaries() {
    let grid = ParamGrid::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let params = draw(&mut rng, &grid);
        let pool = rng.random_range(1_000..20_000_000u64);
        let traj = integrate_single(&params, pool, 10 * pool, &SimConfig::default()).unwrap();
        for epoch in 1..=10u64 {
            let n = epoch * pool;
            let y = traj.value_at(n as f64).expect("step lands on boundary");
            let closed = eval_loss_at(&params, pool, n).unwrap();
            assert!(((y - closed) / closed).abs() <= 1e-6, "{params:?} N={pool} epoch {epoch}: {y} vs {closed}");
        }
    }
}

#[test]
fn finer_steps_converge() {
    let params = UtilityParams::new(0.9, -0.45, 0.0, 1.0).unwrap();
    let closed = eval_loss_at(&params, 1_000, 10_500).unwrap();
    let gap = |f: f64| {
        let t = integrate_single(&params, 1_000, 10_500, &SimConfig::default().with_step_fraction(f)).unwrap();
        (t.endpoint().unwrap().1 - closed).abs()
    };
    let coarse = gap(0.5);
    let fine = gap(0.05);
    assert!(fine < coarse, "{fine} !< {coarse}");
    assert!(gap(1e-3) <= 1e-9 * closed);
}

fn random_mixture(rng: &mut ChaCha8Rng, grid: &ParamGrid, pools: usize) -> MixtureSpec {
    let entries = (0..pools)
        .map(|i| {
            let p = draw(rng, grid);
            let p = UtilityParams { b: -rng.random_range(0.02..0.4), ..p };
            PoolEntry::new(format!("p{i}"), p, rng.random_range(5_000..200_000u64))
        })
        .collect();
    MixtureSpec::new(entries).unwrap()
}

#[test]
fn mixture_integrator_tracks_closed_form() {
    let grid = ParamGrid::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for case in 0..12 {
        let spec = random_mixture(&mut rng, &grid, 2 + case % 2);
        let (a, d) = (spec.normalizer(), spec.floor());
        let n_hat = spec.combined_size();
        let budgets: Vec<u64> = [0.3, 1.0, 1.7, 3.0, 5.5, 10.0]
            .iter()
            .map(|e| (e * n_hat as f64) as u64)
            .filter(|&n| n >= 10_000)
            .collect();
        let cfg = SimConfig::default();
        let sim = simulate_mixture_at(&spec, a, d, &budgets, &cfg).unwrap();
        for (&n, &y) in budgets.iter().zip(&sim) {
            let closed = eval_mixture_loss(&spec, a, d, n).unwrap();
            assert!(((y - closed) / closed).abs() <= 0.01, "case {case} n={n}: {y} vs {closed}");
            compared += 1;
        }
        let end = integrate_mixture(&spec, a, d, *budgets.last().unwrap(), &cfg).unwrap();
        let last = *sim.last().unwrap();
        assert!(((end.endpoint().unwrap().1 - last) / last).abs() < 1e-9);
    }
    assert!(compared >= 60);
}

#[test]
fn mixture_integrator_ignores_pool_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spec = random_mixture(&mut rng, &ParamGrid::standard(), 3);
    let mut reversed: Vec<PoolEntry> = spec.pools().to_vec();
    reversed.reverse();
    let other = MixtureSpec::new(reversed).unwrap();
    let cfg = SimConfig::default().with_step_fraction(1e-2);
    let total = spec.combined_size() * 6;
    let x = integrate_mixture(&spec, 0.5, 0.05, total, &cfg).unwrap().endpoint().unwrap().1;
    let y = integrate_mixture(&other, 0.5, 0.05, total, &cfg).unwrap().endpoint().unwrap().1;
    assert!(((x - y) / x).abs() < 1e-3);
}
