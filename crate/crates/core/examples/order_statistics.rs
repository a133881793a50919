//! The order-statistics building blocks of the rate model, checked against
//! plain sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use v2x_delivery::closed_form::{
    e_c_all_failure, e_c_all_success, e_c_mixture, expected_max_exponential, scenario_probabilities,
};
use v2x_delivery::{Route, SystemParams};

fn main() -> v2x_delivery::Result<()> {
    let mu = [0.05, 0.12, 0.3];
    let exact = expected_max_exponential(&mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d: Vec<Exp<f64>> = mu.iter().map(|&m| Exp::new(m).unwrap()).collect();
    let n = 200_000;
    let mc = (0..n)
        .map(|_| d.iter().map(|e| e.sample(&mut rng)).fold(0.0, f64::max))
        .sum::<f64>()
        / n as f64;
    println!("E[max Exp{mu:?}] = {exact:.4} (sampled {mc:.4})");
    println!(
        "iid lambda = 0.1, k = 4: {:.6} vs H_4/0.1 = {:.6}",
        expected_max_exponential(&[0.1; 4])?,
        (1.0 + 0.5 + 1.0 / 3.0 + 0.25) / 0.1
    );

    let p = SystemParams::default();
    let r = Route::from_rates(&[(0.05, 2), (0.12, 3), (0.3, 2)])?;
    for t in [1.0, 5.0, 10.0] {
        let pr = scenario_probabilities(&r, t, &p);
        println!(
            "t {t:>4}: all success {:.4} (p {:.3}), all failure {:.4} (p {:.3}), mixture {:.4}",
            e_c_all_success(&r, t, &p)?,
            pr.p_all_success,
            e_c_all_failure(&r, t, &p)?,
            pr.p_all_failure,
            e_c_mixture(&r, t, &p)?
        );
    }
    Ok(())
}
