//! Generalized advantage estimation over short episodes.

/// Per-step GAE advantages and returns for one episode, with no
/// bootstrap past the final step.
///
/// delta_t = r_t + γ·v_{t+1} − v_t,  A_t = Σ_k (γλ)^k δ_{t+k},
/// return_t = A_t + v_t.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(rewards.len(), values.len());
    let t = rewards.len();
    let mut advantages = vec![0.0; t];
    let mut next_adv = 0.0;
    let mut next_value = 0.0;
    for i in (0..t).rev() {
        let delta = rewards[i] + gamma * next_value - values[i];
        next_adv = delta + gamma * lambda * next_adv;
        advantages[i] = next_adv;
        next_value = values[i];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

/// Normalize to zero mean and unit variance (epsilon-guarded).
pub fn normalize_advantages(xs: &mut [f64]) {
    if xs.len() < 2 {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + 1e-8;
    for x in xs.iter_mut() {
        *x = (*x - mean) / denom;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_reward_with_zero_values_propagates_fully() {
        // gamma = 1, lambda = 1: every step sees the terminal payoff.
        let (adv, ret) = gae_advantages(&[0.0, 1.0], &[0.0, 0.0], 1.0, 1.0);
        assert_eq!(adv, vec![1.0, 1.0]);
        assert_eq!(ret, vec![1.0, 1.0]);
    }

    #[test]
    fn zero_reward_zero_values_gives_zero_advantage() {
        let (adv, ret) = gae_advantages(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], 1.0, 0.95);
        assert!(adv.iter().all(|&a| a == 0.0));
        assert!(ret.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn perfect_values_give_zero_advantage() {
        // values equal to the true returns ⇒ all TD errors vanish
        let (adv, ret) = gae_advantages(&[0.0, 0.0, 1.0], &[1.0, 1.0, 1.0], 1.0, 0.95);
        for a in adv {
            assert!(a.abs() < 1e-12);
        }
        assert_eq!(ret, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn discounting_shrinks_early_advantages() {
        let (adv, _) = gae_advantages(&[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0], 0.5, 1.0);
        assert!((adv[2] - 1.0).abs() < 1e-12);
        assert!((adv[1] - 0.5).abs() < 1e-12);
        assert!((adv[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn normalization_has_zero_mean_unit_variance() {
        let mut xs = vec![1.0, 2.0, 3.0, 4.0, 10.0];
        normalize_advantages(&mut xs);
        let mean: f64 = xs.iter().sum::<f64>() / xs.len() as f64;
        let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn normalization_survives_constant_input() {
        let mut xs = vec![0.0; 8];
        normalize_advantages(&mut xs);
        assert!(xs.iter().all(|x| x.is_finite() && *x == 0.0));
    }
}
