//! Exact proximal map of the 1-D total variation (fused lasso signal
//! approximator), computed by Condat's direct taut-string style algorithm.

/// `argmin_x 1/2 ||x - input||^2 + lambda * sum_k |x_{k+1} - x_k|`.
pub fn tv1d_prox(input: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; input.len()];
    tv1d_prox_into(input, lambda, &mut out);
    out
}

pub fn tv1d_prox_into(input: &[f64], lambda: f64, output: &mut [f64]) {
    let width = input.len();
    assert_eq!(output.len(), width);
    if width == 0 {
        return;
    }
    if lambda <= 0.0 || width == 1 {
        output.copy_from_slice(input);
        return;
    }
    // The solution is constant iff every partial sum of the centered input is
    // within lambda. Handling this directly avoids cancellation in `v +- lambda`
    // when lambda dwarfs the data.
    let mean = input.iter().sum::<f64>() / width as f64;
    let mut partial = 0.0;
    let mut max_partial: f64 = 0.0;
    for &v in &input[..width - 1] {
        partial += v - mean;
        max_partial = max_partial.max(partial.abs());
    }
    if max_partial <= lambda {
        output.iter_mut().for_each(|o| *o = mean);
        return;
    }
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = input[0] - lambda;
    let mut vmax = input[0] + lambda;
    let twolambda = 2.0 * lambda;
    loop {
        while k == width - 1 {
            if umin < 0.0 {
                loop {
                    output[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k;
                vmin = input[k];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    output[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k;
                vmax = input[k];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                loop {
                    output[k0] = vmin;
                    k0 += 1;
                    if k0 > k {
                        break;
                    }
                }
                return;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < -lambda {
            loop {
                output[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k;
            kplus = k;
            vmin = input[k];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = -lambda;
        } else {
            umax += input[k + 1] - vmax;
            if umax > lambda {
                loop {
                    output[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kminus = k;
                kplus = k;
                vmax = input[k];
                vmin = vmax - twolambda;
                umin = lambda;
                umax = -lambda;
            } else {
                k += 1;
                if umin >= lambda {
                    kminus = k;
                    vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
                    umin = lambda;
                }
                if umax <= -lambda {
                    kplus = k;
                    vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
                    umax = -lambda;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Projected gradient on the dual: x = y - D^T u, |u_k| <= lambda.
    fn dual_reference(y: &[f64], lambda: f64) -> Vec<f64> {
        let n = y.len();
        let mut u = vec![0.0; n - 1];
        let primal = |u: &[f64]| {
            let mut x = y.to_vec();
            for k in 0..n - 1 {
                x[k] += u[k];
                x[k + 1] -= u[k];
            }
            x
        };
        for _ in 0..200_000 {
            let x = primal(&u);
            for k in 0..n - 1 {
                // gradient of 1/2 ||y - D^T u||^2 wrt u_k is -(x_{k+1} - x_k)
                u[k] = (u[k] - 0.25 * (x[k] - x[k + 1])).clamp(-lambda, lambda);
            }
        }
        primal(&u)
    }

    fn objective(x: &[f64], y: &[f64], lambda: f64) -> f64 {
        let fit: f64 = x.iter().zip(y).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
        fit + lambda * x.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()
    }

    #[test]
    fn trivial_cases() {
        assert!(tv1d_prox(&[], 1.0).is_empty());
        assert_eq!(tv1d_prox(&[3.0], 1.0), vec![3.0]);
        assert_eq!(tv1d_prox(&[1.0, 5.0], 0.0), vec![1.0, 5.0]);
        // two points: move towards each other by lambda until they meet
        assert_eq!(tv1d_prox(&[0.0, 4.0], 1.0), vec![1.0, 3.0]);
        assert_eq!(tv1d_prox(&[0.0, 4.0], 5.0), vec![2.0, 2.0]);
        assert_eq!(tv1d_prox(&[0.0, 4.0], 2.0), vec![2.0, 2.0]);
    }

    #[test]
    fn huge_lambda_is_exact_mean() {
        let y = [1e-9, -3e-9, 2.5e-9, 0.5e-9];
        let out = tv1d_prox(&y, 1e8);
        let mean = y.iter().sum::<f64>() / 4.0;
        assert!(out.iter().all(|&v| v == mean));
    }

    #[test]
    fn matches_dual_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.gen_range(2..9);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let lambda = rng.gen_range(0.01..2.0);
            let got = tv1d_prox(&y, lambda);
            let want = dual_reference(&y, lambda);
            let (a, b) = (objective(&got, &y, lambda), objective(&want, &y, lambda));
            assert!(a <= b + 1e-10, "objective {a} vs reference {b}");
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-6, "{got:?} vs {want:?}");
            }
        }
    }
}
