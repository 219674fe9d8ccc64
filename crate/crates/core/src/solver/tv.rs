//! Exact proximal operators for a chain of fused coefficients.

/// Solve `min_x ½‖x − y‖² + λ Σ |x[k+1] − x[k]|` exactly.
///
/// Direct taut-string style algorithm of Condat (2013); linear in practice.
/// Segments whose values are equal in the solution come out bit-identical.
pub fn tv_denoise(input: &[f64], lambda: f64, output: &mut [f64]) {
    let width = input.len();
    assert_eq!(width, output.len());
    if width == 0 {
        return;
    }
    if lambda <= 0.0 || width == 1 {
        output.copy_from_slice(input);
        return;
    }
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = input[0] - lambda;
    let mut vmax = input[0] + lambda;
    let twolambda = 2.0 * lambda;
    let minlambda = -lambda;
    loop {
        // right boundary
        while k == width - 1 {
            if umin < 0.0 {
                while k0 <= kminus {
                    output[k0] = vmin;
                    k0 += 1;
                }
                k = k0;
                kminus = k0;
                vmin = input[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                while k0 <= kplus {
                    output[k0] = vmax;
                    k0 += 1;
                }
                k = k0;
                kplus = k0;
                vmax = input[k0];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                while k0 <= k {
                    output[k0] = vmin;
                    k0 += 1;
                }
                return;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < minlambda {
            // negative jump
            while k0 <= kminus {
                output[k0] = vmin;
                k0 += 1;
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmin = input[k0];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lambda {
            // positive jump
            while k0 <= kplus {
                output[k0] = vmax;
                k0 += 1;
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmax = input[k0];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        k += 1;
        if umin >= lambda {
            kminus = k;
            vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
            umin = lambda;
        }
        if umax <= minlambda {
            kplus = k;
            vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
            umax = minlambda;
        }
    }
}

pub fn soft_threshold(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

/// Fused lasso signal approximator on a chain:
/// `min_x ½‖x − y‖² + λ_tv Σ |Δx| + λ_l1 Σ |x|`.
///
/// The solution is the total-variation solution soft-thresholded by `λ_l1`
/// (Friedman, Hastie, Höfling & Tibshirani, 2007).
pub fn fused_prox(input: &[f64], lambda_tv: f64, lambda_l1: f64, output: &mut [f64]) {
    tv_denoise(input, lambda_tv, output);
    for v in output.iter_mut() {
        *v = soft_threshold(*v, lambda_l1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Projected gradient on the dual box problem
    /// `min_u ½‖y − Dᵀu‖²`, `|u|∞ ≤ λ`; primal is `y − Dᵀu`.
    fn tv_oracle(y: &[f64], lambda: f64) -> Vec<f64> {
        let n = y.len();
        if n < 2 {
            return y.to_vec();
        }
        let mut u = vec![0.0; n - 1];
        let primal = |u: &[f64]| {
            let mut x = y.to_vec();
            for (k, &uk) in u.iter().enumerate() {
                // (Dᵀu)_k = -u_k + u_{k-1} with D x = x[k+1] - x[k]
                x[k] += uk;
                x[k + 1] -= uk;
            }
            x
        };
        for _ in 0..200_000 {
            let x = primal(&u);
            let mut delta = 0.0f64;
            for k in 0..n - 1 {
                // gradient of ½‖y − Dᵀu‖² w.r.t u_k is -(D x)_k
                let next = (u[k] + 0.25 * (x[k + 1] - x[k])).clamp(-lambda, lambda);
                delta = delta.max((next - u[k]).abs());
                u[k] = next;
            }
            if delta < 1e-15 {
                break;
            }
        }
        primal(&u)
    }

    fn objective(x: &[f64], y: &[f64], tv: f64, l1: f64) -> f64 {
        let fit: f64 = x.iter().zip(y).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
        let var: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        fit + tv * var + l1 * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    #[test]
    fn constant_input_unchanged() {
        let y = [2.0; 5];
        let mut x = [0.0; 5];
        tv_denoise(&y, 3.0, &mut x);
        assert_eq!(x, y);
    }

    #[test]
    fn large_lambda_gives_mean() {
        let y = [1.0, 5.0, -2.0, 4.0];
        let mut x = [0.0; 4];
        tv_denoise(&y, 100.0, &mut x);
        for v in x {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_closed_form() {
        // jump shrinks by 2λ until it closes
        let y = [0.0, 1.0];
        let mut x = [0.0; 2];
        tv_denoise(&y, 0.2, &mut x);
        assert!((x[0] - 0.2).abs() < 1e-15 && (x[1] - 0.8).abs() < 1e-15);
        tv_denoise(&y, 0.6, &mut x);
        assert_eq!(x[0], x[1]);
    }

    proptest! {
        #[test]
        fn tv_matches_dual_oracle(
            y in prop::collection::vec(-3.0f64..3.0, 1..9),
            lambda in 0.0f64..2.0,
        ) {
            let mut x = vec![0.0; y.len()];
            tv_denoise(&y, lambda, &mut x);
            let oracle = tv_oracle(&y, lambda);
            for (a, b) in x.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-7, "{:?} vs {:?}", x, oracle);
            }
        }

        #[test]
        fn fused_prox_is_optimal_against_perturbations(
            y in prop::collection::vec(-3.0f64..3.0, 1..8),
            tv in 0.0f64..1.5,
            l1 in 0.0f64..1.5,
            dir in prop::collection::vec(-1.0f64..1.0, 8),
        ) {
            let mut x = vec![0.0; y.len()];
            fused_prox(&y, tv, l1, &mut x);
            let f0 = objective(&x, &y, tv, l1);
            for step in [1e-3, 1e-2, 1e-1] {
                let z: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
                prop_assert!(objective(&z, &y, tv, l1) >= f0 - 1e-12);
            }
        }
    }
}
