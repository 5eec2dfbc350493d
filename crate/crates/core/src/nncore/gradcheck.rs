/// Largest relative deviation between an analytic gradient and central
/// finite differences of a scalar function.
///
/// `value_and_grad` returns `(f(x), ∇f(x))`; only the gradient at `input` is
/// used. Relative error is `|a - n| / max(1, |a|, |n|)`.
pub fn finite_diff_check<F>(mut value_and_grad: F, input: &[f64], step: f64) -> f64
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = value_and_grad(input);
    assert_eq!(analytic.len(), input.len(), "gradient length must match input length");
    let mut x = input.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + step;
        let plus = value_and_grad(&x).0;
        x[i] = orig - step;
        let minus = value_and_grad(&x).0;
        x[i] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        let denom = 1.0f64.max(analytic[i].abs()).max(numeric.abs());
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::activation::log_softmax_row;

    #[test]
    fn linear_map_is_exact() {
        let c = [1.5, -2.0, 0.25, 4.0];
        let err = finite_diff_check(
            |x| (x.iter().zip(&c).map(|(a, b)| a * b).sum(), c.to_vec()),
            &[0.1, 0.2, -0.3, 0.4],
            1e-5,
        );
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn quadratic_form() {
        // f = xᵀ A x with symmetric A; ∇f = 2 A x.
        let a = [[2.0, 0.5, -1.0], [0.5, 1.0, 0.3], [-1.0, 0.3, 3.0]];
        let f = |x: &[f64]| {
            let mut v = 0.0;
            let mut g = vec![0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    v += x[i] * a[i][j] * x[j];
                    g[i] += 2.0 * a[i][j] * x[j];
                }
            }
            (v, g)
        };
        assert!(finite_diff_check(f, &[0.7, -1.2, 0.4], 1e-5) <= 1e-6);
    }

    #[test]
    fn softmax_nll_composite() {
        let target = 2;
        let f = |x: &[f64]| {
            let ls = log_softmax_row(x);
            let grad = ls
                .iter()
                .enumerate()
                .map(|(k, l)| l.exp() - if k == target { 1.0 } else { 0.0 })
                .collect();
            (-ls[target], grad)
        };
        assert!(finite_diff_check(f, &[0.3, -1.1, 2.0, 0.5], 1e-5) <= 1e-4);
    }

    #[test]
    fn detects_wrong_gradient() {
        let err = finite_diff_check(|x| (x[0] * x[0], vec![x[0]]), &[2.0], 1e-5);
        assert!(err > 0.1);
    }
}
