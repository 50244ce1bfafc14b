//! Small numeric helpers shared across modules.

/// Neumaier-compensated sum. Order-robust to within a few ulps, which keeps
/// relabeled and regrouped entropy sums comparable at 1e-12.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `x * ln(x)` with the convention `0 ln 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let m = q.div_ceil(2);
    let qf = q as f64;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| (mid + half * x, half * w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for q in 1..=40 {
            let (x, w) = gauss_legendre(q);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "q={q} weight sum {total}");
            // degree 2q-1 is integrated exactly
            let deg = 2 * q - 2;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = 2.0 / (deg as f64 + 1.0);
            assert!((approx - exact).abs() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn gauss_legendre_high_order_is_accurate() {
        let (x, w) = gauss_legendre(128);
        let rule = gauss_legendre_on(0.0, 1.0, &x, &w);
        let approx: f64 = rule.iter().map(|(u, w)| w * u.exp()).sum();
        assert!((approx - (1f64.exp() - 1.0)).abs() < 1e-14);
    }
}
