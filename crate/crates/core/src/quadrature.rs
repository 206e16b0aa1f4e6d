//! Fixed-order tensor Gauss–Legendre rules on axis-aligned boxes.

/// 3-point Gauss–Legendre nodes and weights on `[-1, 1]`.
const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// `∫_{[lo,hi]} f` with the 3-point rule per axis (exact for degree ≤ 5 per axis).
pub fn integrate_box(lo: &[f64], hi: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let d = lo.len();
    let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let jac: f64 = half.iter().product();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for j in 0..d {
            x[j] = mid[j] + half[j] * NODES[idx[j]];
            w *= WEIGHTS[idx[j]];
        }
        total += w * f(&x);
        let mut j = 0;
        loop {
            if j == d {
                return total * jac;
            }
            idx[j] += 1;
            if idx[j] < 3 {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Composite 3-point rule on `[a, b]` with `panels` equal panels.
pub fn integrate_interval(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            integrate_box(&[lo], &[lo + h], |x| f(x[0]))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_quintic_polynomials() {
        let v = integrate_box(&[0.0, 1.0], &[2.0, 3.0], |x| x[0].powi(5) * x[1].powi(4));
        let exact = (2f64.powi(6) / 6.0) * ((3f64.powi(5) - 1.0) / 5.0);
        assert!((v - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn composite_rule_on_smooth_function() {
        let v = integrate_interval(0.0, std::f64::consts::PI, 50, f64::sin);
        assert!((v - 2.0).abs() < 1e-10);
    }
}
