//! Small numeric helpers shared across modules.

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn lerp_into(a: &[f64], b: &[f64], w: f64, out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x + w * (y - x);
    }
}

/// Index `i` of the cell `[xs[i], xs[i+1]]` containing `x`, taking the last
/// cell whose left end is `<= x`. Clamped to a valid cell.
pub(crate) fn locate(xs: &[f64], x: f64) -> usize {
    debug_assert!(xs.len() >= 2);
    let i = xs.partition_point(|&p| p <= x);
    i.saturating_sub(1).min(xs.len() - 2)
}

/// Sorted, deduplicated merge of breakpoints. Points closer than `tol` to
/// their predecessor are dropped.
pub(crate) fn merge_points(mut pts: Vec<f64>, tol: f64) -> Vec<f64> {
    pts.retain(|p| p.is_finite());
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&q) if p - q <= tol => {}
            _ => out.push(p),
        }
    }
    out
}

// 8-point Gauss-Legendre on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

pub(crate) fn gauss_legendre(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS.iter())
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

/// `∫_a^b |p + q (t - a)| dt` for vectors `p`, `q`. The integrand is the
/// square root of a quadratic, smooth away from its minimum; splitting there
/// keeps Gauss-Legendre accurate to near machine precision.
pub(crate) fn integrate_linear_norm(a: f64, b: f64, p: &[f64], q: &[f64]) -> f64 {
    let len = b - a;
    if len <= 0.0 {
        return 0.0;
    }
    let qq: f64 = q.iter().map(|x| x * x).sum();
    let f = |t: f64| {
        p.iter()
            .zip(q)
            .map(|(pi, qi)| {
                let y = pi + qi * (t - a);
                y * y
            })
            .sum::<f64>()
            .sqrt()
    };
    if qq == 0.0 {
        return norm(p) * len;
    }
    let pq: f64 = p.iter().zip(q).map(|(x, y)| x * y).sum();
    let t_star = a - pq / qq;
    if t_star > a && t_star < b {
        gauss_legendre(a, t_star, f) + gauss_legendre(t_star, b, f)
    } else {
        gauss_legendre(a, b, f)
    }
}

/// Shortest round-trip decimal form used by every CSV writer. Negative
/// zero prints as `0.0`.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_norm_through_zero() {
        // |t - 0.5| on [0, 1] integrates to 0.25
        let v = integrate_linear_norm(0.0, 1.0, &[-0.5], &[1.0]);
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn linear_norm_vector() {
        // |(1, t)| on [0, 1]: (sqrt(2) + asinh(1)) / 2
        let exact = (2f64.sqrt() + 1f64.asinh()) / 2.0;
        let v = integrate_linear_norm(0.0, 1.0, &[1.0, 0.0], &[0.0, 1.0]);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn merge_drops_near_duplicates() {
        let m = merge_points(vec![1.0, 0.0, 0.5, 0.5 + 1e-16, 1.0], 1e-12);
        assert_eq!(m, vec![0.0, 0.5, 1.0]);
    }
}
