//! The two oscillating examples: a four-dimensional system whose regular
//! minimizing sequences have unbounded variation, and its five-dimensional
//! variant with an appended cost state.

use std::f64::consts::PI;

use crate::bv::{ControlPath, OrdinaryControl};
use crate::error::{Error, Result};
use crate::fields::{smoothstep_cutoff, FieldDims, Modulus, VectorFieldSet};
use crate::num::norm;
use crate::ode::FnControl;
use crate::trajectory::Trajectory;

pub const TWO_PI: f64 = 2.0 * PI;
/// Radius where the cut-off `η` starts to bend.
pub const CUTOFF_RADIUS: f64 = 10.0;

/// `η(x)(0,0,0,v)`, `η(x)(1,0,x3 x2,-x4 x2)`, `η(x)(0,1,-x3 x1,x4 x1)`.
pub fn example21_fields() -> VectorFieldSet {
    VectorFieldSet::from_fns(
        "example-2.1",
        FieldDims { n: 4, m: 2, v1: 1, v2: 0 },
        |x, _u, v1, out| {
            let eta = smoothstep_cutoff(x, CUTOFF_RADIUS);
            out[..3].fill(0.0);
            out[3] = eta * v1[0];
        },
        |i, x, _u, _v2, out| oscillator_channel(i, x, &mut out[..4]),
    )
    .with_lipschitz(100.0)
    .with_growth(200.0)
    .with_modulus(Modulus::Lipschitz(1.0))
}

fn oscillator_channel(i: usize, x: &[f64], out: &mut [f64]) {
    let eta = smoothstep_cutoff(x, CUTOFF_RADIUS);
    let g = if i == 0 {
        [1.0, 0.0, x[2] * x[1], -x[3] * x[1]]
    } else {
        [0.0, 1.0, -x[2] * x[0], x[3] * x[0]]
    };
    for (o, c) in out.iter_mut().zip(g) {
        *o = eta * c;
    }
}

/// The oscillating system extended by `x5' = |v| + |u|`.
pub fn example22_fields() -> VectorFieldSet {
    VectorFieldSet::from_fns(
        "example-2.2",
        FieldDims { n: 5, m: 2, v1: 1, v2: 0 },
        |x, u, v1, out| {
            let eta = smoothstep_cutoff(&x[..4], CUTOFF_RADIUS);
            out[..3].fill(0.0);
            out[3] = eta * v1[0];
            out[4] = v1[0].abs() + norm(u);
        },
        |i, x, _u, _v2, out| {
            oscillator_channel(i, &x[..4], &mut out[..4]);
            out[4] = 0.0;
        },
    )
    .with_lipschitz(100.0)
    .with_growth(200.0)
    .with_modulus(Modulus::Lipschitz(2.0))
}

fn cbrt_k(k: u64) -> f64 {
    (k as f64).cbrt()
}

/// `2π / k`, the end of the initial drift window.
pub fn window(k: u64) -> f64 {
    TWO_PI / k as f64
}

/// The oscillating control `u_k` in closed form, with `u_k'`.
pub fn example21_input(k: u64) -> FnControl {
    let c = cbrt_k(k);
    let a = window(k);
    let kf = k as f64;
    let breaks = if k == 1 { vec![0.0, TWO_PI] } else { vec![0.0, a, TWO_PI] };
    FnControl::new(2, breaks, move |piece, t, value, rate| {
        if piece == 0 {
            value.fill(0.0);
            rate.fill(0.0);
        } else {
            let (s, co) = (kf * t).sin_cos();
            value[0] = (co - 1.0) / c;
            value[1] = s / c;
            rate[0] = -kf * s / c;
            rate[1] = kf * co / c;
        }
    })
}

/// `v_k = k e^{-2π ∛k}` on `[0, 2π/k)`, zero afterwards.
pub fn example21_v(k: u64) -> Result<OrdinaryControl> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let amp = k as f64 * (-TWO_PI * cbrt_k(k)).exp();
    if k == 1 {
        return OrdinaryControl::constant(TWO_PI, vec![amp]);
    }
    OrdinaryControl::new(1, vec![0.0, window(k), TWO_PI], vec![amp, 0.0])
}

/// `(u_k, v_k)` with `u_k` sampled as a polyline, `samples_per_period`
/// points per oscillation.
pub fn example21_controls(k: u64, samples_per_period: usize) -> Result<(ControlPath, OrdinaryControl)> {
    if k == 0 || samples_per_period < 4 {
        return Err(Error::Config("need k >= 1 and at least 4 samples per period".into()));
    }
    let c = cbrt_k(k);
    let a = window(k);
    let steps = (k as usize - 1) * samples_per_period;
    let mut times = vec![0.0];
    let mut values = vec![0.0, 0.0];
    for i in 0..=steps {
        let t = if steps == 0 { TWO_PI } else { a + (TWO_PI - a) * i as f64 / steps as f64 };
        if t == 0.0 {
            continue;
        }
        let (s, co) = (k as f64 * t).sin_cos();
        times.push(t);
        values.push((co - 1.0) / c);
        values.push(s / c);
    }
    Ok((ControlPath::from_knots(2, times, values)?, example21_v(k)?))
}

/// The closed-form solution `(x1, x2, x3, x4)` at time `t`.
pub fn example21_closed_form(k: u64, t: f64) -> [f64; 4] {
    let c = cbrt_k(k);
    let kf = k as f64;
    let a = window(k);
    if t < a {
        return [0.0, 0.0, 1.0, kf * (-TWO_PI * c).exp() * t];
    }
    let (s, co) = (kf * t).sin_cos();
    [
        (co - 1.0) / c,
        s / c,
        (-c * (t - s / kf - a)).exp(),
        TWO_PI * (c * (t - TWO_PI - s / kf - a)).exp(),
    ]
}

/// `x5(t) = ∫_0^t (|v_k| + |u_k|)`, in closed form.
pub fn example22_x5(k: u64, t: f64) -> f64 {
    let c = cbrt_k(k);
    let kf = k as f64;
    let a = window(k);
    let amp = kf * (-TWO_PI * c).exp();
    if t < a {
        return amp * t;
    }
    // |u_k| = (2/∛k)|sin(kt/2)|; F is the running integral of |sin|
    let theta = 0.5 * kf * t;
    let f = 2.0 * (theta / PI).floor() + (1.0 - (theta % PI).cos());
    amp * a + 4.0 / (c * kf) * (f - 2.0)
}

/// Closed-form quantities at the final time `2π`, exact for integer `k`
/// and safe for very large `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointValues {
    pub x3: f64,
    /// `2π - x4(2π)`.
    pub x4_gap: f64,
    pub l1_u: f64,
    pub l1_v: f64,
}

pub fn example21_endpoint(k: u64) -> EndpointValues {
    let c = cbrt_k(k);
    let kf = k as f64;
    EndpointValues {
        x3: (-c * (TWO_PI - TWO_PI / kf)).exp(),
        x4_gap: -TWO_PI * (-TWO_PI / (c * c)).exp_m1(),
        l1_u: 8.0 * (kf - 1.0) / (kf * c),
        l1_v: TWO_PI * (-TWO_PI * c).exp(),
    }
}

/// `J(x_k, u_k, v_k)` from the closed forms.
pub fn bolza_closed_form(k: u64) -> f64 {
    let e = example21_endpoint(k);
    e.l1_u + e.l1_v + e.x4_gap * e.x4_gap
}

/// `J = ∫(|u| + |v|) + (2π - x4(2π))²`. The `|u|` term uses the trapezoid
/// rule on the trajectory grid; `|v|` is integrated exactly.
pub fn cost_bolza<F>(x: &Trajectory, u_at: F, v: &OrdinaryControl) -> f64
where
    F: Fn(f64) -> Vec<f64>,
{
    let t = x.times();
    let mut running = 0.0;
    let mut prev = norm(&u_at(t[0]));
    for w in t.windows(2) {
        let next = norm(&u_at(w[1]));
        running += 0.5 * (prev + next) * (w[1] - w[0]);
        prev = next;
    }
    let gap = TWO_PI - x.last()[3];
    running + v.l1_norm() + gap * gap
}

/// `Ψ(x(2π)) = |x3| + |2π - x4|` and the residual `|x5(2π)|` of the
/// endpoint constraint.
pub fn cost_mayer(x: &Trajectory) -> Result<(f64, f64)> {
    if x.dim() != 5 {
        return Err(Error::Dimension { expected: 5, got: x.dim() });
    }
    let end = x.last();
    Ok((end[2].abs() + (TWO_PI - end[3]).abs(), end[4].abs()))
}

/// `Ψ` from closed-form endpoint values.
pub fn mayer_from_endpoint(x3: f64, x4_gap: f64) -> f64 {
    x3.abs() + x4_gap.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_starts_at_initial_state() {
        assert_eq!(example21_closed_form(16, 0.0), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn endpoint_x4() {
        let x4 = example21_closed_form(64, TWO_PI)[3];
        assert!((x4 - TWO_PI * (-PI / 8.0).exp()).abs() < 1e-9);
        assert!((x4 - 4.242607).abs() < 1e-6);
        let e = example21_endpoint(64);
        assert!((TWO_PI - e.x4_gap - x4).abs() < 1e-9);
    }

    #[test]
    fn controls_are_continuous_and_start_at_zero() {
        let (u, v) = example21_controls(8, 256).unwrap();
        assert_eq!(u.initial(), &[0.0, 0.0]);
        assert!(u.is_absolutely_continuous());
        let expect = TWO_PI * (-TWO_PI * 2.0f64).exp();
        assert!((v.l1_norm() - expect).abs() < 1e-15);
    }

    #[test]
    fn variation_of_u8() {
        let (u, _) = example21_controls(8, 2048).unwrap();
        assert!((u.total_variation() - 7.0 * PI).abs() < 0.01);
    }

    #[test]
    fn x5_matches_integral_at_end() {
        for k in [4u64, 16, 100] {
            let e = example21_endpoint(k);
            assert!((example22_x5(k, TWO_PI) - e.l1_u - e.l1_v).abs() < 1e-9);
        }
    }

    #[test]
    fn bolza_trend() {
        let j: Vec<f64> = [1_000u64, 1_000_000, 1_000_000_000].iter().map(|&k| bolza_closed_form(k)).collect();
        assert!(j[0] > j[1] && j[1] > j[2] && j[2] < 0.1);
        assert!((j[0] - 0.946).abs() < 1e-3);
    }
}
