//! Velocity laws of the particle system.
//!
//! Writing `v = tan(psi)` with `psi` in `(-pi/2, pi/2)` turns the jump kernel
//! `|u - v| (1 + u^2)^(-3/2) du` into `|sin(psi' - psi)| d(psi') / cos(psi)`.
//! The jump rate is therefore `2 / cos(psi) = 2 sqrt(1 + v^2)` and the new
//! direction is the old one turned by an angle with density `|sin|/2` on a
//! window of length `pi`. The same substitution reduces the emission density
//! to `|sin(psi' - psi'')| / pi` in angle coordinates.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

/// Directions closer than this to vertical are redrawn.
const MIN_COS: f64 = 1e-12;

/// Total jump rate `lambda(v)`.
#[inline]
pub fn jump_rate(v: f64) -> f64 {
    2.0 * (1.0 + v * v).sqrt()
}

/// Unnormalized jump kernel `|u - v| (1 + u^2)^(-3/2)`.
pub fn jump_kernel(v: f64, u: f64) -> f64 {
    (u - v).abs() * (1.0 + u * u).powf(-1.5)
}

/// Emission density of an interior birth, as displayed for the pair law.
/// It integrates to 2 over the plane, i.e. to 1 over `{v' < v''}`.
pub fn velocity_pair_density(v1: f64, v2: f64) -> f64 {
    (v1 - v2).abs() * (1.0 + v1 * v1).powf(-1.5) * (1.0 + v2 * v2).powf(-1.5) / PI
}

/// Angle in `(0, pi)` with density `sin/2`.
#[inline]
fn sine_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos()
}

/// Direction angle obtained by turning `psi0` with the jump law.
fn turn<R: Rng + ?Sized>(psi0: f64, rng: &mut R) -> f64 {
    loop {
        let d = sine_angle(rng);
        let lo = -FRAC_PI_2 - psi0;
        let psi = psi0 + lo + (d - lo).rem_euclid(PI);
        if psi.cos() > MIN_COS {
            return psi;
        }
    }
}

/// Waiting r-time until the next velocity update and the new velocity.
pub fn sample_velocity_jump<R: Rng + ?Sized>(v: f64, rng: &mut R) -> (f64, f64) {
    let wait = crate::rng::exp(rng, jump_rate(v));
    let psi = turn(v.atan(), rng);
    (wait, psi.tan())
}

/// Unordered velocity pair for an interior birth.
pub fn sample_velocity_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let psi1 = loop {
        let p = (rng.random::<f64>() - 0.5) * PI;
        if p.cos() > MIN_COS {
            break p;
        }
    };
    let psi2 = turn(psi1, rng);
    (psi1.tan(), psi2.tan())
}

/// CDF of the angle between the two emitted lines, which has density
/// `sin(a)/2` on `(0, pi)`.
pub fn emission_angle_cdf(a: f64) -> f64 {
    0.5 * (1.0 - a.clamp(0.0, PI).cos())
}

/// Angle in `[0, pi)` between two lines with slopes `v1` and `v2`.
pub fn angle_between(v1: f64, v2: f64) -> f64 {
    (v1.atan() - v2.atan()).rem_euclid(PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::{ks_one_sample, ks_two_sample};
    use approx::assert_relative_eq;

    /// Composite Simpson on `[a, b]` with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    /// Integral over the real line, via `u = tan(x)` and a split at `tan^-1(v)`
    /// so the kink of `|u - v|` falls on a panel boundary.
    fn line_integral(f: impl Fn(f64) -> f64, v: f64) -> f64 {
        let g = |x: f64| {
            let c = x.cos();
            if c <= 0.0 {
                0.0
            } else {
                f(x.tan()) / (c * c)
            }
        };
        let k = v.atan();
        simpson(g, -FRAC_PI_2, k, 4000) + simpson(g, k, FRAC_PI_2, 4000)
    }

    #[test]
    fn rate_at_zero_is_two() {
        assert_eq!(jump_rate(0.0), 2.0);
        // antiderivative of |u|(1+u^2)^(-3/2) on (0, inf) is 1 - (1+u^2)^(-1/2)
        let half: f64 = 1.0 - (1.0 + 1e12f64).powf(-0.5);
        assert_relative_eq!(2.0 * half, jump_rate(0.0), max_relative = 1e-5);
    }

    #[test]
    fn rate_matches_quadrature() {
        for v in [-2.0, 1.0, 5.0, 0.3] {
            let q = line_integral(|u| jump_kernel(v, u), v);
            assert_relative_eq!(q, jump_rate(v), max_relative = 1e-6);
        }
    }

    #[test]
    fn empirical_jump_rate_within_two_percent() {
        for v in [-2.0f64, 1.0, 5.0] {
            let mut rng = stream(11, &[v.to_bits()]);
            let n = 40_000;
            let mean: f64 = (0..n).map(|_| sample_velocity_jump(v, &mut rng).0).sum::<f64>() / n as f64;
            let q = line_integral(|u| jump_kernel(v, u), v);
            assert!((1.0 / mean - q).abs() / q < 0.02, "v={v}: {} vs {q}", 1.0 / mean);
        }
    }

    #[test]
    fn new_velocity_follows_kernel() {
        let v = 1.5;
        let mut rng = stream(3, &[]);
        let xs: Vec<f64> = (0..20_000).map(|_| sample_velocity_jump(v, &mut rng).1).collect();
        assert!(xs.iter().all(|&u| u != v));
        let total = jump_rate(v);
        let cdf = |u: f64| {
            let k = v.atan();
            let g = |x: f64| {
                let c = x.cos();
                if c <= 0.0 {
                    0.0
                } else {
                    jump_kernel(v, x.tan()) / (c * c)
                }
            };
            let x = u.atan();
            let m = if x < k {
                simpson(g, -FRAC_PI_2, x, 400)
            } else {
                simpson(g, -FRAC_PI_2, k, 400) + simpson(g, k, x, 400)
            };
            m / total
        };
        let p = ks_one_sample(&xs, cdf).p_value;
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn pair_density_mass() {
        // mass 2 over the plane and 1 over the ordered half-plane
        let outer = |v1: f64| line_integral(|v2| velocity_pair_density(v1, v2), v1);
        let full = line_integral(outer, 0.0);
        assert_relative_eq!(full, 2.0, max_relative = 1e-5);
        let half = line_integral(
            |v1| {
                let g = |x: f64| {
                    let c = x.cos();
                    velocity_pair_density(v1, x.tan()) / (c * c)
                };
                simpson(g, v1.atan(), FRAC_PI_2 - 1e-12, 4000)
            },
            0.0,
        );
        assert_relative_eq!(half, 1.0, max_relative = 1e-5);
    }

    #[test]
    fn pair_is_exchangeable_and_angle_law_holds() {
        let mut rng = stream(5, &[]);
        let n = 20_000;
        let pairs: Vec<(f64, f64)> = (0..n).map(|_| sample_velocity_pair(&mut rng)).collect();
        assert!(pairs.iter().all(|p| p.0 != p.1));
        let a: Vec<f64> = pairs[..n / 2].iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs[n / 2..].iter().map(|p| p.1).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.001);
        let angles: Vec<f64> = pairs.iter().map(|p| angle_between(p.0, p.1)).collect();
        assert!(ks_one_sample(&angles, emission_angle_cdf).p_value > 0.001);
    }

    #[test]
    fn angle_law_cdf_matches_pair_density_quadrature() {
        // probability that the lines meet at an angle below a, integrated from the pair density
        let a = 1.1;
        let p = simpson(
            |p1| {
                simpson(
                    |p2| {
                        let d = (p1 - p2).rem_euclid(PI);
                        if d < a {
                            let (c1, c2) = (p1.cos(), p2.cos());
                            velocity_pair_density(p1.tan(), p2.tan()) / (c1 * c1 * c2 * c2)
                        } else {
                            0.0
                        }
                    },
                    -FRAC_PI_2 + 1e-9,
                    FRAC_PI_2 - 1e-9,
                    2000,
                )
            },
            -FRAC_PI_2 + 1e-9,
            FRAC_PI_2 - 1e-9,
            2000,
        ) / 2.0;
        assert!((p - emission_angle_cdf(a)).abs() < 2e-3, "{p}");
    }
}
