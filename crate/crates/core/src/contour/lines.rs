//! Line-based representation of the free contour measure.
//!
//! For `k` lines in general position the contours built from them use every
//! line for exactly one edge, so they correspond to cyclic orders of the lines
//! up to reversal. The tilted mass of a contour class is
//! `sum_k M^k / k! E[sum_theta e^{-(2 + beta) len}]` over iid lines drawn from
//! the invariant measure restricted to lines hitting the domain.

use std::f64::consts::PI;

use rand::Rng;

use super::{Contour, MassEstimate};
use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Line};

/// Largest line count accepted by the enumerator.
pub const MAX_LINES: usize = 8;

/// Heap's algorithm over `items[from..]`.
fn permutations(items: &mut [usize], from: usize, f: &mut impl FnMut(&[usize])) {
    let n = items.len() - from;
    let mut c = vec![0usize; n];
    f(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            let j = if i % 2 == 0 { 0 } else { c[i] };
            items.swap(from + j, from + i);
            f(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// All contours in `domain` that use each line for exactly one edge, with
/// weight `e^{-2 len}`.
pub fn enumerate_contours_from_lines(lines: &[Line], domain: &ConvexDomain) -> Result<Vec<(Contour, f64)>> {
    let k = lines.len();
    if k > MAX_LINES {
        return Err(Error::Capacity(format!("{k} lines exceed the enumeration limit of {MAX_LINES}")));
    }
    if k < 3 {
        return Ok(Vec::new());
    }
    let eps = domain.eps();
    // pairwise vertices, required strictly inside the domain
    let mut vx = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (&lines[i], &lines[j]);
            let s = a.direction().cross(b.direction()).abs();
            if s < 1e-9 {
                return Err(Error::Parameter(format!("lines {i} and {j} are parallel")));
            }
            let p = a.intersection(b).filter(|&p| domain.boundary_distance(p) > eps);
            vx[i][j] = p;
            vx[j][i] = p;
        }
    }
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..k).collect();
    permutations(&mut order, 1, &mut |o| {
        // each polygon appears once per direction; keep one
        if o[1] > o[k - 1] {
            return;
        }
        let mut verts = Vec::with_capacity(k);
        for i in 0..k {
            match vx[o[i]][o[(i + 1) % k]] {
                Some(p) => verts.push(p),
                None => return,
            }
        }
        if let Ok(c) = Contour::new(verts, Some(domain)) {
            let w = (-2.0 * c.length()).exp();
            out.push((c, w));
        }
    });
    Ok(out)
}

/// Line-based estimate of `Theta^[beta]_D` on contours with `k` in `k_range`
/// edges satisfying `pred`; `samples` line tuples per `k`.
pub fn theta_mass_estimator<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    beta: f64,
    k_range: std::ops::RangeInclusive<usize>,
    samples: u64,
    mut pred: impl FnMut(&Contour) -> bool,
    rng: &mut R,
) -> Result<MassEstimate> {
    if *k_range.end() > MAX_LINES {
        return Err(Error::Capacity(format!("k up to {} exceeds {MAX_LINES}", k_range.end())));
    }
    let m = domain.perimeter();
    let mut total = MassEstimate::default();
    for k in k_range {
        if k < 3 {
            continue;
        }
        let scale = m.powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..samples {
            let lines: Vec<Line> = (0..k).map(|_| domain.sample_hitting_line(rng)).collect();
            let mut v = 0.0;
            // parallel draws have probability zero and contribute nothing
            if let Ok(found) = enumerate_contours_from_lines(&lines, domain) {
                for (c, w) in found {
                    if pred(&c) {
                        v += w * (-beta * c.length()).exp();
                    }
                }
            }
            sum += v;
            sum_sq += v * v;
        }
        total = total.combine(MassEstimate::from_weights(scale, sum, sum_sq, samples));
    }
    Ok(total)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Whole-plane density, per unit area, of `Theta^[beta]` on triangles.
///
/// Three lines with the vertex `l1 ^ l2` at `x` contribute
/// `|sin(l1, l2)| dth1 dth2 dx`; the third line at distance `p` from `x` with
/// normal angle `w` cuts a triangle with apex angle `a`, base angles `b, c`
/// and perimeter `p (cot b/2 + cot c/2)`, and `dw = db`. Integrating `p` out
/// leaves `(4 pi / 6 kappa) int sin a int db / (cot b/2 + cot c/2)` with
/// `kappa = 2 + beta`, the `1/6` undoing line orderings.
pub fn triangle_density_quadrature(beta: f64) -> f64 {
    let kappa = 2.0 + beta;
    let inner = |a: f64| {
        let span = PI - a;
        if span <= 0.0 {
            return 0.0;
        }
        simpson(
            |b| {
                let c = span - b;
                if b <= 0.0 || c <= 0.0 {
                    0.0
                } else {
                    1.0 / (1.0 / (0.5 * b).tan() + 1.0 / (0.5 * c).tan())
                }
            },
            0.0,
            span,
            400,
        )
    };
    let outer = simpson(|a| a.sin() * inner(a), 0.0, PI, 400);
    4.0 * PI * outer / (6.0 * kappa)
}
