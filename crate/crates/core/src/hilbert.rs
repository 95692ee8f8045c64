//! Hilbert metric on properly convex domains: exact chord intersection for
//! polyhedral cones, closed form for the round ball.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{sub, to_f64, QVec, Q};
use crate::lp::{max_ray_scale, RayScale};

/// `d(x, y) = ½ log [a, b; x, y]` for the cone spanned by `gens`. On the
/// line `x + s(y − x)` with `x` at `s = 0` and `y` at `s = 1`, the far
/// boundary point `b` is `s_max > 1` or, when the chord runs off to infinity
/// inside the cone, a point `s < 0` reached through infinity on the branch
/// `−(x + s(y − x)) ∈ C`; the near one `a` likewise. Then
/// `d = ½ log((b / (b − 1)) · ((a − 1) / a))`, each factor read as `1` when
/// its point is at infinity.
pub fn hilbert_distance(gens: &[QVec], x: &[Q], y: &[Q]) -> Result<f64> {
    if x == y {
        return interior_check(gens, x).map(|_| 0.0);
    }
    let d = sub(y, x);
    let nd: Vec<Q> = d.iter().map(|v| -v).collect();
    let nx: Vec<Q> = x.iter().map(|v| -v).collect();
    let one = Q::one();
    let s_max = match max_ray_scale(gens, x, &d) {
        RayScale::Outside => return Err(Error::Precondition("first point lies outside the domain".into())),
        RayScale::Infinite => None,
        RayScale::Finite(t) => Some(t),
    };
    let t_min = match max_ray_scale(gens, x, &nd) {
        RayScale::Outside => unreachable!("base point already inside"),
        RayScale::Infinite => None,
        RayScale::Finite(t) => Some(t),
    };
    if let Some(t) = &s_max {
        if *t <= one {
            return Err(Error::Precondition("second point lies on or outside the boundary".into()));
        }
    }
    if let Some(t) = &t_min {
        if t.is_zero() {
            return Err(Error::Precondition("first point lies on the boundary".into()));
        }
    }
    if s_max.is_none() && t_min.is_none() {
        return Err(Error::Precondition("domain is not properly convex along the chord".into()));
    }
    // −x − s·dir ∈ C with s = ∓1/τ is dir' − τx ∈ C for dir' = ±dir
    let wrapped = |dir: &[Q]| match max_ray_scale(gens, dir, &nx) {
        RayScale::Finite(tau) if tau.is_positive() => Ok(Some(tau)),
        RayScale::Finite(_) | RayScale::Outside => Ok(None),
        RayScale::Infinite => Err(Error::Precondition("domain is not properly convex along the chord".into())),
    };
    let far = match &s_max {
        Some(s) => s / (s - &one),
        // b = −1/τ, so b / (b − 1) = 1 / (1 + τ)
        None => match wrapped(&d)? {
            Some(tau) => (&one + tau).recip(),
            None => one.clone(),
        },
    };
    let near = match &t_min {
        Some(t) => (&one + t) / t,
        // a = 1/τ, so (a − 1) / a = 1 − τ
        None => match wrapped(&nd)? {
            Some(tau) => &one - tau,
            None => one.clone(),
        },
    };
    let r = to_f64(&(far * near));
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::Numeric(format!("cross ratio {} out of range", r)));
    }
    Ok(0.5 * r.ln())
}

fn interior_check(gens: &[QVec], x: &[Q]) -> Result<()> {
    match crate::lp::cone_membership(gens, x) {
        Some(c) if c.iter().all(|v| !v.is_negative()) => Ok(()),
        _ => Err(Error::Precondition("point lies outside the domain".into())),
    }
}

/// Largest Hilbert distance between vertices, which is the diameter of
/// their convex hull.
pub fn hilbert_diameter(gens: &[QVec], points: &[QVec]) -> Result<f64> {
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max(hilbert_distance(gens, &points[i], &points[j])?);
        }
    }
    Ok(best)
}

/// Hilbert distance in the open unit ball of an affine chart.
pub fn ball_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    let nx: f64 = x.iter().map(|v| v * v).sum();
    let ny: f64 = y.iter().map(|v| v * v).sum();
    if nx >= 1.0 || ny >= 1.0 {
        return Err(Error::Precondition("point outside the open ball".into()));
    }
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let a: f64 = d.iter().map(|v| v * v).sum();
    if a == 0.0 {
        return Ok(0.0);
    }
    let b: f64 = x.iter().zip(&d).map(|(p, q)| p * q).sum();
    let c = nx - 1.0;
    let disc = (b * b - a * c).sqrt();
    // roots of a s² + 2 b s + c; the product c/a is negative
    let s_max = (-b + disc) / a;
    let s_min = c / (a * s_max);
    Ok(0.5 * (((1.0 - s_min) * s_max) / ((-s_min) * (s_max - 1.0))).ln())
}

/// Diameter of the ellipsoid image `gB` in `d_B` when `g = diag(H, λ)`
/// preserves the affine chart centre; attained on the major axis.
pub fn ball_image_diameter(semi_major: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&semi_major) {
        return Err(Error::Precondition("image is not contained in the ball".into()));
    }
    ball_distance(&[semi_major], &[-semi_major])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qf};

    fn v(x: &[i64]) -> Vec<Q> {
        x.iter().map(|&a| q(a)).collect()
    }

    #[test]
    fn interval_model() {
        let gens = vec![v(&[-1, 1]), v(&[1, 1])];
        let scaled = hilbert_distance(&gens, &v(&[0, 1]), &[qf(7, 2), q(7)]).unwrap();
        assert!((scaled - 0.5 * 3f64.ln()).abs() < 1e-12);
        for (n, d) in [(1, 2), (1, 3), (9, 10), (-3, 4)] {
            let t = qf(n, d);
            let got = hilbert_distance(&gens, &v(&[0, 1]), &[t.clone(), q(1)]).unwrap();
            let t = (n as f64 / d as f64).abs();
            assert!((got - 0.5 * ((1.0 + t) / (1.0 - t)).ln()).abs() < 1e-12);
        }
        assert_eq!(hilbert_distance(&gens, &v(&[0, 1]), &v(&[0, 1])).unwrap(), 0.0);
        assert!(hilbert_distance(&gens, &v(&[0, 1]), &v(&[1, 1])).is_err());
    }

    #[test]
    fn ball_axis() {
        let r: f64 = 0.4;
        let d = ball_image_diameter(r).unwrap();
        assert!((d - ((1.0 + r) / (1.0 - r)).ln()).abs() < 1e-12);
        let a = ball_distance(&[0.1, 0.2], &[-0.3, 0.5]).unwrap();
        let b = ball_distance(&[-0.3, 0.5], &[0.1, 0.2]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
