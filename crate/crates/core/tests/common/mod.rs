//! Independent oracles for the integration and acceptance suites. Nothing
//! here touches the library's solver paths: determinants are computed by a
//! local elimination, the fixed point by bisection, and boundary-value
//! profiles by shooting.

#![allow(dead_code)]

use monolab_core::dsl::ReactionField;

/// Fixed point of `a = 2 tanh(a)` on (1, 3), by bisection.
pub fn tanh_fixed_point() -> f64 {
    let g = |a: f64| 2.0 * a.tanh() - a;
    let mut lo = 1.5;
    let mut hi = 2.5;
    assert!(g(lo) > 0.0 && g(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Determinant via Gaussian elimination with partial pivoting, written here
/// so the oracle shares no code with the library solvers.
pub fn det(a_in: &[f64], n: usize) -> f64 {
    let mut a = a_in.to_vec();
    let mut sign = 1.0;
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i * n + k].abs() > a[p * n + k].abs() {
                p = i;
            }
        }
        if a[p * n + k] == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            let l = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= l * a[k * n + j];
            }
        }
    }
    let mut d = sign;
    for k in 0..n {
        d *= a[k * n + k];
    }
    d
}

/// Spectral abscissa of a cooperative (Metzler) matrix: its dominant
/// eigenvalue is real and simple, so `det(lambda I - J)` changes sign at the
/// largest real root. Scan down from the Gershgorin bound for the first sign
/// change, then bisect.
pub fn metzler_spectral_abscissa(j: &[f64], n: usize) -> f64 {
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        for c in 0..n {
            if c != i {
                radius += j[i * n + c].abs();
            }
        }
        hi = hi.max(j[i * n + i] + radius);
        lo = lo.min(j[i * n + i] - radius);
    }
    hi += 1.0;
    lo -= 1.0;
    let char_poly = |lambda: f64| {
        let mut m = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                m[r * n + c] = if r == c { lambda - j[r * n + c] } else { -j[r * n + c] };
            }
        }
        det(&m, n)
    };
    // Find the first grid point below the dominant root.
    let mut steps = 20_000usize;
    let bracket = loop {
        let h = (hi - lo) / steps as f64;
        let mut found = None;
        let mut prev = hi;
        for k in 1..=steps {
            let lambda = hi - k as f64 * h;
            if char_poly(lambda) < 0.0 {
                found = Some((lambda, prev));
                break;
            }
            prev = lambda;
        }
        match found {
            Some(b) => break b,
            None => {
                steps *= 10;
                assert!(steps <= 2_000_000, "no sign change located for the characteristic polynomial");
            }
        }
    };
    let (mut a, mut b) = bracket;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if char_poly(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Central finite differences with per-coordinate step `1e-6 (1 + |u_j|)`.
pub fn central_fd_jacobian(f: &ReactionField, u: &[f64]) -> Vec<f64> {
    let n = f.arity();
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        let h = 1e-6 * (1.0 + u[j].abs());
        let mut up = u.to_vec();
        up[j] += h;
        let mut dn = u.to_vec();
        dn[j] -= h;
        let fu = f.eval(&up).expect("fd sample evaluates");
        let fd = f.eval(&dn).expect("fd sample evaluates");
        for i in 0..n {
            out[i * n + j] = (fu[i] - fd[i]) / (2.0 * h);
        }
    }
    out
}

/// A nonconstant no-flux profile of `d u'' + u - u^3 = 0` on [0,1], located
/// by shooting from `u(0) = s, u'(0) = 0` and bisecting on `u'(1)` near the
/// single-interior-zero branch. Returns the amplitude and the profile
/// sampled on an `m`-node uniform grid.
pub struct ShootingProfile {
    pub amplitude: f64,
    pub profile: Vec<f64>,
}

pub fn chafee_shooting_profile(d: f64, m: usize) -> Option<ShootingProfile> {
    let steps = 4000usize;
    let dx = 1.0 / steps as f64;
    // RK4 on (u, v): u' = v, v' = (u^3 - u)/d.
    let shoot = |s: f64, record: bool| -> (f64, Vec<f64>, usize) {
        let mut u = s;
        let mut v = 0.0;
        let mut path = Vec::new();
        if record {
            path.push(u);
        }
        let mut zero_crossings = 0usize;
        let mut prev_sign = u.signum();
        let acc = |u: f64| (u * u * u - u) / d;
        for _ in 0..steps {
            let (k1u, k1v) = (v, acc(u));
            let (k2u, k2v) = (v + 0.5 * dx * k1v, acc(u + 0.5 * dx * k1u));
            let (k3u, k3v) = (v + 0.5 * dx * k2v, acc(u + 0.5 * dx * k2u));
            let (k4u, k4v) = (v + dx * k3v, acc(u + dx * k3u));
            u += dx / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += dx / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if record {
                path.push(u);
            }
            if u.signum() != prev_sign && u != 0.0 {
                zero_crossings += 1;
                prev_sign = u.signum();
            }
        }
        (v, path, zero_crossings)
    };

    // Scan amplitudes for sign changes of u'(1); pick a bracket whose
    // profile crosses zero exactly once (the first nonconstant branch).
    let mut best: Option<(f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    let mut s = 0.05;
    while s < 0.995 {
        let (vp, _, crossings) = shoot(s, false);
        if let Some((s0, v0)) = prev {
            if v0.signum() != vp.signum() && crossings == 1 {
                best = Some((s0, s));
                let _ = v0;
                break;
            }
        }
        prev = Some((s, vp));
        s += 0.005;
    }
    let (mut lo, mut hi) = best?;
    let sign_lo = shoot(lo, false).0.signum();
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if shoot(mid, false).0.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s_star = 0.5 * (lo + hi);
    let (_, path, _) = shoot(s_star, true);
    // Resample on the m-node grid.
    let profile = (0..m)
        .map(|j| {
            let x = j as f64 / (m - 1) as f64;
            let idx = (x * steps as f64).round() as usize;
            path[idx.min(steps)]
        })
        .collect();
    Some(ShootingProfile { amplitude: s_star, profile })
}

/// Deterministic cooperative irreducible test matrices: nonnegative
/// off-diagonals with a full cycle so the coupling digraph is strongly
/// connected.
pub fn random_metzler_irreducible(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    let mut j = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            if r == c {
                j[r * n + c] = rng.gen_range(-3.0..=0.5);
            } else if rng.gen_bool(0.6) {
                j[r * n + c] = rng.gen_range(0.0..=1.5);
            }
        }
    }
    for r in 0..n {
        let c = (r + 1) % n;
        j[r * n + c] += rng.gen_range(0.3..=1.0);
    }
    j
}
