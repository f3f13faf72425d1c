//! Slow, independent reference computations.

use std::collections::BTreeMap;

use hybridbo_core::domain::{EffectiveSpace, Encoding};
use hybridbo_core::gp::GpModel;
use hybridbo_core::tree::TreeDump;

/// Modified Bessel function of the second kind, `K_nu(x)` for `x > 0`, from
/// `K_nu(x) = ∫_0^∞ exp(-x cosh t) cosh(nu t) dt` by the trapezoid rule. The
/// integrand is analytic and decays double-exponentially, so a fixed small
/// step converges to machine precision.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k needs x > 0");
    let h = 1.0 / 128.0;
    let f = |t: f64| (-x * t.cosh() + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());
    let mut sum = 0.5 * f(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let v = f(t);
        sum += v;
        if x * t.cosh() - nu * t > 800.0 {
            break;
        }
        k += 1;
    }
    sum * h
}

/// Matern 5/2 correlation from the general Bessel-function form
/// `2^(1-nu)/Γ(nu) z^nu K_nu(z)` with `z = sqrt(2 nu) r / l`.
pub fn matern52_bessel(r: f64, lengthscale: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let nu: f64 = 2.5;
    let gamma_nu = 0.75 * std::f64::consts::PI.sqrt();
    let z = (2.0 * nu).sqrt() * r / lengthscale;
    2f64.powf(1.0 - nu) / gamma_nu * z.powf(nu) * bessel_k(nu, z)
}

/// Inverse and log-determinant by Gauss-Jordan elimination with partial
/// pivoting. Returns `None` for a singular matrix.
pub fn dense_inverse(a: &[Vec<f64>]) -> Option<(Vec<Vec<f64>>, f64)> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut log_det = 0.0;
    let mut sign = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col] == 0.0 {
            return None;
        }
        if piv != col {
            m.swap(piv, col);
            inv.swap(piv, col);
            sign = -sign;
        }
        let p = m[col][col];
        if p < 0.0 {
            sign = -sign;
        }
        log_det += p.abs().ln();
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[i][j] -= f * m[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    if sign < 0.0 {
        return None;
    }
    Some((inv, log_det))
}

/// `-½ yᵀK⁻¹y - ½ log|K| - (n/2) log 2π` with an explicit inverse.
pub fn dense_log_marginal_likelihood(k: &[Vec<f64>], y: &[f64]) -> Option<f64> {
    let (inv, log_det) = dense_inverse(k)?;
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += y[i] * inv[i][j] * y[j];
        }
    }
    Some(-0.5 * quad - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Dense Gram matrix `K + ν I` of a fitted model, entry by entry.
pub fn dense_gram(model: &GpModel) -> Vec<Vec<f64>> {
    let pts = model.points();
    let nugget = model.params().get(hybridbo_core::kernels::Hyper::Nugget);
    (0..pts.len())
        .map(|i| {
            (0..pts.len())
                .map(|j| {
                    let k = hybridbo_core::kernels::compose(model.spec(), model.params(), &pts[i], &pts[j]);
                    if i == j { k + nugget } else { k }
                })
                .collect()
        })
        .collect()
}

/// EI on an evenly spaced grid of `n` points over the single continuous
/// coordinate of `space`, categories fixed to `cat`.
pub fn grid_ei(model: &GpModel, cat: &[usize], space: &EffectiveSpace, encoding: Encoding, y_best: f64, n: usize) -> Vec<f64> {
    assert_eq!(space.cons.len(), 1, "grid scan needs exactly one continuous coordinate");
    (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            let p = space.point_from_unit(cat.to_vec(), &[u]);
            model.expected_improvement(&space.encode(&p, encoding).expect("grid point in range"), y_best)
        })
        .collect()
}

/// Largest value of [`grid_ei`].
pub fn grid_ei_max(model: &GpModel, cat: &[usize], space: &EffectiveSpace, encoding: Encoding, y_best: f64, n: usize) -> f64 {
    grid_ei(model, cat, space, encoding, y_best, n).into_iter().fold(0.0, f64::max)
}

/// Number of strict interior local maxima of a sampled curve, ignoring
/// wiggles smaller than `tol` relative to the largest value.
pub fn interior_peaks(v: &[f64], tol: f64) -> usize {
    let top = v.iter().copied().fold(0.0, f64::max);
    let mut peaks = 0;
    let mut rising = false;
    let mut last = v.first().copied().unwrap_or(0.0);
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > last + tol * top {
            rising = true;
            last = x;
        } else if x < last - tol * top {
            if rising && i > 1 {
                peaks += 1;
            }
            rising = false;
            last = x;
        }
    }
    peaks
}

/// Per-prefix `(visits, mean reward)` recomputed from a complete log of
/// `(leaf path, reward)` pairs: leaves keep running means in log order,
/// interior nodes average their visited children in index order.
pub fn replay_tree(levels: usize, log: &[(Vec<usize>, f64)]) -> BTreeMap<Vec<usize>, (u64, f64)> {
    let mut leaves: BTreeMap<Vec<usize>, (u64, f64)> = BTreeMap::new();
    for (path, reward) in log {
        assert_eq!(path.len(), levels);
        let e = leaves.entry(path.clone()).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += (reward - e.1) / e.0 as f64;
    }
    let mut out = leaves.clone();
    for depth in (0..levels).rev() {
        let mut groups: BTreeMap<Vec<usize>, Vec<(usize, u64, f64)>> = BTreeMap::new();
        for (path, &(n, r)) in out.iter().filter(|(p, _)| p.len() == depth + 1) {
            groups.entry(path[..depth].to_vec()).or_default().push((path[depth], n, r));
        }
        for (prefix, mut kids) in groups {
            kids.sort_by_key(|k| k.0);
            let n = kids.iter().map(|k| k.1).sum();
            let r = kids.iter().map(|k| k.2).sum::<f64>() / kids.len() as f64;
            out.insert(prefix, (n, r));
        }
    }
    out
}

/// Compare a tree dump with a replay; returns the first mismatch.
pub fn check_replay(dump: &TreeDump, log: &[(Vec<usize>, f64)]) -> Result<(), String> {
    let replay = replay_tree(dump.arity.len(), log);
    let visited: Vec<_> = dump.nodes.iter().filter(|n| n.visits > 0).collect();
    if visited.len() != replay.len() {
        return Err(format!("{} visited nodes in the tree, {} in the replay", visited.len(), replay.len()));
    }
    for node in visited {
        match replay.get(&node.path) {
            Some(&(n, r)) if n == node.visits && r == node.mean_reward => {}
            Some(&(n, r)) => {
                return Err(format!(
                    "node {:?}: tree (n={}, r={}) vs replay (n={n}, r={r})",
                    node.path, node.visits, node.mean_reward
                ))
            }
            None => return Err(format!("node {:?} missing from the replay", node.path)),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_half_integer_closed_forms() {
        // K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}
        for &x in &[0.01, 0.5, 1.0, 3.0, 20.0] {
            let exact = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
            assert!((bessel_k(0.5, x) / exact - 1.0).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn dense_inverse_identity() {
        let a = vec![vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]];
        let (inv, log_det) = dense_inverse(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let det = 4.0 * (3.0 * 2.0 - 0.04) - 1.0 * (2.0 - 0.1) + 0.5 * (0.2 - 1.5);
        assert!((log_det - f64::ln(det)).abs() < 1e-14);
    }

    #[test]
    fn peaks_counted() {
        assert_eq!(interior_peaks(&[0.0, 1.0, 2.0, 1.0, 0.0], 1e-6), 1);
        assert_eq!(interior_peaks(&[0.0, 1.0, 0.0, 1.0, 0.0], 1e-6), 2);
        assert_eq!(interior_peaks(&[3.0, 2.0, 1.0], 1e-6), 0);
        assert_eq!(interior_peaks(&[1.0, 2.0, 3.0], 1e-6), 0);
    }

    #[test]
    fn replay_small_log() {
        let log = vec![(vec![0, 1], 1.0), (vec![0, 1], 3.0), (vec![1, 0], 5.0), (vec![0, 0], 0.0)];
        let r = replay_tree(2, &log);
        assert_eq!(r[&vec![0, 1]], (2, 2.0));
        assert_eq!(r[&vec![0]], (3, 1.0));
        assert_eq!(r[&vec![]], (4, 3.0));
    }
}
