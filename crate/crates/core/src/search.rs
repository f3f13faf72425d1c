//! Bounded derivative-free compass search (maximization).

/// Settings for [`compass_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompassSettings {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompassResult {
    pub x: alloc::vec::Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Maximize `f` inside the box `[lo, hi]` starting from `x0`.
///
/// Each sweep tries `±step` along every coordinate and accepts the first
/// improvement; a sweep without improvement halves the step. Stops when the
/// step falls below `min_step` or `max_evals` evaluations were spent
/// (the evaluation at `x0` is counted).
pub fn compass_search(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    settings: CompassSettings,
) -> CompassResult {
    let mut x: alloc::vec::Vec<f64> = x0.iter().zip(lo.iter().zip(hi)).map(|(&v, (&l, &h))| v.clamp(l, h)).collect();
    let mut fx = f(&x);
    let mut evals = 1;
    let mut step = settings.initial_step;
    let mut cand = x.clone();
    'outer: while evals < settings.max_evals && step >= settings.min_step {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let v = (x[d] + sign * step).clamp(lo[d], hi[d]);
                if v == x[d] {
                    continue;
                }
                cand.copy_from_slice(&x);
                cand[d] = v;
                let fc = f(&cand);
                evals += 1;
                if fc > fx {
                    x.copy_from_slice(&cand);
                    fx = fc;
                    improved = true;
                    break;
                }
                if evals >= settings.max_evals {
                    break 'outer;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    CompassResult { x, value: fx, evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let settings = CompassSettings { initial_step: 0.25, min_step: 1e-6, max_evals: 10_000 };
        let r = compass_search(
            |x| -(x[0] - 0.3) * (x[0] - 0.3) - 2.0 * (x[1] - 0.7) * (x[1] - 0.7),
            &[0.0, 0.0],
            &[0.0, 0.0],
            &[1.0, 1.0],
            settings,
        );
        assert!((r.x[0] - 0.3).abs() < 1e-5 && (r.x[1] - 0.7).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn respects_bounds_and_budget() {
        let settings = CompassSettings { initial_step: 0.5, min_step: 1e-9, max_evals: 7 };
        let r = compass_search(|x| x[0], &[0.5], &[0.0], &[1.0], settings);
        assert_eq!(r.x, [1.0]);
        assert!(r.evals <= 7);
    }
}
