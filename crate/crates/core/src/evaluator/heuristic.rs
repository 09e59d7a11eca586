//! Nelder–Mead maximization.

/// Maximizes `f` from `x0` with initial simplex step `step`, using at most
/// `max_evals` evaluations. Returns the best point and value.
pub(crate) fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (vec![], f(x0));
    }
    let mut evals = 0;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = f(x0);
    evals += 1;
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i] > 0.0 { -step } else { step };
        let v = f(&x);
        evals += 1;
        simplex.push((x, v));
    }
    while evals < max_evals {
        // descending by value
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let spread = simplex[0].1 - simplex[n].1;
        let size = simplex.iter().map(|(x, _)| dist(x, &simplex[0].0)).fold(0.0, f64::max);
        if spread.abs() < 1e-13 && size < 1e-10 {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (worst.0[j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let vr = f(&xr);
        evals += 1;
        if vr > simplex[0].1 {
            let xe = along(-2.0);
            let ve = f(&xe);
            evals += 1;
            simplex[n] = if ve > vr { (xe, ve) } else { (xr, vr) };
        } else if vr > simplex[n - 1].1 {
            simplex[n] = (xr, vr);
        } else {
            let (xc, vc) = if vr > worst.1 {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if vc > worst.1.max(vr) {
                simplex[n] = (xc, vc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = (0..n).map(|j| best[j] + 0.5 * (item.0[j] - best[j])).collect();
                    let v = f(&x);
                    *item = (x, v);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x, v) = simplex.swap_remove(0);
    (x, v)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_maximum_of_concave_quadratic() {
        let mut f = |x: &[f64]| -((x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.1).powi(2));
        let (x, v) = nelder_mead(&mut f, &[0.0, 0.0], 0.5, 2000);
        assert!((x[0] - 0.3).abs() < 1e-5 && (x[1] + 0.1).abs() < 1e-5);
        assert!(v > -1e-9);
    }
}
