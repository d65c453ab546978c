use rayon::prelude::*;

use crate::error::{OccError, Result};

/// Quartic kernel `(15/16)(1 - (d/h)^2)^2 / h` on `|d| <= h`.
#[inline]
pub fn quartic_kernel(d: f64, h: f64) -> f64 {
    let u = d / h;
    if u.abs() > 1.0 {
        0.0
    } else {
        let v = 1.0 - u * u;
        0.9375 * v * v / h
    }
}

/// Bandwidth `kappa_b sd(spots) J^(-exponent)`, never below `floor`.
pub fn bandwidth(spots: &[f64], kappa_b: f64, exponent: f64, floor: f64) -> f64 {
    let j = spots.len() as f64;
    let mean = spots.iter().sum::<f64>() / j;
    let var = spots.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / j;
    (kappa_b * var.sqrt() * j.powf(-exponent)).max(floor)
}

/// Nadaraya-Watson estimate of every particle's occupation conditional on
/// its spot: `O_hat(j) = sum_j' psi(X_j - X_j') O(j') / sum_j' psi(X_j - X_j')`.
///
/// `masses[j]` is the bin vector of particle `j`.
pub fn particle_projection(spots: &[f64], masses: &[&[f64]], h: f64) -> Result<Vec<Vec<f64>>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(OccError::Config(format!("bandwidth must be > 0, got {h}")));
    }
    if spots.len() != masses.len() || spots.is_empty() {
        return Err(OccError::Dimension(format!(
            "{} spots for {} occupations",
            spots.len(),
            masses.len()
        )));
    }
    let m = masses[0].len();
    if masses.iter().any(|o| o.len() != m) {
        return Err(OccError::Dimension("occupations on different grids".into()));
    }
    let mut order: Vec<usize> = (0..spots.len()).collect();
    order.sort_by(|a, b| spots[*a].total_cmp(&spots[*b]).then(a.cmp(b)));
    let sorted: Vec<f64> = order.iter().map(|j| spots[*j]).collect();
    Ok(spots
        .par_iter()
        .map(|&x| {
            let lo = sorted.partition_point(|y| *y < x - h);
            let hi = sorted.partition_point(|y| *y <= x + h);
            let mut acc = vec![0.0; m];
            let mut wsum = 0.0;
            for k in lo..hi {
                let w = quartic_kernel(x - sorted[k], h);
                if w == 0.0 {
                    continue;
                }
                wsum += w;
                for (a, o) in acc.iter_mut().zip(masses[order[k]]) {
                    *a += w * o;
                }
            }
            for a in &mut acc {
                *a /= wsum;
            }
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct(spots: &[f64], masses: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
        spots
            .iter()
            .map(|&x| {
                let w: Vec<f64> = spots.iter().map(|y| quartic_kernel(x - y, h)).collect();
                let s: f64 = w.iter().sum();
                (0..masses[0].len())
                    .map(|m| w.iter().zip(masses).map(|(w, o)| w * o[m]).sum::<f64>() / s)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn kernel_integrates_to_one() {
        let h = 0.7;
        let n = 20000;
        let s: f64 = (0..n).map(|i| quartic_kernel(-h + (i as f64 + 0.5) * 2.0 * h / n as f64, h)).sum();
        assert!((s * 2.0 * h / n as f64 - 1.0).abs() < 1e-8);
        assert_eq!(quartic_kernel(1.0, 0.5), 0.0);
    }

    #[test]
    fn degenerate_ensembles() {
        let single = particle_projection(&[1.0], &[&[0.3, 0.7]], 0.1).unwrap();
        assert_eq!(single, vec![vec![0.3, 0.7]]);
        let a = [1.0, 0.0];
        let b = [0.0, 3.0];
        let equal = particle_projection(&[2.0, 2.0], &[&a, &b], 0.1).unwrap();
        assert_eq!(equal[0], vec![0.5, 1.5]);
        assert_eq!(equal[1], vec![0.5, 1.5]);
        let wide = particle_projection(&[1.0, 2.0, 3.0], &[&[1.0], &[2.0], &[6.0]], 1e9).unwrap();
        for w in wide {
            assert!((w[0] - 3.0).abs() < 1e-9);
        }
        assert!(particle_projection(&[1.0], &[&[1.0]], 0.0).is_err());
        assert!(particle_projection(&[1.0, 2.0], &[&[1.0]], 1.0).is_err());
    }

    #[test]
    fn bandwidth_rule() {
        let s = [1.0, 3.0];
        assert!((bandwidth(&s, 1.5, 0.2, 1e-6) - 1.5 * 2f64.powf(-0.2)).abs() < 1e-15);
        assert_eq!(bandwidth(&[2.0, 2.0], 1.5, 0.2, 1e-6), 1e-6);
    }

    proptest! {
        #[test]
        fn matches_direct_sum_and_balances(
            spots in prop::collection::vec(-2.0f64..2.0, 1..40),
            h in 0.05f64..3.0,
        ) {
            let masses: Vec<Vec<f64>> = spots.iter().enumerate()
                .map(|(j, x)| vec![x.abs(), j as f64, 1.0]).collect();
            let refs: Vec<&[f64]> = masses.iter().map(|v| v.as_slice()).collect();
            let got = particle_projection(&spots, &refs, h).unwrap();
            let want = direct(&spots, &masses, h);
            for (g, w) in got.iter().zip(&want) {
                for (a, b) in g.iter().zip(w) {
                    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
                }
                prop_assert!((g[2] - 1.0).abs() < 1e-12);
            }
            // sum_j sum_j' psi_jj' (O_m(j') - O_hat_m(j)) = 0
            for m in 0..3 {
                let mut resid = 0.0;
                let mut scale = 0.0;
                for (j, x) in spots.iter().enumerate() {
                    for (k, y) in spots.iter().enumerate() {
                        let w = quartic_kernel(x - y, h);
                        resid += w * (masses[k][m] - got[j][m]);
                        scale += w * masses[k][m].abs();
                    }
                }
                prop_assert!(resid.abs() <= 1e-10 * scale.max(1.0));
            }
        }
    }
}
