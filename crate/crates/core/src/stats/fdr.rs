use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Benjamini-Hochberg adjusted p-values and rejections, in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrResult {
    pub raw_p: Vec<f64>,
    pub adjusted_p: Vec<f64>,
    pub rejected: Vec<bool>,
    pub q: f64,
}

/// Benjamini-Hochberg step-up procedure at level `q`.
///
/// With p-values sorted ascending, `adj(k) = min over j >= k of p(j) m / j`,
/// capped at 1; hypothesis `i` is rejected when its adjusted p is `<= q`.
pub fn bh_fdr(raw_p: &[f64], q: f64) -> Result<FdrResult> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "FDR level must be in (0, 1), got {q}"
        )));
    }
    if let Some(&bad) = raw_p.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
        return Err(Error::PValueOutOfRange(bad));
    }
    let m = raw_p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw_p[a].total_cmp(&raw_p[b]));

    let mut adjusted_p = vec![0.0; m];
    let mut running = 1.0f64;
    for (k, &i) in order.iter().enumerate().rev() {
        let rank = (k + 1) as f64;
        running = running.min((raw_p[i] * (m as f64 / rank)).min(1.0));
        adjusted_p[i] = running;
    }
    let rejected = adjusted_p.iter().map(|&a| a <= q).collect();
    Ok(FdrResult {
        raw_p: raw_p.to_vec(),
        adjusted_p,
        rejected,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example_rejects_all() {
        let r = bh_fdr(&[0.01, 0.02, 0.03, 0.04], 0.05).unwrap();
        assert_eq!(r.rejected, vec![true; 4]);
        for a in &r.adjusted_p {
            assert!((a - 0.04).abs() < 1e-15);
        }
    }

    #[test]
    fn single_p_of_one() {
        let r = bh_fdr(&[1.0], 0.05).unwrap();
        assert_eq!(r.adjusted_p, vec![1.0]);
        assert_eq!(r.rejected, vec![false]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            bh_fdr(&[0.2, 1.5], 0.05),
            Err(Error::PValueOutOfRange(_))
        ));
        assert!(bh_fdr(&[f64::NAN], 0.05).is_err());
        assert!(bh_fdr(&[0.2], 0.0).is_err());
        assert!(bh_fdr(&[], 0.05).unwrap().adjusted_p.is_empty());
    }

    proptest! {
        #[test]
        fn invariants(p in prop::collection::vec(0.0f64..=1.0, 1..40), q in 0.01f64..0.5, dq in 0.0f64..0.4) {
            let r = bh_fdr(&p, q).unwrap();
            let mut idx: Vec<usize> = (0..p.len()).collect();
            idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
            for w in idx.windows(2) {
                prop_assert!(r.adjusted_p[w[0]] <= r.adjusted_p[w[1]]);
            }
            for (i, &pi) in p.iter().enumerate() {
                prop_assert!(r.adjusted_p[i] >= pi);
                prop_assert_eq!(r.rejected[i], r.adjusted_p[i] <= q);
            }
            // larger q never rejects less
            let wider = bh_fdr(&p, (q + dq).min(0.99)).unwrap();
            for i in 0..p.len() {
                prop_assert!(!r.rejected[i] || wider.rejected[i]);
            }
            // permutation of the input permutes the output
            let reversed: Vec<f64> = p.iter().rev().copied().collect();
            let rr = bh_fdr(&reversed, q).unwrap();
            for i in 0..p.len() {
                prop_assert_eq!(rr.adjusted_p[p.len() - 1 - i], r.adjusted_p[i]);
            }
        }
    }
}
