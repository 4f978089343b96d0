//! Mechanism recovery when treatment is exogenous: per treatment bin, the
//! causal map is the monotone rearrangement from the unobservable law onto
//! the conditional outcome law, `g(x, u) = F_{Y|X=x}^{-1}(F_U(u))`.

use crate::dist1d::{ecdf, monotone_rearrangement, Cdf, Map1D};
use crate::error::{Error, Result};

/// One treatment bin with its recovered map (`None` when the bin is empty).
#[derive(Debug, Clone)]
pub struct MechanismBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub map: Option<Map1D>,
}

#[derive(Debug, Clone)]
pub struct ExogenousMechanism {
    pub bins: Vec<MechanismBin>,
}

impl ExogenousMechanism {
    /// Bins with no observations (reported, never silently dropped).
    pub fn empty_bins(&self) -> Vec<usize> {
        self.bins
            .iter()
            .enumerate()
            .filter(|(_, b)| b.count == 0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Recovers `g(x, .)` for each treatment bin given the (caller-asserted
/// exogenous) sample and an absolutely continuous unobservable CDF.
///
/// `x_edges` are bin edges: bin `k` covers `[edges[k], edges[k+1])`, with the
/// last bin closed on the right.
pub fn identify_exogenous_mechanism(
    y: &[f64],
    x: &[f64],
    f_u: &Cdf,
    x_edges: &[f64],
) -> Result<ExogenousMechanism> {
    if y.is_empty() || y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "mechanism sample y vs x",
            expected: y.len().max(1),
            got: x.len(),
        });
    }
    if x_edges.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "x_edges",
            reason: "need at least two bin edges".into(),
        });
    }
    for w in x_edges.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParameter {
                name: "x_edges",
                reason: format!("edges must be strictly increasing ({} -> {})", w[0], w[1]),
            });
        }
    }

    let nbins = x_edges.len() - 1;
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); nbins];
    for (&yi, &xi) in y.iter().zip(x.iter()) {
        let k = bin_index(xi, x_edges);
        if let Some(k) = k {
            per_bin[k].push(yi);
        }
    }

    let mut bins = Vec::with_capacity(nbins);
    for (k, ys) in per_bin.into_iter().enumerate() {
        let count = ys.len();
        let map = if count == 0 {
            None
        } else {
            let f_cond = ecdf(&ys)?;
            Some(monotone_rearrangement(f_u, &f_cond)?)
        };
        bins.push(MechanismBin {
            lower: x_edges[k],
            upper: x_edges[k + 1],
            count,
            map,
        });
    }
    Ok(ExogenousMechanism { bins })
}

fn bin_index(x: f64, edges: &[f64]) -> Option<usize> {
    if x < edges[0] || x > *edges.last().unwrap() {
        return None;
    }
    let nbins = edges.len() - 1;
    let i = edges.partition_point(|&e| e <= x);
    Some(if i == 0 { 0 } else { (i - 1).min(nbins - 1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist1d::Interpolation;

    fn uniform_cdf() -> Cdf {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        Cdf::from_fn(grid, |x| x, Interpolation::Linear).unwrap()
    }

    #[test]
    fn identity_mechanism_recovered_per_bin() {
        // Y = U with U ~ U[0,1]: g(x, u) = u in every bin
        let u: Vec<f64> = (0..4000).map(|i| (i as f64 + 0.5) / 4000.0).collect();
        let x: Vec<f64> = (0..4000).map(|i| (i % 4) as f64).collect();
        let mech =
            identify_exogenous_mechanism(&u, &x, &uniform_cdf(), &[0.0, 1.0, 2.0, 3.0, 4.0])
                .unwrap();
        assert_eq!(mech.bins.len(), 4);
        assert!(mech.empty_bins().is_empty());
        for bin in &mech.bins {
            let map = bin.map.as_ref().unwrap();
            for u0 in [0.1, 0.5, 0.9] {
                assert!((map.eval(u0) - u0).abs() < 0.05, "{}", map.eval(u0));
            }
        }
    }

    #[test]
    fn empty_bins_are_reported() {
        let y = vec![1.0, 2.0, 3.0];
        let x = vec![0.5, 0.5, 0.5];
        let mech =
            identify_exogenous_mechanism(&y, &x, &uniform_cdf(), &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(mech.empty_bins(), vec![1]);
        assert!(mech.bins[1].map.is_none());
        assert_eq!(mech.bins[0].count, 3);
    }

    #[test]
    fn rejects_unsorted_edges() {
        let err = identify_exogenous_mechanism(&[1.0], &[0.0], &uniform_cdf(), &[1.0, 0.0]);
        assert!(err.is_err());
    }
}
