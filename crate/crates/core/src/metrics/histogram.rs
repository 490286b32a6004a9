use serde::Serialize;

use super::MetricsError;

/// Fixed-edge histogram with half-open bins `[e_i, e_{i+1})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    /// Samples at or above the last edge (and NaNs).
    pub overflow: u64,
}

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Result<Self, MetricsError> {
        if edges.len() < 2 || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricsError::BadEdges);
        }
        let bins = edges.len() - 1;
        Ok(Histogram { edges, counts: vec![0; bins], underflow: 0, overflow: 0 })
    }

    pub fn add(&mut self, x: f64) {
        if x < self.edges[0] {
            self.underflow += 1;
        } else if !(x < self.edges[self.edges.len() - 1]) {
            self.overflow += 1;
        } else {
            let bin = self.edges.partition_point(|e| *e <= x) - 1;
            self.counts[bin] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.edges.windows(2).zip(&self.counts).map(|(w, c)| (w[0], w[1], *c))
    }

    /// Index of the fullest bin (lowest index on ties).
    pub fn modal_bin(&self) -> Option<usize> {
        let max = *self.counts.iter().max()?;
        if max == 0 {
            return None;
        }
        self.counts.iter().position(|c| *c == max)
    }
}

pub fn histogram(samples: &[f64], edges: &[f64]) -> Result<Histogram, MetricsError> {
    let mut h = Histogram::new(edges.to_vec())?;
    for &x in samples {
        h.add(x);
    }
    Ok(h)
}

/// Evenly spaced edges `lo + k * (hi - lo) / bins`, computed without drift.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect()
}

/// Loss-rate edges: 0 to 5 % in 0.25 % steps (as fractions).
pub fn default_loss_edges() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 400.0).collect()
}

/// The default loss edges, extended in 0.25 % steps until the last edge
/// lies strictly above `max_loss` (capped at 100 %).
pub fn loss_edges_covering(max_loss: f64) -> Vec<f64> {
    let needed = if max_loss.is_finite() { (max_loss * 400.0).floor() as usize + 1 } else { 0 };
    (0..=needed.clamp(20, 400)).map(|k| k as f64 / 400.0).collect()
}

/// MOS edges: 1.0 to 4.5 in 0.05 steps.
pub fn default_mos_edges() -> Vec<f64> {
    (20..=90).map(|k| k as f64 / 20.0).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn covering_edges() {
        assert_eq!(super::loss_edges_covering(0.01), super::default_loss_edges());
        let e = super::loss_edges_covering(0.19);
        assert_eq!(e.len(), 78);
        assert!(*e.last().unwrap() > 0.19);
        assert_eq!(super::loss_edges_covering(0.05).len(), 22);
        assert_eq!(*super::loss_edges_covering(1.0).last().unwrap(), 1.0);
    }

    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_goes_right() {
        let h = histogram(&[0.1, 0.5, 0.9], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(h.counts, [1, 2]);
    }

    #[test]
    fn empty_samples() {
        let h = histogram(&[], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(h.counts, [0, 0]);
        assert_eq!(h.total(), 0);
        assert_eq!(h.modal_bin(), None);
    }

    #[test]
    fn under_and_overflow() {
        let h = histogram(&[-0.1, 1.0, 7.0, f64::NAN], &[0.0, 1.0]).unwrap();
        assert_eq!(h.underflow, 1);
        assert_eq!(h.overflow, 3);
        assert_eq!(h.counts, [0]);
        assert_eq!(h.total(), 4);
    }

    #[test]
    fn bad_edges() {
        assert!(matches!(histogram(&[], &[1.0]), Err(MetricsError::BadEdges)));
        assert!(matches!(histogram(&[], &[0.0, 0.0]), Err(MetricsError::BadEdges)));
        assert!(matches!(histogram(&[], &[1.0, 0.0]), Err(MetricsError::BadEdges)));
    }

    #[test]
    fn default_edges() {
        let l = default_loss_edges();
        assert_eq!(l.len(), 21);
        assert_eq!(l[3], 0.0075);
        assert_eq!(*l.last().unwrap(), 0.05);
        let m = default_mos_edges();
        assert_eq!(m.len(), 71);
        assert_eq!((m[0], m[70]), (1.0, 4.5));
        assert_eq!(m[52], 3.6);
        assert_eq!(uniform_edges(0.0, 1.0, 4), [0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    proptest! {
        #[test]
        fn counts_are_order_invariant(mut xs in proptest::collection::vec(-1.0f64..6.0, 0..200), rot in 0usize..200) {
            let edges = uniform_edges(0.0, 5.0, 10);
            let a = histogram(&xs, &edges).unwrap();
            prop_assert_eq!(a.total(), xs.len() as u64);
            if !xs.is_empty() {
                let k = rot % xs.len();
                xs.rotate_left(k);
                xs.reverse();
            }
            let b = histogram(&xs, &edges).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
