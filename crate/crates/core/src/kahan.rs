/// Compensated accumulator (Neumaier's variant of Kahan summation).
///
/// Long streams accumulate many terms of wildly different magnitude
/// (for example tiny `lambda_t^2` products next to large running sums);
/// the compensation term recovers the low-order bits a naive `+=` drops.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        // The branch picks whichever operand survived rounding as the
        // larger one, so the subtraction below is exact.
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// The compensated total.
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_well_conditioned_data_exactly() {
        let mut s = NeumaierSum::new();
        for x in [1.0, 2.0, 3.5, -0.5] {
            s.add(x);
        }
        assert_eq!(s.value(), 6.0);
    }

    #[test]
    fn recovers_catastrophic_cancellation() {
        // Naive summation returns 0 here: 1e100 absorbs both 1.0 terms.
        let mut s = NeumaierSum::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn tracks_many_small_terms() {
        // 10^7 copies of 0.1; exact value 10^6. Naive drift is ~1e-8 here,
        // the compensated result is correct to the last bit.
        let mut s = NeumaierSum::new();
        for _ in 0..10_000_000u64 {
            s.add(0.1);
        }
        assert_eq!(s.value(), 1.0e6);
    }

    #[test]
    fn from_iterator_matches_manual_fold() {
        let xs = [3.25, -1.5, 1e-3, 7.0];
        let folded: NeumaierSum = xs.iter().copied().collect();
        let mut manual = NeumaierSum::new();
        for &x in &xs {
            manual.add(x);
        }
        assert_eq!(folded.value(), manual.value());
    }
}
