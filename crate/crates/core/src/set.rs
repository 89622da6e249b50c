//! Confidence-set algebra: sorted disjoint unions of closed intervals on the
//! extended real line.
//!
//! All estimators in this crate emit values of [`ConfidenceSet`]. Endpoints
//! are treated as closed throughout; membership of boundary points never
//! matters probabilistically, and closure keeps the tests deterministic.
//! Unbounded endpoints are the IEEE infinities, never large finite floats.

/// A nonempty closed interval `[lo, hi]`, possibly unbounded on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Panics on NaN endpoints or `lo > hi`; the estimators construct
    /// intervals from validated roots, so a violation is a logic error.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(!lo.is_nan() && !hi.is_nan(), "interval endpoint is NaN");
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Lebesgue width; infinite when either endpoint is infinite.
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }
}

/// A normalized union of closed intervals: sorted by lower endpoint,
/// pairwise disjoint, touching pieces merged. The empty set is the empty
/// union; the whole line is `[-inf, +inf]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet {
    intervals: Vec<Interval>,
}

impl ConfidenceSet {
    pub fn empty() -> Self {
        ConfidenceSet { intervals: Vec::new() }
    }

    pub fn all() -> Self {
        ConfidenceSet {
            intervals: vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        ConfidenceSet {
            intervals: vec![Interval::new(lo, hi)],
        }
    }

    /// Normalizes an arbitrary collection: sorts, merges overlapping and
    /// touching pieces.
    pub fn from_intervals(mut pieces: Vec<Interval>) -> Self {
        pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("no NaN endpoints"));
        let mut merged: Vec<Interval> = Vec::with_capacity(pieces.len());
        for piece in pieces {
            match merged.last_mut() {
                // Closed intervals touching at a point form one interval.
                Some(last) if piece.lo <= last.hi => {
                    if piece.hi > last.hi {
                        last.hi = piece.hi;
                    }
                }
                _ => merged.push(piece),
            }
        }
        ConfidenceSet { intervals: merged }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, x: f64) -> bool {
        // Binary search over sorted disjoint pieces.
        let mut lo = 0usize;
        let mut hi = self.intervals.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            let iv = &self.intervals[mid];
            if x < iv.lo {
                hi = mid;
            } else if x > iv.hi {
                lo = mid + 1;
            } else {
                return true;
            }
        }
        false
    }

    /// Total Lebesgue width: the sum of piece widths, infinite as soon as
    /// any endpoint is infinite, and 0.0 for the empty set.
    pub fn width(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum()
    }

    /// Smallest single interval containing the set, or `None` when empty.
    pub fn hull(&self) -> Option<Interval> {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(first), Some(last)) => Some(Interval::new(first.lo, last.hi)),
            _ => None,
        }
    }

    /// Exact set intersection of two normalized sets.
    pub fn intersect(&self, other: &ConfidenceSet) -> ConfidenceSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            if let Some(piece) = a.intersect(b) {
                out.push(piece);
            }
            // Drop whichever piece ends first; the other may still overlap
            // later pieces of the dropped side's set.
            if a.hi <= b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        // Pieces produced in order are disjoint except possibly for shared
        // single points; normalize to merge those.
        ConfidenceSet::from_intervals(out)
    }

    /// Complement in the extended real line, under the closed-endpoint
    /// convention: boundary points are kept on both sides, so complementing
    /// twice returns the original set whenever no pieces touch.
    pub fn complement(&self) -> ConfidenceSet {
        if self.intervals.is_empty() {
            return ConfidenceSet::all();
        }
        let mut out = Vec::new();
        let mut cursor = f64::NEG_INFINITY;
        // Normalization guarantees strict gaps between pieces, so every gap
        // [cursor, iv.lo] is a genuine interval.
        for iv in &self.intervals {
            if iv.lo > cursor {
                out.push(Interval::new(cursor, iv.lo));
            }
            cursor = iv.hi;
        }
        if cursor < f64::INFINITY {
            out.push(Interval::new(cursor, f64::INFINITY));
        }
        ConfidenceSet::from_intervals(out)
    }

    /// Set union of two normalized sets.
    pub fn union(&self, other: &ConfidenceSet) -> ConfidenceSet {
        let mut pieces = self.intervals.clone();
        pieces.extend_from_slice(&other.intervals);
        ConfidenceSet::from_intervals(pieces)
    }

    /// A short structural tag: "empty", "line", "interval" (single bounded
    /// piece), "ray" (single piece unbounded on one side), or "union{k}".
    pub fn kind(&self) -> String {
        match self.intervals.as_slice() {
            [] => "empty".to_string(),
            [iv] => {
                if iv.lo == f64::NEG_INFINITY && iv.hi == f64::INFINITY {
                    "line".to_string()
                } else if iv.lo == f64::NEG_INFINITY || iv.hi == f64::INFINITY {
                    "ray".to_string()
                } else {
                    "interval".to_string()
                }
            }
            many => format!("union{}", many.len()),
        }
    }
}
