use std::fmt;

/// Multiset of places, stored densely by place index.
///
/// Absent indices count as zero, so markings of different lengths compare
/// through [`Marking::normalized`] rather than `==`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn empty(places: usize) -> Self {
        Marking(vec![0; places])
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Marking(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn get(&self, place: usize) -> u32 {
        self.0.get(place).copied().unwrap_or(0)
    }

    pub fn set(&mut self, place: usize, count: u32) {
        if place >= self.0.len() {
            self.0.resize(place + 1, 0);
        }
        self.0[place] = count;
    }

    pub fn add(&mut self, place: usize, count: u32) {
        let c = self.get(place);
        self.set(place, c + count);
    }

    /// Multiset union `self ⊎ other`.
    pub fn union(&self, other: &Marking) -> Marking {
        let n = self.0.len().max(other.0.len());
        Marking((0..n).map(|p| self.get(p) + other.get(p)).collect())
    }

    /// Multiset difference `self \ other`, floored at zero.
    pub fn difference(&self, other: &Marking) -> Marking {
        let n = self.0.len().max(other.0.len());
        Marking(
            (0..n)
                .map(|p| self.get(p).saturating_sub(other.get(p)))
                .collect(),
        )
    }

    /// Total number of tokens.
    pub fn cardinality(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    /// `self(p) >= other(p)` for every place.
    pub fn covers(&self, other: &Marking) -> bool {
        let n = self.0.len().max(other.0.len());
        (0..n).all(|p| self.get(p) >= other.get(p))
    }

    /// Covers `other` and differs from it somewhere.
    pub fn strictly_covers(&self, other: &Marking) -> bool {
        self.covers(other) && self.normalized() != other.normalized()
    }

    /// Marked places in index order, each once.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(p, _)| p)
    }

    /// Copy with trailing zero entries removed.
    pub fn normalized(&self) -> Marking {
        let mut v = self.0.clone();
        while v.last() == Some(&0) {
            v.pop();
        }
        Marking(v)
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        let mut first = true;
        for (p, &c) in self.0.iter().enumerate() {
            for _ in 0..c {
                if !first {
                    write!(f, ",")?;
                }
                write!(f, "p{p}")?;
                first = false;
            }
        }
        write!(f, "]")
    }
}
