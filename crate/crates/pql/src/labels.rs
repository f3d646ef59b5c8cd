//! Label similarity and vocabulary-scoped expansion.

use std::collections::BTreeSet;

/// Scores are compared with this slack so that a calibrated threshold such as
/// `0.625` is not lost to rounding.
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelError {
    #[error("empty label")]
    EmptyLabel,
    #[error("similarity threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
}

/// Trimmed, case-folded, whitespace-collapsed form used for scoring.
pub fn normalize(label: &str) -> String {
    label
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// `1 - lev(a, b) / max(|a|, |b|)` over the normalized strings.
pub fn similarity(a: &str, b: &str) -> Result<f64, LabelError> {
    let (na, nb) = (normalize(a), normalize(b));
    if na.is_empty() || nb.is_empty() {
        return Err(LabelError::EmptyLabel);
    }
    Ok(strsim::normalized_levenshtein(&na, &nb))
}

pub fn check_threshold(threshold: f64) -> Result<(), LabelError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(LabelError::InvalidThreshold(threshold))
    }
}

/// Set of observable labels in some scope.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    labels: BTreeSet<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty strings are skipped; they are never observable.
    pub fn insert(&mut self, label: impl Into<String>) {
        let label = label.into();
        if !label.is_empty() {
            self.labels.insert(label);
        }
    }

    pub fn extend<I: IntoIterator<Item = S>, S: Into<String>>(&mut self, labels: I) {
        for l in labels {
            self.insert(l);
        }
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }
}

impl<S: Into<String>> FromIterator<S> for Vocabulary {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut v = Vocabulary::new();
        v.extend(iter);
        v
    }
}

/// `{l in vocab ∪ {label} : similarity(label, l) >= threshold}`.
pub fn similar(
    label: &str,
    threshold: f64,
    vocab: &Vocabulary,
) -> Result<BTreeSet<String>, LabelError> {
    check_threshold(threshold)?;
    let key = normalize(label);
    if key.is_empty() {
        return Err(LabelError::EmptyLabel);
    }
    let mut out = BTreeSet::from([label.to_string()]);
    for l in vocab.labels() {
        let other = normalize(l);
        if !other.is_empty() && strsim::normalized_levenshtein(&key, &other) + SLACK >= threshold {
            out.insert(l.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scores() {
        assert_eq!(
            similarity("Clear differences", "Clear differences").unwrap(),
            1.0
        );
        assert!((similarity("abc", "abd").unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(similarity("a", "bcd").unwrap(), 0.0);
        assert_eq!(
            similarity("  Check   Invoice ", "check invoice").unwrap(),
            1.0
        );
        assert_eq!(similarity("", "x"), Err(LabelError::EmptyLabel));
        assert_eq!(similarity("  ", "x"), Err(LabelError::EmptyLabel));
    }

    #[test]
    fn payment_variants_need_threshold_0_6() {
        let vocab: Vocabulary = ["process payment by cash", "process payment by check"]
            .into_iter()
            .collect();
        // 15 vs 23 and 24 characters: 1 - 8/23 and 1 - 9/24.
        assert!(
            (similarity("process payment", "process payment by cash").unwrap() - 15.0 / 23.0).abs()
                < 1e-12
        );
        assert!(
            (similarity("process payment", "process payment by check").unwrap() - 0.625).abs()
                < 1e-12
        );
        assert_eq!(
            similar("process payment", 0.75, &vocab).unwrap(),
            BTreeSet::from(["process payment".to_string()])
        );
        let wide = similar("process payment", 0.6, &vocab).unwrap();
        assert_eq!(wide.len(), 3);
        assert_eq!(similar("process payment", 0.625, &vocab).unwrap().len(), 3);
    }

    #[test]
    fn clear_differences_variants() {
        let vocab: Vocabulary = [
            "Clear differences WM",
            "Clear differences IM",
            "Update inventory",
        ]
        .into_iter()
        .collect();
        assert!(
            (similarity("Clear differences", "Clear differences WM").unwrap() - 0.85).abs() < 1e-12
        );
        let got = similar("Clear differences", 0.75, &vocab).unwrap();
        let want: BTreeSet<String> = [
            "Clear differences",
            "Clear differences IM",
            "Clear differences WM",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn trivial_thresholds() {
        let vocab: Vocabulary = ["A", "b", "zz"].into_iter().collect();
        assert_eq!(
            similar("a", 1.0, &vocab).unwrap(),
            BTreeSet::from(["A".to_string(), "a".to_string()])
        );
        assert_eq!(similar("x", 0.0, &vocab).unwrap().len(), 4);
        assert_eq!(
            similar("x", 1.5, &vocab),
            Err(LabelError::InvalidThreshold(1.5))
        );
        assert_eq!(
            similar("x", -0.1, &vocab),
            Err(LabelError::InvalidThreshold(-0.1))
        );
    }

    fn label() -> impl Strategy<Value = String> {
        "[a-d ]{0,3}[a-d][a-d ]{0,6}"
    }

    proptest! {
        #[test]
        fn similarity_laws(a in label(), b in label()) {
            let s = similarity(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s, similarity(&b, &a).unwrap());
            prop_assert_eq!(similarity(&a, &a).unwrap(), 1.0);
        }

        #[test]
        fn similar_is_monotone(l in label(), vocab in proptest::collection::vec(label(), 0..8), t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0) {
            let v: Vocabulary = vocab.into_iter().collect();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let wide = similar(&l, lo, &v).unwrap();
            let narrow = similar(&l, hi, &v).unwrap();
            prop_assert!(narrow.is_subset(&wide));
            prop_assert!(narrow.contains(&l));
        }
    }
}
