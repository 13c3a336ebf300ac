//! Retention and Uniqueness over token-trigram sets, the evolutionary-period
//! statistic, and the family-size histogram.
//!
//! Retention measures how much of a variant is still the seed; Uniqueness
//! measures how much of a variant appears nowhere else in its family. Both are
//! per-variant fractions averaged over the family. Empty trigram sets use fixed
//! conventions (retention 1.0, uniqueness 0.0) so that empty files never
//! inflate divergence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::TrigramSet;

const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("family metrics need at least one variant")]
    EmptyVariantSet,
}

/// Per-family divergence summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMetrics {
    pub retention: f64,
    pub uniqueness: f64,
    pub evolution_period_years: f64,
    pub variant_count: usize,
}

/// Fraction of `v`'s trigrams that also occur in the seed `s`.
///
/// An empty variant vacuously retains everything: 1.0.
pub fn retention_f(v: &TrigramSet, s: &TrigramSet) -> f64 {
    if v.is_empty() {
        return 1.0;
    }
    v.intersection_count(s) as f64 / v.len() as f64
}

/// Mean of [`retention_f`] over all variants.
pub fn retention_family(variants: &[TrigramSet], s: &TrigramSet) -> Result<f64, MetricsError> {
    if variants.is_empty() {
        return Err(MetricsError::EmptyVariantSet);
    }
    let sum: f64 = variants.iter().map(|v| retention_f(v, s)).sum();
    Ok(sum / variants.len() as f64)
}

/// Fraction of `v`'s trigrams found in none of `others`.
///
/// An empty variant contributes nothing unique: 0.0.
pub fn uniqueness_u(v: &TrigramSet, others: &[&TrigramSet]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let only_here = v
        .iter()
        .filter(|t| others.iter().all(|f| !f.contains(t)))
        .count();
    only_here as f64 / v.len() as f64
}

/// Mean over each variant `v` of `uniqueness_u(v, {s} ∪ variants \ {v})`.
pub fn uniqueness_family(variants: &[TrigramSet], s: &TrigramSet) -> Result<f64, MetricsError> {
    if variants.is_empty() {
        return Err(MetricsError::EmptyVariantSet);
    }
    let mut sum = 0.0;
    for (i, v) in variants.iter().enumerate() {
        let mut others: Vec<&TrigramSet> = vec![s];
        others.extend(
            variants
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, f)| f),
        );
        sum += uniqueness_u(v, &others);
    }
    Ok(sum / variants.len() as f64)
}

/// Span in years from the earliest seed-introduction commit to the latest
/// relevant commit across the given (intro time, last change time) pairs.
pub fn evolution_period(spans: &[(i64, i64)]) -> f64 {
    let earliest = spans.iter().map(|(intro, _)| *intro).min();
    let latest = spans.iter().map(|(_, last)| *last).max();
    match (earliest, latest) {
        (Some(a), Some(b)) if b > a => (b - a) as f64 / SECONDS_PER_YEAR,
        _ => 0.0,
    }
}

/// Exact histogram of family sizes, ascending by size.
pub fn family_size_distribution(sizes: impl IntoIterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut counts = std::collections::BTreeMap::new();
    for size in sizes {
        *counts.entry(size).or_insert(0usize) += 1;
    }
    counts.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::Trigram;

    fn set(items: &[(&str, &str, &str)]) -> TrigramSet {
        items
            .iter()
            .map(|(a, b, c)| ((*a).to_string(), (*b).to_string(), (*c).to_string()) as Trigram)
            .collect()
    }

    fn tags(n: usize, prefix: &str) -> TrigramSet {
        (0..n)
            .map(|i| {
                (
                    format!("{prefix}{i}"),
                    format!("{prefix}{i}b"),
                    format!("{prefix}{i}c"),
                )
            })
            .collect()
    }

    #[test]
    fn retention_identity_and_disjoint() {
        let v = tags(5, "t");
        assert_eq!(retention_f(&v, &v), 1.0);
        let s = tags(5, "s");
        assert_eq!(retention_f(&v, &s), 0.0);
    }

    #[test]
    fn retention_half_overlap() {
        // v has 4 trigrams, s holds exactly 2 of them
        let v = set(&[("a", "b", "c"), ("b", "c", "d"), ("c", "d", "e"), ("d", "e", "f")]);
        let s = set(&[("a", "b", "c"), ("b", "c", "d"), ("x", "y", "z")]);
        assert_eq!(retention_f(&v, &s), 0.5);
    }

    #[test]
    fn empty_variant_conventions() {
        let empty = TrigramSet::new();
        let s = tags(3, "s");
        assert_eq!(retention_f(&empty, &s), 1.0);
        assert_eq!(uniqueness_u(&empty, &[&s]), 0.0);
    }

    #[test]
    fn retention_family_is_the_mean() {
        let s = tags(4, "s");
        let full = s.clone();
        let none = tags(4, "v");
        assert_eq!(retention_family(&[full.clone()], &s).unwrap(), 1.0);
        assert_eq!(retention_family(&[full, none], &s).unwrap(), 0.5);
        assert_eq!(
            retention_family(&[], &s),
            Err(MetricsError::EmptyVariantSet)
        );
    }

    #[test]
    fn uniqueness_two_of_five_unseen() {
        let mut v = tags(3, "shared");
        v.insert(("uniq".into(), "a".into(), "b".into()));
        v.insert(("uniq".into(), "c".into(), "d".into()));
        let other = tags(3, "shared");
        assert_eq!(uniqueness_u(&v, &[&other]), 0.4);
    }

    #[test]
    fn uniqueness_family_identities() {
        let s = tags(4, "s");
        // every variant identical: nothing unique anywhere
        let vs = vec![s.clone(), s.clone(), s.clone()];
        assert_eq!(uniqueness_family(&vs, &s).unwrap(), 0.0);
        // single variant equal to seed
        assert_eq!(uniqueness_family(&[s.clone()], &s).unwrap(), 0.0);
        // pairwise disjoint and disjoint from the seed
        let vs = vec![tags(3, "p"), tags(3, "q"), tags(3, "r")];
        assert_eq!(uniqueness_family(&vs, &s).unwrap(), 1.0);
    }

    #[test]
    fn evolution_period_examples() {
        // single-commit family
        assert_eq!(evolution_period(&[(1_000, 1_000)]), 0.0);
        // two-year planted spread
        let t0 = 1_420_070_400i64;
        let t1 = t0 + (2.0 * SECONDS_PER_YEAR) as i64;
        let years = evolution_period(&[(t0, t1)]);
        assert!((years - 2.0).abs() < 0.01, "got {years}");
        // 146.1 days is 0.4 years
        let t2 = t0 + (146.1 * 86_400.0) as i64;
        let years = evolution_period(&[(t0, t2)]);
        assert!((years - 0.4).abs() < 0.001, "got {years}");
    }

    #[test]
    fn size_distribution_examples() {
        assert_eq!(family_size_distribution([2, 2, 3]), vec![(2, 2), (3, 1)]);
        assert_eq!(family_size_distribution([]), vec![]);
    }
}
