use crate::dataset::{CategoryBag, Venue};

/// Cosine of two category count vectors. Empty bags give 0.
pub fn bag_cosine(a: &CategoryBag, b: &CategoryBag) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .map(|(label, n)| n as f64 * b.count(label) as f64)
        .sum();
    let sq = |bag: &CategoryBag| bag.iter().map(|(_, n)| (n as f64).powi(2)).sum::<f64>();
    (dot / (sq(a) * sq(b)).sqrt()).clamp(0.0, 1.0)
}

pub fn category_similarity(a: &Venue, b: &Venue) -> f64 {
    bag_cosine(&a.categories, &b.categories)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag(labels: &[&str]) -> CategoryBag {
        labels.iter().copied().collect()
    }

    #[test]
    fn golden_cases() {
        assert_eq!(bag_cosine(&bag(&["A", "B"]), &bag(&["A", "B"])), 1.0);
        assert_eq!(bag_cosine(&bag(&["A"]), &bag(&["B", "C"])), 0.0);
        assert_eq!(bag_cosine(&bag(&["A", "B"]), &bag(&["A", "C"])), 0.5);
        assert_eq!(bag_cosine(&bag(&[]), &bag(&["A"])), 0.0);
    }

    #[test]
    fn scale_invariant() {
        let a = bag(&["A", "A", "B"]);
        let mut scaled = CategoryBag::new();
        for (label, n) in a.iter() {
            scaled.add(label, n * 3);
        }
        let b = bag(&["A", "C"]);
        assert!((bag_cosine(&a, &b) - bag_cosine(&scaled, &b)).abs() < 1e-15);
    }
}
