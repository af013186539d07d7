//! Shannon entropy and participation number of probability vectors.

/// `-Σ w log2 w`, with `0 log 0 = 0`.
pub fn shannon_bits<I: IntoIterator<Item = f64>>(weights: I) -> f64 {
    -weights.into_iter().filter(|w| *w > 0.0).map(|w| w * w.log2()).sum::<f64>()
}

/// `(Σ w²)^-1`.
pub fn participation<I: IntoIterator<Item = f64>>(weights: I) -> f64 {
    1.0 / weights.into_iter().map(|w| w * w).sum::<f64>()
}
