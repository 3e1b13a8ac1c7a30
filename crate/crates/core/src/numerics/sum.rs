/// Pairwise (cascade) summation in a fixed tree order.
///
/// The split points depend only on the slice length, so the result is
/// bit-for-bit reproducible on a given platform regardless of how the
/// summands were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
