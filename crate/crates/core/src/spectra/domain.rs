/// Whether `(w1, w2)` lies in the principal domain
/// `0 <= w2 <= w1 <= 1/2, 2 w1 <= 1 - w2`.
pub fn in_principal_domain(w1: f64, w2: f64) -> bool {
    0.0 <= w2 && w2 <= w1 && w1 <= 0.5 && 2.0 * w1 <= 1.0 - w2
}

/// Row-major `size x size` mask; entry `(j, k)` is `(omega_1, omega_2) =
/// (j / size, k / size)`. Evaluated in integer arithmetic.
pub fn principal_domain_mask(size: usize) -> Vec<bool> {
    let mut mask = vec![false; size * size];
    for j in 0..size {
        for k in 0..=j {
            if 2 * j <= size && 2 * j + k <= size {
                mask[j * size + k] = true;
            }
        }
    }
    mask
}
