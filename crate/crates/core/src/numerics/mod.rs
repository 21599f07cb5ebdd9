//! Dense tensors, a reverse-mode tape, Adam, and checkpoint files.

mod adam;
mod checkpoint;
pub mod gradcheck;
mod tape;
mod tensor;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use checkpoint::{config_hash, read_checkpoint, write_checkpoint, Checkpoint, CheckpointManifest, ParamEntry};
pub use tape::{Binary, LossKind, Reduce, Tape, Unary, Var, COSINE_EPS, LAYER_NORM_EPS, RANGE_EPS};
pub use tensor::Tensor;

/// `1 - cos(a, b)`. The flag is set when either norm is (near) zero, in
/// which case the distance is defined as 1.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> (f64, bool) {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na * nb < COSINE_EPS {
        (1.0, true)
    } else {
        ((1.0 - dot / (na * nb)).clamp(0.0, 2.0), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_fixtures() {
        assert!(cosine_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).0.abs() < 1e-15);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 5.0]), (1.0, false));
        assert!((cosine_distance(&[1.0, -2.0], &[-1.0, 2.0]).0 - 2.0).abs() < 1e-15);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[1.0, 1.0]), (1.0, true));
    }
}
