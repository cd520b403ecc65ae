use super::Tensor;

/// `sqrt` of the summed squares of every element of every tensor.
pub fn global_norm(tensors: &[Tensor]) -> f64 {
    libm::sqrt(tensors.iter().map(Tensor::sum_sq).sum())
}

/// Rescales all gradients jointly so their global norm is at most
/// `max_norm`. Returns the norm measured before clipping.
pub fn global_norm_clip(gradients: &mut [Tensor], max_norm: f64) -> f64 {
    let norm = global_norm(gradients);
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in gradients.iter_mut() {
            for v in g.data_mut() {
                *v = (f64::from(*v) * scale) as f32;
            }
        }
    }
    norm
}
