/// A model's learnable state viewed as named flat blocks, in a fixed order.
///
/// Gradients use the same type as the parameters, so optimizers and the
/// gradient checker can walk both in lockstep.
pub trait ParamSet: Clone {
    fn block_names(&self) -> Vec<String>;

    fn blocks(&self) -> Vec<&[f64]>;

    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;

    /// Same shapes, every value zero.
    fn zeros_like(&self) -> Self;

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}
