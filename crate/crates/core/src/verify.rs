//! placeholder
pub struct NumericCheckConfig<F>(pub F);
