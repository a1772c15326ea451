pub(crate) use alloc::boxed::Box;
pub(crate) use alloc::format;
pub(crate) use alloc::string::{String, ToString};
pub(crate) use alloc::vec;
pub(crate) use alloc::vec::Vec;

// Float methods (ln, exp, sqrt, ...) come from libm when std is absent.
#[cfg(not(feature = "std"))]
pub(crate) use num_traits::Float;
