//! Compiles the guide's code blocks as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/time-constants.md")]
pub mod time_constants {}
#[doc = include_str!("../../../book/src/perturbations.md")]
pub mod perturbations {}
#[doc = include_str!("../../../book/src/imperfections.md")]
pub mod imperfections {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/hardware-time.md")]
pub mod hardware_time {}
