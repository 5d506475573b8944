pub mod algebra;
pub mod compiler;
pub mod dealer;
pub mod net;
pub mod runtime;
pub mod engine;
pub mod sharing;
pub mod vm;
