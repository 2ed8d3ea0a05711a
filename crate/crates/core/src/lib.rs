pub mod bits;
pub mod cli;
pub mod codec;
pub mod experiments;
pub mod info;
pub mod machine;
pub mod quantum;
