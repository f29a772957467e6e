//! Module-level kernel: validated configuration, the cyclic partition
//! schedule, and the core kernel state that owns both.

pub mod config;
pub mod core;
pub mod frame;

pub use config::{ConfigError, ModuleConfig, PartitionConfig, WindowConfig};
pub use core::{CoreKernel, PartitionControlBlock, PartitionStatus};
pub use frame::{FrameWindow, MajorFrame};
