//! Hardware interface services: page math, area allocators, process
//! virtual memory construction, the system clock, and interrupt handler
//! state.

pub mod alloc;
pub mod handler;
pub mod paging;
pub mod sysclock;
pub mod vm;

pub use alloc::AreaAllocator;
pub use handler::InterruptHandler;
pub use sysclock::SystemClock;
pub use vm::{ProcessVirtualMemory, VirtualMemoryBlock};
