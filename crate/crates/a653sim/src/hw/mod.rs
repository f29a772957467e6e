//! Hardware layer: CPU register file and contexts, paged physical memory,
//! address translation, clocks, and the interrupt controller.

pub mod clock;
pub mod cpu;
pub mod irq;
pub mod memory;
pub mod mmu;

pub use clock::{ClockBank, ClockEvents};
pub use cpu::{Context, CpuRegisters, MachineCpu, PageTableRef};
pub use irq::InterruptController;
pub use memory::{MainMemory, PageContent};
pub use mmu::PageTable;
