//! Partition-level kernels: per-partition process tables, ready and
//! waiting queues, time counters, the process scheduler, and the system
//! call interface offered to application code.

mod kernel;
mod pcb;
mod queues;
mod syscalls;

pub use kernel::{Env, PartitionKernel, ServiceClass};
pub use pcb::{ProcessAttribute, ProcessControlBlock, ProcessStatus};
pub use queues::{TimeCounter, TimeCounterQueue};
pub use syscalls::{
    Completion, CompletionOutcome, CreateProcessArgs, SysCall, SysCallGroup, SysCallOutput,
    SysCallResult,
};
