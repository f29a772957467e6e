//! Deterministic discrete-event simulator of an avionics core module with
//! ARINC 653 style time and space partitioning.
//!
//! The simulated machine is built from four layers:
//!
//! * [`hw`]: a minimal CPU register file, paged memory, a real-time clock
//!   with a periodic tick timer and a one-shot high-precision alarm, and a
//!   priority interrupt controller.
//! * [`his`]: the hardware-independent services: page-granular allocators,
//!   process virtual memory construction, the system clock, and the
//!   interrupt handler that drives everything off the clock tick.
//! * [`kernel`] and [`partition`]: the two-level scheduler. The core kernel
//!   owns the fixed frame of partition windows; each partition kernel owns
//!   its process table, ready queue, time counters, and system calls.
//! * [`apex`]: the application-facing process management services, a guard
//!   layer that validates requests and maps them onto system calls.
//!
//! The [`module`] type ties the layers into one machine, and [`sim`] runs
//! scripted scenarios against it, producing an event trace, state dumps, and
//! invariant checks. Everything is deterministic: same config and scenario,
//! same bytes out.

pub mod apex;
pub mod his;
pub mod hw;
pub mod kernel;
pub mod module;
pub mod partition;
pub mod trace;
pub mod types;
