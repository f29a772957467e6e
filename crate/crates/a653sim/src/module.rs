//! The assembled machine: hardware, interrupt path, and both kernel
//! levels wired together behind one type.
//!
//! [`Module::new`] builds the powered-off machine from a validated
//! configuration; [`Module::boot`] brings it to the state where the core
//! idle process runs with interrupts enabled and every partition sits in
//! cold start. From there the machine is driven by time: [`Module::advance`]
//! moves the clocks and delivers the resulting clock-tick interrupt, whose
//! handler steps the partition scheduler. System calls enter through
//! [`Module::system_call`] on behalf of the current process of a partition.

use std::collections::BTreeMap;

use crate::his::paging;
use crate::his::{AreaAllocator, InterruptHandler, SystemClock};
use crate::hw::{
    ClockBank, InterruptController, MachineCpu, MainMemory, PageTable, PageTableRef,
};
use crate::kernel::{ConfigError, CoreKernel, ModuleConfig};
use crate::partition::{Completion, Env, PartitionKernel, SysCall, SysCallResult};
use crate::trace::{kv, TraceCategory, TraceLog};
use crate::types::*;

/// The whole simulated core module.
pub struct Module {
    pub config: ModuleConfig,
    pub constants: Constants,
    pub core: CoreKernel,
    pub partitions: BTreeMap<PartitionId, PartitionKernel>,
    /// Allocator for the kernel area, with the kernel image pre-reserved.
    pub kernel_allocator: AreaAllocator,
    /// One allocator per partition memory area.
    pub partition_allocators: BTreeMap<PartitionId, AreaAllocator>,
    /// The kernel's view of memory: every physical page mapped one-to-one
    /// at the kernel virtual base.
    pub kernel_page_table: PageTable,
    pub clock: ClockBank,
    pub sysclock: SystemClock,
    pub cpu: MachineCpu,
    pub handler: InterruptHandler,
    pub irq: InterruptController,
    pub memory: MainMemory,
    pub trace: TraceLog,
}

impl Module {
    /// Builds the machine from a configuration. The real-time clock starts
    /// at `base_time` nanoseconds; system time starts two tick intervals
    /// in the negative regardless.
    pub fn new(config: ModuleConfig, base_time: u64) -> Result<Module, ConfigError> {
        config.validate()?;
        let constants = config.constants.clone();
        let ps = constants.page_size;

        let memory = MainMemory::new(config.physical_memory.size, ps);
        let mut kernel_allocator =
            AreaAllocator::with_reserved(config.kernel_memory, &config.kernel_image, ps);

        let mut kernel_page_table = PageTable::new(ps);
        for page in paging::pages_of_block(&config.physical_memory, ps) {
            kernel_page_table.map(constants.kernel_virtual_base + page, page);
        }

        let interrupt_stack = kernel_allocator
            .alloc_block(constants.interrupt_stack_size())
            .ok_or(ConfigError::InterruptStackUnfit)?;
        let interrupt_stack_virtual = MemoryBlock::new(
            constants.kernel_virtual_base + interrupt_stack.start,
            interrupt_stack.size,
        );

        let core = CoreKernel::new(&config)?;
        let mut partitions = BTreeMap::new();
        let mut partition_allocators = BTreeMap::new();
        for (slot, part) in config.partitions.iter().enumerate() {
            let partid = (slot + 1) as PartitionId;
            partitions.insert(partid, PartitionKernel::new(partid, part));
            partition_allocators.insert(partid, AreaAllocator::new(part.memory, ps));
        }

        let tick = constants.tick_interval_raw();
        Ok(Module {
            constants: constants.clone(),
            core,
            partitions,
            kernel_allocator,
            partition_allocators,
            kernel_page_table,
            clock: ClockBank::new(base_time, tick),
            sysclock: SystemClock::new(base_time as Time, constants.clock_tick_interval),
            cpu: MachineCpu::new(),
            handler: InterruptHandler::new(interrupt_stack_virtual),
            irq: InterruptController::new(),
            memory,
            trace: TraceLog::new(),
            config,
        })
    }

    /// Power-on sequence: every partition to cold start at the maximum
    /// lock level, the core idle process onto the CPU, interrupts enabled.
    pub fn boot(&mut self) {
        self.core.start_partitions();
        let ctx = self.core.start();
        self.cpu.restore(ctx);
        self.cpu.enable_interrupts();
        self.trace.emit(
            self.clock.rt_value(),
            TraceCategory::Mode,
            vec![
                kv("boot", &self.config.module_name),
                kv("partitions", self.partitions.len()),
            ],
        );
    }

    pub fn partition(&self, partid: PartitionId) -> &PartitionKernel {
        self.partitions.get(&partid).expect("known partition")
    }

    pub fn partition_mut(&mut self, partid: PartitionId) -> &mut PartitionKernel {
        self.partitions.get_mut(&partid).expect("known partition")
    }

    /// Runs one system call in `partid` on behalf of its current process.
    pub fn system_call(&mut self, partid: PartitionId, call: SysCall) -> SysCallResult {
        let kernel = self.partitions.get_mut(&partid).expect("known partition");
        let caller = kernel.current_process();
        let allocator = self
            .partition_allocators
            .get_mut(&partid)
            .expect("known partition");
        let mut env = Env {
            core: &mut self.core,
            clock: &mut self.clock,
            sysclock: &mut self.sysclock,
            cpu: &mut self.cpu,
            handler: &mut self.handler,
            allocator,
            constants: &self.constants,
            trace: &mut self.trace,
        };
        kernel.system_call(caller, call, &mut self.memory, &mut env)
    }

    /// Collects the finished blocked calls of every partition, in
    /// partition order.
    pub fn drain_completions(&mut self) -> Vec<(PartitionId, Completion)> {
        let mut all = Vec::new();
        for (&partid, kernel) in self.partitions.iter_mut() {
            for completion in kernel.take_completions() {
                all.push((partid, completion));
            }
        }
        all
    }

    /// Advances all clocks by `dt` nanoseconds and services whatever
    /// fires. `dt` must not step over a timer firing, so it must be at
    /// most [`ClockBank::next_event_delta`].
    pub fn advance(&mut self, dt: u64) {
        if dt == 0 {
            return;
        }
        let events = self.clock.advance(dt);
        if events.any() {
            self.trace.emit(
                self.clock.rt_value(),
                TraceCategory::Tick,
                vec![kv("periodic", events.periodic), kv("alarm", events.hp_alarm)],
            );
            self.irq.raise(CLOCK_TICK_LINE);
            self.trace.emit(
                self.clock.rt_value(),
                TraceCategory::Irq,
                vec![kv("raise", CLOCK_TICK_LINE)],
            );
        }
        self.deliver_pending();
    }

    /// Advances to the next timer firing and services it. Returns how far
    /// the clocks moved.
    pub fn step(&mut self) -> u64 {
        let dt = self.clock.next_event_delta();
        self.advance(dt);
        dt
    }

    /// Runs the machine until the real-time clock reaches `until`.
    pub fn run_until(&mut self, until: u64) {
        while self.clock.rt_value() < until {
            let dt = (until - self.clock.rt_value()).min(self.clock.next_event_delta());
            self.advance(dt);
        }
    }

    /// Delivers pending interrupts while the CPU accepts them.
    pub fn deliver_pending(&mut self) {
        while self.cpu.interrupts_enabled() {
            let Some(line) = self.irq.deliverable() else {
                break;
            };
            self.irq.begin_service(line);
            self.trace.emit(
                self.clock.rt_value(),
                TraceCategory::Irq,
                vec![kv("deliver", line)],
            );
            if line == CLOCK_TICK_LINE {
                self.clock_tick_interrupt(line);
            } else {
                self.irq.complete(line);
                self.trace.emit(
                    self.clock.rt_value(),
                    TraceCategory::Irq,
                    vec![kv("spurious", line)],
                );
            }
        }
    }

    /// The clock-tick interrupt, end to end: handler entry, the service
    /// routine, end-of-interrupt, and the partition scheduler step.
    fn clock_tick_interrupt(&mut self, line: IrqLine) {
        // Entry: save the interrupted context, switch to the interrupt
        // stack under the kernel page table, re-enable interrupts.
        self.cpu.disable_interrupts();
        let interrupted = self.cpu.save_all_context();
        let (ss, sl, bp, sp) = self.handler.entry_stack_segment(&interrupted.regs);
        self.handler.push_context(interrupted);
        self.cpu.regs.ss = ss;
        self.cpu.regs.sl = sl;
        self.cpu.regs.bp = bp;
        self.cpu.regs.sp = sp;
        self.cpu.page_table = PageTableRef::Kernel;
        self.cpu.enable_interrupts();

        // Service routine: latch the interrupt time; on a whole tick
        // boundary, step system time.
        let hpt = self.clock.hp_value() as Time;
        self.sysclock.latch_interrupt_time(hpt);
        if hpt % self.constants.clock_tick_interval == 0 {
            self.sysclock.update();
            self.trace.emit(
                self.clock.rt_value(),
                TraceCategory::Tick,
                vec![
                    kv("system_time", self.sysclock.time()),
                    kv("count", self.sysclock.tick_counter()),
                ],
            );
        }

        // Exit: end-of-interrupt, then either unwind a nested handler or
        // hand control to the partition scheduler.
        self.cpu.disable_interrupts();
        self.irq.complete(line);
        self.trace.emit(
            self.clock.rt_value(),
            TraceCategory::Irq,
            vec![kv("complete", line)],
        );
        if self.handler.depth() > 1 {
            let ctx = self.handler.pop_context();
            self.cpu.restore(ctx);
            self.cpu.enable_interrupts();
            return;
        }
        self.partition_scheduler_step(hpt);
    }

    /// One step of the two-level scheduler: compare the partition the
    /// frame schedules now against the one that was running, and continue,
    /// suspend, or start accordingly.
    fn partition_scheduler_step(&mut self, hpt: Time) {
        let t = self.sysclock.time();
        let next = self.core.next_partition(t);
        let prev = self.core.current_partition;

        if next == prev {
            if prev == NULL_PARTITION_ID {
                let ctx = self.handler.pop_context();
                self.cpu.restore(ctx);
                self.cpu.enable_interrupts();
            } else {
                self.with_env(prev, |kernel, env| kernel.continue_execution(hpt, env));
            }
            return;
        }

        self.trace.emit(
            self.clock.rt_value(),
            TraceCategory::Sched,
            vec![kv("window", next), kv("at", t)],
        );
        if prev == NULL_PARTITION_ID {
            let ctx = self.handler.pop_context();
            self.core.suspend_idle(ctx);
        } else {
            self.with_env(prev, |kernel, env| kernel.suspend_execution(env));
        }
        self.core.current_partition = next;
        if next == NULL_PARTITION_ID {
            let ctx = self.core.resume_idle();
            self.cpu.restore(ctx);
            self.cpu.enable_interrupts();
            return;
        }
        match self.core.operating_mode(next) {
            OperatingMode::Idle => {
                self.with_env(next, |kernel, env| kernel.idle_execution(env));
            }
            OperatingMode::ColdStart | OperatingMode::WarmStart => {
                self.with_env(next, |kernel, env| kernel.prepare_execution(env));
            }
            OperatingMode::Normal => {
                self.with_env(next, |kernel, env| kernel.start_execution(t, env));
            }
        }
    }

    fn with_env<R>(
        &mut self,
        partid: PartitionId,
        f: impl FnOnce(&mut PartitionKernel, &mut Env) -> R,
    ) -> R {
        let kernel = self.partitions.get_mut(&partid).expect("known partition");
        let allocator = self
            .partition_allocators
            .get_mut(&partid)
            .expect("known partition");
        let mut env = Env {
            core: &mut self.core,
            clock: &mut self.clock,
            sysclock: &mut self.sysclock,
            cpu: &mut self.cpu,
            handler: &mut self.handler,
            allocator,
            constants: &self.constants,
            trace: &mut self.trace,
        };
        f(kernel, &mut env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{PartitionConfig, WindowConfig};
    use crate::partition::ServiceClass;

    const MS: Time = 1_000_000;

    fn two_partition_config() -> ModuleConfig {
        ModuleConfig {
            module_id: 1,
            module_name: "testmod".to_string(),
            constants: Constants::default(),
            physical_memory: MemoryBlock::new(0, 1 << 24),
            kernel_memory: MemoryBlock::new(0, 1 << 22),
            kernel_image: MemoryBlock::new(0, 1 << 20),
            partitions: vec![
                PartitionConfig {
                    name: "alpha".to_string(),
                    memory: MemoryBlock::new(1 << 22, 1 << 23),
                    period: 4 * MS,
                    duration: MS,
                    total_process: 8,
                },
                PartitionConfig {
                    name: "beta".to_string(),
                    memory: MemoryBlock::new(
                        (1 << 22) + (1 << 23),
                        (1 << 24) - (1 << 22) - (1 << 23),
                    ),
                    period: 2 * MS,
                    duration: MS,
                    total_process: 8,
                },
            ],
            windows: vec![
                WindowConfig { partition: "beta".to_string(), periodic_start: true },
                WindowConfig { partition: "alpha".to_string(), periodic_start: true },
                WindowConfig { partition: "beta".to_string(), periodic_start: false },
            ],
        }
    }

    fn booted() -> Module {
        let mut module = Module::new(two_partition_config(), 0).unwrap();
        module.boot();
        module
    }

    #[test]
    fn boot_leaves_core_idle_running_and_partitions_cold() {
        let module = booted();
        assert_eq!(module.core.current_process, IDLE_PROCESS_ID);
        assert_eq!(module.core.current_partition, NULL_PARTITION_ID);
        assert!(module.cpu.interrupts_enabled());
        assert_eq!(module.cpu.page_table, PageTableRef::Kernel);
        for pcb in module.core.partition_table.values() {
            assert_eq!(pcb.operating_mode, OperatingMode::ColdStart);
            assert_eq!(pcb.lock_level, module.core.max_lock_level());
        }
        assert_eq!(module.sysclock.time(), -2 * MS);
    }

    #[test]
    fn system_time_crosses_zero_on_the_second_tick() {
        let mut module = booted();
        module.step();
        assert_eq!(module.sysclock.time(), -MS);
        assert_eq!(module.core.current_partition, NULL_PARTITION_ID);
        module.step();
        assert_eq!(module.sysclock.time(), 0);
    }

    #[test]
    fn first_window_prepares_the_cold_partition() {
        let mut module = booted();
        module.run_until(2 * MS as u64);
        // At system time zero the frame schedules beta (partition 2).
        assert_eq!(module.core.current_partition, 2);
        let beta = module.partition(2);
        assert_eq!(beta.service(), Some(ServiceClass::Setup));
        assert_eq!(beta.current_process(), IDLE_PROCESS_ID);
        assert_eq!(module.clock.hp_value(), 0);
        // The partition idle process is a kernel-space process.
        assert_eq!(module.cpu.page_table, PageTableRef::Kernel);
    }

    #[test]
    fn window_switches_park_the_outgoing_partition() {
        let mut module = booted();
        module.run_until(3 * MS as u64);
        assert_eq!(module.core.current_partition, 1);
        assert_eq!(module.clock.hp_value(), 0);
        let beta = module.partition(2);
        assert_eq!(beta.service(), None);
        let alpha = module.partition(1);
        assert_eq!(alpha.service(), Some(ServiceClass::Setup));
    }

    #[test]
    fn schedule_gap_returns_to_the_core_idle_process() {
        let mut module = booted();
        module.run_until(5 * MS as u64);
        // System time 3 ms falls in the gap after beta's second window.
        assert_eq!(module.core.current_partition, NULL_PARTITION_ID);
        assert_eq!(module.cpu.page_table, PageTableRef::Kernel);
        assert!(module.cpu.interrupts_enabled());
        assert_eq!(module.handler.depth(), 0);
    }

    #[test]
    fn handler_contexts_balance_across_a_full_frame() {
        let mut module = booted();
        module.run_until(10 * MS as u64);
        assert_eq!(module.handler.depth(), 0);
        assert!(module.cpu.interrupts_enabled());
    }
}
