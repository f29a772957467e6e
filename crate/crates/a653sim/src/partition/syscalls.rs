//! The system call interface of a partition kernel.
//!
//! A call always runs on behalf of the partition's current process. Entry
//! saves the caller's user context (general-purpose registers zeroed in
//! the copy) and moves the CPU onto the caller's kernel stack under the
//! kernel page table. The routine then runs to its end; if it displaced
//! the caller (blocked it or let something better run), the result is
//! parked and delivered as a [`Completion`] when the caller is next
//! dispatched. Mode changes and stopping yourself never return through
//! the call path at all.

use std::collections::BTreeSet;

use crate::his::{paging, ProcessVirtualMemory};
use crate::hw::{MainMemory, PageTableRef};
use crate::kernel::PartitionStatus;
use crate::trace::{kv, TraceCategory};
use crate::types::{
    LockLevel, MemoryBlock, OperatingMode, Priority, ProcessId, ProcessKind, ProcessState, Time,
    ExecutableImage, MIN_LOCK_LEVEL, NULL_PROCESS_ID,
};

use super::kernel::{Env, PartitionKernel, ServiceClass};
use super::pcb::{ProcessControlBlock, ProcessStatus};

/// Arguments to the process creation call. The image has already been
/// resolved; the kernel only needs its piece sizes.
#[derive(Clone, Debug)]
pub struct CreateProcessArgs {
    pub attribute: super::pcb::ProcessAttribute,
    pub exe_path: String,
    pub swap_path: String,
    pub image: ExecutableImage,
}

/// A system call with its arguments.
#[derive(Clone, Debug)]
pub enum SysCall {
    GetOperatingMode,
    GetPartitionStatus,
    SetOperatingMode(OperatingMode),
    GetProcessNames,
    GetProcessIds,
    GetFreeProcessIds,
    GetFreeSpace,
    GetPartitionPeriod,
    GetProcessState(ProcessId),
    GetNextPeriodicStart,
    GetDelayedPeriodicStart(Time),
    GetProcessKind(ProcessId),
    GetProcessPeriod(ProcessId),
    GetProcessTimeCapacity(ProcessId),
    GetPartitionLockLevel,
    GetProcessId(String),
    GetProcessStatus(ProcessId),
    CreateProcess(Box<CreateProcessArgs>),
    SetPriority(ProcessId, Priority),
    SuspendSelf { partition_time: Time, delay: Time },
    Suspend(ProcessId),
    Resume(ProcessId),
    StopSelf,
    Stop(ProcessId),
    Start {
        process: ProcessId,
        release: Time,
        deadline: Time,
        mode: OperatingMode,
    },
    DelayedStart {
        process: ProcessId,
        release: Time,
        delay: Time,
        deadline: Time,
        mode: OperatingMode,
    },
    LockPreemption,
    UnlockPreemption,
    GetMyId,
    GetCurrentTime,
    GetNextReleasePoint(ProcessId),
    TimedWait { partition_time: Time, delay: Time },
    PeriodicWait { release: Time, deadline: Time },
    GetTime,
    Replenish { current_time: Time, budget: Time },
    GetPartitionTime,
}

/// Service class grouping: which calls a partition offers depends on its
/// life stage. The setup stage omits the time group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SysCallGroup {
    Partition,
    Process,
    Time,
}

impl SysCall {
    pub fn group(&self) -> SysCallGroup {
        use SysCall::*;
        match self {
            GetOperatingMode | GetPartitionStatus | SetOperatingMode(_) => SysCallGroup::Partition,
            GetProcessNames | GetProcessIds | GetFreeProcessIds | GetFreeSpace
            | GetPartitionPeriod | GetProcessState(_) | GetNextPeriodicStart
            | GetDelayedPeriodicStart(_) | GetProcessKind(_) | GetProcessPeriod(_)
            | GetProcessTimeCapacity(_) | GetPartitionLockLevel | GetProcessId(_)
            | GetProcessStatus(_) | CreateProcess(_) | SetPriority(..) | SuspendSelf { .. }
            | Suspend(_) | Resume(_) | StopSelf | Stop(_) | Start { .. } | DelayedStart { .. }
            | LockPreemption | UnlockPreemption | GetMyId => SysCallGroup::Process,
            GetCurrentTime | GetNextReleasePoint(_) | TimedWait { .. } | PeriodicWait { .. }
            | GetTime | Replenish { .. } | GetPartitionTime => SysCallGroup::Time,
        }
    }

    pub fn name(&self) -> &'static str {
        use SysCall::*;
        match self {
            GetOperatingMode => "get_operating_mode",
            GetPartitionStatus => "get_partition_status",
            SetOperatingMode(_) => "set_operating_mode",
            GetProcessNames => "get_process_names",
            GetProcessIds => "get_process_ids",
            GetFreeProcessIds => "get_free_process_ids",
            GetFreeSpace => "get_free_space",
            GetPartitionPeriod => "get_partition_period",
            GetProcessState(_) => "get_process_state",
            GetNextPeriodicStart => "get_next_periodic_start",
            GetDelayedPeriodicStart(_) => "get_delayed_periodic_start",
            GetProcessKind(_) => "get_process_kind",
            GetProcessPeriod(_) => "get_process_period",
            GetProcessTimeCapacity(_) => "get_process_time_capacity",
            GetPartitionLockLevel => "get_partition_lock_level",
            GetProcessId(_) => "get_process_id",
            GetProcessStatus(_) => "get_process_status",
            CreateProcess(_) => "create_process",
            SetPriority(..) => "set_priority",
            SuspendSelf { .. } => "suspend_self",
            Suspend(_) => "suspend",
            Resume(_) => "resume",
            StopSelf => "stop_self",
            Stop(_) => "stop",
            Start { .. } => "start",
            DelayedStart { .. } => "delayed_start",
            LockPreemption => "lock_preemption",
            UnlockPreemption => "unlock_preemption",
            GetMyId => "get_my_id",
            GetCurrentTime => "get_current_time",
            GetNextReleasePoint(_) => "get_next_release_point",
            TimedWait { .. } => "timed_wait",
            PeriodicWait { .. } => "periodic_wait",
            GetTime => "get_time",
            Replenish { .. } => "replenish",
            GetPartitionTime => "get_partition_time",
        }
    }
}

/// What a call produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SysCallOutput {
    None,
    Mode(OperatingMode),
    PartitionStatus(PartitionStatus),
    Names(Vec<String>),
    Ids(Vec<ProcessId>),
    FreeSpace { continuous: u64, discontinuous: u64 },
    Time(Time),
    LockLevel(LockLevel),
    State(ProcessState),
    Kind(ProcessKind),
    Process(ProcessId),
    Status(ProcessStatus),
    Flag(bool),
    /// Process creation could not get memory or a free id.
    AllocationFailed,
}

/// How a call came back to its issuer.
#[derive(Clone, Debug)]
pub enum SysCallResult {
    /// Ran to the end with the caller still on the CPU; the caller has
    /// the result in hand.
    Completed(SysCallOutput),
    /// The caller was displaced. The result arrives as a [`Completion`]
    /// when it is next dispatched.
    Parked,
    /// This call never returns through the call path: mode changes and
    /// stopping yourself.
    NoReturn,
    /// The current service class does not offer the call. The caller
    /// stays wedged in the kernel until something schedules past it.
    Refused,
}

/// A call that finished while its caller was off the CPU.
#[derive(Clone, Debug)]
pub struct Completion {
    pub process: ProcessId,
    pub outcome: CompletionOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompletionOutcome {
    Finished(SysCallOutput),
    /// A partition restart destroyed the blocked call.
    Aborted,
}

/// Bookkeeping for a displaced call.
#[derive(Clone, Debug)]
pub struct ParkedCall {
    resolution: ParkedResolution,
}

#[derive(Clone, Debug)]
enum ParkedResolution {
    /// The output was fixed when the routine ended.
    Fixed(SysCallOutput),
    /// A suspension waiting on a resume (true) or timeout (false)
    /// signal; the first signal wins.
    AwaitSignal(Option<bool>),
}

impl ParkedCall {
    fn fixed(output: SysCallOutput) -> Self {
        ParkedCall {
            resolution: ParkedResolution::Fixed(output),
        }
    }

    fn awaiting(initial: Option<bool>) -> Self {
        ParkedCall {
            resolution: ParkedResolution::AwaitSignal(initial),
        }
    }

    /// Deliver a resume/timeout signal; only the first one counts.
    pub(crate) fn signal(&mut self, resumed: bool) {
        if let ParkedResolution::AwaitSignal(slot @ None) = &mut self.resolution {
            *slot = Some(resumed);
        }
    }

    pub(crate) fn resolve(self) -> SysCallOutput {
        match self.resolution {
            ParkedResolution::Fixed(output) => output,
            ParkedResolution::AwaitSignal(flag) => SysCallOutput::Flag(flag.unwrap_or(true)),
        }
    }
}

/// How a routine body ended, before the return protocol runs.
enum RoutineEnd {
    /// The output value, fixed now even if delivery is deferred.
    Value(SysCallOutput),
    /// A suspension: the flag arrives by signal unless already decided.
    Await(Option<bool>),
    /// No return through the call path.
    NoReturn,
}

impl PartitionKernel {
    /// Run a system call for the current process. `memory` is the
    /// physical memory image, needed only by process creation to record
    /// the loaded pages.
    pub fn system_call(
        &mut self,
        caller: ProcessId,
        call: SysCall,
        memory: &mut MainMemory,
        env: &mut Env,
    ) -> SysCallResult {
        debug_assert_eq!(caller, self.current_process(), "calls come from the current process");
        let partition = self.partition_id();

        env.cpu.disable_interrupts();
        let saved = env.cpu.save_part_context();
        self.pcb_mut(caller).kernel_contexts.insert(0, saved);
        let kernel_stack = self.pcb(caller).kernel_stack;
        env.cpu.regs.ss = kernel_stack.start;
        env.cpu.regs.sl = kernel_stack.size;
        env.cpu.regs.bp = 0;
        env.cpu.regs.sp = 0;
        env.cpu.page_table = PageTableRef::Kernel;
        env.cpu.enable_interrupts();
        env.emit(
            TraceCategory::Syscall,
            vec![
                kv("partition", partition),
                kv("process", caller),
                kv("enter", call.name()),
            ],
        );

        let offered = match self.service() {
            None => false,
            Some(ServiceClass::Setup) => call.group() != SysCallGroup::Time,
            Some(ServiceClass::Full) => true,
        };
        if !offered {
            env.emit(
                TraceCategory::Fault,
                vec![
                    kv("partition", partition),
                    kv("process", caller),
                    kv("refused", call.name()),
                ],
            );
            return SysCallResult::Refused;
        }

        let name = call.name();
        let end = self.routine(caller, call, memory, env);
        match end {
            RoutineEnd::NoReturn => SysCallResult::NoReturn,
            RoutineEnd::Value(output) => {
                if self.current_process() == caller
                    && self.pcb(caller).state == ProcessState::Running
                {
                    self.syscall_return(caller, name, env);
                    SysCallResult::Completed(output)
                } else {
                    self.parked.insert(caller, ParkedCall::fixed(output));
                    SysCallResult::Parked
                }
            }
            RoutineEnd::Await(flag) => {
                if self.current_process() == caller
                    && self.pcb(caller).state == ProcessState::Running
                {
                    self.syscall_return(caller, name, env);
                    SysCallResult::Completed(SysCallOutput::Flag(flag.unwrap_or(true)))
                } else {
                    self.parked.insert(caller, ParkedCall::awaiting(flag));
                    SysCallResult::Parked
                }
            }
        }
    }

    /// The return protocol for a caller still on the CPU: restore its
    /// saved user context and re-enable interrupts.
    fn syscall_return(&mut self, caller: ProcessId, name: &str, env: &mut Env) {
        let partition = self.partition_id();
        let user = self.pcb_mut(caller).kernel_contexts.remove(0);
        env.cpu.restore(user);
        env.cpu.enable_interrupts();
        env.emit(
            TraceCategory::Syscall,
            vec![
                kv("partition", partition),
                kv("process", caller),
                kv("return", name),
            ],
        );
    }

    /// Current partition-relative time: system time plus the phase of the
    /// running tick interval.
    fn current_partition_relative_time(&self, env: &Env) -> Time {
        env.sysclock.time() + (env.clock.hp_value() as Time) % env.sysclock.tick_interval()
    }

    fn routine(
        &mut self,
        caller: ProcessId,
        call: SysCall,
        memory: &mut MainMemory,
        env: &mut Env,
    ) -> RoutineEnd {
        let partition = self.partition_id();
        match call {
            SysCall::GetOperatingMode => {
                RoutineEnd::Value(SysCallOutput::Mode(env.core.operating_mode(partition)))
            }
            SysCall::GetPartitionStatus => RoutineEnd::Value(SysCallOutput::PartitionStatus(
                env.core.partition_status(partition),
            )),
            SysCall::SetOperatingMode(mode) => {
                env.core.set_operating_mode(partition, mode);
                env.emit(
                    TraceCategory::Mode,
                    vec![kv("partition", partition), kv("mode", mode.name())],
                );
                match mode {
                    OperatingMode::Idle => self.terminate_partition(env),
                    OperatingMode::ColdStart => self.cold_start_partition(env),
                    OperatingMode::WarmStart => self.warm_start_partition(env),
                    OperatingMode::Normal => self.launch_partition(env),
                }
                RoutineEnd::NoReturn
            }
            SysCall::GetProcessNames => {
                let mut names: Vec<String> =
                    self.table().values().map(|pcb| pcb.name.clone()).collect();
                names.sort();
                RoutineEnd::Value(SysCallOutput::Names(names))
            }
            SysCall::GetProcessIds => RoutineEnd::Value(SysCallOutput::Ids(self.regular_ids())),
            SysCall::GetFreeProcessIds => {
                let ids = (1..self.total_process())
                    .filter(|id| !self.table().contains_key(id))
                    .collect();
                RoutineEnd::Value(SysCallOutput::Ids(ids))
            }
            SysCall::GetFreeSpace => RoutineEnd::Value(SysCallOutput::FreeSpace {
                continuous: env.allocator.max_free_block_size(),
                discontinuous: env.allocator.free_page_count() * env.constants.page_size,
            }),
            SysCall::GetPartitionPeriod => {
                RoutineEnd::Value(SysCallOutput::Time(self.period()))
            }
            SysCall::GetProcessState(procid) => {
                RoutineEnd::Value(SysCallOutput::State(self.pcb(procid).state))
            }
            SysCall::GetNextPeriodicStart => {
                let ct = self.current_partition_relative_time(env);
                RoutineEnd::Value(SysCallOutput::Time(
                    env.core.next_periodic_start(partition, ct),
                ))
            }
            SysCall::GetDelayedPeriodicStart(delay) => {
                let ct = self.current_partition_relative_time(env);
                RoutineEnd::Value(SysCallOutput::Time(
                    env.core.delayed_periodic_start(partition, ct, delay),
                ))
            }
            SysCall::GetProcessKind(procid) => {
                RoutineEnd::Value(SysCallOutput::Kind(self.pcb(procid).kind))
            }
            SysCall::GetProcessPeriod(procid) => {
                RoutineEnd::Value(SysCallOutput::Time(self.pcb(procid).period))
            }
            SysCall::GetProcessTimeCapacity(procid) => {
                RoutineEnd::Value(SysCallOutput::Time(self.pcb(procid).time_capacity))
            }
            SysCall::GetPartitionLockLevel => {
                RoutineEnd::Value(SysCallOutput::LockLevel(env.core.lock_level(partition)))
            }
            SysCall::GetProcessId(name) => {
                let id = self
                    .table()
                    .iter()
                    .find(|(_, pcb)| pcb.name == name)
                    .map(|(id, _)| *id)
                    .unwrap_or(NULL_PROCESS_ID);
                RoutineEnd::Value(SysCallOutput::Process(id))
            }
            SysCall::GetProcessStatus(procid) => {
                RoutineEnd::Value(SysCallOutput::Status(self.pcb(procid).status()))
            }
            SysCall::CreateProcess(args) => self.create_process(&args, memory, env),
            SysCall::SetPriority(procid, priority) => {
                self.set_priority(caller, procid, priority, env);
                RoutineEnd::Value(SysCallOutput::None)
            }
            SysCall::SuspendSelf {
                partition_time,
                delay,
            } => self.suspend_self(caller, partition_time, delay, env),
            SysCall::Suspend(procid) => {
                let flag = self.suspend_other(procid);
                RoutineEnd::Value(SysCallOutput::Flag(flag))
            }
            SysCall::Resume(procid) => {
                self.resume(procid, env);
                RoutineEnd::Value(SysCallOutput::None)
            }
            SysCall::StopSelf => {
                self.stop_self(caller, env);
                RoutineEnd::NoReturn
            }
            SysCall::Stop(procid) => {
                self.stop(caller, procid, env);
                RoutineEnd::Value(SysCallOutput::None)
            }
            SysCall::Start {
                process,
                release,
                deadline,
                mode,
            } => {
                self.start_process(process, release, 0, deadline, mode, env);
                RoutineEnd::Value(SysCallOutput::None)
            }
            SysCall::DelayedStart {
                process,
                release,
                delay,
                deadline,
                mode,
            } => {
                self.start_process(process, release, delay, deadline, mode, env);
                RoutineEnd::Value(SysCallOutput::None)
            }
            SysCall::LockPreemption => {
                let (level, clamped) = env.core.increase_lock_level(partition);
                if clamped {
                    env.emit(
                        TraceCategory::Mode,
                        vec![kv("partition", partition), kv("lock_level_clamped", level)],
                    );
                }
                RoutineEnd::Value(SysCallOutput::LockLevel(level))
            }
            SysCall::UnlockPreemption => {
                let (level, clamped) = env.core.decrease_lock_level(partition);
                if clamped {
                    env.emit(
                        TraceCategory::Mode,
                        vec![kv("partition", partition), kv("lock_level_clamped", level)],
                    );
                }
                if level == MIN_LOCK_LEVEL {
                    self.general_scheduling(env);
                }
                RoutineEnd::Value(SysCallOutput::LockLevel(level))
            }
            SysCall::GetMyId => RoutineEnd::Value(SysCallOutput::Process(caller)),
            SysCall::GetCurrentTime => RoutineEnd::Value(SysCallOutput::Time(
                self.current_partition_relative_time(env),
            )),
            SysCall::GetNextReleasePoint(procid) => {
                let pcb = self.pcb(procid);
                RoutineEnd::Value(SysCallOutput::Time(
                    pcb.release_point.saturating_add(pcb.period),
                ))
            }
            SysCall::TimedWait {
                partition_time,
                delay,
            } => {
                self.timed_wait(caller, partition_time, delay, env);
                RoutineEnd::Value(SysCallOutput::None)
            }
            SysCall::PeriodicWait { release, deadline } => {
                let pcb = self.pcb_mut(caller);
                pcb.state = ProcessState::Waiting;
                pcb.release_point = release;
                pcb.deadline_time = deadline;
                self.general_scheduling(env);
                RoutineEnd::Value(SysCallOutput::None)
            }
            SysCall::GetTime => RoutineEnd::Value(SysCallOutput::Time(env.sysclock.time())),
            SysCall::Replenish {
                current_time,
                budget,
            } => {
                let pcb = self.pcb_mut(caller);
                if budget < 0 {
                    pcb.deadline_time = budget;
                } else if budget > 0 {
                    pcb.deadline_time = current_time.saturating_add(budget);
                }
                RoutineEnd::Value(SysCallOutput::None)
            }
            SysCall::GetPartitionTime => {
                RoutineEnd::Value(SysCallOutput::Time(env.clock.hp_value() as Time))
            }
        }
    }

    /// Ids of the regular processes: those strictly between the idle id
    /// and the error handler id.
    pub(crate) fn regular_ids(&self) -> Vec<ProcessId> {
        (1..self.total_process())
            .filter(|id| self.table().contains_key(id))
            .collect()
    }

    fn create_process(
        &mut self,
        args: &CreateProcessArgs,
        memory: &mut MainMemory,
        env: &mut Env,
    ) -> RoutineEnd {
        let partition = self.partition_id();
        let attr = &args.attribute;
        let procid = if attr.kind == ProcessKind::ErrorHandler {
            Some(self.total_process())
        } else {
            (1..self.total_process()).find(|id| !self.table().contains_key(id))
        };
        let procid = match procid {
            Some(id) => id,
            None => {
                env.emit(
                    TraceCategory::Fault,
                    vec![kv("partition", partition), kv("create_failed", "no_free_id")],
                );
                return RoutineEnd::Value(SysCallOutput::AllocationFailed);
            }
        };

        let page_size = env.constants.page_size;
        let kernel_stack_size = env.constants.kernel_stack_size();
        let stack_phys = match env.allocator.alloc_block(kernel_stack_size) {
            Some(block) => block,
            None => {
                env.emit(
                    TraceCategory::Fault,
                    vec![
                        kv("partition", partition),
                        kv("create_failed", "kernel_stack"),
                    ],
                );
                return RoutineEnd::Value(SysCallOutput::AllocationFailed);
            }
        };
        let kernel_stack = MemoryBlock::new(
            stack_phys.start + env.constants.kernel_virtual_base,
            stack_phys.size,
        );

        let stack_pages = paging::page_count(attr.stack_size, page_size);
        let data_pages = paging::page_count(args.image.data_size, page_size);
        let code_pages = paging::page_count(args.image.code_size, page_size);
        let pages = match env.allocator.alloc_pages(stack_pages + data_pages + code_pages) {
            Some(pages) => pages,
            None => {
                env.allocator.dealloc_block(&stack_phys);
                env.emit(
                    TraceCategory::Fault,
                    vec![kv("partition", partition), kv("create_failed", "pages")],
                );
                return RoutineEnd::Value(SysCallOutput::AllocationFailed);
            }
        };
        let base: BTreeSet<_> = pages.iter().copied().collect();
        let mut vm = ProcessVirtualMemory::new(
            env.constants.process_virtual_base,
            base,
            stack_pages * page_size,
            data_pages * page_size,
            code_pages * page_size,
            page_size,
        );
        if !vm.vm_block.memory.contains_addr(attr.entry_point) {
            env.allocator.dealloc_block(&stack_phys);
            env.allocator.dealloc_pages(pages);
            env.emit(
                TraceCategory::Fault,
                vec![kv("partition", partition), kv("create_failed", "entry_point")],
            );
            return RoutineEnd::Value(SysCallOutput::AllocationFailed);
        }
        let table = vm.full_load_page_table(attr.entry_point, page_size);
        for (page, piece) in vm.load_plan(&table, page_size) {
            memory.load_page(page, &args.exe_path, piece);
        }
        vm.vm_block.page_table = table;

        let pcb = ProcessControlBlock::new(
            attr.name.clone(),
            attr.kind,
            args.exe_path.clone(),
            args.swap_path.clone(),
            attr.entry_point,
            kernel_stack,
            vm,
            attr.period,
            attr.time_capacity,
            attr.deadline,
            attr.base_priority,
        );
        self.table_mut().insert(procid, pcb);
        env.emit(
            TraceCategory::Sched,
            vec![
                kv("partition", partition),
                kv("created", procid),
                kv("name", &attr.name),
            ],
        );
        RoutineEnd::Value(SysCallOutput::Process(procid))
    }

    fn set_priority(
        &mut self,
        caller: ProcessId,
        procid: ProcessId,
        priority: Priority,
        env: &mut Env,
    ) {
        if procid == caller {
            let current = self.pcb(caller).current_priority;
            if priority > current {
                self.pcb_mut(caller).current_priority = priority;
            } else if priority < current {
                self.pcb_mut(caller).current_priority = -priority;
                self.check_scheduling_condition(env);
            }
        } else {
            let current = self.pcb(procid).current_priority;
            if priority > current {
                self.pcb_mut(procid).current_priority = priority;
                self.check_scheduling_condition(env);
            } else if priority < current {
                self.pcb_mut(procid).current_priority = priority;
            }
        }
    }

    fn suspend_self(
        &mut self,
        caller: ProcessId,
        partition_time: Time,
        delay: Time,
        env: &mut Env,
    ) -> RoutineEnd {
        if delay == 0 {
            self.pcb_mut(caller).state = ProcessState::Ready;
            self.enq_ready_tail(caller);
            self.general_scheduling(env);
            RoutineEnd::Await(Some(true))
        } else if delay < 0 {
            self.pcb_mut(caller).state = ProcessState::Waiting;
            self.general_scheduling(env);
            RoutineEnd::Await(None)
        } else {
            self.pcb_mut(caller).state = ProcessState::Waiting;
            self.add_time_counter(
                caller,
                partition_time.saturating_add(delay),
                OperatingMode::Normal,
                env,
            );
            self.general_scheduling(env);
            RoutineEnd::Await(None)
        }
    }

    /// Suspend another process. Ready processes leave the queue; waiting
    /// ones are suspendable only if they hold an armed delayed start (a
    /// positive counter with no call in flight), which gets turned over.
    fn suspend_other(&mut self, procid: ProcessId) -> bool {
        if self.ready_queue().contains(&procid) {
            self.deq_ready(procid);
            self.pcb_mut(procid).state = ProcessState::Waiting;
            true
        } else {
            let pcb = self.pcb(procid);
            if pcb.current_priority < 0 || !self.time_counters().contains(procid) {
                false
            } else if pcb.kernel_contexts.len() == 1 {
                self.counters_mut().turn_over(procid);
                true
            } else {
                false
            }
        }
    }

    fn resume(&mut self, procid: ProcessId, env: &mut Env) {
        if self.in_waiting_queue(procid) {
            return;
        }
        if !self.time_counters().contains(procid) {
            self.pcb_mut(procid).state = ProcessState::Ready;
            self.enq_ready_tail(procid);
            if let Some(parked) = self.parked.get_mut(&procid) {
                parked.signal(true);
            }
            self.check_scheduling_condition(env);
            return;
        }
        let priority = self.pcb(procid).current_priority;
        if priority < 0 {
            return;
        }
        if self.pcb(procid).kernel_contexts.len() > 1 {
            self.remove_time_counter(procid, OperatingMode::Normal, env);
            self.pcb_mut(procid).state = ProcessState::Ready;
            self.enq_ready_tail(procid);
            if let Some(parked) = self.parked.get_mut(&procid) {
                parked.signal(true);
            }
            self.check_scheduling_condition(env);
        } else {
            let alarm = self.time_counters().alarm_of(procid).unwrap_or(0);
            if alarm < 0 {
                self.counters_mut().turn_over(procid);
            }
        }
    }

    fn stop_self(&mut self, caller: ProcessId, env: &mut Env) {
        let partition = self.partition_id();
        self.pcb_mut(caller).state = ProcessState::Dormant;
        if caller != self.total_process() {
            env.core.reset_lock_level(partition);
            self.general_scheduling(env);
        } else if env.core.lock_level(partition) == MIN_LOCK_LEVEL {
            self.general_scheduling(env);
        } else if let Some(errored) = self.errored_process() {
            if self.pcb(errored).state != ProcessState::Dormant {
                self.special_scheduling(errored, env);
            } else {
                self.general_scheduling(env);
            }
        } else {
            self.general_scheduling(env);
        }
    }

    fn stop(&mut self, caller: ProcessId, procid: ProcessId, env: &mut Env) {
        let is_error_handler = caller == self.total_process();
        if is_error_handler && self.errored_process() == Some(procid) {
            let partition = self.partition_id();
            env.core.reset_lock_level(partition);
            self.pcb_mut(procid).state = ProcessState::Dormant;
        } else {
            match self.pcb(procid).state {
                ProcessState::Ready => {
                    self.deq_ready(procid);
                    self.pcb_mut(procid).state = ProcessState::Dormant;
                }
                ProcessState::Waiting => {
                    self.pcb_mut(procid).state = ProcessState::Dormant;
                    if self.in_waiting_queue(procid) {
                        self.deq_waiting(procid);
                    }
                    if self.time_counters().contains(procid) {
                        let partition = self.partition_id();
                        let om = env.core.operating_mode(partition);
                        self.remove_time_counter(procid, om, env);
                    }
                }
                ProcessState::Dormant | ProcessState::Running => {}
            }
        }
        if self.parked.remove(&procid).is_some() {
            self.completions.push(Completion {
                process: procid,
                outcome: CompletionOutcome::Aborted,
            });
        }
    }

    /// Start or delayed-start a process: reset its priority and contexts
    /// to a fresh run, then place it according to its kind, the delay,
    /// and the partition mode.
    fn start_process(
        &mut self,
        procid: ProcessId,
        release: Time,
        delay: Time,
        deadline: Time,
        mode: OperatingMode,
        env: &mut Env,
    ) {
        let partition = self.partition_id();
        {
            let ctx = {
                let pcb = self.pcb(procid);
                pcb.start_context(partition, procid)
            };
            let pcb = self.pcb_mut(procid);
            pcb.current_priority = pcb.base_priority;
            pcb.user_contexts.clear();
            pcb.kernel_contexts.clear();
            pcb.kernel_contexts.push(ctx);
        }
        if self.parked.remove(&procid).is_some() {
            self.completions.push(Completion {
                process: procid,
                outcome: CompletionOutcome::Aborted,
            });
        }
        let kind = self.pcb(procid).kind;
        let normal = mode == OperatingMode::Normal;
        match (kind, normal, delay) {
            (ProcessKind::Periodic, true, _) => {
                let pcb = self.pcb_mut(procid);
                pcb.state = ProcessState::Waiting;
                pcb.release_point = release;
                pcb.deadline_time = deadline;
            }
            (_, true, 0) => {
                let pcb = self.pcb_mut(procid);
                pcb.state = ProcessState::Ready;
                pcb.release_point = release;
                pcb.deadline_time = deadline;
                self.enq_ready_tail(procid);
                self.check_scheduling_condition(env);
            }
            (_, true, _) => {
                let pcb = self.pcb_mut(procid);
                pcb.state = ProcessState::Waiting;
                pcb.release_point = release.saturating_add(delay);
                pcb.deadline_time = deadline;
                let hpt = env.clock.hp_value() as Time;
                self.add_time_counter(procid, hpt.saturating_add(delay), mode, env);
            }
            (_, false, 0) => {
                self.pcb_mut(procid).state = ProcessState::Waiting;
                self.enq_ready_tail(procid);
            }
            (_, false, _) => {
                self.pcb_mut(procid).state = ProcessState::Waiting;
                self.add_time_counter(procid, delay, mode, env);
            }
        }
    }

    fn timed_wait(&mut self, caller: ProcessId, partition_time: Time, delay: Time, env: &mut Env) {
        {
            let pcb = self.pcb_mut(caller);
            pcb.current_priority = -pcb.current_priority;
        }
        if delay <= 0 {
            self.pcb_mut(caller).state = ProcessState::Ready;
            self.enq_ready_tail(caller);
            self.general_scheduling(env);
        } else {
            self.pcb_mut(caller).state = ProcessState::Waiting;
            self.add_time_counter(
                caller,
                partition_time.saturating_add(delay),
                OperatingMode::Normal,
                env,
            );
            self.general_scheduling(env);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_partition_the_call_set() {
        assert_eq!(SysCall::GetOperatingMode.group(), SysCallGroup::Partition);
        assert_eq!(SysCall::GetMyId.group(), SysCallGroup::Process);
        assert_eq!(SysCall::LockPreemption.group(), SysCallGroup::Process);
        assert_eq!(SysCall::GetTime.group(), SysCallGroup::Time);
        assert_eq!(SysCall::GetPartitionTime.group(), SysCallGroup::Time);
    }

    #[test]
    fn parked_calls_take_the_first_signal_only() {
        let mut parked = ParkedCall::awaiting(None);
        parked.signal(false);
        parked.signal(true);
        assert_eq!(parked.resolve(), SysCallOutput::Flag(false));

        let preset = ParkedCall::awaiting(Some(true));
        assert_eq!(preset.resolve(), SysCallOutput::Flag(true));

        let fixed = ParkedCall::fixed(SysCallOutput::Time(42));
        assert_eq!(fixed.resolve(), SysCallOutput::Time(42));
    }
}
