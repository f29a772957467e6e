//! One partition's kernel: the process table, scheduling queues, time
//! counters, the dispatcher, and the window lifecycle.
//!
//! All state mutation happens through `&mut self` methods that take an
//! [`Env`], the borrowed slice of machine state a partition kernel may
//! touch: the core kernel, the clocks, the CPU, the interrupt handler's
//! saved contexts, and this partition's page allocator.

use std::collections::{BTreeMap, VecDeque};

use crate::his::{AreaAllocator, InterruptHandler, SystemClock};
use crate::hw::{ClockBank, MachineCpu};
use crate::kernel::{CoreKernel, PartitionConfig};
use crate::trace::{kv, TraceCategory, TraceLog};
use crate::types::{
    Constants, LockLevel, MemoryBlock, OperatingMode, PartitionId, Priority, ProcessId,
    ProcessState, Time, IDLE_PROCESS_ID, MIN_LOCK_LEVEL, NULL_PROCESS_ID,
};

use super::pcb::ProcessControlBlock;
use super::queues::{TimeCounter, TimeCounterQueue};
use super::syscalls::{Completion, CompletionOutcome, ParkedCall};

/// Which system call classes the partition currently serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServiceClass {
    /// Partition and process management only: what a partition gets while
    /// setting itself up during a cold or warm start.
    Setup,
    /// Everything, including the time services: normal operation.
    Full,
}

/// The machine state a partition kernel operates on, borrowed from the
/// module for the duration of one action.
pub struct Env<'a> {
    pub core: &'a mut CoreKernel,
    pub clock: &'a mut ClockBank,
    pub sysclock: &'a mut SystemClock,
    pub cpu: &'a mut MachineCpu,
    pub handler: &'a mut InterruptHandler,
    pub allocator: &'a mut AreaAllocator,
    pub constants: &'a Constants,
    pub trace: &'a mut TraceLog,
}

impl Env<'_> {
    pub fn emit(&mut self, category: TraceCategory, fields: Vec<(String, String)>) {
        self.trace.emit(self.clock.rt_value(), category, fields);
    }

    /// Arm the high-precision alarm from a signed value. A negative value
    /// can never match the counter, so it disarms.
    pub(crate) fn set_signed_alarm(&mut self, alarm: Time) {
        match u64::try_from(alarm) {
            Ok(value) => self.clock.set_hp_alarm(value),
            Err(_) => self.clock.end_hp_alarm(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PartitionKernel {
    partition_id: PartitionId,
    name: String,
    memory: MemoryBlock,
    period: Time,
    duration: Time,
    total_process: u32,
    process_table: BTreeMap<ProcessId, ProcessControlBlock>,
    ready_queue: VecDeque<ProcessId>,
    waiting_queue: Vec<ProcessId>,
    time_counters: TimeCounterQueue,
    current_process: ProcessId,
    service: Option<ServiceClass>,
    scheduler_on: bool,
    error_handler_enabled: bool,
    /// The process whose fault the error handler is working on. Nothing
    /// sets it here: fault detection belongs to the health monitor, which
    /// is reduced to a trace event.
    errored_process: Option<ProcessId>,
    pub(crate) parked: BTreeMap<ProcessId, ParkedCall>,
    pub(crate) completions: Vec<Completion>,
}

impl PartitionKernel {
    /// A partition kernel as it stands right after module initialization:
    /// only the idle process exists, nothing is queued, no process is
    /// current, no service runs.
    pub fn new(partition_id: PartitionId, config: &PartitionConfig) -> Self {
        let mut process_table = BTreeMap::new();
        process_table.insert(IDLE_PROCESS_ID, ProcessControlBlock::idle());
        PartitionKernel {
            partition_id,
            name: config.name.clone(),
            memory: config.memory,
            period: config.period,
            duration: config.duration,
            total_process: config.total_process,
            process_table,
            ready_queue: VecDeque::new(),
            waiting_queue: Vec::new(),
            time_counters: TimeCounterQueue::new(),
            current_process: NULL_PROCESS_ID,
            service: None,
            scheduler_on: false,
            error_handler_enabled: false,
            errored_process: None,
            parked: BTreeMap::new(),
            completions: Vec::new(),
        }
    }

    pub fn partition_id(&self) -> PartitionId {
        self.partition_id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn memory(&self) -> MemoryBlock {
        self.memory
    }

    pub fn period(&self) -> Time {
        self.period
    }

    pub fn duration(&self) -> Time {
        self.duration
    }

    /// The process id reserved for the error handler; regular processes
    /// get ids strictly between the idle id and this.
    pub fn total_process(&self) -> u32 {
        self.total_process
    }

    pub fn process(&self, procid: ProcessId) -> Option<&ProcessControlBlock> {
        self.process_table.get(&procid)
    }

    pub fn process_ids(&self) -> impl Iterator<Item = ProcessId> + '_ {
        self.process_table.keys().copied()
    }

    pub fn process_count(&self) -> usize {
        self.process_table.len()
    }

    pub fn ready_queue(&self) -> &VecDeque<ProcessId> {
        &self.ready_queue
    }

    pub fn waiting_queue(&self) -> &[ProcessId] {
        &self.waiting_queue
    }

    pub fn time_counters(&self) -> &TimeCounterQueue {
        &self.time_counters
    }

    pub fn current_process(&self) -> ProcessId {
        self.current_process
    }

    pub fn service(&self) -> Option<ServiceClass> {
        self.service
    }

    pub fn scheduler_on(&self) -> bool {
        self.scheduler_on
    }

    pub fn error_handler_enabled(&self) -> bool {
        self.error_handler_enabled
    }

    pub fn errored_process(&self) -> Option<ProcessId> {
        self.errored_process
    }

    /// Processes blocked inside a system call, waiting to be dispatched.
    pub fn parked_ids(&self) -> Vec<ProcessId> {
        self.parked.keys().copied().collect()
    }

    /// Drain the results of calls that finished while their caller was
    /// off the CPU.
    pub fn take_completions(&mut self) -> Vec<Completion> {
        std::mem::take(&mut self.completions)
    }

    pub(crate) fn pcb(&self, procid: ProcessId) -> &ProcessControlBlock {
        self.process_table
            .get(&procid)
            .expect("process id present in table")
    }

    pub(crate) fn pcb_mut(&mut self, procid: ProcessId) -> &mut ProcessControlBlock {
        self.process_table
            .get_mut(&procid)
            .expect("process id present in table")
    }

    pub(crate) fn table(&self) -> &BTreeMap<ProcessId, ProcessControlBlock> {
        &self.process_table
    }

    pub(crate) fn table_mut(&mut self) -> &mut BTreeMap<ProcessId, ProcessControlBlock> {
        &mut self.process_table
    }

    pub(crate) fn enq_ready_head(&mut self, procid: ProcessId) {
        self.ready_queue.push_front(procid);
    }

    pub(crate) fn enq_ready_tail(&mut self, procid: ProcessId) {
        self.ready_queue.push_back(procid);
    }

    pub(crate) fn deq_ready(&mut self, procid: ProcessId) {
        self.ready_queue.retain(|p| *p != procid);
    }

    pub(crate) fn deq_waiting(&mut self, procid: ProcessId) {
        self.waiting_queue.retain(|p| *p != procid);
    }

    pub(crate) fn in_waiting_queue(&self, procid: ProcessId) -> bool {
        self.waiting_queue.contains(&procid)
    }

    pub(crate) fn counters_mut(&mut self) -> &mut TimeCounterQueue {
        &mut self.time_counters
    }

    /// Highest current-priority magnitude among ready queue members; zero
    /// for an empty queue.
    pub fn get_highest_priority(&self) -> Priority {
        self.ready_queue
            .iter()
            .map(|p| self.pcb(*p).current_priority.abs())
            .max()
            .unwrap_or(0)
    }

    fn lock_level(&self, env: &Env) -> LockLevel {
        env.core.lock_level(self.partition_id)
    }

    // --- dispatching ---------------------------------------------------

    /// Make `procid` the current process: restore the head of its saved
    /// kernel context stack and mark it running. A previous process left
    /// running is demoted to ready (it keeps its saved context but is not
    /// re-queued; some path must name it again). If the newcomer has a
    /// parked call, the call finishes now: its user context is restored
    /// on top and the result is queued as a completion.
    pub(crate) fn schedule_process(&mut self, procid: ProcessId, env: &mut Env) {
        let prev = self.current_process;
        if prev != NULL_PROCESS_ID && prev != procid {
            let pcb = self.pcb_mut(prev);
            if pcb.state == ProcessState::Running {
                pcb.state = ProcessState::Ready;
            }
        }
        self.current_process = procid;
        let ctx = {
            let pcb = self.pcb_mut(procid);
            debug_assert!(
                !pcb.kernel_contexts.is_empty(),
                "dispatch needs a saved kernel context"
            );
            pcb.kernel_contexts.remove(0)
        };
        env.cpu.restore(ctx);
        self.pcb_mut(procid).state = ProcessState::Running;
        if let Some(parked) = self.parked.remove(&procid) {
            let user = self.pcb_mut(procid).kernel_contexts.remove(0);
            env.cpu.restore(user);
            self.completions.push(Completion {
                process: procid,
                outcome: CompletionOutcome::Finished(parked.resolve()),
            });
        }
        env.cpu.enable_interrupts();
        let partition = self.partition_id;
        env.emit(
            TraceCategory::Sched,
            vec![kv("partition", partition), kv("dispatch", procid)],
        );
    }

    /// The scheduler's main entry, run on behalf of the current process
    /// from inside a system call. Saves the caller's kernel context, then
    /// picks what runs next based on the caller's state.
    pub(crate) fn general_scheduling(&mut self, env: &mut Env) {
        env.cpu.disable_interrupts();
        let caller = self.current_process;
        debug_assert_ne!(caller, NULL_PROCESS_ID, "scheduling needs a caller");
        let saved = env.cpu.save_all_context();
        self.pcb_mut(caller).kernel_contexts.insert(0, saved);
        match self.pcb(caller).state {
            ProcessState::Dormant | ProcessState::Waiting | ProcessState::Ready => {
                if self.ready_queue.is_empty() {
                    self.schedule_process(IDLE_PROCESS_ID, env);
                } else {
                    self.must_scheduling(env);
                }
            }
            ProcessState::Running => {
                if self.ready_queue.is_empty() {
                    let pcb = self.pcb_mut(caller);
                    pcb.current_priority = pcb.current_priority.abs();
                    self.schedule_process(caller, env);
                } else {
                    self.need_scheduling(env);
                }
            }
        }
    }

    /// Dispatch the best ready process unconditionally.
    pub(crate) fn must_scheduling(&mut self, env: &mut Env) {
        let hp = self.get_highest_priority();
        self.schedule_ready_process(hp, env);
    }

    /// The caller is still running and the ready queue is not empty:
    /// decide between the caller and the best ready process. A negative
    /// current priority is a yield marker left by a wait; zero (the idle
    /// process) takes the positive branches.
    fn need_scheduling(&mut self, env: &mut Env) {
        let caller = self.current_process;
        let hp = self.get_highest_priority();
        let cp = self.pcb(caller).current_priority;
        if cp.abs() > hp {
            self.pcb_mut(caller).current_priority = cp.abs();
            self.schedule_process(caller, env);
        } else if cp.abs() == hp && cp >= 0 {
            self.schedule_process(caller, env);
        } else if cp.abs() == hp {
            let pcb = self.pcb_mut(caller);
            pcb.current_priority = cp.abs();
            pcb.state = ProcessState::Ready;
            self.enq_ready_tail(caller);
            self.schedule_ready_process(hp, env);
        } else if cp >= 0 {
            self.pcb_mut(caller).state = ProcessState::Ready;
            self.enq_ready_head(caller);
            self.schedule_ready_process(hp, env);
        } else {
            let pcb = self.pcb_mut(caller);
            pcb.current_priority = cp.abs();
            pcb.state = ProcessState::Ready;
            self.enq_ready_tail(caller);
            self.schedule_ready_process(hp, env);
        }
    }

    /// Dispatch the first ready queue member at priority level `hp`,
    /// preferring one not marked as yielding (positive priority). An
    /// empty or non-matching queue falls back to the idle process.
    pub(crate) fn schedule_ready_process(&mut self, hp: Priority, env: &mut Env) {
        let pick = self
            .ready_queue
            .iter()
            .copied()
            .find(|p| self.pcb(*p).current_priority == hp)
            .or_else(|| {
                self.ready_queue
                    .iter()
                    .copied()
                    .find(|p| self.pcb(*p).current_priority == -hp)
            });
        match pick {
            None => self.schedule_process(IDLE_PROCESS_ID, env),
            Some(procid) => {
                self.deq_ready(procid);
                let pcb = self.pcb_mut(procid);
                pcb.current_priority = pcb.current_priority.abs();
                self.schedule_process(procid, env);
            }
        }
    }

    /// Hand the CPU to a named process, saving the caller's context
    /// without touching its state or the queues.
    pub(crate) fn special_scheduling(&mut self, procid: ProcessId, env: &mut Env) {
        env.cpu.disable_interrupts();
        let caller = self.current_process;
        let saved = env.cpu.save_all_context();
        self.pcb_mut(caller).kernel_contexts.insert(0, saved);
        self.schedule_process(procid, env);
    }

    /// Reschedule only when preemption is unlocked.
    pub(crate) fn check_scheduling_condition(&mut self, env: &mut Env) {
        if self.lock_level(env) == MIN_LOCK_LEVEL {
            self.general_scheduling(env);
        }
    }

    // --- time counters --------------------------------------------------

    /// Queue an alarm for a process. In normal mode a counter that lands
    /// at the head arms the hardware alarm with its raw value.
    pub(crate) fn add_time_counter(
        &mut self,
        procid: ProcessId,
        alarm: Time,
        om: OperatingMode,
        env: &mut Env,
    ) {
        self.time_counters.enqueue(TimeCounter {
            process: procid,
            alarm,
        });
        if om == OperatingMode::Normal {
            if let Some(head) = self.time_counters.head() {
                if head.process == procid {
                    env.set_signed_alarm(head.alarm);
                }
            }
        }
    }

    /// Remove a process's counter, returning its raw alarm. In normal
    /// mode the hardware alarm follows the new head if the removed entry
    /// was due sooner; removing the last counter disarms it.
    pub(crate) fn remove_time_counter(
        &mut self,
        procid: ProcessId,
        om: OperatingMode,
        env: &mut Env,
    ) -> Option<Time> {
        let removed = self.time_counters.dequeue(procid)?;
        if om == OperatingMode::Normal {
            match self.time_counters.head() {
                Some(head) if removed.alarm < head.alarm => env.set_signed_alarm(head.alarm.abs()),
                None => env.clock.end_hp_alarm(),
                Some(_) => {}
            }
        }
        Some(removed.alarm)
    }

    /// Release every counter whose time has come. Released processes go
    /// ready at the tail of the queue with their priority magnitude
    /// restored; those that were blocked inside a call with an armed
    /// (positive) priority get a timeout signal. The hardware alarm is
    /// re-armed from the new head if any release happened.
    pub(crate) fn update_time_counters(&mut self, hpt: Time, env: &mut Env) {
        let released = self.time_counters.cut_released(hpt);
        if released.is_empty() {
            return;
        }
        let timed_out: Vec<ProcessId> = released
            .iter()
            .copied()
            .filter(|p| {
                let pcb = self.pcb(*p);
                pcb.current_priority > 0 && pcb.kernel_contexts.len() > 1
            })
            .collect();
        self.update_ready_processes(&released, env);
        let partition = self.partition_id;
        for procid in timed_out {
            if let Some(parked) = self.parked.get_mut(&procid) {
                parked.signal(false);
            }
            env.emit(
                TraceCategory::Sched,
                vec![kv("partition", partition), kv("timeout", procid)],
            );
        }
        if let Some(head) = self.time_counters.head() {
            env.set_signed_alarm(head.alarm.abs());
        }
    }

    /// Make the given processes ready, in order, at the tail of the ready
    /// queue, restoring priority magnitudes.
    pub(crate) fn update_ready_processes(&mut self, procids: &[ProcessId], env: &mut Env) {
        let partition = self.partition_id;
        for &procid in procids {
            let pcb = self.pcb_mut(procid);
            pcb.state = ProcessState::Ready;
            pcb.current_priority = pcb.current_priority.abs();
            self.ready_queue.push_back(procid);
            env.emit(
                TraceCategory::Sched,
                vec![kv("partition", partition), kv("release", procid)],
            );
        }
    }

    /// Processes whose release point equals `t`, in ascending id order.
    /// The check looks at release points only, not states.
    pub(crate) fn check_release_points(&self, t: Time) -> Vec<ProcessId> {
        self.process_table
            .iter()
            .filter(|(_, pcb)| pcb.release_point == t)
            .map(|(id, _)| *id)
            .collect()
    }

    /// Shift all counters one period into the past, keeping magnitude
    /// order.
    pub(crate) fn align_time_counters(&mut self) {
        self.time_counters.align(self.period);
    }

    // --- window lifecycle ------------------------------------------------

    /// Window start for a partition in cold or warm start mode: reset the
    /// window timer, offer the setup services, and resume whatever was
    /// current (the idle process on the first window).
    pub fn prepare_execution(&mut self, env: &mut Env) {
        env.clock.reset_hp();
        self.service = Some(ServiceClass::Setup);
        let target = if self.current_process == NULL_PROCESS_ID {
            IDLE_PROCESS_ID
        } else {
            self.current_process
        };
        self.schedule_process(target, env);
    }

    /// Window start in normal mode: release what is due at `t`, realign
    /// counters to the new window, restart the window timer, run the
    /// alarm check at zero, then dispatch by priority unless preemption
    /// is locked.
    pub fn start_execution(&mut self, t: Time, env: &mut Env) {
        let released = self.check_release_points(t);
        self.update_ready_processes(&released, env);
        self.align_time_counters();
        env.clock.reset_hp();
        self.update_time_counters(0, env);
        self.service = Some(ServiceClass::Full);
        self.scheduler_on = true;
        debug_assert_ne!(self.current_process, NULL_PROCESS_ID);
        if self.lock_level(env) > MIN_LOCK_LEVEL {
            self.schedule_process(self.current_process, env);
        } else {
            let hp = self.get_highest_priority();
            let cp = self.pcb(self.current_process).current_priority;
            if hp == cp.abs() {
                self.schedule_process(self.current_process, env);
            } else if hp > cp.abs() && cp <= 0 {
                self.schedule_process(self.current_process, env);
            } else if hp > cp.abs() {
                let current = self.current_process;
                self.pcb_mut(current).state = ProcessState::Ready;
                self.enq_ready_head(current);
                self.schedule_ready_process(hp, env);
            } else {
                self.schedule_process(self.current_process, env);
            }
        }
    }

    /// A clock tick landed inside this partition's window: run the alarm
    /// check at the latched window time, then either let the interrupted
    /// process continue or, if preemption is unlocked, preempt it for a
    /// better ready process. The interrupted context is taken from the
    /// interrupt handler.
    pub fn continue_execution(&mut self, hpt: Time, env: &mut Env) {
        let interrupted = env.handler.pop_context();
        self.update_time_counters(hpt, env);
        let current = self.current_process;
        debug_assert_ne!(current, NULL_PROCESS_ID);
        let unlocked = self.lock_level(env) == MIN_LOCK_LEVEL;
        let hp = self.get_highest_priority();
        let cp = self.pcb(current).current_priority;
        let preempt = unlocked && hp > cp.abs() && cp > 0;
        if preempt {
            let pcb = self.pcb_mut(current);
            pcb.kernel_contexts.insert(0, interrupted);
            pcb.state = ProcessState::Ready;
            self.enq_ready_head(current);
            let partition = self.partition_id;
            env.emit(
                TraceCategory::Sched,
                vec![kv("partition", partition), kv("preempt", current)],
            );
            self.schedule_ready_process(hp, env);
        } else {
            env.cpu.restore(interrupted);
            env.cpu.enable_interrupts();
        }
    }

    /// Window end: disarm the window alarm, stop serving calls, and park
    /// the interrupted context on the current process, which stays
    /// nominally running until the next window resumes it.
    pub fn suspend_execution(&mut self, env: &mut Env) {
        let interrupted = env.handler.pop_context();
        env.clock.end_hp_alarm();
        self.service = None;
        self.scheduler_on = false;
        let current = self.current_process;
        debug_assert_ne!(current, NULL_PROCESS_ID);
        self.pcb_mut(current).kernel_contexts.insert(0, interrupted);
    }

    /// Window start for a partition in idle mode: only the idle process
    /// runs, no services are offered.
    pub fn idle_execution(&mut self, env: &mut Env) {
        self.schedule_process(IDLE_PROCESS_ID, env);
    }

    // --- mode transitions (the tails of the set-mode call) ---------------

    /// Going idle: stop everything and leave only the idle process
    /// runnable. Processes and queues are left as they stand.
    pub(crate) fn terminate_partition(&mut self, env: &mut Env) {
        env.clock.end_hp_alarm();
        self.service = None;
        self.scheduler_on = false;
        self.schedule_process(IDLE_PROCESS_ID, env);
    }

    /// Cold restart: back to the post-boot state. All processes vanish,
    /// all partition memory is freed, and the idle process starts from
    /// scratch. In-flight blocked calls are reported as aborted.
    pub(crate) fn cold_start_partition(&mut self, env: &mut Env) {
        env.clock.end_hp_alarm();
        self.service = None;
        self.scheduler_on = false;
        self.abort_parked();
        self.process_table.clear();
        self.process_table
            .insert(IDLE_PROCESS_ID, ProcessControlBlock::idle());
        self.ready_queue.clear();
        self.waiting_queue.clear();
        self.time_counters = TimeCounterQueue::new();
        self.current_process = NULL_PROCESS_ID;
        self.error_handler_enabled = false;
        self.errored_process = None;
        *env.allocator = AreaAllocator::new(self.memory, env.constants.page_size);
        self.service = Some(ServiceClass::Setup);
        self.schedule_process(IDLE_PROCESS_ID, env);
    }

    /// Warm restart: processes survive with their memory but everything
    /// goes dormant and the queues empty. In-flight blocked calls are
    /// reported as aborted.
    pub(crate) fn warm_start_partition(&mut self, env: &mut Env) {
        env.clock.end_hp_alarm();
        self.service = None;
        self.scheduler_on = false;
        self.abort_parked();
        self.ready_queue.clear();
        self.waiting_queue.clear();
        self.time_counters = TimeCounterQueue::new();
        for pcb in self.process_table.values_mut() {
            pcb.state = ProcessState::Dormant;
        }
        self.service = Some(ServiceClass::Setup);
        self.schedule_process(IDLE_PROCESS_ID, env);
    }

    /// Entering normal mode: fix up every process that was started during
    /// setup with real release points and deadlines, enable the error
    /// handler if one was created, open full service, and dispatch the
    /// best ready process.
    pub(crate) fn launch_partition(&mut self, env: &mut Env) {
        self.service = None;
        let interval = env.sysclock.tick_interval();
        let hpt = env.clock.hp_value() as Time;
        let ct = env.sysclock.time() + hpt % interval;
        let started: Vec<ProcessId> = self.ready_queue.iter().copied().collect();
        for procid in started {
            self.update_started_process(procid, ct, env);
        }
        for procid in self.time_counters.timing_ids() {
            self.update_delayed_started_process(procid, ct, env);
        }
        self.error_handler_enabled = self.process_table.contains_key(&self.total_process);
        self.service = Some(ServiceClass::Full);
        self.scheduler_on = true;
        self.must_scheduling(env);
    }

    /// Give a process started during setup its release point and deadline
    /// now that time is running. An aperiodic process becomes ready as of
    /// now; a periodic one leaves the ready queue to wait for its next
    /// period start. A deadline that overflows the time type goes to the
    /// health monitor instead.
    fn update_started_process(&mut self, procid: ProcessId, ct: Time, env: &mut Env) {
        let (kind, capacity) = {
            let pcb = self.pcb(procid);
            (pcb.kind, pcb.time_capacity)
        };
        match kind {
            crate::types::ProcessKind::Periodic => {
                self.deq_ready(procid);
                let nps = env.core.next_periodic_start(self.partition_id, ct);
                match nps.checked_add(capacity) {
                    Some(deadline) if nps != Time::MAX => {
                        let pcb = self.pcb_mut(procid);
                        pcb.release_point = nps;
                        pcb.deadline_time = deadline;
                    }
                    _ => self.health_monitor(procid, "deadline_overflow", env),
                }
            }
            _ => match ct.checked_add(capacity) {
                Some(deadline) => {
                    let pcb = self.pcb_mut(procid);
                    pcb.state = ProcessState::Ready;
                    pcb.release_point = ct;
                    pcb.deadline_time = deadline;
                }
                None => {
                    self.deq_ready(procid);
                    self.health_monitor(procid, "deadline_overflow", env);
                }
            },
        }
    }

    /// Same fix-up for a process with a pending delayed start: convert
    /// its relative alarm into absolute terms. Aperiodic delays re-queue
    /// a counter (keeping a suspension's negative sign); periodic delays
    /// resolve to the first period start past the delay.
    fn update_delayed_started_process(&mut self, procid: ProcessId, ct: Time, env: &mut Env) {
        let alarm = match self.time_counters.alarm_of(procid) {
            Some(alarm) => alarm,
            None => return,
        };
        self.time_counters.dequeue(procid);
        let (kind, capacity) = {
            let pcb = self.pcb(procid);
            (pcb.kind, pcb.time_capacity)
        };
        match kind {
            crate::types::ProcessKind::Periodic => {
                let dps = env.core.delayed_periodic_start(self.partition_id, ct, alarm);
                match dps.checked_add(capacity) {
                    Some(deadline) if dps != Time::MAX => {
                        let pcb = self.pcb_mut(procid);
                        pcb.release_point = dps;
                        pcb.deadline_time = deadline;
                    }
                    _ => self.health_monitor(procid, "deadline_overflow", env),
                }
            }
            _ => {
                let release = ct.checked_add(alarm.abs());
                let deadline = release.and_then(|r| r.checked_add(capacity));
                match (release, deadline) {
                    (Some(release), Some(deadline)) => {
                        let signed = if alarm < 0 { -release } else { release };
                        self.time_counters.enqueue(TimeCounter {
                            process: procid,
                            alarm: signed,
                        });
                        let pcb = self.pcb_mut(procid);
                        pcb.release_point = release;
                        pcb.deadline_time = deadline;
                    }
                    _ => self.health_monitor(procid, "deadline_overflow", env),
                }
            }
        }
    }

    /// The health monitor shrunk to its observable effect: a trace event.
    pub(crate) fn health_monitor(&mut self, procid: ProcessId, error: &str, env: &mut Env) {
        let partition = self.partition_id;
        env.emit(
            TraceCategory::Hm,
            vec![
                kv("partition", partition),
                kv("process", procid),
                kv("error", error),
            ],
        );
    }

    /// Report every parked call as aborted and forget them.
    fn abort_parked(&mut self) {
        let parked = std::mem::take(&mut self.parked);
        for (procid, _) in parked {
            self.completions.push(Completion {
                process: procid,
                outcome: CompletionOutcome::Aborted,
            });
        }
    }
}
