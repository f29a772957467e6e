//! The application service layer: named services with argument and
//! state checking on top of the raw system call interface.
//!
//! Every check a service performs is itself an ordinary kernel call, so
//! one invocation appears in the trace as its full query sequence
//! followed by the finishing call, exactly as a service library running
//! inside the calling process would behave. Services that can block
//! return a [`PendingService`] marker instead of a code; the code
//! arrives later, when the kernel reports the matching [`Completion`]
//! and a [`PendingTable`] translates it back.

use std::collections::BTreeMap;

use crate::module::Module;
use crate::partition::{
    Completion, CompletionOutcome, CreateProcessArgs, ProcessAttribute, ProcessStatus, SysCall,
    SysCallOutput, SysCallResult,
};
use crate::types::{
    ExecutableImage, LockLevel, OperatingMode, PartitionId, Priority, ProcessId, ProcessKind,
    ProcessState, ReturnCode, Time, DEFAULT_TIME, MIN_LOCK_LEVEL, NULL_PROCESS_ID,
};

/// A service request, as issued by application code.
#[derive(Clone, Debug)]
pub enum ApexCall {
    GetPartitionStatus,
    SetOperatingMode(OperatingMode),
    GetProcessId(String),
    GetProcessStatus(ProcessId),
    CreateProcess {
        attribute: ProcessAttribute,
        exe_path: String,
        swap_path: String,
        image: ExecutableImage,
    },
    SetPriority(ProcessId, Priority),
    SuspendSelf(Time),
    Suspend(ProcessId),
    Resume(ProcessId),
    StopSelf,
    Stop(ProcessId),
    Start(ProcessId),
    DelayedStart(ProcessId, Time),
    LockPreemption,
    UnlockPreemption,
    GetMyId,
    TimedWait(Time),
    PeriodicWait,
    GetTime,
    Replenish(Time),
}

impl ApexCall {
    pub fn name(&self) -> &'static str {
        use ApexCall::*;
        match self {
            GetPartitionStatus => "get_partition_status",
            SetOperatingMode(_) => "set_operating_mode",
            GetProcessId(_) => "get_process_id",
            GetProcessStatus(_) => "get_process_status",
            CreateProcess { .. } => "create_process",
            SetPriority(..) => "set_priority",
            SuspendSelf(_) => "suspend_self",
            Suspend(_) => "suspend",
            Resume(_) => "resume",
            StopSelf => "stop_self",
            Stop(_) => "stop",
            Start(_) => "start",
            DelayedStart(..) => "delayed_start",
            LockPreemption => "lock_preemption",
            UnlockPreemption => "unlock_preemption",
            GetMyId => "get_my_id",
            TimedWait(_) => "timed_wait",
            PeriodicWait => "periodic_wait",
            GetTime => "get_time",
            Replenish(_) => "replenish",
        }
    }
}

/// The value part of a service return, alongside the return code.
#[derive(Clone, Debug, PartialEq)]
pub enum ApexValue {
    None,
    PartitionStatus(crate::kernel::PartitionStatus),
    Process(ProcessId),
    Status(ProcessStatus),
    LockLevel(LockLevel),
    Time(Time),
}

/// How a service invocation came back.
#[derive(Clone, Debug, PartialEq)]
pub enum ApexOutcome {
    /// Finished with the caller still on the CPU.
    Done { code: ReturnCode, value: ApexValue },
    /// The finishing call displaced the caller; the return code arrives
    /// with the matching [`Completion`].
    Pending(PendingService),
    /// The call never returns through the service path: mode changes and
    /// stopping yourself. A code decided beforehand rides along.
    NoReturn(Option<ReturnCode>),
    /// The partition's current service class refused a kernel call; the
    /// caller is stuck in the kernel until something schedules past it.
    Wedged,
}

/// The blocking services: which one a displaced caller is inside decides
/// how its eventual kernel outcome reads as a return code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PendingService {
    SetPriority,
    SuspendSelf,
    Resume,
    Start,
    DelayedStart,
    UnlockPreemption,
    TimedWait,
    PeriodicWait,
}

impl PendingService {
    pub fn name(self) -> &'static str {
        match self {
            PendingService::SetPriority => "set_priority",
            PendingService::SuspendSelf => "suspend_self",
            PendingService::Resume => "resume",
            PendingService::Start => "start",
            PendingService::DelayedStart => "delayed_start",
            PendingService::UnlockPreemption => "unlock_preemption",
            PendingService::TimedWait => "timed_wait",
            PendingService::PeriodicWait => "periodic_wait",
        }
    }

    /// Map the kernel output of the finishing call onto the service's
    /// return code and value. Used both when the call completes in place
    /// and when it resolves later as a completion.
    fn interpret(self, output: &SysCallOutput) -> (ReturnCode, ApexValue) {
        match self {
            PendingService::SuspendSelf => match output {
                SysCallOutput::Flag(false) => (ReturnCode::TimedOut, ApexValue::None),
                _ => (ReturnCode::NoError, ApexValue::None),
            },
            PendingService::UnlockPreemption => match output {
                SysCallOutput::LockLevel(level) => {
                    (ReturnCode::NoError, ApexValue::LockLevel(*level))
                }
                _ => (ReturnCode::NoError, ApexValue::None),
            },
            _ => (ReturnCode::NoError, ApexValue::None),
        }
    }

    /// The service return carried by a deferred outcome, or `None` when a
    /// partition restart destroyed the blocked call.
    pub fn resolve(self, outcome: &CompletionOutcome) -> Option<(ReturnCode, ApexValue)> {
        match outcome {
            CompletionOutcome::Finished(output) => Some(self.interpret(output)),
            CompletionOutcome::Aborted => None,
        }
    }
}

/// A deferred service return, resolved from a kernel completion.
#[derive(Clone, Debug, PartialEq)]
pub struct ApexDelivery {
    pub partition: PartitionId,
    pub process: ProcessId,
    pub service: PendingService,
    /// Absent when the blocked call was destroyed by a restart.
    pub result: Option<(ReturnCode, ApexValue)>,
}

/// Tracks which service each displaced caller is inside, so kernel
/// completions can be translated back into service returns. Record an
/// entry whenever [`invoke`] answers [`ApexOutcome::Pending`], keyed by
/// the caller captured before the invocation.
#[derive(Debug, Default)]
pub struct PendingTable {
    entries: BTreeMap<(PartitionId, ProcessId), PendingService>,
}

impl PendingTable {
    pub fn new() -> Self {
        PendingTable::default()
    }

    pub fn record(&mut self, partition: PartitionId, process: ProcessId, service: PendingService) {
        self.entries.insert((partition, process), service);
    }

    /// Translate a kernel completion into a service return. Answers
    /// `None` for completions that do not belong to a recorded service.
    pub fn deliver(
        &mut self,
        partition: PartitionId,
        completion: &Completion,
    ) -> Option<ApexDelivery> {
        let service = self.entries.remove(&(partition, completion.process))?;
        Some(ApexDelivery {
            partition,
            process: completion.process,
            service,
            result: service.resolve(&completion.outcome),
        })
    }
}

/// Issue one query call and take its output. Queries never block, so
/// anything other than completion means the service class refused the
/// call and the caller is wedged.
macro_rules! ask {
    ($module:expr, $partition:expr, $call:expr) => {
        match $module.system_call($partition, $call) {
            SysCallResult::Completed(output) => output,
            SysCallResult::Refused => return ApexOutcome::Wedged,
            other => unreachable!("query calls complete in place: {other:?}"),
        }
    };
}

/// Run one service invocation for the current process of `partition`.
///
/// The invocation models the service library executing inside that
/// process, so it must only be issued while the process is actually on
/// the CPU. Capture the caller's id beforehand if the outcome may be
/// [`ApexOutcome::Pending`]: a blocking service switches the current
/// process before it returns.
pub fn invoke(module: &mut Module, partition: PartitionId, call: ApexCall) -> ApexOutcome {
    match call {
        ApexCall::GetPartitionStatus => get_partition_status(module, partition),
        ApexCall::SetOperatingMode(mode) => set_operating_mode(module, partition, mode),
        ApexCall::GetProcessId(name) => get_process_id(module, partition, name),
        ApexCall::GetProcessStatus(procid) => get_process_status(module, partition, procid),
        ApexCall::CreateProcess {
            attribute,
            exe_path,
            swap_path,
            image,
        } => create_process(module, partition, attribute, exe_path, swap_path, image),
        ApexCall::SetPriority(procid, priority) => set_priority(module, partition, procid, priority),
        ApexCall::SuspendSelf(timeout) => suspend_self(module, partition, timeout),
        ApexCall::Suspend(procid) => suspend(module, partition, procid),
        ApexCall::Resume(procid) => resume(module, partition, procid),
        ApexCall::StopSelf => stop_self(module, partition),
        ApexCall::Stop(procid) => stop(module, partition, procid),
        ApexCall::Start(procid) => start(module, partition, procid),
        ApexCall::DelayedStart(procid, delay) => delayed_start(module, partition, procid, delay),
        ApexCall::LockPreemption => lock_preemption(module, partition),
        ApexCall::UnlockPreemption => unlock_preemption(module, partition),
        ApexCall::GetMyId => get_my_id(module, partition),
        ApexCall::TimedWait(delay) => timed_wait(module, partition, delay),
        ApexCall::PeriodicWait => periodic_wait(module, partition),
        ApexCall::GetTime => get_time(module, partition),
        ApexCall::Replenish(budget) => replenish(module, partition, budget),
    }
}

fn done(code: ReturnCode, value: ApexValue) -> ApexOutcome {
    ApexOutcome::Done { code, value }
}

/// Issue the finishing call of a blocking service and fold its result.
fn finish(
    module: &mut Module,
    partition: PartitionId,
    call: SysCall,
    service: PendingService,
) -> ApexOutcome {
    match module.system_call(partition, call) {
        SysCallResult::Completed(output) => {
            let (code, value) = service.interpret(&output);
            done(code, value)
        }
        SysCallResult::Parked => ApexOutcome::Pending(service),
        SysCallResult::Refused => ApexOutcome::Wedged,
        SysCallResult::NoReturn => unreachable!("finishing calls return through the call path"),
    }
}

fn get_partition_status(module: &mut Module, partition: PartitionId) -> ApexOutcome {
    let status = as_partition_status(ask!(module, partition, SysCall::GetPartitionStatus));
    done(ReturnCode::NoError, ApexValue::PartitionStatus(status))
}

fn set_operating_mode(
    module: &mut Module,
    partition: PartitionId,
    next: OperatingMode,
) -> ApexOutcome {
    let om = as_mode(ask!(module, partition, SysCall::GetOperatingMode));
    let allowed = match om {
        OperatingMode::Normal => {
            if next == OperatingMode::Normal {
                return done(ReturnCode::NoAction, ApexValue::None);
            }
            true
        }
        // Warming up from a cold start would skip its longer
        // initialization; everything else is reachable.
        OperatingMode::ColdStart => next != OperatingMode::WarmStart,
        OperatingMode::WarmStart => true,
        // An idle partition runs nothing that could ask.
        OperatingMode::Idle => false,
    };
    if !allowed {
        return done(ReturnCode::InvalidMode, ApexValue::None);
    }
    match module.system_call(partition, SysCall::SetOperatingMode(next)) {
        SysCallResult::NoReturn => ApexOutcome::NoReturn(Some(ReturnCode::NoError)),
        SysCallResult::Refused => ApexOutcome::Wedged,
        other => unreachable!("mode changes never return: {other:?}"),
    }
}

fn get_process_id(module: &mut Module, partition: PartitionId, name: String) -> ApexOutcome {
    let known = as_names(ask!(module, partition, SysCall::GetProcessNames));
    if !known.contains(&name) {
        return done(
            ReturnCode::InvalidConfig,
            ApexValue::Process(NULL_PROCESS_ID),
        );
    }
    let procid = as_process(ask!(module, partition, SysCall::GetProcessId(name)));
    done(ReturnCode::NoError, ApexValue::Process(procid))
}

fn get_process_status(module: &mut Module, partition: PartitionId, procid: ProcessId) -> ApexOutcome {
    let ids = as_ids(ask!(module, partition, SysCall::GetProcessIds));
    if !ids.contains(&procid) {
        return done(
            ReturnCode::InvalidParam,
            ApexValue::Status(ProcessStatus::null()),
        );
    }
    let status = as_status(ask!(module, partition, SysCall::GetProcessStatus(procid)));
    done(ReturnCode::NoError, ApexValue::Status(status))
}

fn create_process(
    module: &mut Module,
    partition: PartitionId,
    attribute: ProcessAttribute,
    exe_path: String,
    swap_path: String,
    image: ExecutableImage,
) -> ApexOutcome {
    let null = ApexValue::Process(NULL_PROCESS_ID);
    let needed = attribute.stack_size + image.data_size + image.code_size;
    let (continuous, discontinuous) = as_free_space(ask!(module, partition, SysCall::GetFreeSpace));
    if continuous < module.constants.kernel_stack_size() || discontinuous < needed {
        return done(ReturnCode::InvalidConfig, null);
    }
    let om = as_mode(ask!(module, partition, SysCall::GetOperatingMode));
    if om == OperatingMode::Normal {
        return done(ReturnCode::InvalidMode, null);
    }
    let names = as_names(ask!(module, partition, SysCall::GetProcessNames));
    if names.contains(&attribute.name) {
        return done(ReturnCode::NoAction, null);
    }
    if attribute.stack_size == 0
        || attribute.stack_size > module.constants.max_stack_size
        || attribute.base_priority < module.constants.min_priority
        || attribute.base_priority > module.constants.max_priority
    {
        return done(ReturnCode::InvalidParam, null);
    }
    if attribute.kind == ProcessKind::Periodic {
        if attribute.time_capacity <= 0 || attribute.time_capacity > attribute.period {
            return done(ReturnCode::InvalidParam, null);
        }
        let partition_period = as_time(ask!(module, partition, SysCall::GetPartitionPeriod));
        if attribute.period % partition_period != 0 {
            return done(ReturnCode::InvalidParam, null);
        }
    } else if attribute.time_capacity == 0 {
        return done(ReturnCode::InvalidParam, null);
    }
    let args = CreateProcessArgs {
        attribute,
        exe_path,
        swap_path,
        image,
    };
    match ask!(module, partition, SysCall::CreateProcess(Box::new(args))) {
        SysCallOutput::Process(procid) => done(ReturnCode::NoError, ApexValue::Process(procid)),
        SysCallOutput::AllocationFailed => done(ReturnCode::InvalidConfig, null),
        other => unreachable!("process creation yields an id or a failure: {other:?}"),
    }
}

fn set_priority(
    module: &mut Module,
    partition: PartitionId,
    procid: ProcessId,
    priority: Priority,
) -> ApexOutcome {
    let ids = as_ids(ask!(module, partition, SysCall::GetProcessIds));
    if !ids.contains(&procid)
        || priority < module.constants.min_priority
        || priority > module.constants.max_priority
    {
        return done(ReturnCode::InvalidParam, ApexValue::None);
    }
    let state = as_state(ask!(module, partition, SysCall::GetProcessState(procid)));
    if state == ProcessState::Dormant {
        return done(ReturnCode::InvalidMode, ApexValue::None);
    }
    finish(
        module,
        partition,
        SysCall::SetPriority(procid, priority),
        PendingService::SetPriority,
    )
}

fn suspend_self(module: &mut Module, partition: PartitionId, timeout: Time) -> ApexOutcome {
    let ll = as_level(ask!(module, partition, SysCall::GetPartitionLockLevel));
    let myid = as_process(ask!(module, partition, SysCall::GetMyId));
    let mykind = as_kind(ask!(module, partition, SysCall::GetProcessKind(myid)));
    if ll > MIN_LOCK_LEVEL || mykind != ProcessKind::Aperiodic {
        return done(ReturnCode::InvalidMode, ApexValue::None);
    }
    let pt = as_time(ask!(module, partition, SysCall::GetPartitionTime));
    if timeout > 0 && pt.checked_add(timeout).is_none() {
        return done(ReturnCode::InvalidParam, ApexValue::None);
    }
    finish(
        module,
        partition,
        SysCall::SuspendSelf {
            partition_time: pt,
            delay: timeout,
        },
        PendingService::SuspendSelf,
    )
}

fn suspend(module: &mut Module, partition: PartitionId, procid: ProcessId) -> ApexOutcome {
    let ids = as_ids(ask!(module, partition, SysCall::GetProcessIds));
    let myid = as_process(ask!(module, partition, SysCall::GetMyId));
    if !ids.contains(&procid) || procid == myid {
        return done(ReturnCode::InvalidParam, ApexValue::None);
    }
    let kind = as_kind(ask!(module, partition, SysCall::GetProcessKind(procid)));
    let state = as_state(ask!(module, partition, SysCall::GetProcessState(procid)));
    if kind == ProcessKind::Periodic || state == ProcessState::Dormant {
        return done(ReturnCode::InvalidMode, ApexValue::None);
    }
    let mykind = as_kind(ask!(module, partition, SysCall::GetProcessKind(myid)));
    if mykind == ProcessKind::ErrorHandler {
        let ll = as_level(ask!(module, partition, SysCall::GetPartitionLockLevel));
        // The handler may not take out the process it is handling while
        // preemption stays locked.
        let errored = module.partition(partition).errored_process();
        if ll > MIN_LOCK_LEVEL && errored == Some(procid) {
            return done(ReturnCode::InvalidMode, ApexValue::None);
        }
    }
    if as_flag(ask!(module, partition, SysCall::Suspend(procid))) {
        done(ReturnCode::NoError, ApexValue::None)
    } else {
        done(ReturnCode::NoAction, ApexValue::None)
    }
}

fn resume(module: &mut Module, partition: PartitionId, procid: ProcessId) -> ApexOutcome {
    let ids = as_ids(ask!(module, partition, SysCall::GetProcessIds));
    if !ids.contains(&procid) {
        return done(ReturnCode::InvalidParam, ApexValue::None);
    }
    let kind = as_kind(ask!(module, partition, SysCall::GetProcessKind(procid)));
    let state = as_state(ask!(module, partition, SysCall::GetProcessState(procid)));
    if kind == ProcessKind::Periodic || state == ProcessState::Dormant {
        return done(ReturnCode::InvalidMode, ApexValue::None);
    }
    if state != ProcessState::Waiting {
        return done(ReturnCode::NoAction, ApexValue::None);
    }
    finish(
        module,
        partition,
        SysCall::Resume(procid),
        PendingService::Resume,
    )
}

fn stop_self(module: &mut Module, partition: PartitionId) -> ApexOutcome {
    match module.system_call(partition, SysCall::StopSelf) {
        SysCallResult::NoReturn => ApexOutcome::NoReturn(None),
        SysCallResult::Refused => ApexOutcome::Wedged,
        other => unreachable!("stopping yourself never returns: {other:?}"),
    }
}

fn stop(module: &mut Module, partition: PartitionId, procid: ProcessId) -> ApexOutcome {
    let ids = as_ids(ask!(module, partition, SysCall::GetProcessIds));
    let myid = as_process(ask!(module, partition, SysCall::GetMyId));
    if !ids.contains(&procid) || procid == myid {
        return done(ReturnCode::InvalidParam, ApexValue::None);
    }
    let state = as_state(ask!(module, partition, SysCall::GetProcessState(procid)));
    if state == ProcessState::Dormant {
        return done(ReturnCode::NoAction, ApexValue::None);
    }
    ask!(module, partition, SysCall::Stop(procid));
    done(ReturnCode::NoError, ApexValue::None)
}

fn start(module: &mut Module, partition: PartitionId, procid: ProcessId) -> ApexOutcome {
    let ids = as_ids(ask!(module, partition, SysCall::GetProcessIds));
    if !ids.contains(&procid) {
        return done(ReturnCode::InvalidParam, ApexValue::None);
    }
    let state = as_state(ask!(module, partition, SysCall::GetProcessState(procid)));
    if state != ProcessState::Dormant {
        return done(ReturnCode::NoAction, ApexValue::None);
    }
    let kind = as_kind(ask!(module, partition, SysCall::GetProcessKind(procid)));
    let om = as_mode(ask!(module, partition, SysCall::GetOperatingMode));
    if om != OperatingMode::Normal {
        // Outside normal mode the process only becomes runnable at the
        // transition, so release and deadline stay unset.
        let call = SysCall::Start {
            process: procid,
            release: DEFAULT_TIME,
            deadline: DEFAULT_TIME,
            mode: om,
        };
        return finish(module, partition, call, PendingService::Start);
    }
    let release = match kind {
        ProcessKind::Periodic => as_time(ask!(module, partition, SysCall::GetNextPeriodicStart)),
        _ => as_time(ask!(module, partition, SysCall::GetCurrentTime)),
    };
    let tc = as_time(ask!(module, partition, SysCall::GetProcessTimeCapacity(procid)));
    let deadline = match release.checked_add(tc) {
        Some(deadline) => deadline,
        None => return done(ReturnCode::InvalidConfig, ApexValue::None),
    };
    finish(
        module,
        partition,
        SysCall::Start {
            process: procid,
            release,
            deadline,
            mode: om,
        },
        PendingService::Start,
    )
}

fn delayed_start(
    module: &mut Module,
    partition: PartitionId,
    procid: ProcessId,
    delay: Time,
) -> ApexOutcome {
    let ids = as_ids(ask!(module, partition, SysCall::GetProcessIds));
    if !ids.contains(&procid) || delay < 0 {
        return done(ReturnCode::InvalidParam, ApexValue::None);
    }
    let state = as_state(ask!(module, partition, SysCall::GetProcessState(procid)));
    if state != ProcessState::Dormant {
        return done(ReturnCode::NoAction, ApexValue::None);
    }
    let kind = as_kind(ask!(module, partition, SysCall::GetProcessKind(procid)));
    if kind == ProcessKind::Periodic {
        let period = as_time(ask!(module, partition, SysCall::GetProcessPeriod(procid)));
        if delay >= period {
            return done(ReturnCode::InvalidParam, ApexValue::None);
        }
    }
    let om = as_mode(ask!(module, partition, SysCall::GetOperatingMode));
    if om != OperatingMode::Normal {
        let call = SysCall::DelayedStart {
            process: procid,
            release: DEFAULT_TIME,
            delay,
            deadline: DEFAULT_TIME,
            mode: om,
        };
        return finish(module, partition, call, PendingService::DelayedStart);
    }
    let (release, horizon) = match kind {
        ProcessKind::Periodic => {
            let dps = as_time(ask!(module, partition, SysCall::GetDelayedPeriodicStart(delay)));
            (dps, dps)
        }
        _ => {
            let ct = as_time(ask!(module, partition, SysCall::GetCurrentTime));
            match ct.checked_add(delay) {
                Some(sum) => (ct, sum),
                None => return done(ReturnCode::InvalidConfig, ApexValue::None),
            }
        }
    };
    let tc = as_time(ask!(module, partition, SysCall::GetProcessTimeCapacity(procid)));
    let deadline = match horizon.checked_add(tc) {
        Some(deadline) => deadline,
        None => return done(ReturnCode::InvalidConfig, ApexValue::None),
    };
    finish(
        module,
        partition,
        SysCall::DelayedStart {
            process: procid,
            release,
            delay,
            deadline,
            mode: om,
        },
        PendingService::DelayedStart,
    )
}

fn lock_preemption(module: &mut Module, partition: PartitionId) -> ApexOutcome {
    let om = as_mode(ask!(module, partition, SysCall::GetOperatingMode));
    let myid = as_process(ask!(module, partition, SysCall::GetMyId));
    let mykind = as_kind(ask!(module, partition, SysCall::GetProcessKind(myid)));
    let ll = as_level(ask!(module, partition, SysCall::GetPartitionLockLevel));
    if om != OperatingMode::Normal || mykind == ProcessKind::ErrorHandler {
        return done(ReturnCode::NoAction, ApexValue::LockLevel(ll));
    }
    if ll >= module.constants.max_lock_level {
        return done(ReturnCode::InvalidConfig, ApexValue::LockLevel(ll));
    }
    let raised = as_level(ask!(module, partition, SysCall::LockPreemption));
    done(ReturnCode::NoError, ApexValue::LockLevel(raised))
}

fn unlock_preemption(module: &mut Module, partition: PartitionId) -> ApexOutcome {
    let om = as_mode(ask!(module, partition, SysCall::GetOperatingMode));
    let myid = as_process(ask!(module, partition, SysCall::GetMyId));
    let mykind = as_kind(ask!(module, partition, SysCall::GetProcessKind(myid)));
    let ll = as_level(ask!(module, partition, SysCall::GetPartitionLockLevel));
    if om != OperatingMode::Normal
        || mykind == ProcessKind::ErrorHandler
        || ll == MIN_LOCK_LEVEL
    {
        return done(ReturnCode::NoAction, ApexValue::LockLevel(ll));
    }
    finish(
        module,
        partition,
        SysCall::UnlockPreemption,
        PendingService::UnlockPreemption,
    )
}

fn get_my_id(module: &mut Module, partition: PartitionId) -> ApexOutcome {
    let myid = as_process(ask!(module, partition, SysCall::GetMyId));
    let mykind = as_kind(ask!(module, partition, SysCall::GetProcessKind(myid)));
    if mykind == ProcessKind::ErrorHandler {
        return done(ReturnCode::InvalidMode, ApexValue::None);
    }
    done(ReturnCode::NoError, ApexValue::Process(myid))
}

fn timed_wait(module: &mut Module, partition: PartitionId, delay: Time) -> ApexOutcome {
    let ll = as_level(ask!(module, partition, SysCall::GetPartitionLockLevel));
    let myid = as_process(ask!(module, partition, SysCall::GetMyId));
    let mykind = as_kind(ask!(module, partition, SysCall::GetProcessKind(myid)));
    if ll > MIN_LOCK_LEVEL || mykind == ProcessKind::ErrorHandler {
        return done(ReturnCode::InvalidMode, ApexValue::None);
    }
    let pt = as_time(ask!(module, partition, SysCall::GetPartitionTime));
    if delay < 0 || pt.checked_add(delay).is_none() {
        return done(ReturnCode::InvalidParam, ApexValue::None);
    }
    finish(
        module,
        partition,
        SysCall::TimedWait {
            partition_time: pt,
            delay,
        },
        PendingService::TimedWait,
    )
}

fn periodic_wait(module: &mut Module, partition: PartitionId) -> ApexOutcome {
    let ll = as_level(ask!(module, partition, SysCall::GetPartitionLockLevel));
    let myid = as_process(ask!(module, partition, SysCall::GetMyId));
    let mykind = as_kind(ask!(module, partition, SysCall::GetProcessKind(myid)));
    if ll > MIN_LOCK_LEVEL || mykind != ProcessKind::Periodic {
        return done(ReturnCode::InvalidMode, ApexValue::None);
    }
    let nrp = as_time(ask!(module, partition, SysCall::GetNextReleasePoint(myid)));
    let tc = as_time(ask!(module, partition, SysCall::GetProcessTimeCapacity(myid)));
    let deadline = match nrp.checked_add(tc) {
        Some(deadline) => deadline,
        None => return done(ReturnCode::InvalidConfig, ApexValue::None),
    };
    finish(
        module,
        partition,
        SysCall::PeriodicWait {
            release: nrp,
            deadline,
        },
        PendingService::PeriodicWait,
    )
}

fn get_time(module: &mut Module, partition: PartitionId) -> ApexOutcome {
    let t = as_time(ask!(module, partition, SysCall::GetTime));
    done(ReturnCode::NoError, ApexValue::Time(t))
}

fn replenish(module: &mut Module, partition: PartitionId, budget: Time) -> ApexOutcome {
    let om = as_mode(ask!(module, partition, SysCall::GetOperatingMode));
    let myid = as_process(ask!(module, partition, SysCall::GetMyId));
    let mykind = as_kind(ask!(module, partition, SysCall::GetProcessKind(myid)));
    if om != OperatingMode::Normal || mykind == ProcessKind::ErrorHandler {
        return done(ReturnCode::NoAction, ApexValue::None);
    }
    let nrp = if mykind == ProcessKind::Periodic {
        Some(as_time(ask!(module, partition, SysCall::GetNextReleasePoint(myid))))
    } else {
        None
    };
    let ct = as_time(ask!(module, partition, SysCall::GetCurrentTime));
    if budget == 0 {
        return done(ReturnCode::NoError, ApexValue::None);
    }
    match nrp {
        // Aperiodic: a negative budget clears the deadline, a positive
        // one must stay within the time type.
        None => {
            if budget > 0 && ct.checked_add(budget).is_none() {
                return done(ReturnCode::InvalidParam, ApexValue::None);
            }
        }
        // Periodic: the extended deadline may not cross the next release.
        Some(nrp) => {
            if budget < 0 {
                return done(ReturnCode::InvalidParam, ApexValue::None);
            }
            let horizon = match ct.checked_add(budget) {
                Some(sum) => sum,
                None => return done(ReturnCode::InvalidParam, ApexValue::None),
            };
            if horizon > nrp {
                return done(ReturnCode::InvalidMode, ApexValue::None);
            }
        }
    }
    ask!(
        module,
        partition,
        SysCall::Replenish {
            current_time: ct,
            budget,
        }
    );
    done(ReturnCode::NoError, ApexValue::None)
}

fn as_mode(output: SysCallOutput) -> OperatingMode {
    match output {
        SysCallOutput::Mode(mode) => mode,
        other => unreachable!("mode query produced {other:?}"),
    }
}

fn as_partition_status(output: SysCallOutput) -> crate::kernel::PartitionStatus {
    match output {
        SysCallOutput::PartitionStatus(status) => status,
        other => unreachable!("partition status query produced {other:?}"),
    }
}

fn as_names(output: SysCallOutput) -> Vec<String> {
    match output {
        SysCallOutput::Names(names) => names,
        other => unreachable!("name query produced {other:?}"),
    }
}

fn as_ids(output: SysCallOutput) -> Vec<ProcessId> {
    match output {
        SysCallOutput::Ids(ids) => ids,
        other => unreachable!("id query produced {other:?}"),
    }
}

fn as_free_space(output: SysCallOutput) -> (u64, u64) {
    match output {
        SysCallOutput::FreeSpace {
            continuous,
            discontinuous,
        } => (continuous, discontinuous),
        other => unreachable!("free space query produced {other:?}"),
    }
}

fn as_time(output: SysCallOutput) -> Time {
    match output {
        SysCallOutput::Time(time) => time,
        other => unreachable!("time query produced {other:?}"),
    }
}

fn as_level(output: SysCallOutput) -> LockLevel {
    match output {
        SysCallOutput::LockLevel(level) => level,
        other => unreachable!("lock level query produced {other:?}"),
    }
}

fn as_state(output: SysCallOutput) -> ProcessState {
    match output {
        SysCallOutput::State(state) => state,
        other => unreachable!("state query produced {other:?}"),
    }
}

fn as_kind(output: SysCallOutput) -> ProcessKind {
    match output {
        SysCallOutput::Kind(kind) => kind,
        other => unreachable!("kind query produced {other:?}"),
    }
}

fn as_process(output: SysCallOutput) -> ProcessId {
    match output {
        SysCallOutput::Process(procid) => procid,
        other => unreachable!("process query produced {other:?}"),
    }
}

fn as_status(output: SysCallOutput) -> ProcessStatus {
    match output {
        SysCallOutput::Status(status) => status,
        other => unreachable!("status query produced {other:?}"),
    }
}

fn as_flag(output: SysCallOutput) -> bool {
    match output {
        SysCallOutput::Flag(flag) => flag,
        other => unreachable!("flag query produced {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{ModuleConfig, PartitionConfig, WindowConfig};
    use crate::types::{Constants, DeadlineKind, MemoryBlock};

    const MS: Time = 1_000_000;
    const APP: PartitionId = 1;

    fn solo_config() -> ModuleConfig {
        ModuleConfig {
            module_id: 1,
            module_name: "apexbox".to_string(),
            constants: Constants::default(),
            physical_memory: MemoryBlock::new(0, 1 << 24),
            kernel_memory: MemoryBlock::new(0, 1 << 22),
            kernel_image: MemoryBlock::new(0, 1 << 20),
            partitions: vec![PartitionConfig {
                name: "app".to_string(),
                memory: MemoryBlock::new(1 << 22, 1 << 23),
                period: 2 * MS,
                duration: MS,
                total_process: 8,
            }],
            windows: vec![WindowConfig {
                partition: "app".to_string(),
                periodic_start: true,
            }],
        }
    }

    /// Boot and run to the partition's first window at system time zero.
    fn in_first_window() -> crate::module::Module {
        let mut module = crate::module::Module::new(solo_config(), 0).unwrap();
        module.boot();
        module.run_until(2 * MS as u64);
        assert_eq!(module.core.current_partition, APP);
        module
    }

    fn worker_attribute(name: &str, priority: Priority) -> ProcessAttribute {
        ProcessAttribute {
            name: name.to_string(),
            kind: ProcessKind::Aperiodic,
            entry_point: 0x1_0000,
            stack_size: 4096,
            base_priority: priority,
            period: DEFAULT_TIME,
            time_capacity: DEFAULT_TIME,
            deadline: DeadlineKind::Soft,
        }
    }

    fn create(module: &mut crate::module::Module, attribute: ProcessAttribute) -> ApexOutcome {
        invoke(
            module,
            APP,
            ApexCall::CreateProcess {
                attribute,
                exe_path: "app.exe".to_string(),
                swap_path: "app.swap".to_string(),
                image: ExecutableImage {
                    data_size: 4096,
                    code_size: 4096,
                },
            },
        )
    }

    /// Create and start the given workers, then switch to normal mode.
    fn in_normal_mode(workers: &[(&str, Priority)]) -> crate::module::Module {
        let mut module = in_first_window();
        for (name, priority) in workers {
            let outcome = create(&mut module, worker_attribute(name, *priority));
            assert!(
                matches!(
                    outcome,
                    ApexOutcome::Done { code: ReturnCode::NoError, .. }
                ),
                "creating {name} failed: {outcome:?}"
            );
        }
        for procid in 1..=workers.len() as ProcessId {
            let outcome = invoke(&mut module, APP, ApexCall::Start(procid));
            assert!(
                matches!(
                    outcome,
                    ApexOutcome::Done { code: ReturnCode::NoError, .. }
                ),
                "starting {procid} failed: {outcome:?}"
            );
        }
        let outcome = invoke(
            &mut module,
            APP,
            ApexCall::SetOperatingMode(OperatingMode::Normal),
        );
        assert_eq!(outcome, ApexOutcome::NoReturn(Some(ReturnCode::NoError)));
        module
    }

    #[test]
    fn partition_status_answers_during_setup() {
        let mut module = in_first_window();
        match invoke(&mut module, APP, ApexCall::GetPartitionStatus) {
            ApexOutcome::Done {
                code,
                value: ApexValue::PartitionStatus(status),
            } => {
                assert_eq!(code, ReturnCode::NoError);
                assert_eq!(status.partition_id, APP);
                assert_eq!(status.operating_mode, OperatingMode::ColdStart);
                assert_eq!(status.period, 2 * MS);
            }
            other => panic!("unexpected outcome: {other:?}"),
        }
    }

    #[test]
    fn creation_guards_filter_bad_attributes() {
        let mut module = in_first_window();

        let mut no_stack = worker_attribute("a", 10);
        no_stack.stack_size = 0;
        let outcome = create(&mut module, no_stack);
        assert_eq!(
            outcome,
            done(ReturnCode::InvalidParam, ApexValue::Process(NULL_PROCESS_ID))
        );

        let mut outranked = worker_attribute("b", 10);
        outranked.base_priority = 0;
        let outcome = create(&mut module, outranked);
        assert_eq!(
            outcome,
            done(ReturnCode::InvalidParam, ApexValue::Process(NULL_PROCESS_ID))
        );

        let mut greedy = worker_attribute("c", 10);
        greedy.kind = ProcessKind::Periodic;
        greedy.period = 2 * MS;
        greedy.time_capacity = 3 * MS;
        let outcome = create(&mut module, greedy);
        assert_eq!(
            outcome,
            done(ReturnCode::InvalidParam, ApexValue::Process(NULL_PROCESS_ID))
        );

        let mut offbeat = worker_attribute("d", 10);
        offbeat.kind = ProcessKind::Periodic;
        offbeat.period = 3 * MS;
        offbeat.time_capacity = MS;
        let outcome = create(&mut module, offbeat);
        assert_eq!(
            outcome,
            done(ReturnCode::InvalidParam, ApexValue::Process(NULL_PROCESS_ID))
        );

        let outcome = create(&mut module, worker_attribute("worker", 10));
        assert_eq!(outcome, done(ReturnCode::NoError, ApexValue::Process(1)));

        let outcome = create(&mut module, worker_attribute("worker", 20));
        assert_eq!(
            outcome,
            done(ReturnCode::NoAction, ApexValue::Process(NULL_PROCESS_ID))
        );
    }

    #[test]
    fn time_queries_are_refused_during_setup() {
        let mut module = in_first_window();
        assert_eq!(
            invoke(&mut module, APP, ApexCall::GetTime),
            ApexOutcome::Wedged
        );
    }

    #[test]
    fn mode_change_launches_started_processes() {
        let mut module = in_normal_mode(&[("worker", 10)]);
        assert_eq!(module.partition(APP).current_process(), 1);
        assert_eq!(
            invoke(&mut module, APP, ApexCall::GetMyId),
            done(ReturnCode::NoError, ApexValue::Process(1))
        );
        assert_eq!(
            invoke(&mut module, APP, ApexCall::SetOperatingMode(OperatingMode::Normal)),
            done(ReturnCode::NoAction, ApexValue::None)
        );
        match invoke(&mut module, APP, ApexCall::GetTime) {
            ApexOutcome::Done {
                code: ReturnCode::NoError,
                value: ApexValue::Time(t),
            } => assert_eq!(t, 0),
            other => panic!("unexpected outcome: {other:?}"),
        }
    }

    #[test]
    fn suspend_self_times_out_at_the_wall_clock_deadline() {
        let mut module = in_normal_mode(&[("worker", 10)]);
        let mut pending = PendingTable::new();
        let caller = module.partition(APP).current_process();

        let outcome = invoke(&mut module, APP, ApexCall::SuspendSelf(MS));
        assert_eq!(outcome, ApexOutcome::Pending(PendingService::SuspendSelf));
        pending.record(APP, caller, PendingService::SuspendSelf);
        assert_eq!(module.partition(APP).current_process(), 0);

        // The next window starts one period later; the expired counter
        // wakes the worker there.
        module.run_until(4 * MS as u64);
        let completions = module.drain_completions();
        assert_eq!(completions.len(), 1);
        let (partid, completion) = &completions[0];
        let delivery = pending.deliver(*partid, completion).unwrap();
        assert_eq!(delivery.process, caller);
        assert_eq!(delivery.service, PendingService::SuspendSelf);
        assert_eq!(delivery.result, Some((ReturnCode::TimedOut, ApexValue::None)));
        assert_eq!(module.partition(APP).current_process(), caller);
    }

    #[test]
    fn resume_wakes_a_suspended_process() {
        let mut module = in_normal_mode(&[("boss", 10), ("dozer", 20)]);
        let mut pending = PendingTable::new();
        assert_eq!(module.partition(APP).current_process(), 2);

        let outcome = invoke(&mut module, APP, ApexCall::SuspendSelf(-1));
        assert_eq!(outcome, ApexOutcome::Pending(PendingService::SuspendSelf));
        pending.record(APP, 2, PendingService::SuspendSelf);
        assert_eq!(module.partition(APP).current_process(), 1);

        // Waking the higher-priority sleeper preempts the caller, so the
        // resume itself goes pending and the suspension finishes first.
        let outcome = invoke(&mut module, APP, ApexCall::Resume(2));
        assert_eq!(outcome, ApexOutcome::Pending(PendingService::Resume));
        pending.record(APP, 1, PendingService::Resume);
        assert_eq!(module.partition(APP).current_process(), 2);

        let completions = module.drain_completions();
        assert_eq!(completions.len(), 1);
        let delivery = pending.deliver(APP, &completions[0].1).unwrap();
        assert_eq!(delivery.process, 2);
        assert_eq!(delivery.result, Some((ReturnCode::NoError, ApexValue::None)));

        let outcome = invoke(&mut module, APP, ApexCall::StopSelf);
        assert_eq!(outcome, ApexOutcome::NoReturn(None));
        assert_eq!(module.partition(APP).current_process(), 1);

        let completions = module.drain_completions();
        assert_eq!(completions.len(), 1);
        let delivery = pending.deliver(APP, &completions[0].1).unwrap();
        assert_eq!(delivery.process, 1);
        assert_eq!(delivery.service, PendingService::Resume);
        assert_eq!(delivery.result, Some((ReturnCode::NoError, ApexValue::None)));
    }

    #[test]
    fn lock_levels_gate_the_waiting_services() {
        let mut module = in_normal_mode(&[("worker", 10)]);

        let outcome = invoke(&mut module, APP, ApexCall::LockPreemption);
        assert_eq!(outcome, done(ReturnCode::NoError, ApexValue::LockLevel(1)));

        assert_eq!(
            invoke(&mut module, APP, ApexCall::TimedWait(MS)),
            done(ReturnCode::InvalidMode, ApexValue::None)
        );
        assert_eq!(
            invoke(&mut module, APP, ApexCall::SuspendSelf(MS)),
            done(ReturnCode::InvalidMode, ApexValue::None)
        );

        let outcome = invoke(&mut module, APP, ApexCall::UnlockPreemption);
        assert_eq!(outcome, done(ReturnCode::NoError, ApexValue::LockLevel(0)));

        assert_eq!(
            invoke(&mut module, APP, ApexCall::UnlockPreemption),
            done(ReturnCode::NoAction, ApexValue::LockLevel(0))
        );
    }

    #[test]
    fn replenish_follows_the_budget_rules() {
        let mut module = in_first_window();
        assert_eq!(
            invoke(&mut module, APP, ApexCall::Replenish(MS)),
            done(ReturnCode::NoAction, ApexValue::None)
        );

        let mut module = in_normal_mode(&[("worker", 10)]);
        assert_eq!(
            invoke(&mut module, APP, ApexCall::Replenish(0)),
            done(ReturnCode::NoError, ApexValue::None)
        );
        assert_eq!(
            invoke(&mut module, APP, ApexCall::Replenish(MS)),
            done(ReturnCode::NoError, ApexValue::None)
        );
        assert_eq!(
            invoke(&mut module, APP, ApexCall::Replenish(-1)),
            done(ReturnCode::NoError, ApexValue::None)
        );
        assert_eq!(
            invoke(&mut module, APP, ApexCall::Replenish(Time::MAX)),
            done(ReturnCode::InvalidParam, ApexValue::None)
        );
    }
}
