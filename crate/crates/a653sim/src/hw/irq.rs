//! Interrupt controller with request, mask, and in-service registers.
//!
//! Lower line numbers have higher priority. Raising latches a request
//! bit; the controller offers a line for delivery when it is the
//! lowest-numbered unmasked request and either no interrupt is in
//! service or every in-service line is lower priority (higher number).
//! Accepting delivery moves the line from requested to in-service;
//! completion clears the in-service bit.

use crate::types::{IrqLine, IRQ_LINE_COUNT};

fn bit(line: IrqLine) -> u8 {
    debug_assert!((line as usize) < IRQ_LINE_COUNT);
    1u8 << line
}

fn lowest_set(bits: u8) -> Option<IrqLine> {
    if bits == 0 {
        None
    } else {
        Some(bits.trailing_zeros() as IrqLine)
    }
}

#[derive(Clone, Debug, Default)]
pub struct InterruptController {
    irr: u8,
    imr: u8,
    isr: u8,
}

impl InterruptController {
    pub fn new() -> Self {
        Self::default()
    }

    /// Latch a hardware interrupt request. Idempotent while pending.
    pub fn raise(&mut self, line: IrqLine) {
        self.irr |= bit(line);
    }

    pub fn mask(&mut self, line: IrqLine) {
        self.imr |= bit(line);
    }

    pub fn unmask(&mut self, line: IrqLine) {
        self.imr &= !bit(line);
    }

    pub fn is_pending(&self, line: IrqLine) -> bool {
        self.irr & bit(line) != 0
    }

    pub fn is_masked(&self, line: IrqLine) -> bool {
        self.imr & bit(line) != 0
    }

    pub fn is_in_service(&self, line: IrqLine) -> bool {
        self.isr & bit(line) != 0
    }

    pub fn request_register(&self) -> u8 {
        self.irr
    }

    pub fn mask_register(&self) -> u8 {
        self.imr
    }

    pub fn in_service_register(&self) -> u8 {
        self.isr
    }

    pub fn any_in_service(&self) -> bool {
        self.isr != 0
    }

    /// The line the controller would deliver next, if any: the highest
    /// priority unmasked request, provided it outranks everything in
    /// service.
    pub fn deliverable(&self) -> Option<IrqLine> {
        let candidate = lowest_set(self.irr & !self.imr)?;
        match lowest_set(self.isr) {
            Some(serving) if serving <= candidate => None,
            _ => Some(candidate),
        }
    }

    /// Accept delivery of a line: mark it in service and clear its
    /// request bit.
    pub fn begin_service(&mut self, line: IrqLine) {
        self.isr |= bit(line);
        self.irr &= !bit(line);
    }

    /// End-of-interrupt for a line.
    pub fn complete(&mut self, line: IrqLine) {
        self.isr &= !bit(line);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_numbered_unmasked_request_wins() {
        let mut ic = InterruptController::new();
        ic.raise(5);
        ic.raise(2);
        assert_eq!(ic.deliverable(), Some(2));
        ic.mask(2);
        assert_eq!(ic.deliverable(), Some(5));
        ic.unmask(2);
        assert_eq!(ic.deliverable(), Some(2));
    }

    #[test]
    fn in_service_line_blocks_equal_and_lower_priority() {
        let mut ic = InterruptController::new();
        ic.raise(3);
        ic.begin_service(3);
        assert!(!ic.is_pending(3));
        ic.raise(3);
        assert_eq!(ic.deliverable(), None);
        ic.raise(6);
        assert_eq!(ic.deliverable(), None);
        ic.raise(1);
        assert_eq!(ic.deliverable(), Some(1));
        ic.begin_service(1);
        assert_eq!(ic.deliverable(), None);
        ic.complete(1);
        assert_eq!(ic.deliverable(), None);
        ic.complete(3);
        assert_eq!(ic.deliverable(), Some(3));
    }

    #[test]
    fn masked_request_stays_latched_until_unmasked() {
        let mut ic = InterruptController::new();
        ic.mask(0);
        ic.raise(0);
        assert_eq!(ic.deliverable(), None);
        assert!(ic.is_pending(0));
        ic.unmask(0);
        assert_eq!(ic.deliverable(), Some(0));
    }
}
