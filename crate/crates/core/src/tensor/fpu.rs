//! Flush-to-zero for subnormal floats.
//!
//! Once a network grows confident, backpropagated gradients underflow into
//! the subnormal range, where multiplies cost many times more than for
//! normal values. Epoch times then depend on how far training has
//! progressed instead of on the work done. While a [`FlushToZero`] guard is
//! alive, the current thread treats subnormal inputs and results as zero.

/// Restores the previous floating-point control state on drop.
pub struct FlushToZero {
    #[cfg_attr(not(any(target_arch = "x86_64", target_arch = "aarch64")), allow(dead_code))]
    saved: u64,
}

impl FlushToZero {
    pub fn enable() -> Self {
        let saved = arch::read();
        arch::write(saved | arch::FLUSH_BITS);
        FlushToZero { saved }
    }
}

impl Drop for FlushToZero {
    fn drop(&mut self) {
        arch::write(self.saved);
    }
}

#[cfg(target_arch = "x86_64")]
mod arch {
    use std::arch::asm;

    /// MXCSR flush-to-zero (bit 15) and denormals-are-zero (bit 6).
    pub const FLUSH_BITS: u64 = (1 << 15) | (1 << 6);

    pub fn read() -> u64 {
        let mut csr: u32 = 0;
        // SAFETY: stmxcsr stores the SSE control register into `csr`.
        unsafe { asm!("stmxcsr [{}]", in(reg) &mut csr, options(nostack)) };
        csr as u64
    }

    pub fn write(value: u64) {
        let csr = value as u32;
        // SAFETY: ldmxcsr loads a control word derived from the current one;
        // only the flush bits differ.
        unsafe { asm!("ldmxcsr [{}]", in(reg) &csr, options(nostack, readonly)) };
    }
}

#[cfg(target_arch = "aarch64")]
mod arch {
    use std::arch::asm;

    /// FPCR flush-to-zero (bit 24).
    pub const FLUSH_BITS: u64 = 1 << 24;

    pub fn read() -> u64 {
        let value: u64;
        // SAFETY: reading FPCR has no side effects.
        unsafe { asm!("mrs {}, fpcr", out(reg) value, options(nomem, nostack)) };
        value
    }

    pub fn write(value: u64) {
        // SAFETY: writes back a control word derived from the current one;
        // only the flush bit differs.
        unsafe { asm!("msr fpcr, {}", in(reg) value, options(nomem, nostack)) };
    }
}

#[cfg(not(any(target_arch = "x86_64", target_arch = "aarch64")))]
mod arch {
    pub const FLUSH_BITS: u64 = 0;

    pub fn read() -> u64 {
        0
    }

    pub fn write(_: u64) {}
}
