//! Allocation budget shared by the grid and table builders.

use crate::error::{Error, Result};

/// Environment variable holding the allocation cap in bytes.
pub const MAX_MEM_ENV: &str = "RANGECAP_MAX_MEM";

/// Cap used when the environment does not set one.
pub const DEFAULT_MAX_MEM: u64 = 2 << 30;

pub fn memory_budget() -> u64 {
    std::env::var(MAX_MEM_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_MEM)
}

/// Fail with a resource error if `bytes` would exceed the budget.
pub fn check_allocation(what: &str, bytes: u128) -> Result<()> {
    let cap = memory_budget();
    if bytes > cap as u128 {
        return Err(Error::Resource(format!(
            "{what} needs {bytes} bytes, above the {cap} byte cap ({MAX_MEM_ENV})"
        )));
    }
    Ok(())
}
