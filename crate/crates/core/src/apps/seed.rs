use std::time::{SystemTime, UNIX_EPOCH};

use crate::dpd::DistVal;
use crate::error::Result;
use crate::groups::Group;

/// Nanoseconds since the Unix epoch.
pub fn now_nanos() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos() as u64)
}

/// Every rank reads its clock and all agree on the smallest reading with a
/// single all-min. Pass [`now_nanos`] outside of tests.
pub fn seed_agreement(world: &Group, timestamp: impl FnOnce() -> u64) -> Result<u64> {
    let agreed = DistVal::new(world, timestamp).all_min()?;
    Ok(agreed.expect("every rank belongs to the world group"))
}
