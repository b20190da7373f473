//! In-process global name service: flat identifiers resolve to geodetic
//! locators, and each resolution leases an opaque public-address token to the
//! requesting endpoint.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Static geodetic locator of an endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Locator {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_km: f64,
}

/// Opaque lease token; no address-translation semantics attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaseToken(pub u64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub locator: Locator,
    pub last_update_t: f64,
}

/// The name directory. Reads are pure; updates are serialized by `&mut`.
#[derive(Debug, Clone, Default)]
pub struct GnsDirectory {
    bindings: BTreeMap<String, Binding>,
    leases: BTreeMap<String, LeaseToken>,
    next_lease: u64,
}

impl GnsDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers or replaces a binding without an identifier-exists check;
    /// used when loading the ground-station table.
    pub fn bind(&mut self, identifier: impl Into<String>, locator: Locator, t: f64) {
        self.bindings.insert(
            identifier.into(),
            Binding {
                locator,
                last_update_t: t,
            },
        );
    }

    pub fn binding(&self, identifier: &str) -> Option<&Binding> {
        self.bindings.get(identifier)
    }

    pub fn lease(&self, identifier: &str) -> Option<LeaseToken> {
        self.leases.get(identifier).copied()
    }

    /// Resolves the destination identifier to its locator and leases a fresh
    /// public-address token to the source. Unbound identifiers fail with a
    /// resolution error, distinct from any transport failure.
    pub fn resolve(
        &mut self,
        src_identifier: &str,
        dst_identifier: &str,
        _t: f64,
    ) -> Result<(Locator, LeaseToken)> {
        let binding = self
            .bindings
            .get(dst_identifier)
            .ok_or_else(|| Error::UnboundIdentifier(dst_identifier.to_string()))?;
        let token = LeaseToken(self.next_lease);
        self.next_lease += 1;
        self.leases.insert(src_identifier.to_string(), token);
        Ok((binding.locator, token))
    }

    /// Replaces the locator of a known identifier.
    pub fn update(&mut self, identifier: &str, locator: Locator, t: f64) -> Result<()> {
        let binding = self
            .bindings
            .get_mut(identifier)
            .ok_or_else(|| Error::UnboundIdentifier(identifier.to_string()))?;
        binding.locator = locator;
        binding.last_update_t = t;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn london() -> Locator {
        Locator {
            lat_deg: 51.5,
            lon_deg: -0.12,
            alt_km: 0.0,
        }
    }

    #[test]
    fn resolve_returns_locator_and_leases() {
        let mut gns = GnsDirectory::new();
        gns.bind("LON", london(), 0.0);
        let (loc, lease) = gns.resolve("SIN", "LON", 1.0).unwrap();
        assert_eq!(loc, london());
        assert_eq!(gns.lease("SIN"), Some(lease));
    }

    #[test]
    fn unbound_identifier_fails() {
        let mut gns = GnsDirectory::new();
        assert!(matches!(
            gns.resolve("a", "nowhere", 0.0),
            Err(Error::UnboundIdentifier(_))
        ));
    }

    #[test]
    fn repeat_resolutions_same_locator_fresh_tokens() {
        let mut gns = GnsDirectory::new();
        gns.bind("LON", london(), 0.0);
        let (loc1, t1) = gns.resolve("SIN", "LON", 1.0).unwrap();
        let (loc2, t2) = gns.resolve("SIN", "LON", 2.0).unwrap();
        assert_eq!(loc1, loc2);
        assert_ne!(t1, t2);
    }

    #[test]
    fn update_is_read_your_write() {
        let mut gns = GnsDirectory::new();
        gns.bind("X", london(), 0.0);
        let moved = Locator {
            lat_deg: 1.0,
            lon_deg: 2.0,
            alt_km: 0.0,
        };
        gns.update("X", moved, 5.0).unwrap();
        let (loc, _) = gns.resolve("Y", "X", 6.0).unwrap();
        assert_eq!(loc, moved);
        assert_eq!(gns.binding("X").unwrap().last_update_t, 5.0);
        assert!(gns.update("missing", moved, 7.0).is_err());
    }

    #[test]
    fn idempotent_update_touches_timestamp_only() {
        let mut gns = GnsDirectory::new();
        gns.bind("X", london(), 0.0);
        gns.update("X", london(), 9.0).unwrap();
        let b = gns.binding("X").unwrap();
        assert_eq!(b.locator, london());
        assert_eq!(b.last_update_t, 9.0);
    }
}
