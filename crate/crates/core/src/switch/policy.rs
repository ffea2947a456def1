//! Cell drop decisions for tail drop, Early Packet Discard, Selective Drop
//! and Fair Buffer Allocation.
//!
//! Notation follows the usual buffer-management vocabulary: `k` is the buffer
//! capacity, `x` the current occupancy, `r` the minimum drop threshold, `y`
//! the arriving VC's cell count and `n_active` the number of VCs holding at
//! least one cell. All comparisons are exact; no floating point is involved.

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::ConfigError;

/// Exact non-negative rational used for the Z scale factor.
pub type ScaleFactor = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Plain UBR: drop a cell only when the buffer is full.
    #[serde(rename = "UBR")]
    TailDrop,
    #[serde(rename = "EPD")]
    Epd,
    #[serde(rename = "SD")]
    SelectiveDrop,
    #[serde(rename = "FBA")]
    Fba,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::TailDrop,
        PolicyKind::Epd,
        PolicyKind::SelectiveDrop,
        PolicyKind::Fba,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::TailDrop => "UBR",
            PolicyKind::Epd => "EPD",
            PolicyKind::SelectiveDrop => "SD",
            PolicyKind::Fba => "FBA",
        }
    }

    /// Whether the policy consults the scale factor Z.
    pub fn uses_scale(self) -> bool {
        matches!(self, PolicyKind::SelectiveDrop | PolicyKind::Fba)
    }

    pub fn uses_threshold(self) -> bool {
        self != PolicyKind::TailDrop
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PolicyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ubr" | "tail_drop" | "taildrop" | "tail-drop" => Ok(PolicyKind::TailDrop),
            "epd" => Ok(PolicyKind::Epd),
            "sd" | "selective_drop" | "selective-drop" | "selectivedrop" => {
                Ok(PolicyKind::SelectiveDrop)
            }
            "fba" => Ok(PolicyKind::Fba),
            other => Err(ConfigError::invalid(
                "policy",
                format!("unknown policy `{other}`"),
            )),
        }
    }
}

/// Drop policy attached to a switch output buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Minimum drop threshold R in cells (the EPD threshold for EPD).
    pub threshold: u64,
    /// Load-ratio scale factor Z.
    pub scale: ScaleFactor,
}

impl PolicyConfig {
    pub fn tail_drop() -> Self {
        Self {
            kind: PolicyKind::TailDrop,
            threshold: 0,
            scale: ScaleFactor::from_integer(1),
        }
    }

    pub fn new(kind: PolicyKind, threshold: u64, scale: ScaleFactor) -> Self {
        Self {
            kind,
            threshold,
            scale,
        }
    }

    /// Checks `0 < R < K` and `Z > 0` for the policies that use them.
    pub fn validate(&self, capacity: u64) -> Result<(), ConfigError> {
        if self.kind.uses_threshold() && !(self.threshold > 0 && self.threshold < capacity) {
            return Err(ConfigError::invalid(
                "r",
                format!(
                    "threshold R={} must satisfy 0 < R < K={capacity}",
                    self.threshold
                ),
            ));
        }
        if self.kind.uses_scale() && *self.scale.numer() == 0 {
            return Err(ConfigError::invalid("z", "scale factor Z must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DropReason {
    BufferFull,
    EpdThreshold,
    LoadRatio,
    ContinuedPacketDiscard,
}

impl DropReason {
    pub const ALL: [DropReason; 4] = [
        DropReason::BufferFull,
        DropReason::EpdThreshold,
        DropReason::LoadRatio,
        DropReason::ContinuedPacketDiscard,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropDecision {
    Accept,
    Drop(DropReason),
}

impl DropDecision {
    pub fn is_drop(self) -> bool {
        matches!(self, DropDecision::Drop(_))
    }

    pub fn reason(self) -> Option<DropReason> {
        match self {
            DropDecision::Accept => None,
            DropDecision::Drop(r) => Some(r),
        }
    }
}

pub fn tail_drop_decide(x: u64, k: u64) -> DropDecision {
    debug_assert!(x <= k);
    if x >= k {
        DropDecision::Drop(DropReason::BufferFull)
    } else {
        DropDecision::Accept
    }
}

/// New packets are refused once occupancy exceeds `r`; cells of packets
/// already admitted keep flowing while there is room.
pub fn epd_decide(x: u64, k: u64, r: u64, first_cell: bool) -> DropDecision {
    if x >= k {
        DropDecision::Drop(DropReason::BufferFull)
    } else if first_cell && x > r {
        DropDecision::Drop(DropReason::EpdThreshold)
    } else {
        DropDecision::Accept
    }
}

/// `y * n_active / x`: the VC's buffer share relative to the fair share
/// `x / n_active`. Undefined for `x == 0`.
pub fn load_ratio<T>(y: T, n_active: T, x: T) -> Ratio<T>
where
    T: Integer + Clone,
{
    assert!(!x.is_zero(), "load ratio is undefined for an empty buffer");
    Ratio::new(y * n_active, x)
}

/// Drops a new packet when `x > r` and the load ratio exceeds `z`.
pub fn selective_drop_decide(
    x: u64,
    k: u64,
    r: u64,
    y: u64,
    n_active: u64,
    z: ScaleFactor,
    first_cell: bool,
) -> DropDecision {
    if x >= k {
        return DropDecision::Drop(DropReason::BufferFull);
    }
    if first_cell && x > r {
        // y*n/x > zn/zd  <=>  y*n*zd > zn*x
        let lhs = u128::from(y) * u128::from(n_active) * u128::from(*z.denom());
        let rhs = u128::from(*z.numer()) * u128::from(x);
        if lhs > rhs {
            return DropDecision::Drop(DropReason::LoadRatio);
        }
    }
    DropDecision::Accept
}

/// Drops a new packet when `x > r` and the load ratio exceeds the dynamic
/// cutoff `z * (k - r) / (x - r)`.
pub fn fba_decide(
    x: u64,
    k: u64,
    r: u64,
    y: u64,
    n_active: u64,
    z: ScaleFactor,
    first_cell: bool,
) -> DropDecision {
    if x >= k {
        return DropDecision::Drop(DropReason::BufferFull);
    }
    if first_cell && x > r {
        // y*n/x > (zn/zd)*(k-r)/(x-r)  <=>  y*n*(x-r)*zd > zn*x*(k-r)
        let lhs = u128::from(y) * u128::from(n_active) * u128::from(x - r) * u128::from(*z.denom());
        let rhs = u128::from(*z.numer()) * u128::from(x) * u128::from(k - r);
        if lhs > rhs {
            return DropDecision::Drop(DropReason::LoadRatio);
        }
    }
    DropDecision::Accept
}

/// Dynamic FBA cutoff multiplier `(k - r) / (x - r)` for `r < x <= k`.
pub fn fba_cutoff<T>(k: T, x: T, r: T) -> Ratio<T>
where
    T: Integer + Clone,
{
    Ratio::new(k - r.clone(), x - r)
}

/// Checks that `1 + (k - x)/(x - r)` equals `(k - r)/(x - r)`. The two
/// spellings of the FBA cutoff must agree for every `r < x <= k`.
pub fn fba_threshold_identity_check<T>(k: T, x: T, r: T) -> bool
where
    T: Integer + Clone,
{
    assert!(r < x && x <= k, "identity requires r < x <= k");
    let incremental = Ratio::one_plus(k.clone() - x.clone(), x.clone() - r.clone());
    incremental == fba_cutoff(k, x, r)
}

trait OnePlus<T> {
    fn one_plus(num: T, den: T) -> Self;
}

impl<T: Integer + Clone> OnePlus<T> for Ratio<T> {
    fn one_plus(num: T, den: T) -> Self {
        Ratio::from_integer(T::one()) + Ratio::new(num, den)
    }
}

/// Dispatches to the policy's decision function.
pub fn decide(
    cfg: &PolicyConfig,
    x: u64,
    k: u64,
    y: u64,
    n_active: u64,
    first_cell: bool,
) -> DropDecision {
    match cfg.kind {
        PolicyKind::TailDrop => tail_drop_decide(x, k),
        PolicyKind::Epd => epd_decide(x, k, cfg.threshold, first_cell),
        PolicyKind::SelectiveDrop => {
            selective_drop_decide(x, k, cfg.threshold, y, n_active, cfg.scale, first_cell)
        }
        PolicyKind::Fba => fba_decide(x, k, cfg.threshold, y, n_active, cfg.scale, first_cell),
    }
}
