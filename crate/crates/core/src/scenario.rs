//! N-source scenario description: sources feed switch A, one bottleneck link
//! joins switch A to switch B, and switch B fans out to the destinations.
//! Acks take the reverse path.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::event::SimTime;
use crate::switch::{PolicyConfig, PolicyKind, ScaleFactor};
use crate::tcp::TcpParams;

/// 155.52 Mbps.
pub const OC3_BPS: u64 = 155_520_000;
/// Cells reserved above the EPD threshold by default: one 12-cell packet
/// from each of up to 15 connections fits in 200 cells.
pub const EPD_DEFAULT_MARGIN: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConfigClass {
    #[serde(rename = "LAN")]
    Lan,
    #[serde(rename = "WAN")]
    Wan,
}

impl ConfigClass {
    pub fn label(self) -> &'static str {
        match self {
            ConfigClass::Lan => "LAN",
            ConfigClass::Wan => "WAN",
        }
    }

    pub fn link_delay(self) -> SimTime {
        match self {
            ConfigClass::Lan => SimTime::from_micros(5),
            ConfigClass::Wan => SimTime::from_millis(5),
        }
    }

    pub fn rcvwnd(self) -> u64 {
        match self {
            ConfigClass::Lan => 65535,
            ConfigClass::Wan => 600_000,
        }
    }

    pub fn duration(self) -> SimTime {
        match self {
            ConfigClass::Lan => SimTime::from_secs(10),
            ConfigClass::Wan => SimTime::from_secs(20),
        }
    }

    /// Initial slow-start threshold. WAN connections slow-start all the way
    /// to their scaled window.
    pub fn initial_ssthresh(self) -> u64 {
        match self {
            ConfigClass::Lan => 65535,
            ConfigClass::Wan => 600_000,
        }
    }

    /// The three buffer sizes used for the comparison tables.
    pub fn table_buffers(self) -> [u64; 3] {
        match self {
            ConfigClass::Lan => [1000, 2000, 3000],
            ConfigClass::Wan => [12000, 24000, 36000],
        }
    }
}

impl fmt::Display for ConfigClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ConfigClass {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lan" => Ok(ConfigClass::Lan),
            "wan" => Ok(ConfigClass::Wan),
            other => Err(ConfigError::invalid(
                "config",
                format!("expected lan or wan, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BufferSize {
    Cells(u64),
    Infinite,
}

impl BufferSize {
    pub fn cells(self) -> Option<u64> {
        match self {
            BufferSize::Cells(k) => Some(k),
            BufferSize::Infinite => None,
        }
    }
}

impl fmt::Display for BufferSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BufferSize::Cells(k) => write!(f, "{k}"),
            BufferSize::Infinite => f.write_str("infinite"),
        }
    }
}

impl FromStr for BufferSize {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("infinite") || s.eq_ignore_ascii_case("inf") {
            return Ok(BufferSize::Infinite);
        }
        s.parse::<u64>().map(BufferSize::Cells).map_err(|_| {
            ConfigError::invalid("buffer", format!("expected cells or `infinite`, got `{s}`"))
        })
    }
}

/// How the threshold R is derived from the buffer size K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    /// `floor(fraction * K)`.
    Fraction(Ratio<u64>),
    /// `K - margin`.
    BelowCapacity(u64),
    Cells(u64),
}

impl Threshold {
    pub fn resolve(self, k: u64) -> Option<u64> {
        match self {
            Threshold::Fraction(f) => Some(k * *f.numer() / *f.denom()),
            Threshold::BelowCapacity(m) => k.checked_sub(m),
            Threshold::Cells(r) => Some(r),
        }
    }
}

/// Policy choice before it is bound to a concrete buffer size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub threshold: Threshold,
    pub scale: ScaleFactor,
}

impl PolicySpec {
    /// Defaults: EPD at `K - 200`; Selective Drop and FBA at `R = 0.9 K`, `Z = 0.8`.
    pub fn defaults(kind: PolicyKind) -> Self {
        let threshold = match kind {
            PolicyKind::Epd | PolicyKind::TailDrop => Threshold::BelowCapacity(EPD_DEFAULT_MARGIN),
            PolicyKind::SelectiveDrop | PolicyKind::Fba => Threshold::Fraction(Ratio::new(9, 10)),
        };
        Self {
            kind,
            threshold,
            scale: ScaleFactor::new(4, 5),
        }
    }

    pub fn resolve(&self, k: u64, field: &str) -> Result<PolicyConfig, ConfigError> {
        if self.kind == PolicyKind::TailDrop {
            return Ok(PolicyConfig::tail_drop());
        }
        let r = self.threshold.resolve(k).ok_or_else(|| {
            ConfigError::invalid(field, format!("threshold lies below zero for K={k}"))
        })?;
        let cfg = PolicyConfig::new(self.kind, r, self.scale);
        cfg.validate(k).map_err(|e| match e {
            ConfigError::Invalid { message, .. } => ConfigError::Invalid {
                field: field.to_string(),
                message,
            },
            other => other,
        })?;
        Ok(cfg)
    }

    /// R as a fraction of K, for reporting.
    pub fn r_fraction(&self, k: Option<u64>) -> Option<Ratio<u64>> {
        match (self.kind, self.threshold, k) {
            (PolicyKind::TailDrop, _, _) => None,
            (_, Threshold::Fraction(f), _) => Some(f),
            (_, t, Some(k)) if k > 0 => t.resolve(k).map(|r| Ratio::new(r, k)),
            _ => None,
        }
    }
}

/// User-facing knobs; everything optional falls back to the per-class default.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub config: ConfigClass,
    pub n_sources: u32,
    pub buffer: BufferSize,
    pub reverse_buffer: Option<BufferSize>,
    pub policy: PolicyKind,
    pub r_fraction: Option<Ratio<u64>>,
    pub r_cells: Option<u64>,
    pub epd_margin: Option<u64>,
    pub z: Option<ScaleFactor>,
    pub link_rate_bps: Option<u64>,
    pub link_delay: Option<SimTime>,
    pub mss: Option<u32>,
    pub rcvwnd: Option<u64>,
    pub ssthresh: Option<u64>,
    pub tick: Option<SimTime>,
    pub duration: Option<SimTime>,
    pub initial_rto_ticks: Option<u64>,
    pub min_rto_ticks: Option<u64>,
    pub rto_granularity_ticks: Option<u64>,
    pub max_rto_ticks: Option<u64>,
    pub audit: bool,
}

impl ScenarioParams {
    pub fn new(
        config: ConfigClass,
        n_sources: u32,
        buffer: BufferSize,
        policy: PolicyKind,
    ) -> Self {
        Self {
            config,
            n_sources,
            buffer,
            reverse_buffer: None,
            policy,
            r_fraction: None,
            r_cells: None,
            epd_margin: None,
            z: None,
            link_rate_bps: None,
            link_delay: None,
            mss: None,
            rcvwnd: None,
            ssthresh: None,
            tick: None,
            duration: None,
            initial_rto_ticks: None,
            min_rto_ticks: None,
            rto_granularity_ticks: None,
            max_rto_ticks: None,
            audit: false,
        }
    }

    pub fn lan(n_sources: u32, buffer: BufferSize, policy: PolicyKind) -> Self {
        Self::new(ConfigClass::Lan, n_sources, buffer, policy)
    }

    pub fn wan(n_sources: u32, buffer: BufferSize, policy: PolicyKind) -> Self {
        Self::new(ConfigClass::Wan, n_sources, buffer, policy)
    }

    pub fn with_r_fraction(mut self, r: Ratio<u64>) -> Self {
        self.r_fraction = Some(r);
        self
    }

    pub fn with_z(mut self, z: ScaleFactor) -> Self {
        self.z = Some(z);
        self
    }

    pub fn with_duration(mut self, d: SimTime) -> Self {
        self.duration = Some(d);
        self
    }

    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    fn policy_spec(&self) -> PolicySpec {
        let mut spec = PolicySpec::defaults(self.policy);
        if let Some(m) = self.epd_margin {
            spec.threshold = Threshold::BelowCapacity(m);
        }
        if let Some(f) = self.r_fraction {
            spec.threshold = Threshold::Fraction(f);
        }
        if let Some(r) = self.r_cells {
            spec.threshold = Threshold::Cells(r);
        }
        if let Some(z) = self.z {
            spec.scale = z;
        }
        spec
    }
}

/// A validated, fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ConfigClass,
    pub n_sources: u32,
    pub link_rate_bps: u64,
    pub link_delay: SimTime,
    pub tcp: TcpParams,
    pub tick: SimTime,
    pub duration: SimTime,
    pub buffer: BufferSize,
    pub reverse_buffer: BufferSize,
    pub policy_spec: PolicySpec,
    /// Policy on the forward ports (absent for infinite buffers).
    pub policy: Option<PolicyConfig>,
    pub reverse_policy: Option<PolicyConfig>,
    pub audit: bool,
}

impl Scenario {
    pub fn r_fraction(&self) -> Option<Ratio<u64>> {
        self.policy.as_ref()?;
        self.policy_spec.r_fraction(self.buffer.cells())
    }

    pub fn scale(&self) -> Option<ScaleFactor> {
        self.policy.filter(|p| p.kind.uses_scale()).map(|p| p.scale)
    }

    /// Sum of the receiver windows expressed in cells
    /// (`rcvwnd / mss` segments of `cells_for_segment(mss)` cells each).
    pub fn window_sum_cells(&self) -> f64 {
        let cells = crate::aal5::cells_for_segment(u64::from(self.tcp.mss)) as f64;
        f64::from(self.n_sources) * self.tcp.rcvwnd as f64 / f64::from(self.tcp.mss) * cells
    }
}

fn positive<T: PartialOrd + Default>(v: T, field: &str) -> Result<T, ConfigError> {
    if v > T::default() {
        Ok(v)
    } else {
        Err(ConfigError::invalid(field, "must be positive"))
    }
}

pub fn build_scenario(p: &ScenarioParams) -> Result<Scenario, ConfigError> {
    let class = p.config;
    let n_sources = positive(p.n_sources, "n_sources")?;
    if let BufferSize::Cells(k) = p.buffer {
        positive(k, "buffer")?;
    }
    let reverse_buffer = p.reverse_buffer.unwrap_or(p.buffer);
    if let BufferSize::Cells(k) = reverse_buffer {
        positive(k, "reverse_buffer")?;
    }

    let mss = positive(p.mss.unwrap_or(512), "mss")?;
    let rcvwnd = p.rcvwnd.unwrap_or(class.rcvwnd());
    if rcvwnd < u64::from(mss) {
        return Err(ConfigError::invalid(
            "rcvwnd",
            "must hold at least one segment",
        ));
    }
    let initial_rto_ticks = positive(p.initial_rto_ticks.unwrap_or(3), "initial_rto_ticks")?;
    let max_rto_ticks = p.max_rto_ticks.unwrap_or(640);
    if max_rto_ticks < initial_rto_ticks {
        return Err(ConfigError::invalid(
            "max_rto_ticks",
            "must be at least initial_rto_ticks",
        ));
    }
    let min_rto_ticks = positive(p.min_rto_ticks.unwrap_or(2), "min_rto_ticks")?;
    if min_rto_ticks > max_rto_ticks {
        return Err(ConfigError::invalid(
            "min_rto_ticks",
            "must not exceed max_rto_ticks",
        ));
    }
    let tcp = TcpParams {
        mss,
        rcvwnd,
        initial_ssthresh: positive(p.ssthresh.unwrap_or(class.initial_ssthresh()), "ssthresh")?,
        initial_rto_ticks,
        min_rto_ticks,
        max_rto_ticks,
        rto_granularity_ticks: p.rto_granularity_ticks.unwrap_or(0),
    };

    let policy_spec = p.policy_spec();
    let field = match policy_spec.threshold {
        Threshold::Fraction(_) => "r_fraction",
        Threshold::Cells(_) => "r_cells",
        Threshold::BelowCapacity(_) => "epd_margin",
    };
    if policy_spec.kind.uses_scale() && *policy_spec.scale.numer() == 0 {
        return Err(ConfigError::invalid("z", "must be positive"));
    }
    let policy = p
        .buffer
        .cells()
        .map(|k| policy_spec.resolve(k, field))
        .transpose()?;
    let reverse_policy = reverse_buffer
        .cells()
        .map(|k| policy_spec.resolve(k, field))
        .transpose()?;

    Ok(Scenario {
        config: class,
        n_sources,
        link_rate_bps: positive(p.link_rate_bps.unwrap_or(OC3_BPS), "link_rate_bps")?,
        link_delay: p.link_delay.unwrap_or(class.link_delay()),
        tcp,
        tick: positive(p.tick.unwrap_or(SimTime::from_millis(100)), "tick_ms")?,
        duration: positive(p.duration.unwrap_or(class.duration()), "duration")?,
        buffer: p.buffer,
        reverse_buffer,
        policy_spec,
        policy,
        reverse_policy,
        audit: p.audit,
    })
}
