//! Parser for the `key = value` scenario and sweep file format.
//!
//! ```text
//! # 5-source LAN with FBA
//! config = lan
//! n_sources = 5
//! buffer = 1000
//!
//! [policy]
//! kind = fba
//! r_fraction = 0.9
//! z = 4/5
//! ```
//!
//! Sweep files use the same keys, but the axis keys (`config`, `n_sources`,
//! `buffer`, `buffer.lan`, `buffer.wan`, and `kind`, `r_fraction`, `z` in
//! `[policy]`) take comma-separated lists.

use num_rational::Ratio;

use crate::error::ConfigError;
use crate::event::SimTime;
use crate::scenario::{BufferSize, ConfigClass, ScenarioParams};
use crate::sweep::SweepSpec;
use crate::switch::PolicyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Policy,
}

#[derive(Debug, Clone)]
struct Entry {
    section: Section,
    key: String,
    value: String,
}

impl Entry {
    /// Name used in error messages, e.g. `policy.z`.
    fn field(&self) -> String {
        match self.section {
            Section::Top => self.key.clone(),
            Section::Policy => format!("policy.{}", self.key),
        }
    }

    fn list(&self) -> Vec<&str> {
        self.value.split(',').map(str::trim).collect()
    }
}

fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut section = Section::Top;
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            section = match name.trim() {
                "policy" => Section::Policy,
                other => {
                    return Err(ConfigError::Syntax {
                        line,
                        message: format!("unknown section `[{other}]`"),
                    })
                }
            };
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{body}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "empty key or value".into(),
            });
        }
        if entries.iter().any(|e| e.section == section && e.key == key) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.push(Entry {
            section,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(entries)
}

/// Parses a non-negative exact rational written as `0.9`, `9/10` or `1`.
pub fn parse_ratio(field: &str, text: &str) -> Result<Ratio<u64>, ConfigError> {
    let bad = || ConfigError::invalid(field, format!("`{text}` is not a non-negative number"));
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(ConfigError::invalid(field, "zero denominator"));
        }
        return Ok(Ratio::new(n, d));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if !digits(int) || !digits(frac) || frac.len() > 12 {
        return Err(bad());
    }
    let scale = 10u64.pow(frac.len() as u32);
    let int: u64 = if int.is_empty() {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let frac: u64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let numer = int
        .checked_mul(scale)
        .and_then(|v| v.checked_add(frac))
        .ok_or_else(bad)?;
    Ok(Ratio::new(numer, scale))
}

fn parse_int<T: std::str::FromStr>(field: &str, text: &str) -> Result<T, ConfigError> {
    text.parse()
        .map_err(|_| ConfigError::invalid(field, format!("`{text}` is not a valid integer")))
}

fn parse_bool(field: &str, text: &str) -> Result<bool, ConfigError> {
    match text.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::invalid(
            field,
            format!("`{text}` is not a boolean"),
        )),
    }
}

/// Converts a decimal quantity in `unit_ns` units to an exact time.
fn parse_time(field: &str, text: &str, unit_ns: u64) -> Result<SimTime, ConfigError> {
    let v = parse_ratio(field, text)? * Ratio::from_integer(unit_ns);
    if !v.is_integer() {
        return Err(ConfigError::invalid(
            field,
            "must be a whole number of nanoseconds",
        ));
    }
    Ok(SimTime::from_nanos(v.to_integer()))
}

fn parse_with<T, E: std::fmt::Display>(
    field: &str,
    text: &str,
    f: impl Fn(&str) -> Result<T, E>,
) -> Result<T, ConfigError> {
    f(text).map_err(|e| ConfigError::invalid(field, e.to_string()))
}

/// Applies one non-axis key. Returns `false` for an unknown key.
fn apply_scalar(p: &mut ScenarioParams, e: &Entry) -> Result<bool, ConfigError> {
    let f = e.field();
    let v = e.value.as_str();
    match (e.section, e.key.as_str()) {
        (Section::Top, "reverse_buffer") => {
            p.reverse_buffer = Some(parse_with(&f, v, str::parse::<BufferSize>)?)
        }
        (Section::Top, "link_rate_bps") => p.link_rate_bps = Some(parse_int(&f, v)?),
        (Section::Top, "link_delay_us") => p.link_delay = Some(parse_time(&f, v, 1_000)?),
        (Section::Top, "mss") => p.mss = Some(parse_int(&f, v)?),
        (Section::Top, "rcvwnd") => p.rcvwnd = Some(parse_int(&f, v)?),
        (Section::Top, "ssthresh") => p.ssthresh = Some(parse_int(&f, v)?),
        (Section::Top, "tick_ms") => p.tick = Some(parse_time(&f, v, 1_000_000)?),
        (Section::Top, "duration_s") => p.duration = Some(parse_time(&f, v, 1_000_000_000)?),
        (Section::Top, "initial_rto_ticks") => p.initial_rto_ticks = Some(parse_int(&f, v)?),
        (Section::Top, "min_rto_ticks") => p.min_rto_ticks = Some(parse_int(&f, v)?),
        (Section::Top, "rto_granularity_ticks") => {
            p.rto_granularity_ticks = Some(parse_int(&f, v)?)
        }
        (Section::Top, "max_rto_ticks") => p.max_rto_ticks = Some(parse_int(&f, v)?),
        (Section::Top, "audit") => p.audit = parse_bool(&f, v)?,
        (Section::Top, "topology") => {
            if !matches!(v, "n-source" | "n_source") {
                return Err(ConfigError::invalid(
                    &f,
                    "only the `n-source` topology is supported",
                ));
            }
        }
        (Section::Top, "bottleneck_links") => {
            if v != "1" {
                return Err(ConfigError::invalid(
                    &f,
                    "exactly one bottleneck link is supported",
                ));
            }
        }
        (Section::Policy, "r_cells") => p.r_cells = Some(parse_int(&f, v)?),
        (Section::Policy, "epd_margin") => p.epd_margin = Some(parse_int(&f, v)?),
        _ => return Ok(false),
    }
    Ok(true)
}

fn unknown(e: &Entry) -> ConfigError {
    ConfigError::invalid(e.field(), "unknown key")
}

fn missing(field: &str) -> ConfigError {
    ConfigError::invalid(field, "required key is missing")
}

/// Parses a single-scenario file into unvalidated parameters; pass the
/// result to [`crate::scenario::build_scenario`].
pub fn parse_scenario(text: &str) -> Result<ScenarioParams, ConfigError> {
    let entries = parse_entries(text)?;
    let mut p = ScenarioParams::new(
        ConfigClass::Lan,
        0,
        BufferSize::Infinite,
        PolicyKind::TailDrop,
    );
    let (mut config, mut n, mut buffer) = (false, false, false);
    for e in &entries {
        let f = e.field();
        let v = e.value.as_str();
        match (e.section, e.key.as_str()) {
            (Section::Top, "config") => {
                p.config = parse_with(&f, v, str::parse::<ConfigClass>)?;
                config = true;
            }
            (Section::Top, "n_sources") => {
                p.n_sources = parse_int(&f, v)?;
                n = true;
            }
            (Section::Top, "buffer") => {
                p.buffer = parse_with(&f, v, str::parse::<BufferSize>)?;
                buffer = true;
            }
            (Section::Policy, "kind") => p.policy = parse_with(&f, v, str::parse::<PolicyKind>)?,
            (Section::Policy, "r_fraction") => p.r_fraction = Some(parse_ratio(&f, v)?),
            (Section::Policy, "z") => p.z = Some(parse_ratio(&f, v)?),
            _ => {
                if !apply_scalar(&mut p, e)? {
                    return Err(unknown(e));
                }
            }
        }
    }
    for (seen, field) in [(config, "config"), (n, "n_sources"), (buffer, "buffer")] {
        if !seen {
            return Err(missing(field));
        }
    }
    Ok(p)
}

fn parse_list<T>(
    e: &Entry,
    f: impl Fn(&str, &str) -> Result<T, ConfigError>,
) -> Result<Vec<T>, ConfigError> {
    let field = e.field();
    let items = e.list();
    if items.iter().any(|s| s.is_empty()) {
        return Err(ConfigError::invalid(&field, "empty list element"));
    }
    items.into_iter().map(|s| f(&field, s)).collect()
}

/// Parses a sweep file. `n_sources` defaults to 5 and 15, `kind` to all four
/// policies and `buffer` to the three table sizes of each config class.
pub fn parse_sweep(text: &str) -> Result<SweepSpec, ConfigError> {
    let entries = parse_entries(text)?;
    let mut spec = SweepSpec::default();
    for e in &entries {
        match (e.section, e.key.as_str()) {
            (Section::Top, "config") => {
                spec.configs = parse_list(e, |f, s| parse_with(f, s, str::parse::<ConfigClass>))?
            }
            (Section::Top, "n_sources") => spec.n_sources = parse_list(e, parse_int)?,
            (Section::Top, "buffer") => {
                spec.buffers = Some(parse_list(e, |f, s| {
                    parse_with(f, s, str::parse::<BufferSize>)
                })?)
            }
            (Section::Top, "buffer.lan") => {
                spec.lan_buffers = Some(parse_list(e, |f, s| {
                    parse_with(f, s, str::parse::<BufferSize>)
                })?)
            }
            (Section::Top, "buffer.wan") => {
                spec.wan_buffers = Some(parse_list(e, |f, s| {
                    parse_with(f, s, str::parse::<BufferSize>)
                })?)
            }
            (Section::Policy, "kind") => {
                spec.policies = parse_list(e, |f, s| parse_with(f, s, str::parse::<PolicyKind>))?
            }
            (Section::Policy, "r_fraction") => spec.r_fractions = parse_list(e, parse_ratio)?,
            (Section::Policy, "z") => spec.z_values = parse_list(e, parse_ratio)?,
            _ => {
                if e.list().len() > 1 {
                    return Err(ConfigError::invalid(e.field(), "only axis keys take lists"));
                }
                if !apply_scalar(&mut spec.template, e)? {
                    return Err(unknown(e));
                }
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}
