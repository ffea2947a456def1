//! Cross-product experiment grids and a parallel, order-preserving runner.

use std::panic::{catch_unwind, AssertUnwindSafe};

use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{ConfigError, Error, SimError};
use crate::network::run_scenario;
use crate::output::ResultRow;
use crate::scenario::{build_scenario, BufferSize, ConfigClass, ScenarioParams};
use crate::switch::{PolicyKind, ScaleFactor};

/// Axes of a sweep. Every point takes its remaining parameters from
/// `template`. The `r_fractions` and `z_values` axes apply only to the
/// policies that use them; other policies contribute one point each.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub configs: Vec<ConfigClass>,
    pub n_sources: Vec<u32>,
    /// Buffer sizes for every class; overrides the per-class defaults.
    pub buffers: Option<Vec<BufferSize>>,
    pub lan_buffers: Option<Vec<BufferSize>>,
    pub wan_buffers: Option<Vec<BufferSize>>,
    pub policies: Vec<PolicyKind>,
    /// Empty means the policy default.
    pub r_fractions: Vec<Ratio<u64>>,
    pub z_values: Vec<ScaleFactor>,
    pub template: ScenarioParams,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            configs: vec![ConfigClass::Lan, ConfigClass::Wan],
            n_sources: vec![5, 15],
            buffers: None,
            lan_buffers: None,
            wan_buffers: None,
            policies: PolicyKind::ALL.to_vec(),
            r_fractions: Vec::new(),
            z_values: Vec::new(),
            template: ScenarioParams::new(
                ConfigClass::Lan,
                0,
                BufferSize::Infinite,
                PolicyKind::TailDrop,
            ),
        }
    }
}

impl SweepSpec {
    /// Zero-loss buffer requirement: infinite buffers, tail drop.
    pub fn table1() -> Self {
        Self {
            buffers: Some(vec![BufferSize::Infinite]),
            policies: vec![PolicyKind::TailDrop],
            ..Self::default()
        }
    }

    /// All four policies on the table buffer sizes with default parameters.
    pub fn policy_comparison() -> Self {
        Self::default()
    }

    /// FBA full factorial for one config class: 2 × 3 × 3 × 3 = 54 points.
    pub fn fba_factorial(class: ConfigClass) -> Self {
        let tenths = |v: &[u64]| v.iter().map(|&n| Ratio::new(n, 10)).collect();
        Self {
            configs: vec![class],
            policies: vec![PolicyKind::Fba],
            r_fractions: tenths(&[9, 5, 1]),
            z_values: tenths(&[2, 5, 8]),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let empty = |field: &str| Err(ConfigError::invalid(field, "empty list"));
        if self.configs.is_empty() {
            return empty("config");
        }
        if self.n_sources.is_empty() {
            return empty("n_sources");
        }
        if self.policies.is_empty() {
            return empty("policy.kind");
        }
        for (list, field) in [
            (&self.buffers, "buffer"),
            (&self.lan_buffers, "buffer.lan"),
            (&self.wan_buffers, "buffer.wan"),
        ] {
            if list.as_ref().is_some_and(Vec::is_empty) {
                return empty(field);
            }
        }
        Ok(())
    }

    pub fn buffers_for(&self, class: ConfigClass) -> Vec<BufferSize> {
        let per_class = match class {
            ConfigClass::Lan => &self.lan_buffers,
            ConfigClass::Wan => &self.wan_buffers,
        };
        per_class
            .as_ref()
            .or(self.buffers.as_ref())
            .cloned()
            .unwrap_or_else(|| class.table_buffers().map(BufferSize::Cells).to_vec())
    }

    /// Every point in output order: config, sources, buffer, policy, R, Z.
    pub fn points(&self) -> Vec<ScenarioParams> {
        let axis = |values: &[Ratio<u64>], used: bool| -> Vec<Option<Ratio<u64>>> {
            if used && !values.is_empty() {
                values.iter().copied().map(Some).collect()
            } else {
                vec![None]
            }
        };
        let mut out = Vec::new();
        for &config in &self.configs {
            for &n in &self.n_sources {
                for buffer in self.buffers_for(config) {
                    for &policy in &self.policies {
                        for r in axis(&self.r_fractions, policy.uses_scale()) {
                            for z in axis(&self.z_values, policy.uses_scale()) {
                                let mut p = self.template.clone();
                                p.config = config;
                                p.n_sources = n;
                                p.buffer = buffer;
                                p.policy = policy;
                                if r.is_some() {
                                    p.r_fraction = r;
                                }
                                if z.is_some() {
                                    p.z = z;
                                }
                                out.push(p);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn cardinality(&self) -> usize {
        self.points().len()
    }
}

/// One point of a sweep and what became of it.
#[derive(Debug)]
pub struct SweepOutcome {
    pub params: ScenarioParams,
    pub result: Result<ResultRow, Error>,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "run panicked".into())
}

/// Builds and runs one point. Panics inside the simulation are reported as
/// invariant violations instead of unwinding into the caller.
pub fn run_point(p: &ScenarioParams) -> Result<ResultRow, Error> {
    let scenario = build_scenario(p)?;
    let result = catch_unwind(AssertUnwindSafe(|| run_scenario(&scenario)))
        .map_err(|e| SimError::Invariant(panic_message(e)))??;
    Ok(ResultRow::new(&scenario, &result))
}

/// Runs every point on `parallelism` worker threads. Outcomes come back in
/// [`SweepSpec::points`] order whatever the completion order.
pub fn run_points(points: Vec<ScenarioParams>, parallelism: usize) -> Vec<SweepOutcome> {
    let run = |params: ScenarioParams| {
        let result = run_point(&params);
        SweepOutcome { params, result }
    };
    if parallelism <= 1 {
        return points.into_iter().map(run).collect();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .expect("worker pool")
        .install(|| points.into_par_iter().map(run).collect())
}

pub fn run_sweep(spec: &SweepSpec, parallelism: usize) -> Vec<SweepOutcome> {
    run_points(spec.points(), parallelism)
}
