//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Runs that several criteria share (the zero-loss anchor, the LAN small
//! buffer grid, the WAN grid) are simulated once and reused.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use ubrsim::metrics::fairness_index;
use ubrsim::network::{simulate, CwndTrace};
use ubrsim::output::{write_rows, Format, ResultRow};
use ubrsim::sweep::run_points;
use ubrsim::switch::policy::{decide, fba_cutoff, fba_threshold_identity_check};
use ubrsim::switch::{DropDecision, DropReason, PolicyConfig, PolicyKind};
use ubrsim::{
    build_scenario, BufferSize, ConfigClass, RunResult, Scenario, ScenarioParams, SimTime,
};

// Criterion 1
const ZERO_LOSS_MIN_EFFICIENCY: f64 = 0.98;
const ZERO_LOSS_MIN_FAIRNESS: f64 = 0.99;
const QUEUE_BAND: (f64, f64) = (0.75, 1.05);
// Criterion 2
const SCALING_BAND: (f64, f64) = (2.5, 3.5);
// Criterion 3
const SD_OVER_FBA_SLACK: f64 = 0.05;
const UBR_MAX_EFFICIENCY: f64 = 0.6;
const EPD_MIN_GAIN: f64 = 0.10;
// Criterion 4
const WAN_MIN_EFFICIENCY: f64 = 0.75;
const WAN_EPD_MIN_FAIRNESS: f64 = 0.85;
const WAN_EPD_FAIR_BUFFERS: usize = 2;
// Criterion 5
const BRUTE_MAX_K: u64 = 30;
const BRUTE_MAX_ACTIVE: u64 = 5;
// Criterion 6
const IDENTITY_SAMPLES: u32 = 10_000;
const IDENTITY_MAX_K: u64 = 1_000_000_000_000;
// Criterion 7
const MSS: u64 = 512;
const TRACE_SSTHRESH: u64 = 16_384;
const MIN_SS_ROUNDS: usize = 4;
const MIN_CA_ROUNDS: usize = 20;
const FAIRNESS_VECTORS: u32 = 1_000;
const FAIRNESS_REL_TOL: f64 = 1e-12;
// Criterion 9
const WIDE_PARALLELISM: usize = 8;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// One finished run kept for the audit criterion.
struct Run {
    label: String,
    scenario: Scenario,
    result: Result<RunResult, String>,
}

impl Run {
    fn ok(&self) -> &RunResult {
        self.result
            .as_ref()
            .unwrap_or_else(|e| panic!("{} failed: {e}", self.label))
    }

    fn row(&self) -> ResultRow {
        ResultRow::new(&self.scenario, self.ok())
    }
}

fn label(p: &ScenarioParams) -> String {
    format!("{}/{}/{}/{}", p.config, p.n_sources, p.buffer, p.policy)
}

fn run(p: ScenarioParams) -> Run {
    let p = p.with_audit(true);
    let scenario = build_scenario(&p).expect("valid scenario");
    let result = simulate(&scenario, false)
        .map(|sim| sim.result)
        .map_err(|e| e.to_string());
    Run {
        label: label(&p),
        scenario,
        result,
    }
}

fn csv(rows: &[ResultRow]) -> String {
    let mut out = Vec::new();
    write_rows(rows, Format::Csv, &mut out).expect("in-memory write");
    String::from_utf8(out).expect("utf-8 csv")
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn zero_loss(runs: &[Run]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let res = r.ok();
        let m = res.metrics::<f64>();
        let window = r.scenario.window_sum_cells();
        let (lo, hi) = (QUEUE_BAND.0 * window, QUEUE_BAND.1 * window);
        let q = res.max_queue_cells() as f64;
        let ok = m.efficiency >= ZERO_LOSS_MIN_EFFICIENCY
            && m.fairness >= ZERO_LOSS_MIN_FAIRNESS
            && res.drops_total() == 0
            && (lo..=hi).contains(&q);
        pass &= ok;
        parts.push(format!(
            "{} eff={:.4} fair={:.4} drops={} maxq={} band=[{:.0},{:.0}]{}",
            r.label,
            m.efficiency,
            m.fairness,
            res.drops_total(),
            res.max_queue_cells(),
            lo,
            hi,
            if ok { "" } else { " <-" }
        ));
    }
    Verdict::new(pass, parts.join("; "))
}

fn queue_scaling(lan5: &Run, lan15: &Run) -> Verdict {
    let ratio = lan15.ok().max_queue_cells() as f64 / lan5.ok().max_queue_cells() as f64;
    Verdict::new(
        (SCALING_BAND.0..=SCALING_BAND.1).contains(&ratio),
        format!(
            "LAN15/LAN5 max queue = {}/{} = {ratio:.3}, band [{}, {}]",
            lan15.ok().max_queue_cells(),
            lan5.ok().max_queue_cells(),
            SCALING_BAND.0,
            SCALING_BAND.1
        ),
    )
}

type Grid<'a> = BTreeMap<(u32, PolicyKind), &'a Run>;

fn policy_ordering(grid: &Grid) -> Verdict {
    use PolicyKind::*;
    let m = |n, k| grid[&(n, k)].ok().metrics::<f64>();
    let (ubr, epd, sd, fba) = (
        m(15, TailDrop),
        m(15, Epd),
        m(15, SelectiveDrop),
        m(15, Fba),
    );
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };
    check(
        ubr.efficiency < epd.efficiency,
        format!(
            "LAN/15 eff UBR {:.4} < EPD {:.4}",
            ubr.efficiency, epd.efficiency
        ),
    );
    check(
        epd.efficiency < sd.efficiency,
        format!(
            "LAN/15 eff EPD {:.4} < SD {:.4}",
            epd.efficiency, sd.efficiency
        ),
    );
    check(
        sd.efficiency <= fba.efficiency + SD_OVER_FBA_SLACK,
        format!(
            "LAN/15 eff SD {:.4} <= FBA {:.4} + {SD_OVER_FBA_SLACK}",
            sd.efficiency, fba.efficiency
        ),
    );
    check(
        sd.fairness > epd.fairness,
        format!(
            "LAN/15 fair SD {:.4} > EPD {:.4}",
            sd.fairness, epd.fairness
        ),
    );
    check(
        epd.fairness > ubr.fairness,
        format!(
            "LAN/15 fair EPD {:.4} > UBR {:.4}",
            epd.fairness, ubr.fairness
        ),
    );
    for n in [5, 15] {
        let (u, e) = (m(n, TailDrop).efficiency, m(n, Epd).efficiency);
        check(
            u < UBR_MAX_EFFICIENCY,
            format!("LAN/{n} eff UBR {u:.4} < {UBR_MAX_EFFICIENCY}"),
        );
        check(
            e - u >= EPD_MIN_GAIN,
            format!("LAN/{n} eff EPD-UBR {:.4} >= {EPD_MIN_GAIN}", e - u),
        );
    }
    let table: Vec<String> = grid
        .iter()
        .map(|((n, k), r)| {
            let m = r.ok().metrics::<f64>();
            format!("{n}/{k} {:.4}/{:.4}", m.efficiency, m.fairness)
        })
        .collect();
    let detail = if failures.is_empty() {
        format!("eff/fair {}", table.join(" "))
    } else {
        format!(
            "violated: {}; eff/fair {}",
            failures.join(", "),
            table.join(" ")
        )
    };
    Verdict::new(failures.is_empty(), detail)
}

fn wan_insensitivity(at_12000: &[&Run], by_buffer: &BTreeMap<(u64, PolicyKind), &Run>) -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for r in at_12000 {
        let e = r.ok().metrics::<f64>().efficiency;
        let ok = e >= WAN_MIN_EFFICIENCY;
        pass &= ok;
        parts.push(format!("{} eff={e:.4}", r.label));
    }
    let fair = |k, p: PolicyKind| by_buffer[&(k, p)].ok().metrics::<f64>().fairness;
    let (ubr, epd) = (
        fair(12000, PolicyKind::TailDrop),
        fair(12000, PolicyKind::Epd),
    );
    pass &= ubr < epd;
    parts.push(format!("12000 fair UBR {ubr:.4} < EPD {epd:.4}"));
    let buffers = ConfigClass::Wan.table_buffers();
    let fair_enough = buffers
        .iter()
        .filter(|&&k| fair(k, PolicyKind::Epd) >= WAN_EPD_MIN_FAIRNESS)
        .count();
    pass &= fair_enough >= WAN_EPD_FAIR_BUFFERS;
    let epd_fair: Vec<String> = buffers
        .iter()
        .map(|&k| format!("{k}:{:.4}", fair(k, PolicyKind::Epd)))
        .collect();
    parts.push(format!(
        "EPD fair >= {WAN_EPD_MIN_FAIRNESS} in {fair_enough}/3 buffers ({})",
        epd_fair.join(" ")
    ));
    Verdict::new(pass, parts.join("; "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Oracle {
    Accept,
    Full,
    Early,
}

fn classify(d: DropDecision) -> Option<Oracle> {
    match d {
        DropDecision::Accept => Some(Oracle::Accept),
        DropDecision::Drop(DropReason::BufferFull) => Some(Oracle::Full),
        DropDecision::Drop(DropReason::EpdThreshold | DropReason::LoadRatio) => Some(Oracle::Early),
        DropDecision::Drop(_) => None,
    }
}

fn big(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exhaustive comparison of the production decisions with the threshold
/// inequalities evaluated by plain big-rational division.
fn drop_oracle() -> Verdict {
    let zs: Vec<(Ratio<u64>, BigRational)> = [(1, 5), (1, 2), (4, 5), (1, 1)]
        .iter()
        .map(|&(n, d)| (Ratio::new(n, d), big(n) / big(d)))
        .collect();
    // load[x][y][n] = y*n/x for x >= 1
    let load: Vec<Vec<Vec<BigRational>>> = (0..=BRUTE_MAX_K)
        .map(|x| {
            (0..=x)
                .map(|y| {
                    (1..=BRUTE_MAX_ACTIVE)
                        .map(|n| {
                            if x == 0 {
                                big(0)
                            } else {
                                big(y) * big(n) / big(x)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let kinds = [
        PolicyKind::TailDrop,
        PolicyKind::Epd,
        PolicyKind::SelectiveDrop,
        PolicyKind::Fba,
    ];
    let mut states = 0u64;
    let mut mismatches = 0u64;
    let mut first_mismatch = None;
    for k in 2..=BRUTE_MAX_K {
        for r in 1..k {
            for x in 0..=k {
                let cutoff = (x > r).then(|| (big(k) - big(r)) / (big(x) - big(r)));
                for (z, zb) in &zs {
                    let fba_limit = cutoff.as_ref().map(|c| zb * c);
                    for y in 0..=x {
                        for n in 1..=BRUTE_MAX_ACTIVE {
                            let lr = &load[x as usize][y as usize][(n - 1) as usize];
                            for first in [false, true] {
                                for kind in kinds {
                                    let expected = if x >= k {
                                        Oracle::Full
                                    } else {
                                        let early = first
                                            && x > r
                                            && match kind {
                                                PolicyKind::TailDrop => false,
                                                PolicyKind::Epd => true,
                                                PolicyKind::SelectiveDrop => lr > zb,
                                                PolicyKind::Fba => lr > fba_limit.as_ref().unwrap(),
                                            };
                                        if early {
                                            Oracle::Early
                                        } else {
                                            Oracle::Accept
                                        }
                                    };
                                    let cfg = PolicyConfig::new(kind, r, *z);
                                    let got = classify(decide(&cfg, x, k, y, n, first));
                                    states += 1;
                                    if got != Some(expected) {
                                        mismatches += 1;
                                        first_mismatch.get_or_insert(format!(
                                            "{kind} K={k} R={r} X={x} Y={y} N={n} Z={z} first={first}: \
                                             got {got:?}, oracle {expected:?}"
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut detail = format!("{states} decisions, {mismatches} mismatches");
    if let Some(m) = first_mismatch {
        detail.push_str(&format!("; first: {m}"));
    }
    Verdict::new(mismatches == 0 && states > 0, detail)
}

fn threshold_identity() -> Verdict {
    let k_strategy = prop_oneof![1u64..=64, 1u64..=IDENTITY_MAX_K];
    let triples = k_strategy
        .prop_flat_map(|k| (Just(k), 0..k))
        .prop_flat_map(|(k, r)| (Just(k), Just(r), (r + 1)..=k));
    let cases = Cell::new(0u32);
    let outcome = runner(IDENTITY_SAMPLES).run(&triples, |(k, r, x)| {
        cases.set(cases.get() + 1);
        let incremental = big(1) + (big(k) - big(x)) / (big(x) - big(r));
        let direct = (big(k) - big(r)) / (big(x) - big(r));
        prop_assert_eq!(&incremental, &direct);
        prop_assert!(fba_threshold_identity_check(k, x, r));
        let c = fba_cutoff(k, x, r);
        prop_assert_eq!(big(*c.numer()) / big(*c.denom()), direct);
        Ok(())
    });
    match outcome {
        Ok(()) => Verdict::new(
            cases.get() >= IDENTITY_SAMPLES,
            format!("{} triples, K up to {IDENTITY_MAX_K}", cases.get()),
        ),
        Err(e) => Verdict::new(false, format!("after {} triples: {e}", cases.get())),
    }
}

/// Congestion window at the start of each round trip. A round ends with the
/// first sample whose `snd_una` covers everything sent by the start of the
/// round.
fn rounds(trace: &CwndTrace) -> Vec<u64> {
    let mut out = Vec::new();
    let Some(first) = trace.first() else {
        return out;
    };
    out.push(first.cwnd);
    let mut target = first.snd_max;
    for s in &trace[1..] {
        if s.snd_una >= target {
            out.push(s.cwnd);
            target = s.snd_max;
        }
    }
    out
}

fn window_growth() -> Verdict {
    let mut p = ScenarioParams::lan(2, BufferSize::Infinite, PolicyKind::TailDrop)
        .with_duration(SimTime::from_secs(1))
        .with_audit(true);
    p.ssthresh = Some(TRACE_SSTHRESH);
    let scenario = build_scenario(&p).expect("valid scenario");
    let sim = match simulate(&scenario, true) {
        Ok(sim) => sim,
        Err(e) => return Verdict::new(false, format!("trace run failed: {e}")),
    };
    let res = &sim.result;
    if res.drops_total() != 0 || res.timeouts != 0 || res.retransmitted_segments != 0 {
        return Verdict::new(
            false,
            format!(
                "run was not loss-free: drops={} timeouts={} retx={}",
                res.drops_total(),
                res.timeouts,
                res.retransmitted_segments
            ),
        );
    }
    let rcvwnd = scenario.tcp.rcvwnd;
    let mut ss = 0;
    let mut ca = 0;
    let mut bad = Vec::new();
    for (c, trace) in sim.traces.expect("tracing enabled").iter().enumerate() {
        for w in rounds(trace).windows(2) {
            let (before, after) = (w[0], w[1]);
            if after + MSS > rcvwnd {
                // window-limited by the receiver from here on
                break;
            }
            if after <= TRACE_SSTHRESH {
                ss += 1;
                if after.abs_diff(2 * before) > MSS {
                    bad.push(format!("conn {c} slow start {before}->{after}"));
                }
            } else if before >= TRACE_SSTHRESH {
                ca += 1;
                if after.abs_diff(before + MSS) > MSS {
                    bad.push(format!("conn {c} avoidance {before}->{after}"));
                }
            }
        }
    }
    let enough = ss >= MIN_SS_ROUNDS && ca >= MIN_CA_ROUNDS;
    let mut detail = format!(
        "{ss} slow-start and {ca} avoidance rounds checked, {} off by more than 1 MSS",
        bad.len()
    );
    if let Some(b) = bad.first() {
        detail.push_str(&format!("; first: {b}"));
    }
    Verdict::new(enough && bad.is_empty(), detail)
}

/// The network aborts a run with an invariant error when the first segment
/// sent after a timeout is not `snd_una`, so a lossy run that completes with
/// timeouts exercises the rule.
fn go_back_n(lossy: &[&Run]) -> Verdict {
    let timeouts: u64 = lossy
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .map(|r| r.timeouts)
        .sum();
    let failed: Vec<&str> = lossy
        .iter()
        .filter(|r| r.result.is_err())
        .map(|r| r.label.as_str())
        .collect();
    Verdict::new(
        timeouts > 0 && failed.is_empty(),
        format!(
            "{timeouts} timeouts across {} lossy runs, {} aborted",
            lossy.len(),
            failed.len()
        ),
    )
}

fn fairness_properties() -> Verdict {
    let cases = Cell::new(0u32);
    let vectors = (
        proptest::collection::vec(0u32..=1_000_000, 1..=32),
        1u32..=1000,
    );
    let close = |a: f64, b: f64| (a - b).abs() <= FAIRNESS_REL_TOL * b.abs().max(1.0);
    let outcome = runner(FAIRNESS_VECTORS).run(&vectors, |(v, scale)| {
        cases.set(cases.get() + 1);
        let n = v.len();
        let xs: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
        let f = fairness_index(&xs);
        let sum: u64 = v.iter().map(|&x| u64::from(x)).sum();
        if sum == 0 {
            prop_assert!(f.degenerate);
            prop_assert_eq!(f.value, 1.0);
        } else {
            // exact value (Σx)² / (n Σx²)
            let sum_sq: u128 = v.iter().map(|&x| u128::from(x) * u128::from(x)).sum();
            let exact = BigRational::new(
                BigInt::from(sum) * BigInt::from(sum),
                BigInt::from(n) * BigInt::from(sum_sq),
            );
            let exact_f = ratio_to_f64(&exact);
            prop_assert!(close(f.value, exact_f), "{} vs {}", f.value, exact_f);
            prop_assert!(f.value >= 1.0 / n as f64 - FAIRNESS_REL_TOL);
            prop_assert!(f.value <= 1.0 + FAIRNESS_REL_TOL);
            let scaled: Vec<f64> = xs.iter().map(|x| x * f64::from(scale)).collect();
            prop_assert!(close(fairness_index(&scaled).value, f.value));
        }
        let level = f64::from(v[0].max(1));
        prop_assert!(close(fairness_index(&vec![level; n]).value, 1.0));
        let mut one_hot = vec![0.0; n];
        one_hot[n - 1] = level;
        prop_assert!(close(fairness_index(&one_hot).value, 1.0 / n as f64));
        Ok(())
    });
    match outcome {
        Ok(()) => Verdict::new(
            cases.get() >= FAIRNESS_VECTORS,
            format!("{} vectors", cases.get()),
        ),
        Err(e) => Verdict::new(false, format!("after {} vectors: {e}", cases.get())),
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    // both sides fit comfortably in f64 range for these inputs
    let n: f64 = r.numer().to_string().parse().expect("numerator");
    let d: f64 = r.denom().to_string().parse().expect("denominator");
    n / d
}

fn tcp_dynamics(lossy: &[&Run]) -> Verdict {
    let parts = [window_growth(), go_back_n(lossy), fairness_properties()];
    let names = ["window growth", "go-back-N", "fairness index"];
    let pass = parts.iter().all(|v| v.pass);
    let detail = names
        .iter()
        .zip(&parts)
        .map(|(name, v)| {
            format!(
                "{name} {}: {}",
                if v.pass { "ok" } else { "FAILED" },
                v.detail
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Verdict::new(pass, detail)
}

fn conservation(runs: &[&Run]) -> Verdict {
    let mut bad = Vec::new();
    for r in runs {
        match &r.result {
            Ok(res) if res.cells.balanced() && r.scenario.audit => {}
            Ok(res) => bad.push(format!("{} ledger {:?}", r.label, res.cells)),
            Err(e) => bad.push(format!("{}: {e}", r.label)),
        }
    }
    let injected: u64 = runs
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .map(|r| r.cells.injected)
        .sum();
    let mut detail = format!(
        "{} audited runs, {injected} cells injected, {} unbalanced or aborted",
        runs.len(),
        bad.len()
    );
    if !bad.is_empty() {
        detail.push_str(&format!(": {}", bad.join(", ")));
    }
    Verdict::new(bad.is_empty() && !runs.is_empty(), detail)
}

fn determinism(grid_runs: &[Run], params: &[ScenarioParams]) -> Verdict {
    let direct = csv(&grid_runs.iter().map(Run::row).collect::<Vec<_>>());
    let sweep_csv = |parallelism| {
        let rows: Result<Vec<ResultRow>, String> = run_points(params.to_vec(), parallelism)
            .into_iter()
            .map(|o| o.result.map_err(|e| e.to_string()))
            .collect();
        rows.map(|r| csv(&r))
    };
    let (serial, wide) = (sweep_csv(1), sweep_csv(WIDE_PARALLELISM));
    match (serial, wide) {
        (Ok(serial), Ok(wide)) => Verdict::new(
            direct == serial && serial == wide,
            format!(
                "{} rows; repeat identical: {}; parallelism 1 vs {WIDE_PARALLELISM} identical: {}",
                params.len(),
                direct == serial,
                serial == wide
            ),
        ),
        (a, b) => Verdict::new(false, format!("sweep failed: {:?} {:?}", a.err(), b.err())),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut failed = Vec::new();
    let mut report = |n: u32, title: &str, v: Verdict| {
        println!(
            "criterion {n} {}: {title}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            started.elapsed().as_secs_f64()
        );
        if !v.pass {
            failed.push(n);
        }
    };

    let infinite: Vec<Run> = [ConfigClass::Lan, ConfigClass::Wan]
        .into_iter()
        .flat_map(|c| [5, 15].map(move |n| (c, n)))
        .map(|(c, n)| {
            run(ScenarioParams::new(
                c,
                n,
                BufferSize::Infinite,
                PolicyKind::TailDrop,
            ))
        })
        .collect();
    report(1, "zero-loss anchor", zero_loss(&infinite));
    report(
        2,
        "buffer requirement scales with N",
        queue_scaling(&infinite[0], &infinite[1]),
    );

    let grid_params: Vec<ScenarioParams> = [5, 15]
        .into_iter()
        .flat_map(|n| {
            PolicyKind::ALL.map(move |k| ScenarioParams::lan(n, BufferSize::Cells(1000), k))
        })
        .map(|p| p.with_audit(true))
        .collect();
    let lan_grid: Vec<Run> = grid_params.iter().cloned().map(run).collect();
    let grid: Grid = lan_grid
        .iter()
        .map(|r| ((r.scenario.n_sources, r.scenario.policy_spec.kind), r))
        .collect();
    report(3, "policy ordering, LAN/1000", policy_ordering(&grid));

    let mut wan_params = Vec::new();
    for k in ConfigClass::Wan.table_buffers() {
        for kind in PolicyKind::ALL {
            if k == 12000 || matches!(kind, PolicyKind::TailDrop | PolicyKind::Epd) {
                wan_params.push(ScenarioParams::wan(5, BufferSize::Cells(k), kind));
            }
        }
    }
    let wan: Vec<Run> = wan_params.into_iter().map(run).collect();
    let by_buffer: BTreeMap<(u64, PolicyKind), &Run> = wan
        .iter()
        .map(|r| {
            (
                (
                    r.scenario.buffer.cells().unwrap(),
                    r.scenario.policy_spec.kind,
                ),
                r,
            )
        })
        .collect();
    let at_12000: Vec<&Run> = wan
        .iter()
        .filter(|r| r.scenario.buffer == BufferSize::Cells(12000))
        .collect();
    report(
        4,
        "WAN insensitivity",
        wan_insensitivity(&at_12000, &by_buffer),
    );

    report(5, "drop decisions match exact oracle", drop_oracle());
    report(6, "FBA threshold identity", threshold_identity());

    let lossy: Vec<&Run> = lan_grid.iter().collect();
    report(7, "TCP dynamics", tcp_dynamics(&lossy));

    let audited: Vec<&Run> = infinite.iter().chain(&lan_grid).chain(&wan).collect();
    report(8, "conservation audit", conservation(&audited));

    report(9, "determinism", determinism(&lan_grid, &grid_params));

    if failed.is_empty() {
        println!("all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
