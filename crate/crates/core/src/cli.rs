//! Command implementations behind the `crt-array` binary.
//!
//! Every command reads a [`RunConfig`], writes its artifacts into the output
//! directory and returns a short human-readable summary. JSON artifacts wrap
//! their payload in a [`Record`] carrying the tool version and the canonical
//! config; CSV artifacts start with `#` comment lines carrying the same.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coarray::{difference_coarray, report, sum_of, CoarrayReport};
use crate::config::RunConfig;
use crate::designs::{build, nested_2d, q_tuple_crt, q_tuple_expected_count, DesignKind, SensorArray};
use crate::error::{Error, Result};
use crate::rings::{Point, QuadInt, RingSpec};
use crate::sensing::montecarlo::trial_spectrum;
use crate::sensing::{
    pattern_metrics, run_rmse, two_way_pattern, AfForm, Coupling, ElementPattern, MusicGrid,
    PatternGrid, PatternMetrics, RmseConfig, Source,
};
use crate::smoothing::{
    method1_subarrays, method2_subarrays, selection_matrices, to_u_space, Geometry, SmoothingPlan,
};
use crate::verify::{self, Check};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TOOL: &str = "crt-array";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Design,
    Analyze,
    Uspace,
    Simulate,
    Pattern,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Design => "design",
            Command::Analyze => "analyze",
            Command::Uspace => "uspace",
            Command::Simulate => "simulate",
            Command::Pattern => "pattern",
            Command::Verify => "verify",
        }
    }

    fn known_keys(self) -> Vec<&'static str> {
        let mut keys = vec!["seed"];
        let array = [
            "array", "kind", "ring", "p", "generators", "n1", "n2", "sensors", "pitch",
        ];
        let plan = ["method", "x_g", "y_g", "l_x", "l_y", "l_r", "l_p"];
        match self {
            Command::Design | Command::Analyze => keys.extend(array),
            Command::Uspace => {
                keys.extend(array);
                keys.extend(plan);
            }
            Command::Simulate => {
                keys.extend(array);
                keys.extend(plan);
                keys.extend([
                    "trials", "snapshots", "sources", "source", "snr_db", "c_max",
                    "radius_multiple", "theta_step", "phi_step", "separation", "refine",
                    "min_separation", "phi_min", "phi_max", "spectrum",
                ]);
            }
            Command::Pattern => {
                keys.extend(array);
                keys.extend(["element", "tx_form", "rx_form", "theta_step", "phi_step"]);
            }
            Command::Verify => keys.push("range"),
        }
        keys
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Command::Design,
            Command::Analyze,
            Command::Uspace,
            Command::Simulate,
            Command::Pattern,
            Command::Verify,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| Error::input(format!("unknown command {s:?}")))
    }
}

/// Envelope of every JSON artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Record<T> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Vec<String>,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success(String),
    /// Some verification check failed; the summary lists every check.
    VerificationFailed(String),
}

pub struct Runner {
    pub command: Command,
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Runner {
    pub fn run(&self) -> Result<Outcome> {
        let unknown = self.config.unknown_keys(&self.command.known_keys());
        if !unknown.is_empty() {
            return Err(Error::input(format!(
                "unknown config keys for {}: {}",
                self.command,
                unknown.join(", ")
            )));
        }
        fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))?;
        match self.command {
            Command::Design => self.design().map(Outcome::Success),
            Command::Analyze => self.analyze().map(Outcome::Success),
            Command::Uspace => self.uspace().map(Outcome::Success),
            Command::Simulate => self.simulate().map(Outcome::Success),
            Command::Pattern => self.pattern().map(Outcome::Success),
            Command::Verify => self.verify(),
        }
    }

    fn record<T: Serialize>(&self, result: T) -> Record<T> {
        Record {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: self.command.as_str().into(),
            config: self.config.to_string().lines().map(String::from).collect(),
            result,
        }
    }

    fn write_json<T: Serialize>(&self, name: &str, result: T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.record(result))
            .map_err(|e| Error::input(format!("serialising {name}: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn write_csv(&self, name: &str, body: &str) -> Result<()> {
        let mut text = format!("# {TOOL} {VERSION} {}\n", self.command);
        for line in self.config.to_string().lines() {
            text.push_str(&format!("# {line}\n"));
        }
        text.push_str(body);
        self.write(name, &text)
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, text).map_err(|e| io_error(&path, e))
    }

    fn design(&self) -> Result<String> {
        let (arr, expected) = design_from_config(&self.config)?;
        self.write_json("array.json", DesignResult { expected_count: expected, array: arr.clone() })?;
        self.write_csv("array.csv", &arr.to_csv()?)?;
        Ok(format!(
            "{} sensors{}",
            arr.len(),
            expected.map_or(String::new(), |e| format!(" (closed form {e})"))
        ))
    }

    fn analyze(&self) -> Result<String> {
        let arr = array_from_config(&self.config)?;
        let difference = report(&arr)?;
        let (tx, rx) = arr.mimo_split();
        let sum = (!tx.is_empty() && !rx.is_empty()).then(|| SumSummary {
            transmit: tx.len(),
            receive: rx.len(),
            support_size: sum_of(arr.ring, &tx, &rx).support_size(),
        });
        let summary = format!(
            "{} sensors, {} distinct lags, dof {}, hole-free {}, fragility {}",
            arr.len(),
            difference.support_size,
            difference.dof,
            difference
                .holes
                .as_ref()
                .map_or("n/a".into(), |h| h.hole_free.to_string()),
            difference
                .fragility
                .as_ref()
                .map_or("n/a".into(), |f| format!("{} ({:.4})", f.ratio(), f.value())),
        );
        self.write_json(
            "coarray.json",
            AnalyzeResult {
                sensors: arr.len(),
                difference,
                sum,
            },
        )?;
        Ok(summary)
    }

    fn uspace(&self) -> Result<String> {
        let arr = array_from_config(&self.config)?;
        let c = difference_coarray(&arr);
        let g = arr.ring.embedding_generator()?;
        let lags: Vec<[f64; 2]> = c
            .support()
            .iter()
            .map(|&d| arr.ring.embed(d))
            .collect::<Result<_>>()?;
        let u = to_u_space(&g, &lags)?;
        let plan = plan_from_config(&self.config, arr.ring)?;
        let mut csv = String::from("u,v\n");
        for p in &u.points {
            csv.push_str(&format!("{},{}\n", p[0], p[1]));
        }
        self.write_csv("uspace.csv", &csv)?;
        if let Geometry::MethodII { l_r, l_p } = plan.geometry {
            let mut sel = String::from("role,row,col,value\n");
            for m in selection_matrices(l_r, l_p)? {
                sel.push_str(&m.to_triplet_csv());
            }
            self.write_csv("selection.csv", &sel)?;
        }
        let required = plan.required_lags();
        let missing = required.iter().filter(|d| !u.points.contains(*d)).count();
        let result = UspaceResult {
            points: u.points.len(),
            hexagon_radius: u.hexagon_radius(),
            square_radius: u.square_radius(),
            plan: PlanSummary::of(&plan),
            missing_lags: missing,
        };
        let summary = format!(
            "{} integer lags (hexagon radius {}, square radius {}); {} subarrays of {} elements, {} lags missing",
            result.points,
            result.hexagon_radius,
            result.square_radius,
            result.plan.subarrays,
            result.plan.elements,
            missing
        );
        self.write_json("uspace.json", result)?;
        Ok(summary)
    }

    fn simulate(&self) -> Result<String> {
        let arr = array_from_config(&self.config)?;
        let plan = plan_from_config(&self.config, arr.ring)?;
        let cfg = rmse_config(&self.config)?;
        let report = run_rmse(&arr, &plan, &cfg)?;
        if self.config.parsed_or("spectrum", true)? {
            let l = *cfg.snapshots.iter().max().expect("validated");
            let (_, res) = trial_spectrum(&arr, &plan, &cfg, 0, l)?;
            self.write_csv("spectrum.csv", &res.to_csv())?;
        }
        let summary = report
            .rmse
            .iter()
            .map(|p| format!("L={}: rmse {:.6} rad", p.snapshots, p.rmse))
            .collect::<Vec<_>>()
            .join("\n");
        self.write_json(
            "simulation.json",
            SimulateResult {
                sensors: arr.len(),
                plan: PlanSummary::of(&plan),
                report,
            },
        )?;
        Ok(summary)
    }

    fn pattern(&self) -> Result<String> {
        let arr = array_from_config(&self.config)?;
        let (tx, rx) = arr.mimo_split();
        let embed = |pts: &[Point]| -> Result<Vec<[f64; 2]>> {
            pts.iter()
                .map(|&u| arr.ring.embed(u).map(|[x, y]| [arr.pitch * x, arr.pitch * y]))
                .collect()
        };
        let element = match self.config.get("element")?.unwrap_or("cosine") {
            "cosine" => ElementPattern::Cosine,
            "isotropic" => ElementPattern::Isotropic,
            other => return Err(Error::input(format!("unknown element pattern {other:?}"))),
        };
        let form = |key: &str| -> Result<AfForm> {
            match self.config.get(key)?.unwrap_or("planar") {
                "planar" => Ok(AfForm::Planar),
                "transmit_x" => Ok(AfForm::TransmitX),
                "receive_y" => Ok(AfForm::ReceiveY),
                other => Err(Error::input(format!("unknown array-factor form {other:?}"))),
            }
        };
        let grid = PatternGrid {
            theta_step_deg: positive(&self.config, "theta_step", 0.25)?,
            phi_step_deg: positive(&self.config, "phi_step", 0.25)?,
        };
        let pat = two_way_pattern(&embed(&tx)?, &embed(&rx)?, &grid, element, (form("tx_form")?, form("rx_form")?))?;
        let metrics = pattern_metrics(&pat);
        self.write_csv("pattern.csv", &pat.to_csv())?;
        let summary = format!(
            "{} transmit, {} receive; SLS {}; HPBW {}",
            tx.len(),
            rx.len(),
            metrics
                .sls
                .db()
                .map_or("none (no sidelobe)".into(), |v| format!("{v:.2} dB")),
            metrics.hpbw_deg.map_or("n/a".into(), |v| format!("{v:.2} deg")),
        );
        self.write_json(
            "pattern.json",
            PatternResult {
                transmit: tx.len(),
                receive: rx.len(),
                metrics,
            },
        )?;
        Ok(summary)
    }

    fn verify(&self) -> Result<Outcome> {
        let r = self.config.parsed_or("range", 5i64)?;
        if !(1..=12).contains(&r) {
            return Err(Error::input("range must lie in 1..=12"));
        }
        let mut checks: Vec<Check> = vec![
            verify::coprimality_sweep(RingSpec::GAUSSIAN, r)?,
            verify::coprimality_sweep(RingSpec::EISENSTEIN, r)?,
            verify::q_tuple_example()?,
        ];
        checks.extend(verify::family_counts()?);
        checks.extend(verify::hole_free_suite()?);
        let failed = checks.iter().filter(|c| !c.passed).count();
        let summary = checks
            .iter()
            .map(|c| {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                format!("{tag} {}: {}: {}", c.suite, c.name, c.detail)
            })
            .chain([format!("{} checks, {failed} failed", checks.len())])
            .collect::<Vec<_>>()
            .join("\n");
        self.write_json("verify.json", &checks)?;
        Ok(if failed == 0 {
            Outcome::Success(summary)
        } else {
            Outcome::VerificationFailed(summary)
        })
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::input(format!("{}: {e}", path.display()))
}

fn positive(cfg: &RunConfig, key: &str, default: f64) -> Result<f64> {
    let v = cfg.parsed_or(key, default)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::input(format!("{key} must be positive")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignResult {
    pub expected_count: Option<i64>,
    pub array: SensorArray,
}

#[derive(Debug, Clone, Serialize)]
pub struct SumSummary {
    pub transmit: usize,
    pub receive: usize,
    pub support_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeResult {
    pub sensors: usize,
    pub difference: CoarrayReport,
    pub sum: Option<SumSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanSummary {
    pub geometry: Geometry,
    pub ordering: &'static str,
    pub subarrays: usize,
    pub elements: usize,
}

impl PlanSummary {
    fn of(plan: &SmoothingPlan) -> Self {
        PlanSummary {
            geometry: plan.geometry,
            ordering: plan.ordering,
            subarrays: plan.subarrays.len(),
            elements: plan.dim(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UspaceResult {
    pub points: usize,
    pub hexagon_radius: i64,
    pub square_radius: i64,
    pub plan: PlanSummary,
    pub missing_lags: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateResult {
    pub sensors: usize,
    pub plan: PlanSummary,
    pub report: crate::sensing::RmseReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternResult {
    pub transmit: usize,
    pub receive: usize,
    pub metrics: PatternMetrics,
}

fn parse_point(s: &str) -> Result<Point> {
    let t = s.trim().trim_matches(|c| c == '(' || c == ')');
    let (a, b) = t
        .split_once(',')
        .ok_or_else(|| Error::input(format!("expected x,y but got {s:?}")))?;
    let p = |x: &str| {
        x.trim()
            .parse::<i64>()
            .map_err(|_| Error::input(format!("expected integer coordinates in {s:?}")))
    };
    Ok([p(a)?, p(b)?])
}

/// Builds the array named by the design keys, with its closed-form count.
pub fn design_from_config(cfg: &RunConfig) -> Result<(SensorArray, Option<i64>)> {
    let kind: DesignKind = cfg
        .parsed("kind")?
        .ok_or_else(|| Error::input("config needs kind (or array = PATH)"))?;
    let ring_or = |default: RingSpec| -> Result<RingSpec> { Ok(cfg.parsed("ring")?.unwrap_or(default)) };
    let (arr, expected) = match kind {
        DesignKind::QTuple => {
            let ring = ring_or(RingSpec::GAUSSIAN)?;
            let gens: Vec<QuadInt> = cfg.parsed_all("generators")?;
            if gens.is_empty() {
                return Err(Error::input("q_tuple needs generators"));
            }
            let arr = q_tuple_crt(ring, &gens)?;
            (arr, Some(q_tuple_expected_count(ring, &gens)?))
        }
        DesignKind::Nested2d => {
            let n1 = cfg.parsed_or("n1", 3u32)?;
            let n2 = cfg.parsed_or("n2", 3u32)?;
            let expected = (n1 as i64).pow(2) + (n2 as i64).pow(2) - 1;
            (nested_2d(n1, n2)?, Some(expected))
        }
        DesignKind::Custom => {
            let ring = ring_or(RingSpec::GAUSSIAN)?;
            let pts = cfg
                .get_all("sensors")
                .iter()
                .map(|s| parse_point(s))
                .collect::<Result<Vec<_>>>()?;
            if pts.is_empty() {
                return Err(Error::input("custom design needs sensors = x,y lines"));
            }
            (SensorArray::custom(ring, pts)?, None)
        }
        _ => {
            let default = match kind {
                DesignKind::Spinner | DesignKind::A2Cross => RingSpec::EISENSTEIN,
                _ => RingSpec::GAUSSIAN,
            };
            let ring = ring_or(default)?;
            let p: u64 = cfg
                .parsed("p")?
                .ok_or_else(|| Error::input(format!("{kind} needs p")))?;
            let arr = build(kind, ring, p)?;
            let expected = kind.expected_count(p).map(|e| e as i64);
            (arr, expected)
        }
    };
    let pitch = positive(cfg, "pitch", arr.pitch)?;
    Ok((arr.with_pitch(pitch), expected))
}

/// Loads `array = PATH` (a design record or a bare array), or builds one.
pub fn array_from_config(cfg: &RunConfig) -> Result<SensorArray> {
    let Some(path) = cfg.get("array")? else {
        return Ok(design_from_config(cfg)?.0);
    };
    let text = fs::read_to_string(path).map_err(|e| io_error(Path::new(path), e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::input(format!("{path}: {e}")))?;
    let inner = value
        .pointer("/result/array")
        .cloned()
        .unwrap_or(value);
    let arr: SensorArray =
        serde_json::from_value(inner).map_err(|e| Error::input(format!("{path}: {e}")))?;
    validate_array(&arr)?;
    let pitch = positive(cfg, "pitch", arr.pitch)?;
    Ok(arr.with_pitch(pitch))
}

fn validate_array(arr: &SensorArray) -> Result<()> {
    if arr.is_empty() {
        return Err(Error::input("array has no sensors"));
    }
    if arr.labels.len() != arr.sensors.len() {
        return Err(Error::input("array has one label per sensor"));
    }
    if !arr.sensors.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::input("array sensors must be sorted and distinct"));
    }
    if !(arr.pitch > 0.0 && arr.pitch.is_finite()) {
        return Err(Error::input("array pitch must be positive"));
    }
    arr.ring.embedding_generator()?;
    Ok(())
}

/// Smoothing plan from `method` and its parameters; defaults follow the ring
/// (rectangular for square lattices, hexagonal otherwise).
pub fn plan_from_config(cfg: &RunConfig, ring: RingSpec) -> Result<SmoothingPlan> {
    let default = if ring == RingSpec::GAUSSIAN { 1 } else { 2 };
    match cfg.parsed_or("method", default)? {
        1 => method1_subarrays(
            cfg.parsed_or("x_g", 7)?,
            cfg.parsed_or("y_g", 7)?,
            cfg.parsed_or("l_x", 7)?,
            cfg.parsed_or("l_y", 7)?,
        ),
        2 => method2_subarrays(cfg.parsed_or("l_r", 7)?, cfg.parsed_or("l_p", 3)?),
        m => Err(Error::input(format!("method must be 1 or 2, got {m}"))),
    }
}

/// Monte-Carlo settings; `source = theta_deg,phi_deg[,power]` lines fix the
/// sources for every trial.
pub fn rmse_config(cfg: &RunConfig) -> Result<RmseConfig> {
    let d = RmseConfig::default();
    let fixed = cfg
        .get_all("source")
        .iter()
        .map(|s| {
            let parts: Vec<f64> = s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::input(format!("bad source {s:?}")))?;
            match parts[..] {
                [t, p] => Source::new(t.to_radians(), p.to_radians(), 1.0),
                [t, p, w] => Source::new(t.to_radians(), p.to_radians(), w),
                _ => Err(Error::input(format!("bad source {s:?}"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let snapshots: Vec<usize> = cfg.parsed_all("snapshots")?;
    let sources = if fixed.is_empty() {
        cfg.parsed_or("sources", d.sources)?
    } else {
        cfg.parsed_or("sources", fixed.len())?
    };
    let rc = RmseConfig {
        trials: cfg.parsed_or("trials", d.trials)?,
        snapshots: if snapshots.is_empty() { d.snapshots.clone() } else { snapshots },
        sources,
        snr_db: cfg.parsed_or("snr_db", d.snr_db)?,
        coupling: Coupling {
            c_max: cfg.parsed_or("c_max", d.coupling.c_max)?,
            radius_multiple: cfg.parsed_or("radius_multiple", d.coupling.radius_multiple)?,
        },
        seed: cfg.parsed_or("seed", d.seed)?,
        grid: MusicGrid {
            theta_step_deg: positive(cfg, "theta_step", d.grid.theta_step_deg)?,
            phi_step_deg: positive(cfg, "phi_step", d.grid.phi_step_deg)?,
            separation: cfg.parsed_or("separation", d.grid.separation)?,
            refine: cfg.parsed_or("refine", d.grid.refine)?,
        },
        min_separation: cfg.parsed_or("min_separation", d.min_separation)?,
        phi_range_deg: [
            cfg.parsed_or("phi_min", d.phi_range_deg[0])?,
            cfg.parsed_or("phi_max", d.phi_range_deg[1])?,
        ],
        fixed_sources: (!fixed.is_empty()).then_some(fixed),
    };
    rc.validate()?;
    Ok(rc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::parse(text).unwrap()
    }

    #[test]
    fn designs_from_keys() {
        let (a, e) = design_from_config(&cfg("kind=t_array\np=13")).unwrap();
        assert_eq!((a.len(), e), (37, Some(37)));
        let (a, e) = design_from_config(&cfg(
            "kind=q_tuple\ngenerators=-1-2i\ngenerators=-1+2i\ngenerators=-1+4i",
        ))
        .unwrap();
        assert_eq!((a.len(), e), (169, Some(169)));
        let (a, _) = design_from_config(&cfg("kind=spinner\np=7")).unwrap();
        assert_eq!(a.ring, RingSpec::EISENSTEIN);
        assert!(design_from_config(&cfg("kind=t_array\np=4")).is_err());
        assert!(design_from_config(&cfg("kind=custom\nsensors=0,0\nsensors=0,0")).is_err());
        let (a, _) = design_from_config(&cfg("kind=custom\nsensors=(0,0)\nsensors=2,1\npitch=0.25")).unwrap();
        assert_eq!(a.sensors, vec![[0, 0], [2, 1]]);
        assert_eq!(a.pitch, 0.25);
    }

    #[test]
    fn plan_defaults_follow_ring() {
        let p = plan_from_config(&cfg(""), RingSpec::GAUSSIAN).unwrap();
        assert_eq!((p.subarrays.len(), p.dim()), (64, 64));
        let p = plan_from_config(&cfg(""), RingSpec::EISENSTEIN).unwrap();
        assert_eq!(p.dim(), 37);
        assert!(plan_from_config(&cfg("method=3"), RingSpec::GAUSSIAN).is_err());
    }

    #[test]
    fn simulation_keys() {
        let c = rmse_config(&cfg("snapshots=10\nsnapshots=20\nsource=10,30\nsource=-50,40,2")).unwrap();
        assert_eq!(c.snapshots, vec![10, 20]);
        assert_eq!(c.sources, 2);
        assert_eq!(c.fixed_sources.as_ref().unwrap()[1].power, 2.0);
        assert!(rmse_config(&cfg("c_max=1.5")).is_err());
        assert!(rmse_config(&cfg("source=1")).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let r = Runner {
            command: Command::Design,
            config: cfg("kind=t_array\np=13\nbogus=1"),
            out: dir.path().to_path_buf(),
        };
        assert!(r.run().is_err());
    }
}
