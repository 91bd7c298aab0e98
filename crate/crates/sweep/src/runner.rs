//! Task planning, parallel execution and result files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ramanmag_core::magnetometry::SensitivityOptions;
use ramanmag_core::{
    laser_curve, response_vs_detuning, sensitivity_curve_with, threshold_pump, CavitySystem,
    Error as CoreError, MicrowaveDrive,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, PumpSpec, SweepKind};
use crate::error::SweepError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One independent solver job. Field order is the sort order of the output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    pub kappa_r: f64,
    pub rabi: f64,
    pub dephasing: f64,
    /// Only set for laser-curve tasks; the other kinds sweep Δ inside a task.
    pub detuning: Option<f64>,
}

impl Task {
    pub fn label(&self) -> String {
        let mut s = format!(
            "kappa_r={:e} rabi={:e} gamma_g={:e}",
            self.kappa_r, self.rabi, self.dephasing
        );
        if let Some(d) = self.detuning {
            s.push_str(&format!(" detuning={d:e}"));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Ok,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub task: String,
    pub status: TaskState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub timestamp: String,
    pub sweep: String,
    pub workers: usize,
    pub wall_time_s: f64,
    pub tasks: Vec<TaskReport>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn failed(&self) -> usize {
        self.tasks
            .iter()
            .filter(|t| t.status == TaskState::Failed)
            .count()
    }
}

/// In-memory result of a sweep, before anything is written.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub summary: Value,
    pub reports: Vec<TaskReport>,
    pub workers: usize,
    pub wall_time_s: f64,
}

impl SweepOutcome {
    pub fn csv_bytes(&self) -> Result<Vec<u8>, SweepError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_number(*v)))?;
        }
        w.into_inner()
            .map_err(|e| SweepError::io("<csv buffer>", e.into_error()))
    }
}

pub struct RunOutput {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: RunManifest,
}

/// Twelve significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.11e}")
    }
}

pub fn header(kind: SweepKind) -> Vec<&'static str> {
    match kind {
        SweepKind::LaserCurve => vec![
            "kappa_r_hz",
            "rabi_hz",
            "gamma_g_hz",
            "detuning_hz",
            "pump_power_w",
            "output_power_w",
            "beta_per_m",
            "lambda_p_hz",
        ],
        SweepKind::Response => vec![
            "kappa_r_hz",
            "rabi_hz",
            "gamma_g_hz",
            "detuning_hz",
            "pump_power_w",
            "output_power_w",
        ],
        SweepKind::ThresholdShift => vec![
            "kappa_r_hz",
            "rabi_hz",
            "gamma_g_hz",
            "threshold_resonant_w",
            "threshold_detuned_w",
            "shift_percent",
        ],
        SweepKind::Sensitivity => vec![
            "rabi_hz",
            "gamma_g_hz",
            "detuning_hz",
            "output_power_w",
            "eta_t_per_sqrt_hz",
        ],
    }
}

/// Tasks in lexicographic order over (κ_r, Ω_d, Γ_g, Δ_g). A zero Rabi
/// frequency makes the detuning irrelevant, so it contributes one task.
pub fn plan(cfg: &ExperimentConfig) -> Vec<Task> {
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (kappas, rabis, gammas, detunings) = (
        sorted(&cfg.kappa_r),
        sorted(&cfg.rabi),
        sorted(&cfg.dephasing),
        sorted(&cfg.detuning),
    );
    let mut tasks = Vec::new();
    for &kappa_r in &kappas {
        for &rabi in &rabis {
            for &dephasing in &gammas {
                let task = Task {
                    kappa_r,
                    rabi,
                    dephasing,
                    detuning: None,
                };
                if cfg.sweep != SweepKind::LaserCurve {
                    tasks.push(task);
                } else if rabi == 0.0 {
                    tasks.push(Task {
                        detuning: Some(0.0),
                        ..task
                    });
                } else {
                    for &d in &detunings {
                        tasks.push(Task {
                            detuning: Some(d),
                            ..task
                        });
                    }
                }
            }
        }
    }
    tasks
}

enum TaskResult {
    Done { rows: Vec<Vec<f64>>, summary: Value },
    Skipped { reason: String, summary: Value },
}

fn run_task(cfg: &ExperimentConfig, task: &Task) -> Result<TaskResult, CoreError> {
    let sys: CavitySystem = cfg.cavity.with_loss_rate(task.kappa_r);
    let rates = &cfg.rates;
    let drive = MicrowaveDrive::new(task.rabi, task.detuning.unwrap_or(0.0), task.dephasing)
        .with_convention(cfg.convention);
    let head = [task.kappa_r, task.rabi, task.dephasing];

    match cfg.sweep {
        SweepKind::LaserCurve => {
            let grid = match &cfg.pump {
                Some(PumpSpec::Grid(g)) => g,
                _ => unreachable!("validated config has a pump grid"),
            };
            let points = laser_curve(&sys, rates, &drive, grid)?;
            let threshold = threshold_pump(&sys, rates, &drive)?;
            let rows = points
                .iter()
                .map(|p| {
                    let mut r = head.to_vec();
                    r.extend([
                        drive.detuning,
                        p.pump_power,
                        p.output_power,
                        p.beta,
                        p.pump_rate,
                    ]);
                    r
                })
                .collect();
            Ok(TaskResult::Done {
                rows,
                summary: json!({
                    "kappa_r_hz": task.kappa_r,
                    "rabi_hz": task.rabi,
                    "gamma_g_hz": task.dephasing,
                    "detuning_hz": drive.detuning,
                    "threshold_w": threshold,
                }),
            })
        }
        SweepKind::Response => {
            let pump = cfg.pump_rule().resolve(&sys, rates, &drive)?;
            let curve = response_vs_detuning(&sys, rates, &drive, pump, &cfg.detuning)?;
            let rows = curve
                .detunings
                .iter()
                .zip(&curve.outputs)
                .map(|(&d, &p)| {
                    let mut r = head.to_vec();
                    r.extend([d, pump, p]);
                    r
                })
                .collect();
            let peak = curve.outputs.iter().cloned().fold(0.0, f64::max);
            Ok(TaskResult::Done {
                rows,
                summary: json!({
                    "kappa_r_hz": task.kappa_r,
                    "rabi_hz": task.rabi,
                    "gamma_g_hz": task.dephasing,
                    "pump_power_w": pump,
                    "peak_output_w": peak,
                    "fwhm_hz": curve.fwhm(),
                }),
            })
        }
        SweepKind::ThresholdShift => {
            let resonant = threshold_pump(&sys, rates, &drive.with_detuning(0.0))?;
            let detuned = threshold_pump(&sys, rates, &drive.with_detuning(cfg.shift_detuning))?;
            let shift = 100.0 * (detuned - resonant) / resonant;
            Ok(TaskResult::Done {
                rows: vec![vec![
                    task.kappa_r,
                    task.rabi,
                    task.dephasing,
                    resonant,
                    detuned,
                    shift,
                ]],
                summary: Value::Null,
            })
        }
        SweepKind::Sensitivity => {
            let pump = cfg.pump_rule().resolve(&sys, rates, &drive)?;
            let curve = response_vs_detuning(&sys, rates, &drive, pump, &cfg.detuning)?;
            let opts = SensitivityOptions {
                detection_efficiency: cfg.detection_efficiency,
                ..SensitivityOptions::default()
            };
            let base = json!({
                "rabi_hz": task.rabi,
                "gamma_g_hz": task.dephasing,
                "pump_power_w": pump,
            });
            match sensitivity_curve_with(&curve, &opts) {
                Ok(res) => {
                    let rows = res
                        .curve
                        .iter()
                        .map(|p| vec![task.rabi, task.dephasing, p.detuning, p.output_power, p.eta])
                        .collect();
                    let mut summary = base;
                    summary["eta_min_t_per_sqrt_hz"] = json!(res.eta_min);
                    summary["detuning_opt_hz"] = json!(res.detuning_opt);
                    summary["field_opt_t"] = json!(res.field_opt);
                    Ok(TaskResult::Done { rows, summary })
                }
                Err(CoreError::DegenerateCurve(reason)) => Ok(TaskResult::Skipped {
                    reason,
                    summary: base,
                }),
                Err(e) => Err(e),
            }
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Run every task of the sweep on `workers` threads and assemble the outputs
/// in task order.
pub fn execute(cfg: &ExperimentConfig, workers: usize) -> Result<SweepOutcome, SweepError> {
    cfg.validate()?;
    let workers = workers.max(1);
    let tasks = plan(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SweepError::validation("workers", e.to_string()))?;

    let start = Instant::now();
    let results: Vec<(Result<TaskResult, CoreError>, f64)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let t0 = Instant::now();
                let r = run_task(cfg, t);
                (r, t0.elapsed().as_secs_f64())
            })
            .collect()
    });
    let wall_time_s = start.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut reports = Vec::new();
    for (task, (result, wall)) in tasks.iter().zip(results) {
        let (status, message) = match result {
            Ok(TaskResult::Done { rows: r, summary }) => {
                rows.extend(r);
                summaries.push(summary);
                (TaskState::Ok, None)
            }
            Ok(TaskResult::Skipped {
                reason,
                mut summary,
            }) => {
                summary["skipped"] = json!(reason);
                summaries.push(summary);
                (TaskState::Skipped, Some(reason))
            }
            Err(e) => (TaskState::Failed, Some(e.to_string())),
        };
        reports.push(TaskReport {
            task: task.label(),
            status,
            message,
            wall_time_s: wall,
        });
    }

    Ok(SweepOutcome {
        header: header(cfg.sweep),
        summary: summarise(cfg, &rows, summaries),
        rows,
        reports,
        workers,
        wall_time_s,
    })
}

fn summarise(cfg: &ExperimentConfig, rows: &[Vec<f64>], per_task: Vec<Value>) -> Value {
    match cfg.sweep {
        SweepKind::LaserCurve => json!({ "sweep": "laser_curve", "curves": per_task }),
        SweepKind::Response => json!({ "sweep": "response", "curves": per_task }),
        SweepKind::ThresholdShift => {
            // Optimum Ω_d per (κ_r, Γ_g) series.
            let mut series: Vec<((f64, f64), (f64, f64))> = Vec::new();
            for r in rows {
                let key = (r[0], r[2]);
                match series.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, best)) if r[5] > best.1 => *best = (r[1], r[5]),
                    Some(_) => {}
                    None => series.push((key, (r[1], r[5]))),
                }
            }
            let optima: Vec<Value> = series
                .iter()
                .map(|((k, g), (rabi, shift))| {
                    json!({
                        "kappa_r_hz": k,
                        "gamma_g_hz": g,
                        "rabi_opt_hz": rabi,
                        "max_shift_percent": shift,
                    })
                })
                .collect();
            let thresholds: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "kappa_r_hz": r[0],
                        "rabi_hz": r[1],
                        "gamma_g_hz": r[2],
                        "threshold_resonant_w": r[3],
                        "threshold_detuned_w": r[4],
                        "shift_percent": r[5],
                    })
                })
                .collect();
            json!({
                "sweep": "threshold_shift",
                "shift_detuning_hz": cfg.shift_detuning,
                "thresholds": thresholds,
                "optima": optima,
            })
        }
        SweepKind::Sensitivity => {
            let mut best: Vec<(f64, f64, f64, f64)> = Vec::new();
            for s in &per_task {
                let (Some(g), Some(eta)) = (
                    s["gamma_g_hz"].as_f64(),
                    s["eta_min_t_per_sqrt_hz"].as_f64(),
                ) else {
                    continue;
                };
                let rabi = s["rabi_hz"].as_f64().unwrap_or(f64::NAN);
                let d = s["detuning_opt_hz"].as_f64().unwrap_or(f64::NAN);
                match best.iter_mut().find(|b| b.0 == g) {
                    Some(b) if eta < b.2 => *b = (g, rabi, eta, d),
                    Some(_) => {}
                    None => best.push((g, rabi, eta, d)),
                }
            }
            let optima: Vec<Value> = best
                .iter()
                .map(|(g, rabi, eta, d)| {
                    json!({
                        "gamma_g_hz": g,
                        "rabi_opt_hz": rabi,
                        "eta_min_t_per_sqrt_hz": eta,
                        "detuning_opt_hz": d,
                    })
                })
                .collect();
            json!({
                "sweep": "sensitivity",
                "kappa_r_hz": cfg.kappa_r[0],
                "detection_efficiency": cfg.detection_efficiency,
                "points": per_task,
                "optima": optima,
            })
        }
    }
}

/// SHA-256 of the canonical SI form of the physics part of the config.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut raw = cfg.to_raw();
    raw.output = None;
    raw.workers = None;
    let canonical = serde_json::to_vec(&raw).expect("config serialises");
    hex::encode(Sha256::digest(&canonical))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SweepError> {
    use std::io::Write;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| SweepError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| SweepError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| SweepError::io(path, e.error))?;
    Ok(())
}

/// Execute the sweep and write `<stem>.csv`, `<stem>.summary.json` and
/// `<stem>.manifest.json` into `out_dir`.
pub fn run(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<RunOutput, SweepError> {
    std::fs::create_dir_all(out_dir).map_err(|e| SweepError::io(out_dir, e))?;
    let outcome = execute(cfg, workers)?;

    let csv = out_dir.join(format!("{}.csv", cfg.output_stem));
    let summary = out_dir.join(format!("{}.summary.json", cfg.output_stem));
    let manifest_path = out_dir.join(format!("{}.manifest.json", cfg.output_stem));

    write_atomic(&csv, &outcome.csv_bytes()?)?;
    let mut summary_bytes = serde_json::to_vec_pretty(&outcome.summary)?;
    summary_bytes.push(b'\n');
    write_atomic(&summary, &summary_bytes)?;

    let file_name = |p: &Path| {
        p.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let manifest = RunManifest {
        config_hash: config_hash(cfg),
        tool_version: TOOL_VERSION.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        sweep: cfg.sweep.as_str().to_string(),
        workers: outcome.workers,
        wall_time_s: outcome.wall_time_s,
        tasks: outcome.reports,
        files: vec![file_name(&csv), file_name(&summary)],
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest)?;
    manifest_bytes.push(b'\n');
    write_atomic(&manifest_path, &manifest_bytes)?;

    Ok(RunOutput {
        csv,
        summary,
        manifest_path,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn number_format_has_twelve_significant_digits() {
        assert_eq!(format_number(0.34174), "3.41740000000e-1");
        assert_eq!(format_number(7.5e7), "7.50000000000e7");
        assert_eq!(format_number(0.0), "0.00000000000e0");
        assert_eq!(format_number(f64::INFINITY), "inf");
    }

    #[test]
    fn plan_is_lexicographic_and_collapses_mw_off() {
        let cfg = parse_config(
            r#"{
                "sweep": "laser_curve",
                "drive": {"rabi": {"values": [18, 0], "unit": "MHz"},
                          "detuning": {"values": [200, 0], "unit": "MHz"}},
                "kappa_r": {"values": [110, 75], "unit": "MHz"},
                "pump": {"grid": {"values": [0, 400], "unit": "mW"}}
            }"#,
        )
        .unwrap();
        let t = plan(&cfg);
        let keys: Vec<_> = t
            .iter()
            .map(|t| (t.kappa_r / 1e6, t.rabi / 1e6, t.detuning.unwrap() / 1e6))
            .collect();
        assert_eq!(
            keys,
            vec![
                (75.0, 0.0, 0.0),
                (75.0, 18.0, 0.0),
                (75.0, 18.0, 200.0),
                (110.0, 0.0, 0.0),
                (110.0, 18.0, 0.0),
                (110.0, 18.0, 200.0),
            ]
        );
    }

    #[test]
    fn hash_ignores_output_and_workers() {
        let a = parse_config(
            r#"{"sweep": "threshold_shift", "drive": {"rabi": {"value": 18, "unit": "MHz"}}}"#,
        )
        .unwrap();
        let mut b = a.clone();
        b.workers = Some(3);
        b.output_stem = "other".into();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.rabi = vec![19e6];
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
