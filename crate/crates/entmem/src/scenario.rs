//! Scenario orchestration: wires the source, entangler, memory channel,
//! and detection chain into the runs the CLI exposes, calibrates the
//! control amplitude against the field solver, and writes data files.
//!
//! Every random quantity draws from a stream derived from the master seed
//! and a fixed stream id, so runs are reproducible byte for byte and
//! individual points are independent of scan length and order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::{ExperimentConfig, Fidelity};
use crate::counting::{
    click_probabilities, fringe_probabilities, fringe_scan, measure_counts, ClickProbabilities,
    CountsRow, MeasurementSetting,
};
use crate::dualrail::{dephase, split_single_photon};
use crate::fock::TwoModeFockState;
use crate::eit::{partition_efficiencies, solve_maxwell_bloch, Efficiencies, FieldSolution, SolveOptions};
use crate::error::{Error, Result};
use crate::memory::apply_memory;
use crate::seed::rng_from_path;
use crate::source::{attenuate, build_heralded_state};
use crate::tomography::{
    assemble_rho, estimate_pij, estimate_pij_exact, fit_visibility, fit_visibility_points,
    transfer_ratio, DensityMatrixEstimate, OccupancyEstimate, VisibilityFit,
};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Waveplate angle of the interference setting (balanced detector 1).
pub const VERIFY_THETA: f64 = std::f64::consts::FRAC_PI_8;
/// Waveplate angle of the occupancy setting (detectors read the rails).
pub const TOMO_THETA: f64 = 0.0;

/// Seed stream ids. Changing these changes every sampled output.
mod stream {
    pub const FRINGE_IN: u64 = 1;
    pub const FRINGE_OUT: u64 = 2;
    pub const TOMO_IN: u64 = 3;
    pub const TOMO_OUT: u64 = 4;
    pub const TABLE_IN: u64 = 5;
    pub const TABLE_OUT: u64 = 6;
}

/// Benchmark values the simulator is checked against: raw detector-level
/// pattern probabilities (none, detector 1 only, detector 2 only, both),
/// fringe visibilities, concurrences, and the transfer ratio.
pub mod reference {
    pub const INPUT_PATTERNS: [f64; 4] = [0.9800, 0.957e-2, 1.043e-2, 8e-6];
    pub const OUTPUT_PATTERNS: [f64; 4] = [0.996_25, 1.67e-3, 2.09e-3, 2e-7];
    pub const VISIBILITY_IN: f64 = 0.93;
    pub const VISIBILITY_IN_ERR: f64 = 0.04;
    pub const VISIBILITY_OUT: f64 = 0.91;
    pub const VISIBILITY_OUT_ERR: f64 = 0.03;
    /// Concurrence of the raw input patterns with the input visibility.
    pub const RAW_CONCURRENCE_IN: f64 = 1.28e-2;
    pub const RAW_CONCURRENCE_IN_ERR: f64 = 0.09e-2;
    pub const RAW_CONCURRENCE_OUT: f64 = 2.5e-3;
    pub const RAW_CONCURRENCE_OUT_ERR: f64 = 0.5e-3;
    /// Loss-corrected concurrences and the entanglement transfer ratio.
    pub const CONCURRENCE_IN: f64 = 0.10;
    pub const CONCURRENCE_IN_ERR: f64 = 0.02;
    pub const CONCURRENCE_OUT: f64 = 1.9e-2;
    pub const CONCURRENCE_OUT_ERR: f64 = 0.4e-2;
    pub const TRANSFER_RATIO: f64 = 0.20;
    pub const TRANSFER_RATIO_ERR: f64 = 0.05;
    pub const RETRIEVAL_EFFICIENCY: f64 = 0.17;
    pub const RETRIEVAL_EFFICIENCY_ERR: f64 = 0.01;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Fig2,
    FringeIn,
    FringeOut,
    Table1,
    FullReport,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Self::Fig2),
            "fringe_in" => Ok(Self::FringeIn),
            "fringe_out" => Ok(Self::FringeOut),
            "table1" => Ok(Self::Table1),
            "full_report" => Ok(Self::FullReport),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario {other:?}, expected fig2 | fringe_in | fringe_out | table1 | full_report"
            ))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Fig2 => "fig2",
            Self::FringeIn => "fringe_in",
            Self::FringeOut => "fringe_out",
            Self::Table1 => "table1",
            Self::FullReport => "full_report",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    In,
    Out,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::In => "input",
            Self::Out => "output",
        })
    }
}

/// Dual-rail state at the input verification point (memory bypassed).
pub fn input_state(cfg: &ExperimentConfig) -> Result<TwoModeFockState> {
    let stats = build_heralded_state(&cfg.source_params())?;
    let stats = attenuate(&stats, cfg.source.alpha)?;
    let split = split_single_photon(&stats, 0.0);
    dephase(&split, cfg.source.visibility)
}

/// Dual-rail state after storage and retrieval.
pub fn output_state(cfg: &ExperimentConfig) -> Result<TwoModeFockState> {
    let state = input_state(cfg)?;
    let state = apply_memory(&state, &cfg.memory_channel()?)?;
    dephase(&state, cfg.memory.visibility_retention)
}

/// One field-solver pass over the configured schedule.
#[derive(Debug)]
pub struct StorageRun {
    pub solution: FieldSolution,
    pub efficiencies: Efficiencies,
}

pub fn simulate_storage(cfg: &ExperimentConfig) -> Result<StorageRun> {
    cfg.validate()?;
    let control = cfg.control_waveform();
    let solution = solve_maxwell_bloch(
        &cfg.medium_params()?,
        &control,
        &cfg.pulse_envelope()?,
        &cfg.grid_spec(),
        &cfg.solve_options(),
    )?;
    let efficiencies = partition_efficiencies(&solution, control.t_off_end(), control.t_on_start())?;
    Ok(StorageRun {
        solution,
        efficiencies,
    })
}

#[derive(Clone, Debug)]
pub struct CalibrationResult {
    /// Calibrated plateau Rabi frequency / 2 pi, MHz.
    pub omega0_mhz: f64,
    pub achieved_eta_r: f64,
    pub solver_evals: usize,
    /// The bracketing scan, (MHz, eta_r) pairs.
    pub scan: Vec<(f64, f64)>,
}

/// Tunes the control amplitude until the solver's retrieval efficiency
/// matches the configured target: a coarse scan to bracket, then bisection.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<CalibrationResult> {
    cfg.validate()?;
    let cal = cfg.calibration.clone();
    let medium = cfg.medium_params()?;
    let pulse = cfg.pulse_envelope()?;
    let grid = cfg.grid_spec();
    let mut evals = 0usize;
    let mut eval = |mhz: f64| -> Result<f64> {
        let control = cfg.control_waveform_at(TWO_PI * mhz * 1e6);
        let opts = SolveOptions::new(control.t_on_end() + 200e-9);
        let sol = solve_maxwell_bloch(&medium, &control, &pulse, &grid, &opts)?;
        evals += 1;
        Ok(partition_efficiencies(&sol, control.t_off_end(), control.t_on_start())?.retrieved)
    };

    let n = cal.scan_points;
    let mut scan = Vec::with_capacity(n);
    for k in 0..n {
        let mhz =
            cal.omega_min_mhz + (cal.omega_max_mhz - cal.omega_min_mhz) * k as f64 / (n - 1) as f64;
        scan.push((mhz, eval(mhz)?));
    }

    // Retrieval falls with the control amplitude past its optimum; prefer
    // the bracket on that high-frequency branch.
    let target = cal.target_eta_r;
    let mut bracket = None;
    for w in scan.windows(2).rev() {
        if (w[0].1 - target) * (w[1].1 - target) <= 0.0 {
            bracket = Some((w[0], w[1]));
            break;
        }
    }
    let Some(((mut a, mut fa), (mut b, _fb))) = bracket else {
        let trace = scan
            .iter()
            .map(|(m, e)| format!("{m:.3} MHz -> {e:.4}"))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::Calibration(format!(
            "target eta_r = {target} not bracketed by the scan: {trace}"
        )));
    };

    let mut best = (a, fa);
    for &(m, e) in &scan {
        if (e - target).abs() < (best.1 - target).abs() {
            best = (m, e);
        }
    }
    for _ in 0..60 {
        if (best.1 - target).abs() <= cal.tolerance || (b - a).abs() < 1e-6 {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = eval(mid)?;
        if (fm - target).abs() < (best.1 - target).abs() {
            best = (mid, fm);
        }
        if (fa - target) * (fm - target) <= 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    if (best.1 - target).abs() > cal.tolerance {
        return Err(Error::Calibration(format!(
            "bisection stalled at eta_r = {:.4} for target {target}",
            best.1
        )));
    }
    Ok(CalibrationResult {
        omega0_mhz: best.0,
        achieved_eta_r: best.1,
        solver_evals: evals,
        scan,
    })
}

/// `calibrate` plus the updated configuration it implies.
pub fn calibrated_config(cfg: &ExperimentConfig) -> Result<(ExperimentConfig, CalibrationResult)> {
    let result = calibrate(cfg)?;
    let mut updated = cfg.clone();
    updated.control.omega0_mhz = result.omega0_mhz;
    Ok((updated, result))
}

/// Fringe scan plus tomography of one verification stage.
#[derive(Debug)]
pub struct StageResult {
    pub stage: Stage,
    /// Sampled fringe rows; empty under analytic fidelity.
    pub rows: Vec<CountsRow>,
    /// Exact fringe probabilities; empty under sampled fidelity.
    pub exact: Vec<(f64, ClickProbabilities)>,
    pub visibility: VisibilityFit,
    /// Loss-corrected occupancies from the rail-readout setting.
    pub occupancy: OccupancyEstimate,
    pub rho: DensityMatrixEstimate,
    pub concurrence: f64,
    pub concurrence_sigma: f64,
}

fn stage_state(cfg: &ExperimentConfig, stage: Stage) -> Result<TwoModeFockState> {
    match stage {
        Stage::In => input_state(cfg),
        Stage::Out => output_state(cfg),
    }
}

fn stage_heralds(cfg: &ExperimentConfig, stage: Stage) -> u64 {
    match stage {
        Stage::In => cfg.fringe.heralds_in,
        Stage::Out => cfg.fringe.heralds_out,
    }
}

fn stage_occupancy_trials(cfg: &ExperimentConfig, stage: Stage) -> u64 {
    match stage {
        Stage::In => cfg.fringe.occupancy_trials_in,
        Stage::Out => cfg.fringe.occupancy_trials_out,
    }
}

pub fn scan_phases(n_points: usize) -> Vec<f64> {
    (0..n_points)
        .map(|i| TWO_PI * i as f64 / n_points as f64)
        .collect()
}

pub fn run_stage(cfg: &ExperimentConfig, stage: Stage) -> Result<StageResult> {
    cfg.validate()?;
    let state = stage_state(cfg, stage)?;
    let det = cfg.detector_params();
    let phases = scan_phases(cfg.fringe.n_points);
    let heralds = stage_heralds(cfg, stage);

    let (rows, exact, visibility, occupancy) = match cfg.run.fidelity {
        Fidelity::Analytic => {
            let exact = fringe_probabilities(&state, &det, VERIFY_THETA, &phases)?;
            let points: Vec<(f64, f64)> = exact.iter().map(|(p, c)| (*p, c.d1_only)).collect();
            let visibility = fit_visibility_points(&points)?;
            let probs = click_probabilities(
                &state,
                &MeasurementSetting {
                    waveplate_theta: TOMO_THETA,
                    phase: 0.0,
                },
                &det,
            )?;
            let occupancy = estimate_pij_exact(&probs, &det, true)?;
            (Vec::new(), exact, visibility, occupancy)
        }
        Fidelity::Sampled => {
            if heralds == 0 {
                return Err(Error::InsufficientData(format!(
                    "no heralding events configured for the {stage} stage"
                )));
            }
            let occupancy_trials = stage_occupancy_trials(cfg, stage);
            if occupancy_trials == 0 {
                return Err(Error::InsufficientData(format!(
                    "no occupancy trials configured for the {stage} stage"
                )));
            }
            let (fringe_stream, tomo_stream) = match stage {
                Stage::In => (stream::FRINGE_IN, stream::TOMO_IN),
                Stage::Out => (stream::FRINGE_OUT, stream::TOMO_OUT),
            };
            let rows = fringe_scan(
                &state,
                &det,
                VERIFY_THETA,
                &phases,
                heralds,
                cfg.run.master_seed,
                fringe_stream,
            )?;
            let visibility = fit_visibility(&rows)?;
            let mut rng = rng_from_path(cfg.run.master_seed, &[tomo_stream, 0]);
            let row = measure_counts(
                &state,
                &MeasurementSetting {
                    waveplate_theta: TOMO_THETA,
                    phase: 0.0,
                },
                &det,
                0,
                occupancy_trials,
                &mut rng,
            )?;
            let occupancy = estimate_pij(&row, &det, true)?;
            (rows, Vec::new(), visibility, occupancy)
        }
    };

    let rho = assemble_rho(&occupancy, &visibility)?;
    let concurrence = rho.concurrence();
    let concurrence_sigma = rho.concurrence_sigma();
    Ok(StageResult {
        stage,
        rows,
        exact,
        visibility,
        occupancy,
        rho,
        concurrence,
        concurrence_sigma,
    })
}

/// Raw detector-level pattern statistics next to the benchmark values.
#[derive(Debug)]
pub struct TableRow {
    pub stage: Stage,
    /// (none, d1 only, d2 only, both) from the model.
    pub model: [f64; 4],
    pub benchmark: [f64; 4],
}

pub fn run_table1(cfg: &ExperimentConfig) -> Result<[TableRow; 2]> {
    cfg.validate()?;
    let det = cfg.detector_params();
    let setting = MeasurementSetting {
        waveplate_theta: TOMO_THETA,
        phase: 0.0,
    };
    let mut rows = Vec::with_capacity(2);
    for stage in [Stage::In, Stage::Out] {
        let state = stage_state(cfg, stage)?;
        let probs = click_probabilities(&state, &setting, &det)?;
        let model = match cfg.run.fidelity {
            Fidelity::Analytic => probs.as_array(),
            Fidelity::Sampled => {
                let trials = stage_occupancy_trials(cfg, stage);
                if trials == 0 {
                    return Err(Error::InsufficientData(format!(
                        "no occupancy trials configured for the {stage} stage"
                    )));
                }
                let s = match stage {
                    Stage::In => stream::TABLE_IN,
                    Stage::Out => stream::TABLE_OUT,
                };
                let mut rng = rng_from_path(cfg.run.master_seed, &[s, 0]);
                let row = measure_counts(&state, &setting, &det, 0, trials, &mut rng)?;
                let n = trials as f64;
                [
                    row.n_none as f64 / n,
                    row.n_d1 as f64 / n,
                    row.n_d2 as f64 / n,
                    row.n_both as f64 / n,
                ]
            }
        };
        let benchmark = match stage {
            Stage::In => reference::INPUT_PATTERNS,
            Stage::Out => reference::OUTPUT_PATTERNS,
        };
        rows.push(TableRow {
            stage,
            model,
            benchmark,
        });
    }
    let [a, b]: [TableRow; 2] = rows.try_into().expect("two stages");
    Ok([a, b])
}

/// Everything the full report carries.
#[derive(Debug)]
pub struct ReportResult {
    pub storage: StorageRun,
    pub stage_in: StageResult,
    pub stage_out: StageResult,
    pub table: [TableRow; 2],
    pub lambda: f64,
    pub lambda_sigma: f64,
}

pub fn run_report(cfg: &ExperimentConfig) -> Result<ReportResult> {
    let storage = simulate_storage(cfg)?;
    let stage_in = run_stage(cfg, Stage::In)?;
    let stage_out = run_stage(cfg, Stage::Out)?;
    let table = run_table1(cfg)?;
    let (lambda, lambda_sigma) = transfer_ratio(
        stage_out.concurrence,
        stage_out.concurrence_sigma,
        stage_in.concurrence,
        stage_in.concurrence_sigma,
    )?;
    Ok(ReportResult {
        storage,
        stage_in,
        stage_out,
        table,
        lambda,
        lambda_sigma,
    })
}

// ---------------------------------------------------------------------
// file output

/// Files written by a scenario run plus a one-screen summary.
#[derive(Debug)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn csv_f(v: f64) -> String {
    format!("{v:.9e}")
}

fn fig2_csv(sol: &FieldSolution) -> String {
    let mut s = String::with_capacity(sol.t.len() * 64);
    s.push_str("t_seconds,input_density_per_s,output_density_per_s,pol_number,spin_number\n");
    for i in 0..sol.t.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            csv_f(sol.t[i]),
            csv_f(sol.input_density[i]),
            csv_f(sol.output_density[i]),
            csv_f(sol.pol_number[i]),
            csv_f(sol.spin_number[i]),
        );
    }
    s
}

fn fringe_csv(result: &StageResult) -> String {
    let mut s = String::new();
    if result.rows.is_empty() {
        s.push_str("phase_radians,p_none,p_d1,p_d2,p_both\n");
        for (phase, p) in &result.exact {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                csv_f(*phase),
                csv_f(p.none),
                csv_f(p.d1_only),
                csv_f(p.d2_only),
                csv_f(p.both),
            );
        }
    } else {
        s.push_str("setting_id,phase_radians,n_trials,n_none,n_d1,n_d2,n_both\n");
        for r in &result.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.setting_id,
                csv_f(r.phase_radians),
                r.n_trials,
                r.n_none,
                r.n_d1,
                r.n_d2,
                r.n_both,
            );
        }
    }
    s
}

fn table1_csv(rows: &[TableRow; 2]) -> String {
    let mut s = String::from("stage,kind,p_none,p_d1_only,p_d2_only,p_both\n");
    for row in rows {
        let _ = writeln!(
            s,
            "{},model,{},{},{},{}",
            row.stage,
            csv_f(row.model[0]),
            csv_f(row.model[1]),
            csv_f(row.model[2]),
            csv_f(row.model[3]),
        );
        let _ = writeln!(
            s,
            "{},benchmark,{},{},{},{}",
            row.stage,
            csv_f(row.benchmark[0]),
            csv_f(row.benchmark[1]),
            csv_f(row.benchmark[2]),
            csv_f(row.benchmark[3]),
        );
    }
    s
}

fn calibration_csv(res: &CalibrationResult) -> String {
    let mut s = String::from("omega0_mhz,eta_r\n");
    for (m, e) in &res.scan {
        let _ = writeln!(s, "{},{}", csv_f(*m), csv_f(*e));
    }
    let _ = writeln!(s, "{},{}", csv_f(res.omega0_mhz), csv_f(res.achieved_eta_r));
    s
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

struct ReportText(String);

impl ReportText {
    fn new(cfg: &ExperimentConfig, scenario: Scenario) -> Self {
        let mut r = Self(String::new());
        r.section("run");
        r.kv("scenario", scenario.to_string());
        // the digest covers settings that shape results; where the files land
        // must not change their bytes
        let mut canon = cfg.clone();
        canon.run.out_dir = String::new();
        r.kv("config_digest", format!("{:016x}", fnv1a(canon.to_toml().as_bytes())));
        r.kv("master_seed", cfg.run.master_seed.to_string());
        r.kv(
            "fidelity",
            match cfg.run.fidelity {
                Fidelity::Analytic => "analytic",
                Fidelity::Sampled => "sampled",
            },
        );
        r
    }

    fn section(&mut self, name: &str) {
        if !self.0.is_empty() {
            self.0.push('\n');
        }
        let _ = writeln!(self.0, "[{name}]");
    }

    fn kv(&mut self, key: &str, value: impl AsRef<str>) {
        let _ = writeln!(self.0, "{key} = {}", value.as_ref());
    }

    fn kf(&mut self, key: &str, value: f64) {
        self.kv(key, format!("{value:.6e}"));
    }

    fn storage(&mut self, run: &StorageRun) {
        self.section("storage");
        self.kf("eta_retrieved", run.efficiencies.retrieved);
        self.kf("leakage", run.efficiencies.leakage);
        self.kf("loss", run.efficiencies.loss);
        self.kf("residual", run.efficiencies.residual);
        self.kf("balance_defect", run.solution.balance_defect);
        self.kf("benchmark_eta_r", reference::RETRIEVAL_EFFICIENCY);
    }

    fn stage(&mut self, s: &StageResult) {
        self.section(&format!("fringe_{}", s.stage));
        self.kv("n_points", s.visibility.n_points.to_string());
        self.kf("visibility", s.visibility.visibility);
        self.kf("visibility_sigma", s.visibility.sigma);
        self.kf("phase_offset", s.visibility.phase_offset);
        let occ = s.occupancy.as_array();
        for (i, name) in ["p00", "p01", "p10", "p11"].iter().enumerate() {
            self.kf(name, occ[i]);
            self.kf(&format!("{name}_sigma"), s.occupancy.sigma[i]);
        }
        self.kv("clamped", if s.occupancy.clamped { "true" } else { "false" });
        self.kf("coherence_d", s.rho.d.re);
        self.kf("concurrence", s.concurrence);
        self.kf("concurrence_sigma", s.concurrence_sigma);
        let (c, e) = match s.stage {
            Stage::In => (reference::CONCURRENCE_IN, reference::CONCURRENCE_IN_ERR),
            Stage::Out => (reference::CONCURRENCE_OUT, reference::CONCURRENCE_OUT_ERR),
        };
        self.kf("benchmark_concurrence", c);
        self.kf("benchmark_concurrence_err", e);
    }

    fn table(&mut self, rows: &[TableRow; 2]) {
        for row in rows {
            self.section(&format!("patterns_{}", row.stage));
            for (i, name) in ["p_none", "p_d1_only", "p_d2_only", "p_both"].iter().enumerate() {
                self.kf(name, row.model[i]);
                self.kf(&format!("{name}_benchmark"), row.benchmark[i]);
            }
        }
    }

    fn calibration(&mut self, res: &CalibrationResult) {
        self.section("calibration");
        self.kf("omega0_mhz", res.omega0_mhz);
        self.kf("achieved_eta_r", res.achieved_eta_r);
        self.kv("solver_evals", res.solver_evals.to_string());
    }

    fn metadata(&mut self, cfg: &ExperimentConfig) {
        self.section("metadata");
        self.kf("trial_period_ns", cfg.metadata.trial_period_ns);
        self.kf("mot_cycle_ms", cfg.metadata.mot_cycle_ms);
    }

    fn finish(self) -> String {
        self.0
    }
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

/// Runs one scenario and writes its data files under `cfg.run.out_dir`.
pub fn run_scenario(cfg: &ExperimentConfig, scenario: Scenario) -> Result<RunOutput> {
    cfg.validate()?;
    let dir = PathBuf::from(&cfg.run.out_dir);
    let mut files = Vec::new();
    let mut report = ReportText::new(cfg, scenario);

    let summary = match scenario {
        Scenario::Fig2 => {
            let run = simulate_storage(cfg)?;
            files.push(write_out(&dir, "fig2.csv", &fig2_csv(&run.solution))?);
            report.storage(&run);
            format!(
                "eta_r = {:.4} (leakage {:.4}, loss {:.4}, residual {:.2e}, balance defect {:.2e})",
                run.efficiencies.retrieved,
                run.efficiencies.leakage,
                run.efficiencies.loss,
                run.efficiencies.residual,
                run.solution.balance_defect,
            )
        }
        Scenario::FringeIn | Scenario::FringeOut => {
            let stage = if scenario == Scenario::FringeIn {
                Stage::In
            } else {
                Stage::Out
            };
            let s = run_stage(cfg, stage)?;
            let name = format!("fringe_{stage}.csv");
            files.push(write_out(&dir, &name, &fringe_csv(&s))?);
            report.stage(&s);
            format!(
                "{stage}: V = {:.4} +- {:.4}, C = {:.4e} +- {:.2e}",
                s.visibility.visibility, s.visibility.sigma, s.concurrence, s.concurrence_sigma,
            )
        }
        Scenario::Table1 => {
            let rows = run_table1(cfg)?;
            files.push(write_out(&dir, "table1.csv", &table1_csv(&rows))?);
            report.table(&rows);
            format!(
                "input d1/d2 {:.3e}/{:.3e}, output d1/d2 {:.3e}/{:.3e}",
                rows[0].model[1], rows[0].model[2], rows[1].model[1], rows[1].model[2],
            )
        }
        Scenario::FullReport => {
            let r = run_report(cfg)?;
            files.push(write_out(&dir, "fig2.csv", &fig2_csv(&r.storage.solution))?);
            files.push(write_out(&dir, "fringe_input.csv", &fringe_csv(&r.stage_in))?);
            files.push(write_out(&dir, "fringe_output.csv", &fringe_csv(&r.stage_out))?);
            files.push(write_out(&dir, "table1.csv", &table1_csv(&r.table))?);
            report.storage(&r.storage);
            report.stage(&r.stage_in);
            report.stage(&r.stage_out);
            report.table(&r.table);
            report.section("transfer");
            report.kf("lambda", r.lambda);
            report.kf("lambda_sigma", r.lambda_sigma);
            report.kf("benchmark_lambda", reference::TRANSFER_RATIO);
            report.kf("benchmark_lambda_err", reference::TRANSFER_RATIO_ERR);
            format!(
                "eta_r = {:.4}; C_in = {:.4e}, C_out = {:.4e}, lambda = {:.4}",
                r.storage.efficiencies.retrieved, r.stage_in.concurrence, r.stage_out.concurrence, r.lambda,
            )
        }
    };

    report.metadata(cfg);
    files.push(write_out(&dir, "report.txt", &report.finish())?);
    Ok(RunOutput { files, summary })
}

/// Runs calibration and writes its trace plus the updated configuration.
pub fn run_calibration(cfg: &ExperimentConfig) -> Result<(RunOutput, CalibrationResult)> {
    let (updated, result) = calibrated_config(cfg)?;
    let dir = PathBuf::from(&cfg.run.out_dir);
    let mut files = Vec::new();
    files.push(write_out(&dir, "calibration.csv", &calibration_csv(&result))?);
    files.push(write_out(&dir, "calibrated_config.toml", &updated.to_toml())?);
    let mut report = ReportText::new(cfg, Scenario::Fig2);
    report.calibration(&result);
    report.metadata(cfg);
    files.push(write_out(&dir, "report.txt", &report.finish())?);
    let summary = format!(
        "omega0 = {:.3} MHz, eta_r = {:.4} after {} solver runs",
        result.omega0_mhz, result.achieved_eta_r, result.solver_evals,
    );
    Ok((RunOutput { files, summary }, result))
}
