use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dicke::{
    cat_state, classical_mixture, coherent_state, collective_operators, density_from_state, four_cat_state,
    tau_from_angles, tetrahedron_points, tetrahedron_taus, CollectiveOperators, DensityMatrix, DickeSpace,
};
use crate::lindblad::{stationary_state, Engine, RunStats, SimulationParams};
use crate::observables::{
    decoherence_time, decoherence_time_via_distance, dissipation_time, Asymptote, ExtractionError,
    ObservableSeries, DEFAULT_THRESHOLD_FRACTION,
};
use crate::wigner::{fringe_contrast, lobe_centroid, wigner_function, Arc, FringeBand, MultipoleBasis, WignerGrid};

use super::output::{write_csv, write_json, RunManifest};
use super::{InitialState, ScenarioConfig, ScenarioError, ScenarioKind};

/// Radius of the cap around each tetrahedron vertex used for lobe centroids.
const LOBE_RADIUS: f64 = 0.35;

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCatTimescales {
    pub t_d: f64,
    pub slope_max: f64,
    pub t_d_distance: f64,
    pub d_min: f64,
    pub distance_min_slow: bool,
    pub t_diss: f64,
    pub fit_rate_energy: f64,
    pub fit_rate_entropy: f64,
    pub fit_residuals: [f64; 2],
}

/// Outcome of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellStatus {
    Ok,
    NoDecoherenceSignal,
    InsufficientSamples,
    Failed(String),
}

impl CellStatus {
    pub fn label(&self) -> String {
        match self {
            CellStatus::Ok => "ok".into(),
            CellStatus::NoDecoherenceSignal => "no-decoherence-signal".into(),
            CellStatus::InsufficientSamples => "insufficient-samples".into(),
            CellStatus::Failed(m) => format!("failed: {}", m.replace([',', '\n'], ";")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub beta1: f64,
    pub beta2: f64,
    pub t_d: f64,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeContrast {
    pub edge: String,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobePosition {
    pub vertex: String,
    pub beta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourCatSnapshot {
    pub t: f64,
    pub edges: Vec<EdgeContrast>,
    pub lobes: Vec<LobePosition>,
    #[serde(skip)]
    pub grid: Option<WignerGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub n_atoms: usize,
    pub n_bar: f64,
    pub initial: InitialState,
    pub t_max: f64,
    /// `max |L(ρ_ss)|`.
    pub rhs_norm_max: f64,
    /// `max |ρ(t_max) − ρ_ss|`.
    pub final_distance_max: f64,
    /// Largest `max |ρ(t) − ρ(0)|` over the samples.
    pub max_change_from_initial: f64,
}

const VERTICES: [&str; 4] = ["A", "B", "C", "D"];

/// The six edges of the tetrahedron as vertex index pairs; `AB` is the
/// symmetric pair.
pub fn tetrahedron_edges() -> [(usize, usize); 6] {
    [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
}

fn edge_name((a, b): (usize, usize)) -> String {
    format!("{}{}", VERTICES[a], VERTICES[b])
}

/// Evolves the configured cat, sampling `S_lin`, `E` and the distance to
/// the fixed classical mixture (and to the co-evolved one when
/// `cat.track_evolved` is set).
pub fn simulate_two_cat(cfg: &ScenarioConfig) -> Result<(ObservableSeries, RunStats), ScenarioError> {
    let space = DickeSpace::new(cfg.n_atoms)?;
    let ops = collective_operators(space);
    let c = &cfg.cat;
    let t1 = tau_from_angles(c.beta1, c.phi1)?;
    let t2 = tau_from_angles(c.beta2, c.phi2)?;
    let rho0 = density_from_state(&cat_state(space, t1, t2)?);
    let rho_cl = classical_mixture(space, t1, t2)?;
    let engine = Engine::new(&ops, cfg.simulation_params())?;
    let grid = cfg.time.grid();
    let mut series = ObservableSeries::default();
    let initial: Vec<&DensityMatrix> = if c.track_evolved {
        vec![&rho0, &rho_cl]
    } else {
        vec![&rho0]
    };
    let stats = engine.run(&initial, &grid, |t, s| series.push(t, s, &ops, Some(&rho_cl)))?;
    Ok((series, stats))
}

fn extract_two_cat(
    series: &ObservableSeries,
    ops: &CollectiveOperators,
    cfg: &ScenarioConfig,
) -> Result<TwoCatTimescales, ExtractionError> {
    let dec = decoherence_time(series, DEFAULT_THRESHOLD_FRACTION, cfg.gamma)?;
    let dist = decoherence_time_via_distance(series, dec.t_d)?;
    let diss = dissipation_time(series, &Asymptote::thermal(ops, cfg.n_bar), 5.0 * dec.t_d)?;
    Ok(TwoCatTimescales {
        t_d: dec.t_d,
        slope_max: dec.slope_max,
        t_d_distance: dist.t_min,
        d_min: dist.d_min,
        distance_min_slow: dist.slow,
        t_diss: diss.t_diss,
        fit_rate_energy: diss.fit_rate_energy,
        fit_rate_entropy: diss.fit_rate_entropy,
        fit_residuals: [diss.residual_energy, diss.residual_entropy],
    })
}

/// Sweep cells in row-major order (`beta1` outer).
pub fn sweep_cells(cfg: &ScenarioConfig) -> Result<Vec<SweepCell>, ScenarioError> {
    let betas = cfg.sweep.betas();
    let space = DickeSpace::new(cfg.n_atoms)?;
    let ops = collective_operators(space);
    let params = cfg.simulation_params();
    Engine::new(&ops, params)?;
    let grid = cfg.time.grid();
    let jobs: Vec<(f64, f64)> = betas
        .iter()
        .flat_map(|&b1| betas.iter().map(move |&b2| (b1, b2)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.workers)
        .build()
        .map_err(|e| ScenarioError::Numerical(e.to_string()))?;
    let cells = pool.install(|| {
        jobs.par_iter()
            .map(|&(b1, b2)| sweep_cell(&ops, params, &grid, b1, b2, cfg.gamma))
            .collect()
    });
    Ok(cells)
}

fn sweep_cell(ops: &CollectiveOperators, params: SimulationParams, grid: &[f64], b1: f64, b2: f64, gamma: f64) -> SweepCell {
    let run = || -> Result<f64, ScenarioError> {
        let space = ops.space();
        let psi = cat_state(space, tau_from_angles(b1, 0.0)?, tau_from_angles(b2, 0.0)?)?;
        let rho0 = density_from_state(&psi);
        let engine = Engine::new(ops, params)?;
        let mut series = ObservableSeries::default();
        engine.run(&[&rho0], grid, |t, s| series.push(t, s, ops, None))?;
        Ok(decoherence_time(&series, DEFAULT_THRESHOLD_FRACTION, gamma)?.t_d)
    };
    let (t_d, status) = match run() {
        Ok(t) => (t, CellStatus::Ok),
        Err(ScenarioError::Extraction(ExtractionError::NoDecoherenceSignal(_))) => {
            (f64::NAN, CellStatus::NoDecoherenceSignal)
        }
        Err(ScenarioError::Extraction(ExtractionError::InsufficientSamples { .. })) => {
            (f64::NAN, CellStatus::InsufficientSamples)
        }
        Err(e) => (f64::NAN, CellStatus::Failed(e.to_string())),
    };
    SweepCell {
        beta1: b1,
        beta2: b2,
        t_d,
        status,
    }
}

/// Evolves the tetrahedral four-cat and evaluates `W` at every snapshot.
pub fn four_cat_snapshots(cfg: &ScenarioConfig) -> Result<Vec<FourCatSnapshot>, ScenarioError> {
    let space = DickeSpace::new(cfg.n_atoms)?;
    let ops = collective_operators(space);
    let snaps = &cfg.four_cat.snapshots;
    let mut params = cfg.simulation_params();
    params.t_max = snaps.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let rho0 = density_from_state(&four_cat_state(space, tetrahedron_taus())?);
    let mut states = Vec::with_capacity(snaps.len());
    if snaps.iter().all(|&t| t == 0.0) {
        states.push(rho0.clone());
    } else {
        let engine = Engine::new(&ops, params)?;
        engine.run(&[&rho0], snaps, |_, s| states.push(s[0].clone()))?;
    }
    let basis = MultipoleBasis::new(space);
    let spec = cfg.four_cat.grid();
    let points = tetrahedron_points();
    let band = FringeBand::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.workers)
        .build()
        .map_err(|e| ScenarioError::Numerical(e.to_string()))?;
    pool.install(|| {
        snaps
            .par_iter()
            .zip(states.par_iter())
            .map(|(&t, rho)| {
                let grid = wigner_function(rho, &basis, spec)?;
                let edges = tetrahedron_edges()
                    .iter()
                    .map(|&(a, b)| EdgeContrast {
                        edge: edge_name((a, b)),
                        contrast: fringe_contrast(&grid, &Arc::new(points[a], points[b]), &band),
                    })
                    .collect();
                let lobes = points
                    .iter()
                    .zip(VERTICES)
                    .map(|(&p, v)| {
                        let (beta, phi) = lobe_centroid(&grid, p, LOBE_RADIUS);
                        LobePosition {
                            vertex: v.to_string(),
                            beta,
                            phi,
                        }
                    })
                    .collect();
                Ok(FourCatSnapshot {
                    t,
                    edges,
                    lobes,
                    grid: Some(grid),
                })
            })
            .collect()
    })
}

fn stationary_report(cfg: &ScenarioConfig) -> Result<StationaryReport, ScenarioError> {
    let space = DickeSpace::new(cfg.n_atoms)?;
    let ops = collective_operators(space);
    let engine = Engine::new(&ops, cfg.simulation_params())?;
    let rho_ss = stationary_state(space, cfg.n_bar);
    let d = space.dim();
    let mut lrho = vec![Complex64::new(0.0, 0.0); d * d];
    engine.liouvillian().apply(rho_ss.0.as_slice(), &mut lrho);
    let rhs_norm_max = lrho.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let rho0 = match cfg.stationary.initial {
        InitialState::Ground => density_from_state(&space.ground_state()),
        InitialState::Excited => density_from_state(&space.excited_state()),
        InitialState::Stationary => rho_ss.clone(),
        InitialState::Coherent { beta, phi } => density_from_state(&coherent_state(space, tau_from_angles(beta, phi)?)?),
    };
    let mut last = DensityMatrix(DMatrix::zeros(d, d));
    let mut max_change: f64 = 0.0;
    engine.run(&[&rho0], &cfg.time.grid(), |_, s| {
        max_change = max_change.max(s[0].max_abs_diff(&rho0));
        last.0.copy_from(&s[0].0);
    })?;
    Ok(StationaryReport {
        n_atoms: cfg.n_atoms,
        n_bar: cfg.n_bar,
        initial: cfg.stationary.initial,
        t_max: cfg.time.t_max,
        rhs_norm_max,
        final_distance_max: last.max_abs_diff(&rho_ss),
        max_change_from_initial: max_change,
    })
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    scenario: &'a str,
    kind: &'a str,
    exit_code: i32,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    partial: Option<serde_json::Value>,
}

/// Runs the configured scenario into `cfg.output.dir`. On failure a
/// `diagnostics.json` is left in the output directory and no manifest is
/// written.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport, ScenarioError> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    let _ = fs::remove_file(dir.join("diagnostics.json"));
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut partial = None;
    let result = match cfg.scenario {
        ScenarioKind::TwoCat => run_two_cat(cfg, &dir, &mut partial),
        ScenarioKind::Sweep => run_sweep(cfg, &dir),
        ScenarioKind::FourCat => run_four_cat(cfg, &dir),
        ScenarioKind::Stationary => run_stationary(cfg, &dir),
    };
    match result {
        Ok((files, timescales)) => {
            let manifest = RunManifest {
                scenario: cfg.scenario.name().to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                config: cfg.clone(),
                started_unix,
                wall_clock_seconds: started.elapsed().as_secs_f64(),
                files: BTreeMap::new(),
                timescales,
            }
            .write(&dir, &files)?;
            Ok(RunReport { out_dir: dir, manifest })
        }
        Err(e) => {
            let diag = Diagnostics {
                scenario: cfg.scenario.name(),
                kind: e.kind(),
                exit_code: e.exit_code(),
                message: e.to_string(),
                partial,
            };
            let _ = write_json(&dir.join("diagnostics.json"), &diag);
            Err(e)
        }
    }
}

type Written = (Vec<String>, Option<serde_json::Value>);

fn run_two_cat(cfg: &ScenarioConfig, dir: &Path, partial: &mut Option<serde_json::Value>) -> Result<Written, ScenarioError> {
    let (series, stats) = simulate_two_cat(cfg)?;
    let ops = collective_operators(DickeSpace::new(cfg.n_atoms)?);
    let mut header = vec!["t", "s_lin", "energy", "distance"];
    let evolved = series.distance_to_evolved.clone();
    if evolved.is_some() {
        header.push("distance_evolved");
    }
    let dist = series.distance_to_classical.clone().unwrap_or_default();
    let rows = (0..series.len()).map(|i| {
        let mut r = vec![series.times[i], series.s_lin[i], series.energy[i], dist[i]];
        if let Some(ev) = &evolved {
            r.push(ev[i]);
        }
        (r, Vec::new())
    });
    write_csv(&dir.join("series.csv"), &header, rows)?;
    *partial = Some(serde_json::json!({ "files": ["series.csv"], "run_stats": stats }));
    let ts = extract_two_cat(&series, &ops, cfg)?;
    write_json(&dir.join("timescales.json"), &ts)?;
    Ok((
        vec!["series.csv".into(), "timescales.json".into()],
        Some(serde_json::to_value(&ts)?),
    ))
}

fn run_sweep(cfg: &ScenarioConfig, dir: &Path) -> Result<Written, ScenarioError> {
    let cells = sweep_cells(cfg)?;
    let rows = cells
        .iter()
        .map(|c| (vec![c.beta1, c.beta2, c.t_d], vec![c.status.label()]));
    write_csv(&dir.join("td_grid.csv"), &["beta1", "beta2", "t_d", "status"], rows)?;
    Ok((vec!["td_grid.csv".into()], None))
}

fn run_four_cat(cfg: &ScenarioConfig, dir: &Path) -> Result<Written, ScenarioError> {
    let snaps = four_cat_snapshots(cfg)?;
    let mut files = Vec::new();
    for (i, s) in snaps.iter().enumerate() {
        let grid = s.grid.as_ref().expect("grid retained");
        let csv = format!("wigner_t{i}.csv");
        let meta = format!("wigner_t{i}.json");
        let mut w = std::io::BufWriter::new(fs::File::create(dir.join(&csv))?);
        grid.write_csv(&mut w)?;
        std::io::Write::flush(&mut w)?;
        write_json(&dir.join(&meta), &grid.metadata(cfg.n_bar, cfg.gamma * s.t))?;
        files.push(csv);
        files.push(meta);
    }
    let contrast = serde_json::json!({
        "band": FringeBand::default(),
        "symmetric_edge": "AB",
        "snapshots": snaps,
    });
    write_json(&dir.join("contrast.json"), &contrast)?;
    files.push("contrast.json".into());
    Ok((files, None))
}

fn run_stationary(cfg: &ScenarioConfig, dir: &Path) -> Result<Written, ScenarioError> {
    let report = stationary_report(cfg)?;
    write_json(&dir.join("stationary.json"), &report)?;
    Ok((vec!["stationary.json".into()], Some(serde_json::to_value(&report)?)))
}
