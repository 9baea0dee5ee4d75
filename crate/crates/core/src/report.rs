//! Figure-data tables, JSON summary, manifest and report comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bem::{self, BlockSystem, CycleMode, Eigenpair, PhaseSamples, Reflection};
use crate::config::SceneConfig;
use crate::dist_series::{all_f_tables, DistanceSeries};
use crate::error::{Error, Result};
use crate::orbit::{find_orbit, PeriodicOrbit, Scene};
use crate::phase_solver::{eval_phase, solve_phase_series, PhaseSolution};
use crate::twodisk::{self, closed_form_coeffs, ChiGrid, ChiOptions};

/// Orbit, distance series and phase series for one configuration.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub scene: Scene,
    pub orbit: PeriodicOrbit,
    pub tables: Vec<DistanceSeries>,
    pub solution: PhaseSolution,
}

pub fn analyze(cfg: &SceneConfig) -> Result<Analysis> {
    let scene = cfg.scene()?;
    let orbit = find_orbit(&scene, None)?;
    let tables = all_f_tables(&scene, &orbit, cfg.taylor_order)?;
    let solution = solve_phase_series(&tables, &orbit.taus, cfg.taylor_order)?;
    Ok(Analysis {
        scene,
        orbit,
        tables,
        solution,
    })
}

/// Cycle mode of the discretized problem and its extracted phases.
#[derive(Debug)]
pub struct BemRun {
    pub system: BlockSystem,
    pub pair: Eigenpair,
    pub mode: CycleMode,
    pub phases: Vec<PhaseSamples>,
}

pub fn run_bem(cfg: &SceneConfig, analysis: &Analysis) -> Result<BemRun> {
    let opts = cfg.bem.options();
    let system = BlockSystem::build(&analysis.scene, &opts)?;
    let pair = bem::dominant_eigenpair(&system.cycle_operator(), opts.tol, opts.max_iter)?;
    let mode = bem::reconstruct_mode(&system, &pair)?;
    let k = analysis.scene.wavenumber();
    let phases = (0..system.len())
        .map(|j| {
            bem::extract_phase(
                &mode,
                &system.grids[j],
                j,
                k,
                analysis.orbit.taus[j],
                analysis.solution.phase.c[j][0],
                cfg.bem.phase_window,
            )
        })
        .collect();
    Ok(BemRun {
        system,
        pair,
        mode,
        phases,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(&'static str),
    Empty,
}

impl Cell {
    pub fn render(self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Table {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render()))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Column index by header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn orbit_table(orbit: &PeriodicOrbit) -> Table {
    let mut t = Table::new("orbit", &["obstacle", "tau", "leg_distance", "hessian_eigenvalue"]);
    for j in 0..orbit.taus.len() {
        t.push(vec![
            j.into(),
            orbit.taus[j].into(),
            orbit.leg_distances[j].into(),
            orbit.hessian_eigenvalues[j].into(),
        ]);
    }
    t
}

/// `f_{j,l,n}` for every leg in 1-based indices (`l = p + 1` for power `p`).
pub fn fseries_table(a: &Analysis) -> Table {
    let mut t = Table::new("fseries", &["leg", "l", "n", "f"]);
    for s in &a.tables {
        for p in 0..=s.order {
            for q in 0..=s.order - p {
                t.push(vec![s.leg.into(), (p + 1).into(), (q + 1).into(), s.get(p, q).into()]);
            }
        }
    }
    t
}

/// `c_{j,i}` and `a_{j,1,i}` (the latter blank for `i = 0`).
pub fn fphase_table(sol: &PhaseSolution) -> Table {
    let mut t = Table::new("fphase", &["order", "obstacle", "c", "a"]);
    for i in 0..=sol.phase.order() {
        for j in 0..sol.phase.c.len() {
            let a = (i > 0).then(|| sol.chi.a[j].get(i).copied()).flatten();
            t.push(vec![i.into(), j.into(), sol.phase.c[j][i].into(), a.into()]);
        }
    }
    t
}

/// Computed two-disk coefficients against their closed forms.
pub fn twodisk_table(sol: &PhaseSolution) -> Table {
    let cf = closed_form_coeffs();
    let mut t = Table::new("twodisk", &["coefficient", "order", "computed", "closed_form", "abs_error"]);
    let mut push = |name: &'static str, i: usize, got: f64, want: f64| {
        t.push(vec![Cell::Text(name), i.into(), got.into(), want.into(), (got - want).abs().into()]);
    };
    for i in 0..cf.c.len().min(sol.phase.order() + 1) {
        push("c", i, sol.phase.c[0][i], cf.c[i]);
    }
    for i in 1..cf.a.len().min(sol.chi.a[0].len()) {
        push("a", i, sol.chi.a[0][i], cf.a[i]);
    }
    t
}

pub fn mode_table(run: &BemRun) -> Table {
    let mut t = Table::new("mode", &["obstacle", "node", "tau", "re", "im", "abs"]);
    for (j, v) in run.mode.densities.iter().enumerate() {
        let g = &run.system.grids[j];
        for (p, z) in v.iter().enumerate() {
            t.push(vec![j.into(), p.into(), g.node(p).into(), z.re.into(), z.im.into(), z.norm().into()]);
        }
    }
    t
}

/// Logarithmic offsets on which the two-disk convergence table is sampled.
pub fn convergence_offsets(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 10f64.powf(-3.0 + 2.0 * i as f64 / (count - 1) as f64))
        .collect()
}

pub const TWO_DISK_TRUNCATIONS: [usize; 4] = [2, 4, 6, 8];

/// Two-disk phase errors against the reflected-ray sum: truncations
/// `T = 2, 4, 6, 8` and, when available, the extracted BEM phase.
pub fn fconv_twodisk(a: &Analysis, grid: &ChiGrid, run: Option<&BemRun>) -> Result<Table> {
    let mut header = vec!["offset".to_string()];
    let truncs: Vec<usize> = TWO_DISK_TRUNCATIONS
        .into_iter()
        .filter(|&t| t <= a.solution.phase.order())
        .collect();
    header.extend(truncs.iter().map(|t| format!("err_T{t}")));
    header.push("err_bem".into());
    let mut t = Table {
        name: "fconv".into(),
        header,
        rows: Vec::new(),
    };
    let phase = &a.solution.phase;
    let center = phase.centers[0];
    for h in convergence_offsets(41) {
        let exact = twodisk::phi_excess_geometric_sum(grid, h, 200)?;
        let mut row: Vec<Cell> = vec![h.into()];
        for &tr in &truncs {
            row.push((phase.truncated(tr).excess(0, center + h) - exact).abs().into());
        }
        let bem = run.and_then(|r| r.phases[0].at(h)).map(|v| (v - phase.c[0][0] - exact).abs());
        row.push(bem.into());
        t.push(row);
    }
    Ok(t)
}

/// Extracted BEM phase near each `τ_j*` and its distance to every
/// truncation `T = 1..=order` of the Taylor series.
pub fn fconv_general(a: &Analysis, run: &BemRun) -> Table {
    let order = a.solution.phase.order();
    let mut header = vec!["obstacle".to_string(), "offset".into(), "phi_bem".into()];
    header.extend((1..=order).map(|t| format!("err_T{t}")));
    let mut t = Table {
        name: "fconv".into(),
        header,
        rows: Vec::new(),
    };
    let truncs: Vec<_> = (1..=order).map(|tr| a.solution.phase.truncated(tr)).collect();
    for (j, ph) in run.phases.iter().enumerate() {
        let center = a.orbit.taus[j];
        for (&h, &v) in ph.offsets.iter().zip(&ph.values) {
            let mut row: Vec<Cell> = vec![j.into(), h.into(), v.into()];
            row.extend(truncs.iter().map(|s| Cell::Float((v - eval_phase(s, j, center + h).value).abs())));
            t.push(row);
        }
    }
    t
}

/// Peak location and amplitude per reflection; `cycle_ratio` compares each
/// peak with the one a full cycle earlier.
pub fn fiter_table(reflections: &[Reflection], taus: &[f64], cycle: usize) -> Table {
    let mut t = Table::new(
        "fiter",
        &["reflection", "obstacle", "peak_tau", "peak_offset", "peak_amplitude", "cycle_ratio"],
    );
    for r in reflections {
        let ratio = (r.index >= cycle).then(|| r.peak_amplitude / reflections[r.index - cycle].peak_amplitude);
        let offset = crate::curves::param_diff(r.peak_tau, taus[r.obstacle]);
        t.push(vec![
            r.index.into(),
            r.obstacle.into(),
            r.peak_tau.into(),
            offset.into(),
            r.peak_amplitude.into(),
            ratio.into(),
        ]);
    }
    t
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_table(dir: &Path, table: &Table) -> Result<PathBuf> {
    let path = dir.join(table.file_name());
    write_atomic(&path, &table.to_csv()?)?;
    Ok(path)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Hash of the geometry and wavenumber only; discretization and truncation
/// settings may differ between reports that are meant to be compared.
pub fn scene_hash(cfg: &SceneConfig) -> String {
    let scene = json!({
        "obstacles": cfg.obstacles,
        "orbit_order": cfg.orbit_order,
        "wavenumber": cfg.wavenumber,
    });
    sha256_hex(scene.to_string().as_bytes())
}

/// Default relative tolerance per table used by [`compare_reports`].
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("orbit", 1e-10),
        ("fseries", 1e-10),
        ("fphase", 1e-12),
        ("twodisk", 1e-12),
        ("fconv", 1e-6),
        ("mode", 1e-6),
        ("fiter", 1e-6),
        ("summary", 1e-3),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub scene_hash: String,
    pub config_hash: String,
    pub tolerances: BTreeMap<String, f64>,
    /// File name to SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

fn complex_json(z: num_complex::Complex64) -> Value {
    json!({ "re": z.re, "im": z.im, "abs": z.norm(), "arg": z.arg() })
}

/// Everything `report` computes, in memory.
#[derive(Debug)]
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: Value,
}

pub fn build_report(cfg: &SceneConfig) -> Result<Report> {
    let a = analyze(cfg)?;
    let run = if cfg.bem.enabled { Some(run_bem(cfg, &a)?) } else { None };
    let mut tables = vec![orbit_table(&a.orbit), fseries_table(&a), fphase_table(&a.solution)];
    let k = a.scene.wavenumber();
    let mut summary = json!({
        "obstacles": a.scene.len(),
        "wavenumber": k,
        "taylor_order": a.solution.phase.order(),
        "orbit": {
            "taus": a.orbit.taus,
            "leg_distances": a.orbit.leg_distances,
            "total_length": a.orbit.total_length,
            "hessian_eigenvalues": a.orbit.hessian_eigenvalues,
        },
        "phase": {
            "c": a.solution.phase.c,
            "a": a.solution.chi.a,
            "max_residual": a.solution.residuals.max_abs(),
            "order2_iterations": a.solution.order2_iterations,
            "conditions": a.solution.conditions,
        },
    });
    if let Some(tc) = cfg.twodisk_config() {
        tables.push(twodisk_table(&a.solution));
        let grid = twodisk::solve_chi(tc, &ChiOptions::default())?;
        tables.push(fconv_twodisk(&a, &grid, run.as_ref())?);
        summary["chi"] = json!({
            "max_residual": grid.max_residual,
            "slope_at_zero": grid.slope_at_zero(),
            "sweeps": grid.sweeps,
        });
    } else if let Some(r) = &run {
        tables.push(fconv_general(&a, r));
    }
    if let Some(r) = &run {
        tables.push(mode_table(r));
        let kl = (k * a.orbit.total_length).rem_euclid(std::f64::consts::TAU);
        summary["bem"] = json!({
            "nodes": r.system.grids.iter().map(|g| g.n).collect::<Vec<_>>(),
            "diag_conditions": r.system.diag_conditions,
            "lambda": complex_json(r.pair.value),
            "k_times_length_mod_2pi": kl,
            "power_iterations": r.pair.iterations,
            "closure_residual": r.mode.closure_residual,
            "phase_extent": r.phases.iter().map(|p| p.extent).collect::<Vec<_>>(),
        });
        if let Some(it) = &cfg.iterate {
            let refl = bem::iterate_scattering(&r.system, &it.incident.to_incident(), it.start, it.reflections)?;
            tables.push(fiter_table(&refl, &a.orbit.taus, a.scene.len()));
        }
    }
    Ok(Report { tables, summary })
}

/// Writes every table, `summary.json` and `manifest.json` into `dir`.
pub fn write_report(cfg: &SceneConfig, report: &Report, dir: &Path) -> Result<Manifest> {
    let mut files = BTreeMap::new();
    for t in &report.tables {
        let bytes = t.to_csv()?;
        files.insert(t.file_name(), sha256_hex(&bytes));
        write_atomic(&dir.join(t.file_name()), &bytes)?;
    }
    let summary = serde_json::to_vec_pretty(&report.summary)?;
    files.insert("summary.json".into(), sha256_hex(&summary));
    write_atomic(&dir.join("summary.json"), &summary)?;
    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION").into(),
        scene_hash: scene_hash(cfg),
        config_hash: sha256_hex(cfg.to_json().as_bytes()),
        tolerances: default_tolerances(),
        files,
    };
    write_atomic(&dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableDiff {
    pub name: String,
    /// Largest per-cell relative difference over the rows both reports share.
    pub max_rel_diff: f64,
    pub compared_cells: usize,
    pub row_count: [usize; 2],
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub tables: Vec<TableDiff>,
    pub pass: bool,
}

impl CompareSummary {
    pub fn table(&self, name: &str) -> Option<&TableDiff> {
        self.tables.iter().find(|t| t.name == name)
    }
}

fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    Ok((header, rows))
}

/// `|a − b| / max(|a|, |b|, floor)`.
fn rel_diff(a: f64, b: f64, floor: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn compare_cells(a: &[Vec<String>], b: &[Vec<String>]) -> (f64, usize) {
    let cols = a.first().map_or(0, Vec::len);
    // floor per column so that round-off around exact zeros does not count as a relative change
    let scale: Vec<f64> = (0..cols)
        .map(|c| {
            a.iter()
                .chain(b)
                .filter_map(|r| r.get(c)?.parse::<f64>().ok())
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .collect();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (ra, rb) in a.iter().zip(b) {
        for (c, (x, y)) in ra.iter().zip(rb).enumerate() {
            // a blank cell marks a quantity the shorter run did not compute
            if x.is_empty() || y.is_empty() {
                continue;
            }
            let d = match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => rel_diff(x, y, 1e-14 * scale[c]),
                _ if x == y => 0.0,
                _ => f64::INFINITY,
            };
            worst = worst.max(d);
            count += 1;
        }
    }
    (worst, count)
}

fn flatten_json(v: &Value, prefix: String, out: &mut Vec<(String, f64)>) {
    match v {
        Value::Number(n) => out.push((prefix, n.as_f64().unwrap_or(f64::NAN))),
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten_json(x, format!("{prefix}[{i}]"), out);
            }
        }
        Value::Object(map) => {
            for (k, x) in map {
                flatten_json(x, format!("{prefix}.{k}"), out);
            }
        }
        _ => {}
    }
}

/// Relative difference of `summary.json` restricted to the fields listed.
fn compare_summary(a: &Value, b: &Value, fields: &[&str]) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut count = 0;
    for f in fields {
        let (mut xa, mut xb) = (Vec::new(), Vec::new());
        flatten_json(a.pointer(f).unwrap_or(&Value::Null), String::new(), &mut xa);
        flatten_json(b.pointer(f).unwrap_or(&Value::Null), String::new(), &mut xb);
        if xa.len() != xb.len() {
            worst = f64::INFINITY;
        }
        for ((_, x), (_, y)) in xa.iter().zip(&xb) {
            worst = worst.max(rel_diff(*x, *y, 1e-300));
            count += 1;
        }
    }
    (worst, count)
}

/// Summary fields that are comparable across discretizations.
const SUMMARY_FIELDS: [&str; 3] = ["/orbit/total_length", "/orbit/taus", "/bem/lambda"];

/// Compares every table present in both report directories. `tolerance`
/// overrides the per-table defaults recorded in the baseline manifest.
pub fn compare_reports(report: &Path, baseline: &Path, tolerance: Option<f64>) -> Result<CompareSummary> {
    let ma = read_manifest(report)?;
    let mb = read_manifest(baseline)?;
    if ma.scene_hash != mb.scene_hash {
        return Err(Error::ManifestMismatch(format!(
            "scene hash {} differs from baseline {}",
            ma.scene_hash, mb.scene_hash
        )));
    }
    let mut tables = Vec::new();
    for name in ma.files.keys().filter(|n| mb.files.contains_key(*n)) {
        let stem = name.trim_end_matches(".csv").trim_end_matches(".json").to_string();
        let (max_rel_diff, compared_cells, row_count) = if name.ends_with(".json") {
            let a: Value = serde_json::from_str(&std::fs::read_to_string(report.join(name))?)?;
            let b: Value = serde_json::from_str(&std::fs::read_to_string(baseline.join(name))?)?;
            let (d, n) = compare_summary(&a, &b, &SUMMARY_FIELDS);
            (d, n, [1, 1])
        } else {
            let (ha, ra) = read_csv(&report.join(name))?;
            let (hb, rb) = read_csv(&baseline.join(name))?;
            let (d, n) = if ha == hb { compare_cells(&ra, &rb) } else { (f64::INFINITY, 0) };
            (d, n, [ra.len(), rb.len()])
        };
        let tol = tolerance.unwrap_or_else(|| mb.tolerances.get(&stem).copied().unwrap_or(1e-12));
        tables.push(TableDiff {
            pass: max_rel_diff <= tol,
            name: stem,
            max_rel_diff,
            compared_cells,
            row_count,
            tolerance: tol,
        });
    }
    let pass = tables.iter().all(|t| t.pass);
    Ok(CompareSummary { tables, pass })
}
