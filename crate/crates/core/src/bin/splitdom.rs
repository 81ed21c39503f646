//! Command-line front end: run catalog or file-defined systems through the
//! analysis pipelines, emit reports and plot data, and run the self tests.
//!
//! Exit codes: 0 success / directions agree, 2 the two theorem directions
//! disagree, 1 operational error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use splitdom::cones::{cone_limit_subspace, newhouse_search, Cone, ConeField, ConeFieldPoint};
use splitdom::domination::{
    extract_poincare_splitting, fit_rate, plotdata_lines, prepare, verify_contraction_implies_domination,
    verify_equivalence, DominationConfig, Fiber, JsonReport, SplittingKind,
};
use splitdom::systems::{catalog, catalog_entry, load_system, System};

#[derive(Parser)]
#[command(name = "splitdom", version, about = "Dominated-splitting analysis via the linear Poincare flow")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Catalog inspection.
    Systems {
        #[command(subcommand)]
        cmd: SystemsCmd,
    },
    /// Run the equivalence pipeline and write reports.
    Analyze {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Search for a strongly dominated cone field.
    Cones {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated candidate times t0.
        #[arg(long, default_value = "1,2,3,4")]
        t_grid: String,
        /// Cone-iteration count for the limit subspace.
        #[arg(long, default_value_t = 30)]
        n_iter: usize,
    },
    /// Convert a stored report's quotient series to plot data.
    Plotdata {
        /// Path to a JSON report written by `analyze`.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in checks against the catalog oracles.
    Selftest,
}

#[derive(Subcommand)]
enum SystemsCmd {
    /// List built-in systems and the analytic facts they encode.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Catalog name or path to a system-definition JSON file.
    #[arg(long)]
    system: String,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 40.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    aperture: f64,
    #[arg(long, default_value_t = 0.05)]
    lambda_min: f64,
    #[arg(long, default_value_t = 0.95)]
    r2_min: f64,
    #[arg(long, default_value_t = 1.5)]
    gap_min: f64,
    /// Output directory (SPLITDOM_OUT overrides the default ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// json, csv, or plotdata.
    #[arg(long, default_value = "json")]
    format: String,
}

impl RunArgs {
    fn config(&self) -> Result<DominationConfig> {
        for (name, v) in [
            ("dt", self.dt),
            ("horizon", self.horizon),
            ("aperture", self.aperture),
            ("lambda-min", self.lambda_min),
            ("gap-min", self.gap_min),
        ] {
            if !(v > 0.0) {
                bail!("--{name} must be positive (got {v})");
            }
        }
        if !(self.r2_min > 0.0 && self.r2_min <= 1.0) {
            bail!("--r2-min must lie in (0, 1] (got {})", self.r2_min);
        }
        if !["json", "csv", "plotdata"].contains(&self.format.as_str()) {
            bail!("--format must be json, csv, or plotdata (got {})", self.format);
        }
        Ok(DominationConfig {
            lambda_min: self.lambda_min,
            r2_min: self.r2_min,
            gap_min: self.gap_min,
            aperture: self.aperture,
            horizon: self.horizon,
            dt: self.dt,
            ..DominationConfig::default()
        })
    }

    fn out_dir(&self) -> PathBuf {
        if let Some(p) = &self.out {
            return p.clone();
        }
        if let Ok(env) = std::env::var("SPLITDOM_OUT") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        PathBuf::from(".")
    }
}

fn resolve_system(name: &str) -> Result<System> {
    if let Ok(entry) = catalog_entry(name) {
        return Ok(entry.system);
    }
    let path = Path::new(name);
    if path.exists() {
        return load_system(path).with_context(|| format!("loading system file {name}"));
    }
    bail!("'{name}' is neither a catalog system nor an existing file")
}

fn cmd_systems_list() {
    for entry in catalog() {
        let (kind, dim) = match &entry.system {
            System::Flow(f) => ("flow", f.dim),
            System::Suspension(s) => ("suspension", s.tangent_dim()),
        };
        println!("{:<20} {:<10} dim {}  {}", entry.system.name(), kind, dim, entry.summary);
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn csv_lines(quotients: &[(f64, f64)]) -> String {
    let mut s = String::from("t,q\n");
    for (t, q) in quotients {
        s.push_str(&format!("{t:.9e},{q:.9e}\n"));
    }
    s
}

fn cmd_analyze(run: &RunArgs) -> Result<u8> {
    let cfg = run.config()?;
    let system = resolve_system(&run.system)?;
    let report = verify_equivalence(&system, &cfg)?;
    let dir = run.out_dir();
    let name = report.system.clone();

    let mut equivalence_json =
        serde_json::to_string_pretty(&report).context("serializing equivalence report")?;
    equivalence_json.push('\n');
    let p = write_file(&dir, &format!("{name}-equivalence.json"), &equivalence_json)?;
    println!("wrote {}", p.display());

    let mut sub_reports: Vec<(String, JsonReport)> = Vec::new();
    if let Some(r) = &report.extracted_lpf {
        sub_reports.push((
            format!("{name}-lpf"),
            JsonReport::from_domination(&name, Fiber::Normal, SplittingKind::TwoBundle, cfg.dt, r, BTreeMap::new()),
        ));
    }
    if let Some(r) = &report.reconstructed_flow {
        sub_reports.push((
            format!("{name}-flow"),
            JsonReport::from_domination(
                &name,
                Fiber::Tangent,
                SplittingKind::ThreeBundleWithFlow,
                cfg.dt,
                r,
                BTreeMap::new(),
            ),
        ));
    }
    for (stem, jr) in &sub_reports {
        match run.format.as_str() {
            "json" => {
                let p = write_file(&dir, &format!("{stem}.json"), &jr.to_json())?;
                println!("wrote {}", p.display());
            }
            "csv" => {
                let p = write_file(&dir, &format!("{stem}.csv"), &csv_lines(&jr.quotients))?;
                println!("wrote {}", p.display());
            }
            "plotdata" => {
                let p = write_file(&dir, &format!("{stem}.dat"), &plotdata_lines(&jr.quotients))?;
                println!("wrote {}", p.display());
            }
            _ => unreachable!(),
        }
    }

    println!(
        "{name}: lpf_dominated={} flow_partially_dominated={} agree={}",
        report.lpf_dominated, report.flow_partially_dominated, report.agree
    );
    if let Some(r) = &report.extracted_lpf {
        println!("  lpf: verdict={} lambda={:.6} r2={:.6}", r.verdict, r.fitted_lambda, r.r_squared);
    }
    if let Some(r) = &report.reconstructed_flow {
        println!("  flow: verdict={} lambda={:.6} r2={:.6}", r.verdict, r.fitted_lambda, r.r_squared);
    }
    for (stage, note) in &report.notes {
        println!("  note[{stage}]: {note}");
    }
    Ok(if report.agree { 0 } else { 2 })
}

fn cmd_cones(run: &RunArgs, t_grid: &str, n_iter: usize) -> Result<u8> {
    let cfg = run.config()?;
    let system = resolve_system(&run.system)?;
    let bundle = prepare(&system, &cfg)?;
    let grid: Vec<f64> = t_grid
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad t-grid entry '{s}': {e}")))
        .collect::<Result<_>>()?;
    if grid.iter().any(|t| !(*t > 0.0)) {
        bail!("t-grid entries must be positive");
    }

    // Cone cores around the dominating extracted bundle N+.
    let splitting = match extract_poincare_splitting(&bundle.normal, bundle.n_window, cfg.gap_min, cfg.dim_hint)
    {
        Ok(s) => s,
        Err(splitdom::domination::DominationError::NoGap { best_ratio }) => {
            println!("no singular-value gap (best ratio {best_ratio:.4}); certificate: none");
            return Ok(0);
        }
        Err(e) => return Err(e.into()),
    };
    let mut points = Vec::new();
    for (ti, pts) in splitting.bundles.iter().enumerate() {
        for (i, p) in pts.iter().enumerate() {
            points.push(ConeFieldPoint {
                track: ti,
                index: i,
                cone: Cone::new(p.f.clone(), p.e.clone(), cfg.aperture)?,
            });
        }
    }
    let field = ConeField { points };
    match newhouse_search(&field, &bundle.normal, &grid)? {
        None => println!("certificate: none (grid {grid:?})"),
        Some(cert) => {
            println!(
                "certificate: t0={} steps={} m_d(separate)={:.6} m_d(pointwise)={:.6} margin={:.3e}",
                cert.t0,
                cert.n_steps,
                cert.coefficients.separate_product,
                cert.coefficients.pointwise_inf,
                cert.invariance_margin
            );
            for (p, (m, mp)) in field.points.iter().zip(&cert.coefficients.per_point) {
                println!(
                    "  track {} point {}: m={:.6} m'={:.6} m*m'={:.6}",
                    p.track,
                    p.index,
                    m,
                    mp,
                    m * mp
                );
            }
            for p in &field.points {
                let track = &bundle.normal.tracks[p.track];
                match cone_limit_subspace(&p.cone, track, p.index, n_iter) {
                    Ok(limit) => {
                        let angle = limit.max_angle_to(&p.cone.core);
                        println!(
                            "  limit subspace at track {} point {}: angle to core {:.3e}",
                            p.track, p.index, angle
                        );
                    }
                    Err(e) => println!(
                        "  limit subspace at track {} point {}: {e}",
                        p.track, p.index
                    ),
                }
            }
        }
    }
    Ok(0)
}

fn cmd_plotdata(report_path: &Path, out: Option<&Path>) -> Result<u8> {
    let text = std::fs::read_to_string(report_path)
        .with_context(|| format!("reading {}", report_path.display()))?;
    let report = JsonReport::from_json(&text)
        .with_context(|| format!("parsing {}", report_path.display()))?;
    if report.quotients.is_empty() {
        bail!("report has an empty quotient series");
    }
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| report_path.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = report_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    let p = write_file(&dir, &format!("{stem}.dat"), &plotdata_lines(&report.quotients))?;
    println!("wrote {}", p.display());
    let fit = splitdom::domination::fit_lines(&report.quotients, report.k, report.lambda);
    let p = write_file(&dir, &format!("{stem}-fit.dat"), &fit)?;
    println!("wrote {}", p.display());
    Ok(0)
}

fn check(name: &str, ok: bool, failures: &mut usize) {
    if ok {
        println!("ok   - {name}");
    } else {
        println!("FAIL - {name}");
        *failures += 1;
    }
}

fn cmd_selftest() -> Result<u8> {
    let cfg = DominationConfig::default();
    let mut failures = 0usize;

    {
        use nalgebra::{DMatrix, DVector};
        use rand::{Rng, SeedableRng};
        use splitdom::linalg::{minimal_norm, subspace_norm, LinearMap, Subspace};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut ok = true;
        for _ in 0..100 {
            let n = rng.gen_range(2..=6usize);
            let m = loop {
                let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0f64..1.0));
                let (lo, hi) = splitdom::linalg::sigma_extremes(&m);
                if lo > 1e-3 * hi {
                    break m;
                }
            };
            let k = rng.gen_range(1..n);
            let e = loop {
                let cols: Vec<DVector<f64>> =
                    (0..k).map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0f64..1.0))).collect();
                if let Ok(s) = Subspace::new(&cols) {
                    break s;
                }
            };
            let l = LinearMap::verified_invertible(m.clone()).unwrap();
            let image = Subspace::from_cols(&(&m * e.basis())).unwrap();
            let direct = minimal_norm(&l, &e).unwrap();
            let via = 1.0 / subspace_norm(&l.inverse().unwrap(), &image).unwrap();
            if (direct - via).abs() > 1e-10 * subspace_norm(&l, &e).unwrap() {
                ok = false;
            }
        }
        check("restricted-minimal-norm identity (100 random trials)", ok, &mut failures);
    }

    {
        let entry = catalog_entry("cat-suspension")?;
        let rep = verify_equivalence(&entry.system, &cfg)?;
        let lambda = rep.extracted_lpf.as_ref().map(|r| r.fitted_lambda).unwrap_or(0.0);
        let expected = 2.0 * ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
        check(
            "cat-suspension: equivalence agrees, lambda within 1%",
            rep.agree
                && rep.lpf_dominated
                && rep.flow_partially_dominated
                && (lambda - expected).abs() < 0.01 * expected,
            &mut failures,
        );
    }

    {
        let entry = catalog_entry("mixed-saddles")?;
        let rep = verify_equivalence(&entry.system, &cfg)?;
        let ln2 = 2.0f64.ln();
        let lambda = rep.extracted_lpf.as_ref().map(|r| r.fitted_lambda).unwrap_or(0.0);
        check(
            "mixed-saddles: LPF dominated at rate ln 2, directions agree",
            rep.agree && rep.lpf_dominated && (lambda - ln2).abs() < 0.01 * ln2,
            &mut failures,
        );
    }

    {
        let entry = catalog_entry("ph-suspension")?;
        let rep = verify_contraction_implies_domination(&entry.system, &cfg)?;
        let ln3 = 3.0f64.ln();
        let lambda = rep.e_side.as_ref().map(|r| r.fitted_lambda).unwrap_or(0.0);
        check(
            "ph-suspension: contracting bundle dominates the flow, lambda = ln 3",
            rep.holds && (lambda - ln3).abs() < 0.01 * ln3,
            &mut failures,
        );
    }

    {
        let entry = catalog_entry("rotation-suspension")?;
        let rep = verify_equivalence(&entry.system, &cfg)?;
        check(
            "rotation-suspension: no splitting found on either side",
            rep.agree && !rep.lpf_dominated && !rep.flow_partially_dominated,
            &mut failures,
        );
    }

    {
        let entry = catalog_entry("saddle-cycle")?;
        let rep = verify_equivalence(&entry.system, &cfg)?;
        check(
            "saddle-cycle: equivalence agrees with both directions dominated",
            rep.agree && rep.lpf_dominated && rep.flow_partially_dominated,
            &mut failures,
        );
    }

    {
        let entry = catalog_entry("cat-suspension")?;
        let a = serde_json::to_string(&verify_equivalence(&entry.system, &cfg)?)?;
        let b = serde_json::to_string(&verify_equivalence(&entry.system, &cfg)?)?;
        check("determinism: identical runs serialize identically", a == b, &mut failures);
    }

    {
        let series: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, (-2.0 * i as f64).exp())).collect();
        let (k, lambda, r2) = fit_rate(&series)?;
        check(
            "rate fit recovers an exact exponential",
            (lambda - 2.0).abs() < 1e-10 && (k - 1.0).abs() < 1e-10 && (r2 - 1.0).abs() < 1e-12,
            &mut failures,
        );
    }

    if failures == 0 {
        println!("selftest: all checks passed");
        Ok(0)
    } else {
        println!("selftest: {failures} check(s) failed");
        Ok(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Systems { cmd: SystemsCmd::List } => {
            cmd_systems_list();
            Ok(0)
        }
        Cmd::Analyze { run } => cmd_analyze(run),
        Cmd::Cones { run, t_grid, n_iter } => cmd_cones(run, t_grid, *n_iter),
        Cmd::Plotdata { report, out } => cmd_plotdata(report, out.as_deref()),
        Cmd::Selftest => cmd_selftest(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
