//! Command-line front end: configuration, coefficient cache, reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acceptance;
use crate::combinatorics::{collision_atlas, d2k, multiset_collisions, trig_decomposition, vo_2k, SUPPORT_BRACKET, VOID_H};
use crate::error::{LabError, Result};
use crate::identities::{default_suite, dod2_scan, restriction_scan};
use crate::measure::{
    read_coefficient_cache, sha256_hex, strichartz_fit, wick_constants, write_coefficient_cache, CantorSpec,
};
use crate::moments::{mv_integral_ratio, od4_scan, od_t, second_moment_l};
use crate::numeric::{geometric_grid, GridScan};
use crate::profiler::{dyadic_windows, exponent_formulas, fit_mu, sample_profile, slope_level, Sampling};
use crate::special::{AfeOptions, ComplexPoint, LFunction, Method};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub round: bool,
}

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        geometric_grid(self.lo, self.hi, self.points, self.round)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grids {
    pub od_heights: Vec<f64>,
    pub restriction: GridRange,
    pub dod2: GridRange,
    pub moment2_starts: Vec<f64>,
    pub mv_bounds: Vec<u64>,
    pub od4_starts: Vec<f64>,
    pub mu_sigmas: Vec<f64>,
    pub mu_t_lo: f64,
    pub mu_t_hi: f64,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            od_heights: vec![300.0, 1e3, 3e3, 1e4],
            restriction: GridRange { lo: 200.0, hi: 2e5, points: 24, round: true },
            dod2: GridRange { lo: 300.0, hi: 1e5, points: 24, round: true },
            moment2_starts: vec![1e3, 1e4],
            mv_bounds: vec![20, 50, 100],
            od4_starts: vec![300.0, 3e3, 3e4],
            mu_sigmas: (2..=12).map(|i| i as f64 / 10.0).collect(),
            mu_t_lo: 500.0,
            mu_t_hi: 2e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub csv: bool,
    pub json: bool,
}

impl Default for Output {
    fn default() -> Self {
        Output { csv: true, json: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub spec: CantorSpec,
    /// Zero uses every available core.
    pub threads: usize,
    pub cache_path: PathBuf,
    /// Highest coefficient index kept in the cache.
    pub cache_n: usize,
    pub out_dir: PathBuf,
    pub output: Output,
    pub grids: Grids,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spec: CantorSpec::default(),
            threads: 0,
            cache_path: PathBuf::from("cantor-lab-out/coefficients.csv"),
            cache_n: 100_000,
            out_dir: PathBuf::from("cantor-lab-out"),
            output: Output::default(),
            grids: Grids::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| LabError::Config(format!("{}: {}", path.display(), e)))
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.cache_n == 0 || self.cache_n > 50_000_000 {
            return Err(LabError::Config(format!("cache_n = {} outside 1..=5e7", self.cache_n)));
        }
        let g = &self.grids;
        for (name, r, lo, hi) in [("restriction", g.restriction, 1e2, 1e6), ("dod2", g.dod2, 300.0, 1e5)] {
            if !(r.lo >= lo && r.hi <= hi && r.lo < r.hi && r.points >= 2) {
                return Err(LabError::Config(format!("{} grid {:?} outside [{}, {}]", name, r, lo, hi)));
            }
        }
        if g.mu_sigmas.len() < 5 {
            return Err(LabError::Config("mu_sigmas needs at least 5 points".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML rendering. Locations and thread count do not
    /// change any number, so they are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = 0;
        c.cache_path = PathBuf::new();
        c.out_dir = PathBuf::new();
        sha256_hex(toml::to_string(&c).expect("config serializes").as_bytes())
    }
}

#[derive(Debug, Parser)]
#[command(name = "cantor-lab", version, about = "Dirichlet series with Cantor-measure coefficients")]
pub struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub theta0: Option<f64>,
    #[arg(long, global = true)]
    pub theta1: Option<f64>,
    /// Atom level of the measure approximation.
    #[arg(long, global = true)]
    pub level: Option<u32>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Directory for CSV and JSON reports.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Carlson and Wick constants and the Strichartz fit.
    Constants(ConstantsArgs),
    /// Build the coefficient cache (`n,re,im`).
    Coeffs(CoeffsArgs),
    /// Evaluate L at a point or along a t-grid. CSV: sigma,t,re,im,abs
    Eval(EvalArgs),
    /// Run the identity suite; exit 1 if any identity fails.
    Identities,
    /// Off-diagonal OD(t). CSV: t,terms,od,diagonal,ratio,reconstruction_residual
    OdScan(HeightsArgs),
    /// Restriction quotient and dOD2 scans. CSV columns as in the report headers.
    RestrictionScan(RestrictionArgs),
    /// Second moment over [T, 2T]. CSV: T,value,main_term,ratio,points
    Moment2(HeightsArgs),
    /// Product mean-value ratios and the OD4 scan.
    Moment4(Moment4Args),
    /// D_2k sums, the defect split and VO_6.
    Vieta(VietaArgs),
    /// Collision atlas. CSV: m1,m2,m3,m4,h,p,alpha_star_num,alpha_star_den
    Atlas(AtlasArgs),
    /// Windowed-maximum order profile. CSV: sigma,mu_hat,window_count
    MuProfile(MuArgs),
    /// Closed-form exponents.
    Exponents(ExponentArgs),
    /// The acceptance suite; exit 1 if any criterion fails.
    Accept(AcceptArgs),
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long = "N", default_value_t = 1_000_000)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long = "N")]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long)]
    pub t: f64,
    /// End of a grid starting at `t`.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// direct, average, afe or afe-smooth
    #[arg(long, default_value = "average")]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct HeightsArgs {
    /// Comma-separated heights (or window starts).
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RestrictionArgs {
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Also scan dOD2 on its grid.
    #[arg(long)]
    pub dod2: bool,
}

#[derive(Debug, Args)]
pub struct Moment4Args {
    #[arg(long = "M", value_delimiter = ',')]
    pub bounds: Vec<u64>,
    #[arg(long = "T", value_delimiter = ',')]
    pub starts: Vec<f64>,
    #[arg(long)]
    pub skip_od4: bool,
}

#[derive(Debug, Args)]
pub struct VietaArgs {
    #[arg(long, default_value_t = 3000)]
    pub n4: u64,
    #[arg(long, default_value_t = 280)]
    pub n6: u64,
    #[arg(long, default_value_t = 300)]
    pub vo_n: u64,
    /// Truncation of the defect split (0 skips it).
    #[arg(long, default_value_t = 200)]
    pub split_n: u64,
}

#[derive(Debug, Args)]
pub struct AtlasArgs {
    #[arg(long = "M", default_value_t = 200)]
    pub bound: u64,
    /// Records are exported for 1 <= h <= this.
    #[arg(long, default_value_t = 1)]
    pub record_h: i64,
    /// Exit 1 if any h <= 3 shift lands in the support.
    #[arg(long)]
    pub void_check: bool,
}

#[derive(Debug, Args)]
pub struct MuArgs {
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Vec<f64>,
    #[arg(long)]
    pub t_lo: Option<f64>,
    #[arg(long)]
    pub t_hi: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub blocks: usize,
    #[arg(long, default_value_t = 64)]
    pub block_len: usize,
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    #[arg(long, default_value_t = 2f64.ln() / 3f64.ln())]
    pub d: f64,
    #[arg(long, default_value_t = 13.0 / 84.0)]
    pub mu_zeta: f64,
    #[arg(long, default_value_t = 0.0614)]
    pub eta: f64,
    /// Also evaluate the slope-level formula at this slope.
    #[arg(long)]
    pub slope: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AcceptArgs {
    /// Comma-separated criterion numbers; all by default.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

/// What a command hands back: a JSON body, optional CSV tables and a verdict.
struct Report {
    body: Value,
    tables: Vec<(String, String)>,
    pass: bool,
}

impl Report {
    fn new(body: Value) -> Self {
        Report { body, tables: Vec::new(), pass: true }
    }

    fn table(mut self, name: &str, csv: String) -> Self {
        self.tables.push((name.to_string(), csv));
        self
    }
}

pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.theta0 {
        cfg.spec.theta0 = v;
    }
    if let Some(v) = cli.theta1 {
        cfg.spec.theta1 = v;
    }
    if let Some(v) = cli.level {
        cfg.spec.level = v;
    }
    if let Some(v) = cli.threads {
        cfg.threads = v;
    }
    if let Some(v) = &cli.out {
        if cli.cache.is_none() && cfg.cache_path == RunConfig::default().cache_path {
            cfg.cache_path = v.join("coefficients.csv");
        }
        cfg.out_dir = v.clone();
    }
    if let Some(v) = &cli.cache {
        cfg.cache_path = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads the cache if its header matches, otherwise (re)builds it; returns the checksum.
pub fn ensure_cache(cfg: &RunConfig, n: usize) -> Result<String> {
    let level = Some(cfg.spec.level);
    if cfg.cache_path.exists() {
        if let Ok((tab, sum)) = read_coefficient_cache(&cfg.cache_path, &cfg.spec, level) {
            if tab.len() > n {
                return Ok(sum);
            }
        }
    }
    if let Some(dir) = cfg.cache_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tab = cfg.spec.coefficient_table(n, level);
    write_coefficient_cache(&cfg.cache_path, &cfg.spec, level, &tab)
}

fn scan_json(s: &GridScan) -> Value {
    json!({ "columns": s.columns, "rows": s.rows, "meta": s.meta })
}

fn run_command(cmd: &Command, cfg: &RunConfig) -> Result<Report> {
    let g = &cfg.grids;
    let lf = || LFunction::new(cfg.spec);
    match cmd {
        Command::Constants(a) => {
            let w = wick_constants(&cfg.spec, a.n);
            let fit = strichartz_fit(&cfg.spec, &[1000, 10_000, 100_000]);
            println!("c_nu {:.6} (band 1.156 +- 0.01)", w.c_nu);
            println!("wick4 {:.6}  wick6 {:.6}", w.wick4(), w.wick6());
            Ok(Report::new(json!({ "wick": w, "wick4": w.wick4(), "wick6": w.wick6(), "strichartz": fit })))
        }
        Command::Coeffs(a) => {
            let n = a.n.unwrap_or(cfg.cache_n);
            let sum = ensure_cache(cfg, n)?;
            println!("{} ({} coefficients) sha256 {}", cfg.cache_path.display(), n + 1, sum);
            Ok(Report::new(json!({ "path": cfg.cache_path, "n": n, "sha256": sum })))
        }
        Command::Eval(a) => {
            let method = match a.method.as_str() {
                "direct" => Method::Direct,
                "average" => Method::MeasureAverage,
                "afe" => Method::Afe(AfeOptions::default()),
                "afe-smooth" => Method::Afe(AfeOptions::smooth()),
                m => return Err(LabError::Config(format!("unknown method {}", m))),
            };
            let l = lf()?;
            let end = a.t_max.unwrap_or(a.t);
            if a.step <= 0.0 || end < a.t {
                return Err(LabError::Config("need step > 0 and t_max >= t".into()));
            }
            let mut scan = GridScan::new("eval", &["sigma", "t", "re", "im", "abs"]);
            let mut t = a.t;
            while t <= end + 1e-9 {
                let v = l.eval(ComplexPoint::new(a.sigma, t), method)?;
                scan.push(vec![a.sigma, t, v.re, v.im, v.norm()]);
                t += a.step;
            }
            for r in &scan.rows {
                println!("L({} + {}i) = {:.15e} {:+.15e}i", r[0], r[1], r[2], r[3]);
            }
            Ok(Report::new(json!({ "method": a.method, "scan": scan_json(&scan) })).table("eval", scan.to_csv()))
        }
        Command::Identities => {
            let l = lf()?;
            let reps = default_suite(&l.native)?;
            let failed = reps.iter().filter(|r| !r.pass).count();
            for r in reps.iter().filter(|r| !r.pass) {
                println!("FAIL {} residual {:.3e} > {:.1e}", r.name, r.residual, r.tolerance);
            }
            println!("{} identities, {} failed", reps.len(), failed);
            let mut rep = Report::new(json!({ "reports": reps }));
            rep.pass = failed == 0;
            Ok(rep)
        }
        Command::OdScan(a) => {
            let l = lf()?;
            let ts = if a.t.is_empty() { g.od_heights.clone() } else { a.t.clone() };
            let mut scan = GridScan::new("od", &["t", "terms", "od", "diagonal", "ratio", "reconstruction_residual"]);
            for t in ts {
                let r = od_t(t, &l.unit)?;
                println!("t {:>10} |OD| {:.5} ratio {:.5}", t, r.od.abs(), r.ratio());
                scan.push(vec![t, r.terms as f64, r.od, r.diagonal, r.ratio(), r.reconstruction_residual]);
            }
            Ok(Report::new(scan_json(&scan)).table("od", scan.to_csv()))
        }
        Command::RestrictionScan(a) => {
            let l = lf()?;
            let mut r = g.restriction;
            r.lo = a.lo.unwrap_or(r.lo);
            r.hi = a.hi.unwrap_or(r.hi);
            r.points = a.points.unwrap_or(r.points);
            let scan = restriction_scan(&r.values(), &l.native)?;
            let q = scan.column("quotient").unwrap_or_default();
            println!(
                "quotient in [{:.4}, {:.4}], slope {:.4} +- {:.4}",
                q.iter().cloned().fold(f64::INFINITY, f64::min),
                q.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                scan.meta.get("slope").copied().unwrap_or(f64::NAN),
                scan.meta.get("slope_stderr").copied().unwrap_or(f64::NAN)
            );
            let mut body = json!({ "restriction": scan_json(&scan) });
            let mut rep_tables = vec![("restriction".to_string(), scan.to_csv())];
            if a.dod2 {
                let d = dod2_scan(&g.dod2.values(), &l.native)?;
                body["dod2"] = scan_json(&d);
                rep_tables.push(("dod2".to_string(), d.to_csv()));
            }
            let mut rep = Report::new(body);
            rep.tables = rep_tables;
            Ok(rep)
        }
        Command::Moment2(a) => {
            let l = lf()?;
            let c = wick_constants(&cfg.spec, 1_000_000).c_nu;
            let ts = if a.t.is_empty() { g.moment2_starts.clone() } else { a.t.clone() };
            let mut scan = GridScan::new("moment2", &["T", "value", "main_term", "ratio", "points"]);
            for t in ts {
                let r = second_moment_l(&l, t, c)?;
                println!("T {:>8} ratio {:.6}", t, r.ratio);
                scan.push(vec![t, r.value, r.main_term, r.ratio, r.quadrature_points as f64]);
            }
            Ok(Report::new(scan_json(&scan)).table("moment2", scan.to_csv()))
        }
        Command::Moment4(a) => {
            let l = lf()?;
            let bounds = if a.bounds.is_empty() { g.mv_bounds.clone() } else { a.bounds.clone() };
            let mv = mv_integral_ratio(&bounds, &l.unit, 0)?;
            for r in &mv.rows {
                println!("M {:>4} ratio {:.5}", r[0], r[2]);
            }
            let mut body = json!({ "mv": scan_json(&mv) });
            let mut rep_tables = vec![("mv".to_string(), mv.to_csv())];
            if !a.skip_od4 {
                let starts = if a.starts.is_empty() { g.od4_starts.clone() } else { a.starts.clone() };
                let od4 = od4_scan(&starts, &l.unit, 0)?;
                for r in &od4.rows {
                    println!("T {:>8} OD4/T {:.5}", r[0], r[4]);
                }
                body["od4"] = scan_json(&od4);
                rep_tables.push(("od4".to_string(), od4.to_csv()));
            }
            let mut rep = Report::new(body);
            rep.tables = rep_tables;
            Ok(rep)
        }
        Command::Vieta(a) => {
            let d4 = d2k(&cfg.spec, 2, a.n4)?;
            let d6 = d2k(&cfg.spec, 3, a.n6)?;
            let vo = vo_2k(&cfg.spec, 3, a.vo_n)?;
            let first = multiset_collisions(3, 9)?.into_iter().next();
            println!("D4 {:.5}  D6 {:.5}  VO6 {:.6}", d4, d6, vo);
            let mut body = json!({ "d4": d4, "d6": d6, "vo6": vo, "first_witness": first });
            let mut rep = Report::new(Value::Null);
            if a.split_n > 0 {
                let tr = trig_decomposition(&cfg.spec, 2, a.split_n, 2 * a.split_n)?;
                let mut s = GridScan::new("defect_split", &["delta", "weight"]);
                for (d, w) in tr.weights.iter().enumerate() {
                    s.push(vec![d as f64, *w]);
                }
                body["split_max_imaginary"] = json!(tr.max_imaginary);
                rep.tables.push(("defect_split".to_string(), s.to_csv()));
            }
            rep.body = body;
            Ok(rep)
        }
        Command::Atlas(a) => {
            let atlas = collision_atlas(a.bound, a.record_h)?;
            let hits = atlas.void_hits.len();
            println!("h<={}: {} in-support singularities", VOID_H, hits);
            println!("records {} (h <= {}), fitted C {:.4}", atlas.records.len(), a.record_h, atlas.fitted_constant());
            let mut rep = Report::new(json!({
                "bound": a.bound,
                "void_h": VOID_H,
                "support_bracket": [SUPPORT_BRACKET.0, SUPPORT_BRACKET.1],
                "void_hits": atlas.void_hits,
                "fitted_constant": atlas.fitted_constant(),
                "rows": atlas.rows,
            }))
            .table("atlas", atlas.to_csv());
            rep.pass = !a.void_check || hits == 0;
            Ok(rep)
        }
        Command::MuProfile(a) => {
            let l = lf()?;
            let sig = if a.sigmas.is_empty() { g.mu_sigmas.clone() } else { a.sigmas.clone() };
            let windows = dyadic_windows(a.t_lo.unwrap_or(g.mu_t_lo), a.t_hi.unwrap_or(g.mu_t_hi));
            let sampling = Sampling { step: 0.1, blocks: a.blocks, block_len: a.block_len };
            let samples = sample_profile(&l, &sig, &windows, sampling)?;
            let p = fit_mu(&samples)?;
            println!("slopes {:?} breakpoints {:?} rms {:.4} zero at {:?}", p.fit_slopes, p.breakpoints, p.rms, p.zero_crossing);
            Ok(Report::new(json!({ "summary": p.summary_json(), "samples": samples }))
                .table("profile", p.to_csv()))
        }
        Command::Exponents(a) => {
            let f = exponent_formulas(a.d, a.mu_zeta, a.eta)?;
            println!(
                "subconvex {:.4}  d* {:.4}  rajchman {:.4}  d_crit {:.4}",
                f.subconvex, f.d_star, f.rajchman, f.d_crit
            );
            let mut body = json!({ "formulas": f });
            if let Some(s) = a.slope {
                let v = slope_level(s)?;
                println!("slope_level({}) {:.6}", s, v);
                body["slope_level"] = json!(v);
            }
            Ok(Report::new(body))
        }
        Command::Accept(a) => {
            let res = acceptance::run(cfg.spec, &a.only, |r| println!("{}", r.line()))?;
            let failed: Vec<u8> = res.iter().filter(|r| !r.pass).map(|r| r.id).collect();
            println!("{} of {} criteria pass", res.len() - failed.len(), res.len());
            let mut rep = Report::new(json!({ "criteria": res, "failed": failed }));
            rep.pass = failed.is_empty();
            Ok(rep)
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Constants(_) => "constants",
        Command::Coeffs(_) => "coeffs",
        Command::Eval(_) => "eval",
        Command::Identities => "identities",
        Command::OdScan(_) => "od-scan",
        Command::RestrictionScan(_) => "restriction-scan",
        Command::Moment2(_) => "moment2",
        Command::Moment4(_) => "moment4",
        Command::Vieta(_) => "vieta",
        Command::Atlas(_) => "atlas",
        Command::MuProfile(_) => "mu-profile",
        Command::Exponents(_) => "exponents",
        Command::Accept(_) => "accept",
    }
}

fn write_reports(cfg: &RunConfig, name: &str, rep: &Report, checksum: &str) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    if cfg.output.json {
        let doc = json!({
            "command": name,
            "config_hash": cfg.hash(),
            "cache_checksum": checksum,
            "pass": rep.pass,
            "result": rep.body,
        });
        let text = serde_json::to_string_pretty(&doc).expect("json");
        std::fs::write(cfg.out_dir.join(format!("{}.json", name)), text)?;
    }
    if cfg.output.csv {
        for (t, csv) in &rep.tables {
            let head = format!("# config_hash={} cache_checksum={}\n", cfg.hash(), checksum);
            std::fs::write(cfg.out_dir.join(format!("{}.csv", t)), head + csv)?;
        }
    }
    Ok(())
}

/// Exit status 0 pass, 1 criteria failure or computation error, 2 usage error.
pub fn run(cli: Cli) -> ExitCode {
    let cfg = match effective_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", e);
            return ExitCode::from(2);
        }
    };
    if cfg.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    let name = command_name(&cli.command);
    let checksum = match ensure_cache(&cfg, cfg.cache_n) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("coefficient cache: {}", e);
            return ExitCode::from(2);
        }
    };
    log::info!("config {} cache {}", cfg.hash(), checksum);
    match run_command(&cli.command, &cfg) {
        Ok(rep) => {
            if let Err(e) = write_reports(&cfg, name, &rep, &checksum) {
                eprintln!("writing reports: {}", e);
                return ExitCode::from(1);
            }
            println!("config {} cache {}", &cfg.hash()[..16], &checksum[..16]);
            if rep.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ (LabError::Config(_) | LabError::Domain(_))) => {
            eprintln!("{}: {}", name, e);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{}: {}", name, e);
            ExitCode::from(1)
        }
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_hash() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let partial: RunConfig = toml::from_str("threads = 2\n[spec]\ntheta0 = 0.5\ntheta1 = 2.0\nlevel = 8\nkeep_count = 2\nbase = 3\n").unwrap();
        assert_eq!(partial.spec.level, 8);
        assert_eq!(partial.grids, Grids::default());
        assert_ne!(partial.hash(), c.hash());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "[spec]\ntheta0 = 0.5\ntheta1 = 2.0\nlevel = 8\nkeep_count = 2\nbase = 3\n").unwrap();
        let cli = Cli::try_parse_from(["cantor-lab", "--config", p.to_str().unwrap(), "--level", "6", "exponents"]).unwrap();
        let cfg = effective_config(&cli).unwrap();
        assert_eq!(cfg.spec.level, 6);
    }

    #[test]
    fn bad_grid_rejected() {
        let mut c = RunConfig::default();
        c.grids.dod2.hi = 1e7;
        assert!(c.validate().is_err());
    }
}
