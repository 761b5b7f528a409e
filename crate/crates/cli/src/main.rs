use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fracfem::harness::{
    run_bench_assembly, run_disk_convergence, run_self_convergence, run_verification_suite, ExperimentReport, RunConfig,
};
use fracfem::harness::drivers::save_report;
use fracfem::{BumpOrder, OrderSpec, Region};

#[derive(Parser, Debug)]
#[command(name = "fracfem", version, about = "Variable-order fractional diffusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Disk problem against the exact solution on levels 0..=LEVEL.
    DiskConvergence(Common),
    /// Variable-order bump with +eta and -eta, with self-convergence.
    Bump {
        #[command(flatten)]
        common: Common,
        /// Bump amplitude; both signs are run.
        #[arg(long, default_value_t = 0.2)]
        eta: f64,
    },
    /// Differences of consecutive solutions for the configured problem.
    SelfConvergence(Common),
    /// Assembly times of B, K and M without solving.
    BenchAssembly(Common),
    /// Oracle comparisons and structural checks on small meshes.
    Verify(Common),
    /// Writes the mesh of one level as JSON.
    MeshGen(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Finest refinement level (single level for mesh-gen).
    #[arg(long)]
    level: Option<usize>,
    /// Coarsest refinement level.
    #[arg(long)]
    min_level: Option<usize>,
    /// Gauss points per direction for touching element pairs.
    #[arg(long)]
    quad_n: Option<usize>,
    /// Interpolation degree of both H² matrices.
    #[arg(long)]
    degree_p: Option<usize>,
    /// Cluster leaf size of both H² matrices.
    #[arg(long)]
    leaf_size: Option<usize>,
    /// Admissibility parameter of the far-field matrix.
    #[arg(long)]
    eta_adm: Option<f64>,
    /// Admissibility parameter of the density collocation matrix.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Constant order, or the base order of the bump.
    #[arg(long)]
    s: Option<f64>,
    /// Order used in the singular substitutions.
    #[arg(long)]
    s_bar: Option<f64>,
    /// Output directory for CSV and JSON files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero timings in the CSV output.
    #[arg(long)]
    deterministic: bool,
}

impl Common {
    fn config(&self, base: RunConfig) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_file(p).with_context(|| format!("reading {}", p.display()))?,
            None => base,
        };
        if self.level.is_some() || self.min_level.is_some() {
            let hi = self.level.unwrap_or_else(|| cfg.levels.last().copied().unwrap_or(0));
            let lo = self.min_level.unwrap_or(0);
            if lo > hi {
                bail!("--min-level {lo} exceeds --level {hi}");
            }
            cfg.levels = (lo..=hi).collect();
        }
        if let Some(n) = self.quad_n {
            cfg.quadrature.n = Some(n);
        }
        if let Some(p) = self.degree_p {
            cfg.h2.p = p;
            cfg.collocation.p = p;
        }
        if let Some(m) = self.leaf_size {
            cfg.h2.leaf_size = m;
            cfg.collocation.leaf_size = m;
        }
        if let Some(l) = self.eta_adm {
            cfg.h2.lambda = l;
        }
        if let Some(l) = self.lambda2 {
            cfg.collocation.lambda2 = l;
        }
        if let Some(s) = self.s {
            match &mut cfg.order {
                OrderSpec::Constant { s: c } => *c = s,
                OrderSpec::Bump(b) => *b = BumpOrder::new(s, b.eta, b.width, b.center),
            }
        }
        if let Some(s) = self.s_bar {
            cfg.quadrature.s_bar = Some(s);
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.to_string_lossy().into_owned());
        }
        cfg.deterministic |= self.deterministic;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(report: &ExperimentReport) {
    println!("# {}", report.name);
    println!("{:>5} {:>10} {:>8} {:>4} {:>12} {:>12} {:>9} {:>9} {:>9} {:>9} {:>5}", "level", "h", "dofs", "n", "l2", "linf", "t_B", "t_K", "t_M", "t_solve", "cg");
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"));
    for r in &report.records {
        println!(
            "{:>5} {:>10.4e} {:>8} {:>4} {:>12} {:>12} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>5}",
            r.level, r.h, r.n_dofs, r.quad_n, opt(r.error_l2), opt(r.error_linf), r.time_b, r.time_k, r.time_m, r.time_solve, r.cg_iterations
        );
    }
    let s = &report.slopes;
    println!("slopes: l2 {}  linf {}  B {}  K {}  M {}", opt(s.l2), opt(s.linf), opt(s.time_b), opt(s.time_k), opt(s.time_m));
    if let Some((p, v)) = report.probe {
        println!("value at ({}, {}): {v:.8}", p.x, p.y);
    }
}

fn finish(cfg: &RunConfig, report: &ExperimentReport) -> Result<()> {
    print_report(report);
    if let Some(path) = save_report(cfg, report)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn mesh_gen(common: &Common) -> Result<()> {
    let cfg = common.config(RunConfig::disk())?;
    let level = common.level.unwrap_or(0);
    let mesh = cfg.geometry.mesh(level)?;
    let doc = serde_json::json!({
        "level": level,
        "h": mesh.h,
        "n_free": mesh.n_free,
        "vertices": mesh.vertices.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
        "triangles": mesh.triangles.iter().map(|t| t.v).collect::<Vec<_>>(),
        "interior": mesh.triangles.iter().map(|t| t.region == Region::Interior).collect::<Vec<_>>(),
    });
    println!("level {level}: {} vertices, {} triangles, {} free", mesh.n_vertices(), mesh.n_triangles(), mesh.n_free);
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
        let path = PathBuf::from(dir).join(format!("mesh-{level}.json"));
        std::fs::write(&path, serde_json::to_string(&doc)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::DiskConvergence(c) => {
            let cfg = c.config(RunConfig::disk())?;
            finish(&cfg, &run_disk_convergence(&cfg)?)?;
        }
        Command::Bump { common, eta } => {
            let mut probes = Vec::new();
            for sign in [1.0, -1.0] {
                let mut cfg = common.config(RunConfig::bump(sign * eta))?;
                if let OrderSpec::Bump(b) = &mut cfg.order {
                    *b = BumpOrder::new(b.s_star, sign * eta, b.width, b.center);
                }
                cfg.name = format!("bump-eta{:+}", sign * eta);
                let report = run_self_convergence(&cfg)?;
                finish(&cfg, &report)?;
                probes.extend(report.probe.map(|(_, v)| (sign * eta, v)));
            }
            if let [(e1, v1), (e2, v2)] = probes[..] {
                println!("center value: eta {e1:+} -> {v1:.6}, eta {e2:+} -> {v2:.6}");
            }
        }
        Command::SelfConvergence(c) => {
            let cfg = c.config(RunConfig::bump(0.2))?;
            finish(&cfg, &run_self_convergence(&cfg)?)?;
        }
        Command::BenchAssembly(c) => {
            let mut base = RunConfig::disk();
            base.name = "bench-assembly".into();
            base.levels = (3..=5).collect();
            base.quadrature.n = Some(6);
            let cfg = c.config(base)?;
            finish(&cfg, &run_bench_assembly(&cfg)?)?;
        }
        Command::Verify(c) => {
            let cfg = c.config(RunConfig::disk())?;
            let report = run_verification_suite(&cfg)?;
            for check in &report.checks {
                println!("{:<24} {:>12.4e}  tol {:>9.1e}  {}", check.name, check.value, check.tolerance, if check.passed { "PASS" } else { "FAIL" });
            }
            if let Some(dir) = &cfg.out {
                std::fs::create_dir_all(dir)?;
                let path = PathBuf::from(dir).join("verify.json");
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
                println!("wrote {}", path.display());
            }
            return Ok(report.passed());
        }
        Command::MeshGen(c) => mesh_gen(&c)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
