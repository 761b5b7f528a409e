use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Kernel, OrderSpec};
use crate::geometry::Point2;
use crate::mesh::{barycentric, Mesh};
use crate::solver::{
    assemble_operator, cg_solve, disk_load_scale, exact_disk_solution, l2_diff, l2_error, linf_nodal, load_vector, prolong, AssemblyTimings,
};

use super::config::{GeometrySpec, RunConfig};

/// One row of a convergence or timing table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub quad_n: usize,
    pub error_l2: Option<f64>,
    pub error_linf: Option<f64>,
    pub time_b: f64,
    pub time_k: f64,
    pub time_m: f64,
    pub time_solve: f64,
    pub cg_iterations: usize,
}

impl ConvergenceRecord {
    fn new(level: usize, mesh: &Mesh, quad_n: usize, t: &AssemblyTimings) -> Self {
        Self {
            level,
            h: mesh.h,
            n_dofs: mesh.n_free,
            quad_n,
            error_l2: None,
            error_linf: None,
            time_b: t.b.as_secs_f64(),
            time_k: t.k.as_secs_f64(),
            time_m: t.m.as_secs_f64(),
            time_solve: 0.0,
            cg_iterations: 0,
        }
    }
}

/// Least-squares slopes of the recorded quantities.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Slopes {
    /// `log error_l2` against `log h`.
    pub l2: Option<f64>,
    pub linf: Option<f64>,
    /// `log time` against `log N` for `B`, `K` and `M`.
    pub time_b: Option<f64>,
    pub time_k: Option<f64>,
    pub time_m: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub records: Vec<ConvergenceRecord>,
    pub slopes: Slopes,
    /// Value of the finest solution at a probe point, when one applies.
    pub probe: Option<(Point2, f64)>,
}

impl ExperimentReport {
    fn new(name: &str, records: Vec<ConvergenceRecord>) -> Self {
        let slopes = fit_slopes(&records);
        Self { name: name.to_string(), records, slopes, probe: None }
    }

    /// Largest ratio of consecutive assembly times for `B`, `K` and `M`.
    pub fn max_time_ratios(&self) -> [f64; 3] {
        let mut out = [0.0f64; 3];
        for w in self.records.windows(2) {
            let pairs = [(w[0].time_b, w[1].time_b), (w[0].time_k, w[1].time_k), (w[0].time_m, w[1].time_m)];
            for (o, (a, b)) in out.iter_mut().zip(pairs) {
                if a > 0.0 {
                    *o = o.max(b / a);
                }
            }
        }
        out
    }
}

/// Unweighted least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Slopes over all records of level 2 and above.
pub fn fit_slopes(records: &[ConvergenceRecord]) -> Slopes {
    let rs: Vec<&ConvergenceRecord> = records.iter().filter(|r| r.level >= 2).collect();
    let by_h = |f: fn(&ConvergenceRecord) -> Option<f64>| {
        let pts: Vec<(f64, f64)> = rs.iter().filter_map(|r| f(r).map(|e| (r.h, e))).collect();
        loglog_slope(&pts)
    };
    let by_n = |f: fn(&ConvergenceRecord) -> f64| {
        let pts: Vec<(f64, f64)> = rs.iter().map(|r| (r.n_dofs as f64, f(r))).collect();
        loglog_slope(&pts)
    };
    Slopes {
        l2: by_h(|r| r.error_l2),
        linf: by_h(|r| r.error_linf),
        time_b: by_n(|r| r.time_b),
        time_k: by_n(|r| r.time_k),
        time_m: by_n(|r| r.time_m),
    }
}

/// Writes the records as CSV; with `deterministic` all timings are zero.
pub fn write_csv<W: Write>(out: W, records: &[ConvergenceRecord], deterministic: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        let mut r = r.clone();
        if deterministic {
            r.time_b = 0.0;
            r.time_k = 0.0;
            r.time_m = 0.0;
            r.time_solve = 0.0;
        }
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<dir>/<name>.csv` when the configuration names an output directory.
pub fn save_report(cfg: &RunConfig, report: &ExperimentReport) -> Result<Option<std::path::PathBuf>> {
    let Some(dir) = &cfg.out else { return Ok(None) };
    std::fs::create_dir_all(dir)?;
    let path = Path::new(dir).join(format!("{}.csv", report.name));
    write_csv(std::fs::File::create(&path)?, &report.records, cfg.deterministic)?;
    Ok(Some(path))
}

/// Mesh, solution and record of one level.
pub struct LevelSolution {
    pub mesh: Mesh,
    pub u: Vec<f64>,
    pub record: ConvergenceRecord,
}

pub fn solve_level(cfg: &RunConfig, kernel: &Kernel, level: usize) -> Result<LevelSolution> {
    let mesh = cfg.geometry.mesh(level)?;
    let opts = cfg.assembly_options(kernel, &mesh)?;
    let (op, timings) = assemble_operator(&mesh, kernel, &opts)?;
    let scale = if cfg.normalized_load {
        let (s, _) = kernel.as_constant().ok_or_else(|| Error::InvalidParameter("normalized load needs a constant order".into()))?;
        disk_load_scale(s)
    } else {
        1.0
    };
    let f = cfg.load * scale;
    let rhs = load_vector(&mesh, |_| f, &opts.rule);
    let t = Instant::now();
    let (u, report) = cg_solve(&op, &rhs, &cfg.solver)?;
    let solve = t.elapsed();
    if !report.converged {
        return Err(Error::NotConverged { iterations: report.iterations, residual: report.final_residual() });
    }
    let mut record = ConvergenceRecord::new(level, &mesh, opts.singular.n, &timings);
    record.time_solve = solve.as_secs_f64();
    record.cg_iterations = report.iterations;
    Ok(LevelSolution { mesh, u, record })
}

/// Solves the disk problem on every level and compares with the exact solution.
pub fn run_disk_convergence(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    let s = match (&cfg.order, cfg.geometry) {
        (OrderSpec::Constant { s }, GeometrySpec::Disk { interface, .. }) if interface == 1.0 => *s,
        _ => return Err(Error::InvalidParameter("disk convergence needs a constant order on the unit disk".into())),
    };
    let exact = exact_disk_solution(s);
    let rule = cfg.error_rule()?;
    let mut records = Vec::new();
    for &level in &cfg.levels {
        let sol = solve_level(cfg, &kernel, level)?;
        let mut r = sol.record;
        r.error_l2 = Some(l2_error(&sol.mesh, &sol.u, &exact, &rule)?);
        r.error_linf = Some(linf_nodal(&sol.mesh, &sol.u, &exact)?);
        records.push(r);
    }
    Ok(ExperimentReport::new(&cfg.name, records))
}

/// Solves on consecutive levels and records `|U_{j+1} - U_j|` on level `j`.
pub fn run_self_convergence(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.levels.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::InvalidParameter("self-convergence needs consecutive levels".into()));
    }
    let kernel = cfg.kernel()?;
    let mut records: Vec<ConvergenceRecord> = Vec::new();
    let mut prev: Option<LevelSolution> = None;
    for &level in &cfg.levels {
        let sol = solve_level(cfg, &kernel, level)?;
        if let Some(mut c) = prev.take() {
            c.record.error_l2 = Some(l2_diff(&sol.mesh, &sol.u, &c.mesh, &c.u)?);
            let coarse = prolong(&sol.mesh, &c.mesh, &c.u)?;
            c.record.error_linf = Some(sol.u.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            records.push(c.record);
        }
        prev = Some(sol);
    }
    let last = prev.expect("at least one level");
    let probe = match &cfg.order {
        OrderSpec::Bump(b) => {
            let p = Point2::new(b.center[0], b.center[1]);
            Some((p, fe_value(&last.mesh, &last.u, p)?))
        }
        OrderSpec::Constant { .. } => None,
    };
    records.push(last.record);
    let mut report = ExperimentReport::new(&cfg.name, records);
    report.probe = probe;
    Ok(report)
}

/// Assembly timings on every level without solving.
pub fn run_bench_assembly(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    let mut records = Vec::new();
    for &level in &cfg.levels {
        let mesh = cfg.geometry.mesh(level)?;
        let opts = cfg.assembly_options(&kernel, &mesh)?;
        let (_, timings) = assemble_operator(&mesh, &kernel, &opts)?;
        records.push(ConvergenceRecord::new(level, &mesh, opts.singular.n, &timings));
    }
    Ok(ExperimentReport::new(&cfg.name, records))
}

/// Value at `p` of the finite element function with free values `u`.
pub fn fe_value(mesh: &Mesh, u: &[f64], p: Point2) -> Result<f64> {
    for t in 0..mesh.n_triangles() {
        let b = barycentric(&mesh.element_vertices(t), p);
        if b.iter().all(|&l| l >= -1e-12) {
            return Ok(mesh.triangles[t]
                .v
                .iter()
                .zip(b)
                .map(|(&v, l)| if mesh.is_free(v) { l * u[v] } else { 0.0 })
                .sum());
        }
    }
    Err(Error::InvalidParameter(format!("point ({}, {}) lies outside the mesh", p.x, p.y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(level: usize, h: f64, n: usize, e: f64, t: f64) -> ConvergenceRecord {
        ConvergenceRecord {
            level,
            h,
            n_dofs: n,
            quad_n: 4,
            error_l2: Some(e),
            error_linf: None,
            time_b: t,
            time_k: t,
            time_m: t,
            time_solve: t,
            cg_iterations: 3,
        }
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|k| (0.5f64.powi(k), 3.0 * 0.5f64.powi(k).powf(1.3))).collect();
        assert!((loglog_slope(&pts).unwrap() - 1.3).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_none());
    }

    #[test]
    fn slopes_skip_levels_below_two() {
        let rs: Vec<ConvergenceRecord> = (0..5)
            .map(|l| {
                let h = 0.5f64.powi(l as i32);
                let e = if l < 2 { 100.0 } else { h };
                record(l, h, 4usize.pow(l as u32), e, 4f64.powi(l as i32))
            })
            .collect();
        let s = fit_slopes(&rs);
        assert!((s.l2.unwrap() - 1.0).abs() < 1e-12);
        assert!((s.time_k.unwrap() - 1.0).abs() < 1e-12);
        assert!(s.linf.is_none());
    }

    #[test]
    fn deterministic_csv_has_zero_times() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[record(2, 0.25, 49, 0.1, 1.5)], true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "level,h,n_dofs,quad_n,error_l2,error_linf,time_b,time_k,time_m,time_solve,cg_iterations"
        );
        assert_eq!(lines.next().unwrap(), "2,0.25,49,4,0.1,,0.0,0.0,0.0,0.0,3");
    }

    #[test]
    fn fe_value_interpolates_vertices() {
        let mesh = crate::mesh::square_mesh(2.0, 1.0, 2).unwrap();
        let u: Vec<f64> = (0..mesh.n_free).map(|i| mesh.vertices[i].x + 2.0 * mesh.vertices[i].y).collect();
        let p = Point2::new(-0.4, 0.3);
        assert!((fe_value(&mesh, &u, p).unwrap() - 0.2).abs() < 1e-14);
        assert!(fe_value(&mesh, &u, Point2::new(5.0, 0.0)).is_err());
    }
}
