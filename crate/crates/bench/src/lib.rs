//! Problem fixtures shared by the benchmarks.

use fracfem::density::{CloudKernel, QuadCloud};
use fracfem::harness::RunConfig;
use fracfem::solver::AssemblyOptions;
use fracfem::{Kernel, Mesh, Result};

/// Mesh, kernel and assembly options of one benchmark case.
pub struct Fixture {
    pub mesh: Mesh,
    pub kernel: Kernel,
    pub opts: AssemblyOptions,
}

impl Fixture {
    /// Disk problem at `level` with a fixed singular rule of order `n`.
    pub fn disk(level: usize, n: usize) -> Result<Self> {
        let mut cfg = RunConfig::disk();
        cfg.quadrature.n = Some(n);
        Self::from_config(&cfg, level)
    }

    /// Variable-order bump on the square.
    pub fn bump(level: usize, eta: f64) -> Result<Self> {
        Self::from_config(&RunConfig::bump(eta), level)
    }

    pub fn from_config(cfg: &RunConfig, level: usize) -> Result<Self> {
        let kernel = cfg.kernel()?;
        let mesh = cfg.geometry.mesh(level)?;
        let opts = cfg.assembly_options(&kernel, &mesh)?;
        Ok(Self { mesh, kernel, opts })
    }

    pub fn cloud(&self) -> Result<(QuadCloud, CloudKernel)> {
        let cloud = QuadCloud::gather(&self.mesh, self.opts.rule.clone());
        let ck = CloudKernel::new(&cloud, &self.kernel)?;
        Ok((cloud, ck))
    }
}
