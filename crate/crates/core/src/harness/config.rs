use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::CollocationParams;
use crate::error::{Error, Result};
use crate::farfield::{H2Params, LeafQuadrature};
use crate::fields::{BumpOrder, Diffusivity, Kernel, OrderSpec};
use crate::mesh::{disk_mesh, square_mesh, Mesh};
use crate::nearfield::{InterfacePairs, SingularRule, Substitution};
use crate::quadrature::TriangleRule;
use crate::solver::{AssemblyOptions, CgParams, ExteriorDisk};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeometrySpec {
    /// Disk of radius `outer` with the interior region of radius `interface`.
    Disk { interface: f64, outer: f64 },
    /// `(-outer, outer)^2` with the interior region `(-inner, inner)^2`.
    Square { outer: f64, inner: f64 },
}

impl GeometrySpec {
    pub fn mesh(&self, level: usize) -> Result<Mesh> {
        match *self {
            Self::Disk { interface, outer } => disk_mesh(interface, outer, level),
            Self::Square { outer, inner } => square_mesh(outer, inner, level),
        }
    }
}

/// Quadrature knobs; unset values follow the defaults described on each field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss points per direction for touching pairs; the a-priori policy
    /// [`SingularRule::order_for`] when unset.
    pub n: Option<usize>,
    /// Order used in the singular substitutions; the largest order of the field when unset.
    pub s_bar: Option<f64>,
    /// Matched substitution for constant order, graded with `g = 3` otherwise.
    pub substitution: Option<Substitution>,
    /// Two panels for constant order, one otherwise.
    pub regular_panels: Option<usize>,
    /// Element rule (`"3"`, `"7"`, `"gauss-6"`, ...); `"3"` when unset.
    pub element_rule: Option<String>,
    /// Rule of the `L^2` error; `"gauss-8"` when unset.
    pub error_rule: Option<String>,
    /// Separate rule for the far-field leaf bases; the element rule when unset.
    pub leaf_rule: Option<String>,
}

/// Full description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub geometry: GeometrySpec,
    pub order: OrderSpec,
    /// Constant diffusivity.
    pub kappa: f64,
    /// Constant load `f`.
    pub load: f64,
    /// Multiply the load by the normalisation of the fractional Laplacian
    /// (disk test against the exact solution).
    pub normalized_load: bool,
    pub levels: Vec<usize>,
    pub quadrature: QuadratureConfig,
    pub h2: H2Params,
    pub collocation: CollocationParams,
    pub solver: CgParams,
    pub literal_mass: bool,
    pub interface_pairs: InterfacePairs,
    /// Analytic exterior density beyond the mesh (disk only).
    pub exterior: Option<ExteriorDisk>,
    /// Zero all timings in the CSV output so reruns are byte-identical.
    pub deterministic: bool,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::disk()
    }
}

impl RunConfig {
    /// Unit-disk problem with `s = 0.7`, `f = 1` and the analytic exterior beyond radius 1.1.
    pub fn disk() -> Self {
        Self {
            name: "disk-convergence".into(),
            geometry: GeometrySpec::Disk { interface: 1.0, outer: 1.1 },
            order: OrderSpec::Constant { s: 0.7 },
            kappa: 1.0,
            load: 1.0,
            normalized_load: true,
            levels: (0..=5).collect(),
            quadrature: QuadratureConfig { s_bar: Some(0.9), ..Default::default() },
            h2: H2Params::default(),
            collocation: CollocationParams::default(),
            solver: CgParams::default(),
            literal_mass: false,
            interface_pairs: InterfacePairs::BothOrders,
            exterior: Some(ExteriorDisk { radius: 1.1, n_theta: 9 }),
            deterministic: false,
            out: None,
        }
    }

    /// Variable-order bump on the square with `f = 20`.
    pub fn bump(eta: f64) -> Self {
        Self {
            name: "bump".into(),
            geometry: GeometrySpec::Square { outer: 2.0, inner: 1.0 },
            order: OrderSpec::Bump(BumpOrder::new(0.7, eta, 1.0, [-0.4, 0.4])),
            load: 20.0,
            normalized_load: false,
            levels: (0..=5).collect(),
            quadrature: QuadratureConfig::default(),
            exterior: None,
            ..Self::disk()
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Ok(Kernel::new(self.order.build()?, Diffusivity::constant(self.kappa)?))
    }

    /// Checks the configuration against the available fields and geometries.
    pub fn validate(&self) -> Result<()> {
        let kernel = self.kernel()?;
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter("no refinement levels given".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("levels must be strictly increasing".into()));
        }
        if let Some(d) = self.exterior {
            if kernel.as_constant().is_none() {
                return Err(Error::InvalidParameter("the analytic exterior needs a constant order".into()));
            }
            match self.geometry {
                GeometrySpec::Disk { outer, .. } if (outer - d.radius).abs() <= 1e-12 * outer => {}
                _ => return Err(Error::InvalidParameter("the analytic exterior must start at the disk boundary".into())),
            }
        }
        if let Some(s) = self.quadrature.s_bar {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::InvalidParameter(format!("s_bar = {s} outside (0, 1)")));
            }
        }
        if !(self.solver.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("solver tolerance must be positive".into()));
        }
        self.element_rule()?;
        self.error_rule()?;
        if let Some(r) = &self.quadrature.leaf_rule {
            TriangleRule::parse(r)?;
        }
        Ok(())
    }

    pub fn element_rule(&self) -> Result<TriangleRule> {
        TriangleRule::parse(self.quadrature.element_rule.as_deref().unwrap_or("3"))
    }

    pub fn error_rule(&self) -> Result<TriangleRule> {
        TriangleRule::parse(self.quadrature.error_rule.as_deref().unwrap_or("gauss-8"))
    }

    /// Singular rule for a mesh of size `h`.
    pub fn singular_rule(&self, kernel: &Kernel, h: f64) -> SingularRule {
        let q = &self.quadrature;
        let s_bar = q.s_bar.unwrap_or_else(|| kernel.s_max());
        let constant = kernel.order.as_constant().is_some();
        let n = q.n.unwrap_or_else(|| SingularRule::order_for(h, s_bar));
        let substitution = q.substitution.unwrap_or(if constant { Substitution::Matched } else { Substitution::Graded(3) });
        let panels = q.regular_panels.unwrap_or(if constant { 2 } else { 1 });
        SingularRule { n, s_bar, substitution, regular_panels: panels.max(1) }
    }

    pub fn assembly_options(&self, kernel: &Kernel, mesh: &Mesh) -> Result<AssemblyOptions> {
        let leaf = match &self.quadrature.leaf_rule {
            Some(r) => LeafQuadrature::Rule(TriangleRule::parse(r)?),
            None => LeafQuadrature::Cloud,
        };
        Ok(AssemblyOptions {
            singular: self.singular_rule(kernel, mesh.h),
            rule: self.element_rule()?,
            h2: self.h2,
            collocation: self.collocation,
            leaf,
            interface: self.interface_pairs,
            literal_mass: self.literal_mass,
            exterior: self.exterior,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::bump(-0.2);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"levels": [1, 2], "quadrature": {"n": 5}}"#).unwrap();
        assert_eq!(cfg.levels, vec![1, 2]);
        assert_eq!(cfg.quadrature.n, Some(5));
        assert_eq!(cfg.h2.p, 10);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = RunConfig::disk();
        cfg.levels = vec![2, 1];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::bump(0.2);
        cfg.exterior = Some(ExteriorDisk { radius: 1.1, n_theta: 9 });
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"levelz": [1]}"#).is_err());
    }

    #[test]
    fn variable_order_defaults_to_graded_rule() {
        let cfg = RunConfig::bump(0.2);
        let k = cfg.kernel().unwrap();
        let r = cfg.singular_rule(&k, 0.1);
        assert_eq!(r.substitution, Substitution::Graded(3));
        assert_eq!(r.regular_panels, 1);
        let disk = RunConfig::disk();
        let r = disk.singular_rule(&disk.kernel().unwrap(), 0.1);
        assert_eq!((r.substitution, r.s_bar), (Substitution::Matched, 0.9));
    }
}
