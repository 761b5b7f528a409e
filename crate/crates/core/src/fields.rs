//! Variable fractional order `s(x)`, diffusivity `kappa(x)` and the
//! interaction kernel built from them.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::mesh::Mesh;

pub type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;

/// Smooth compactly supported bump added to a constant order:
/// `s(x) = s_star + eta * b(2 (x1 - c1) / width) * b(2 (x2 - c2) / width)`
/// with `b(r) = exp(-1 / (1 - r^2))` for `|r| < 1` and zero otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpOrder {
    pub s_star: f64,
    pub eta: f64,
    pub width: f64,
    pub center: [f64; 2],
}

impl BumpOrder {
    pub fn new(s_star: f64, eta: f64, width: f64, center: [f64; 2]) -> Self {
        Self { s_star, eta, width, center }
    }

    pub fn eval(&self, p: Point2) -> f64 {
        let bx = bump1(2.0 * (p.x - self.center[0]) / self.width);
        if bx == 0.0 {
            return self.s_star;
        }
        self.s_star + self.eta * bx * bump1(2.0 * (p.y - self.center[1]) / self.width)
    }

    /// The constant value of the field on the convex hull of `pts`, if the
    /// hull avoids the support of the bump.
    pub fn constant_on(&self, pts: &[Point2]) -> Option<f64> {
        if self.eta == 0.0 {
            return Some(self.s_star);
        }
        let half = 0.5 * self.width;
        let [cx, cy] = self.center;
        let outside = pts.iter().all(|p| p.x >= cx + half)
            || pts.iter().all(|p| p.x <= cx - half)
            || pts.iter().all(|p| p.y >= cy + half)
            || pts.iter().all(|p| p.y <= cy - half);
        outside.then_some(self.s_star)
    }

    /// Range of values the field attains.
    pub fn bounds(&self) -> (f64, f64) {
        let peak = self.s_star + self.eta * (-2.0f64).exp();
        (self.s_star.min(peak), self.s_star.max(peak))
    }
}

fn bump1(r: f64) -> f64 {
    if r.abs() < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// Fractional order field with values in `(0, 1)`.
#[derive(Clone)]
pub enum OrderField {
    Constant(f64),
    Bump(BumpOrder),
    /// User-supplied field with declared bounds, checked at evaluation points.
    Custom { f: ScalarFn, lower: f64, upper: f64 },
}

impl fmt::Debug for OrderField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(s) => write!(f, "Constant({s})"),
            Self::Bump(b) => write!(f, "Bump({b:?})"),
            Self::Custom { lower, upper, .. } => write!(f, "Custom([{lower}, {upper}])"),
        }
    }
}

impl OrderField {
    pub fn constant(s: f64) -> Result<Self> {
        let f = Self::Constant(s);
        f.validate()?;
        Ok(f)
    }

    pub fn bump(params: BumpOrder) -> Result<Self> {
        if !(params.width > 0.0) {
            return Err(Error::InvalidParameter("bump width must be positive".into()));
        }
        let f = Self::Bump(params);
        f.validate()?;
        Ok(f)
    }

    pub fn custom(f: ScalarFn, lower: f64, upper: f64) -> Result<Self> {
        let f = Self::Custom { f, lower, upper };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "order bounds [{lo}, {hi}] must lie inside (0, 1)"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, p: Point2) -> f64 {
        match self {
            Self::Constant(s) => *s,
            Self::Bump(b) => b.eval(p),
            Self::Custom { f, .. } => f(p),
        }
    }

    /// Evaluates and checks the value against the declared bounds.
    #[inline]
    pub fn eval_checked(&self, p: Point2) -> Result<f64> {
        let v = self.eval(p);
        if let Self::Custom { lower, upper, .. } = self {
            if !(v >= *lower && v <= *upper) {
                return Err(Error::OrderOutOfBounds { value: v, x: p.x, y: p.y, lo: *lower, hi: *upper });
            }
        }
        Ok(v)
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Self::Constant(s) => (*s, *s),
            Self::Bump(b) => b.bounds(),
            Self::Custom { lower, upper, .. } => (*lower, *upper),
        }
    }

    /// `Some(s)` when the field is the same everywhere; a bump of zero
    /// amplitude counts as constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(s) => Some(*s),
            Self::Bump(b) if b.eta == 0.0 => Some(b.s_star),
            _ => None,
        }
    }

    /// `Some(s)` when the field is known to be constant on the convex hull
    /// of `pts`.
    pub fn constant_on(&self, pts: &[Point2]) -> Option<f64> {
        match self {
            Self::Constant(s) => Some(*s),
            Self::Bump(b) => b.constant_on(pts),
            Self::Custom { .. } => None,
        }
    }
}

/// Diffusivity, bounded below by a positive constant.
#[derive(Clone)]
pub enum Diffusivity {
    Constant(f64),
    Custom { f: ScalarFn, lower: f64 },
}

impl fmt::Debug for Diffusivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(k) => write!(f, "Constant({k})"),
            Self::Custom { lower, .. } => write!(f, "Custom(>= {lower})"),
        }
    }
}

impl Diffusivity {
    pub fn constant(k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("diffusivity must be positive, got {k}")));
        }
        Ok(Self::Constant(k))
    }

    pub fn custom(f: ScalarFn, lower: f64) -> Result<Self> {
        if !(lower > 0.0) {
            return Err(Error::InvalidParameter("diffusivity lower bound must be positive".into()));
        }
        Ok(Self::Custom { f, lower })
    }

    #[inline]
    pub fn eval(&self, p: Point2) -> f64 {
        match self {
            Self::Constant(k) => *k,
            Self::Custom { f, .. } => f(p),
        }
    }

    /// Evaluates and checks the value against the declared lower bound.
    #[inline]
    pub fn eval_checked(&self, p: Point2) -> Result<f64> {
        let v = self.eval(p);
        if let Self::Custom { lower, .. } = self {
            if !(v >= *lower) {
                return Err(Error::InvalidParameter(format!(
                    "diffusivity {v} at ({}, {}) is below its bound {lower}",
                    p.x, p.y
                )));
            }
        }
        Ok(v)
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(k) => Some(*k),
            _ => None,
        }
    }
}

/// Interaction kernel `gamma(x, y) = a(x, y) |x - y|^(-2 - s(x) - s(y))`
/// with `a(x, y) = sqrt(kappa(x) kappa(y))`.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub order: OrderField,
    pub diffusivity: Diffusivity,
}

impl Kernel {
    pub fn new(order: OrderField, diffusivity: Diffusivity) -> Self {
        Self { order, diffusivity }
    }

    /// Constant order `s` with unit diffusivity.
    pub fn constant(s: f64) -> Result<Self> {
        Ok(Self::new(OrderField::constant(s)?, Diffusivity::constant(1.0)?))
    }

    /// `Some((s, kappa))` when both fields are constant.
    pub fn as_constant(&self) -> Option<(f64, f64)> {
        Some((self.order.as_constant()?, self.diffusivity.as_constant()?))
    }

    /// Upper bound of the order, used to pick quadrature substitutions.
    pub fn s_max(&self) -> f64 {
        self.order.bounds().1
    }

    #[inline]
    pub fn a(&self, x: Point2, y: Point2) -> f64 {
        match self.diffusivity {
            Diffusivity::Constant(k) => k,
            _ => (self.diffusivity.eval(x) * self.diffusivity.eval(y)).sqrt(),
        }
    }

    /// Kernel value; symmetric in its arguments bit for bit.
    #[inline]
    pub fn gamma(&self, x: Point2, y: Point2) -> f64 {
        let sigma = self.order.eval(x) + self.order.eval(y);
        self.a(x, y) * gamma_power((x - y).norm2(), sigma)
    }

    /// Kernel value with the squared distance supplied by the caller, for
    /// separations too small to recover from the point coordinates.
    #[inline]
    pub fn gamma_r2(&self, x: Point2, y: Point2, r2: f64) -> f64 {
        let sigma = self.order.eval(x) + self.order.eval(y);
        self.a(x, y) * gamma_power(r2, sigma)
    }

    /// Kernel that vanishes for points in touching elements `t` and `t2`.
    pub fn gamma_t(&self, mesh: &Mesh, x: Point2, t: usize, y: Point2, t2: usize) -> f64 {
        if mesh.touching(t, t2) {
            0.0
        } else {
            self.gamma(x, y)
        }
    }
}

/// `r2^(-(2 + sigma) / 2)` where `r2` is a squared distance.
#[inline]
pub fn gamma_power(r2: f64, sigma: f64) -> f64 {
    (-(1.0 + 0.5 * sigma) * r2.ln()).exp()
}

/// Serializable description of an order field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OrderSpec {
    Constant { s: f64 },
    Bump(BumpOrder),
}

impl OrderSpec {
    pub fn build(&self) -> Result<OrderField> {
        match self {
            Self::Constant { s } => OrderField::constant(*s),
            Self::Bump(b) => OrderField::bump(*b),
        }
    }

    /// Looks up a named field: `"constant"` (uses `s`) or `"bump"` (uses
    /// `s` as the background order and `eta` as the amplitude, centred at
    /// `(-0.4, 0.4)` with width 1).
    pub fn from_name(name: &str, s: f64, eta: f64) -> Result<Self> {
        match name {
            "constant" => Ok(Self::Constant { s }),
            "bump" => Ok(Self::Bump(BumpOrder::new(s, eta, 1.0, [-0.4, 0.4]))),
            other => Err(Error::InvalidParameter(format!("unknown order field {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        let b = BumpOrder::new(0.7, 0.2, 1.0, [-0.4, 0.4]);
        assert!((b.eval(Point2::new(-0.4, 0.4)) - (0.7 + 0.2 * (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(b.eval(Point2::new(0.5, 0.5)), 0.7);
        assert_eq!(b.eval(Point2::new(0.1, 0.4)), 0.7);
        let (lo, hi) = b.bounds();
        assert_eq!(lo, 0.7);
        assert!((hi - 0.7270670566473225).abs() < 1e-12);
    }

    #[test]
    fn invalid_orders_are_rejected() {
        assert!(OrderField::constant(1.0).is_err());
        assert!(OrderField::constant(0.0).is_err());
        assert!(OrderField::bump(BumpOrder::new(0.95, 0.5, 1.0, [0.0, 0.0])).is_err());
        assert!(Diffusivity::constant(0.0).is_err());
    }

    #[test]
    fn custom_order_is_checked() {
        let f = OrderField::custom(Arc::new(|p: Point2| 0.5 + p.x), 0.1, 0.9).unwrap();
        assert!(f.eval_checked(Point2::new(0.2, 0.0)).is_ok());
        assert!(matches!(
            f.eval_checked(Point2::new(0.6, 0.0)),
            Err(Error::OrderOutOfBounds { .. })
        ));
    }

    #[test]
    fn kernel_matches_closed_form() {
        let k = Kernel::constant(0.5).unwrap();
        let g = k.gamma(Point2::new(0.0, 0.0), Point2::new(0.3, 0.4));
        assert!((g - 0.5f64.powf(-3.0)).abs() < 1e-12);
    }

    #[test]
    fn order_spec_registry() {
        assert!(OrderSpec::from_name("bump", 0.7, -0.2).unwrap().build().is_ok());
        assert!(OrderSpec::from_name("nope", 0.7, 0.0).is_err());
        let json = serde_json::to_string(&OrderSpec::Constant { s: 0.3 }).unwrap();
        assert_eq!(json, r#"{"kind":"constant","s":0.3}"#);
    }
}
