use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// `(√5 - 1) / 2`, the default rotation number.
pub const GOLDEN_ROTATION: f64 = 0.618_033_988_749_894_9;

/// A point of the base space Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasePoint {
    /// Angle on the circle, normalised to `[0, 1)`.
    Circle(f64),
    /// Point of the closed disk `B_δ(0) ⊂ ℝ²`.
    Disk([f64; 2]),
}

impl BasePoint {
    /// Circle coordinate, or `None` for a disk point.
    pub fn angle(&self) -> Option<f64> {
        match self {
            BasePoint::Circle(t) => Some(*t),
            BasePoint::Disk(_) => None,
        }
    }

    pub fn planar(&self) -> Option<[f64; 2]> {
        match self {
            BasePoint::Disk(p) => Some(*p),
            BasePoint::Circle(_) => None,
        }
    }
}

impl std::fmt::Display for BasePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasePoint::Circle(t) => write!(f, "ω = {t}"),
            BasePoint::Disk([x, y]) => write!(f, "ω = ({x}, {y})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Circle,
    Disk2d,
}

/// Invertible measure-preserving base map `σ` together with its invariant measure.
///
/// Two systems ship: the rotation `ω ↦ ω + α mod 1` on the circle with
/// Lebesgue measure, and a static disk `B_δ(0)` with normalised area measure.
/// The disk carries the identity map; experiments over it only look at the
/// image of the coefficient field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DrivingSystem {
    CircleRotation { alpha: f64 },
    StaticDisk { radius: f64 },
}

fn wrap_unit(t: f64) -> f64 {
    let w = t.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

impl DrivingSystem {
    pub fn golden_rotation() -> Self {
        DrivingSystem::CircleRotation { alpha: GOLDEN_ROTATION }
    }

    pub fn circle_rotation(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
            return Err(LabError::InvalidField(format!(
                "rotation number {alpha} must lie in (0, 1)"
            )));
        }
        Ok(DrivingSystem::CircleRotation { alpha })
    }

    pub fn static_disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(LabError::InvalidField(format!(
                "disk radius {radius} must lie in (0, 1)"
            )));
        }
        Ok(DrivingSystem::StaticDisk { radius })
    }

    pub fn kind(&self) -> DomainKind {
        match self {
            DrivingSystem::CircleRotation { .. } => DomainKind::Circle,
            DrivingSystem::StaticDisk { .. } => DomainKind::Disk2d,
        }
    }

    /// Both shipped measures have full support.
    pub fn full_support(&self) -> bool {
        true
    }

    pub fn contains(&self, p: &BasePoint) -> bool {
        match (self, p) {
            (DrivingSystem::CircleRotation { .. }, BasePoint::Circle(t)) => t.is_finite() && (0.0..1.0).contains(t),
            (DrivingSystem::StaticDisk { radius }, BasePoint::Disk([x, y])) => {
                x.is_finite() && y.is_finite() && x.hypot(*y) <= *radius
            }
            _ => false,
        }
    }

    fn check(&self, p: &BasePoint) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(LabError::DomainError(format!("{p} is not in the base space")))
        }
    }

    pub fn forward(&self, p: &BasePoint) -> Result<BasePoint> {
        self.check(p)?;
        Ok(match (self, p) {
            (DrivingSystem::CircleRotation { alpha }, BasePoint::Circle(t)) => BasePoint::Circle(wrap_unit(t + alpha)),
            _ => *p,
        })
    }

    pub fn backward(&self, p: &BasePoint) -> Result<BasePoint> {
        self.check(p)?;
        Ok(match (self, p) {
            (DrivingSystem::CircleRotation { alpha }, BasePoint::Circle(t)) => BasePoint::Circle(wrap_unit(t - alpha)),
            _ => *p,
        })
    }

    /// Deterministic quadrature nodes and weights for the invariant measure.
    ///
    /// Circle: midpoint rule with `nodes` points. Disk: equal-area rings times
    /// uniform angles, with at least `nodes` points in total.
    pub fn quadrature(&self, nodes: usize) -> Vec<(BasePoint, f64)> {
        let nodes = nodes.max(1);
        match self {
            DrivingSystem::CircleRotation { .. } => {
                let w = 1.0 / nodes as f64;
                (0..nodes)
                    .map(|j| (BasePoint::Circle((j as f64 + 0.5) * w), w))
                    .collect()
            }
            DrivingSystem::StaticDisk { radius } => {
                let rings = (nodes as f64).sqrt().ceil() as usize;
                let angles = nodes.div_ceil(rings);
                let w = 1.0 / (rings * angles) as f64;
                let mut out = Vec::with_capacity(rings * angles);
                for i in 0..rings {
                    let r = radius * ((i as f64 + 0.5) / rings as f64).sqrt();
                    for j in 0..angles {
                        let th = TAU * (j as f64 + 0.5) / angles as f64;
                        out.push((BasePoint::Disk([r * th.cos(), r * th.sin()]), w));
                    }
                }
                out
            }
        }
    }

    /// One i.i.d. draw from the invariant measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BasePoint {
        match self {
            DrivingSystem::CircleRotation { .. } => BasePoint::Circle(rng.random::<f64>()),
            DrivingSystem::StaticDisk { radius } => {
                let r = radius * rng.random::<f64>().sqrt();
                let th = TAU * rng.random::<f64>();
                BasePoint::Disk([r * th.cos(), r * th.sin()])
            }
        }
    }

    /// Scanning grid: `n` uniform angles on the circle, or the points of an
    /// `n × n` Cartesian grid over `[-δ, δ]²` that lie in the closed disk.
    pub fn grid(&self, n: usize) -> Vec<BasePoint> {
        let n = n.max(2);
        match self {
            DrivingSystem::CircleRotation { .. } => (0..n).map(|j| BasePoint::Circle(j as f64 / n as f64)).collect(),
            DrivingSystem::StaticDisk { radius } => {
                let h = 2.0 * radius / (n - 1) as f64;
                let mut out = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        let x = -radius + h * i as f64;
                        let y = -radius + h * j as f64;
                        if x.hypot(y) <= *radius {
                            out.push(BasePoint::Disk([x, y]));
                        }
                    }
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rotation_is_invertible() {
        let sys = DrivingSystem::golden_rotation();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = sys.sample(&mut rng);
            let back = sys.backward(&sys.forward(&p).unwrap()).unwrap();
            let (a, b) = (p.angle().unwrap(), back.angle().unwrap());
            let d = (a - b).abs();
            assert!(d.min(1.0 - d) < 1e-12);
        }
        assert!(sys.contains(&sys.backward(&BasePoint::Circle(0.0)).unwrap()));
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        for sys in [
            DrivingSystem::golden_rotation(),
            DrivingSystem::static_disk(0.3).unwrap(),
        ] {
            for n in [1, 7, 100, 1000] {
                let s: f64 = sys.quadrature(n).iter().map(|(_, w)| w).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disk_quadrature_integrates_radius_squared() {
        // ∫ |ω|² dP over the disk of radius δ with normalised area measure is δ²/2
        let sys = DrivingSystem::static_disk(0.3).unwrap();
        let v: f64 = sys
            .quadrature(10_000)
            .iter()
            .map(|(p, w)| {
                let [x, y] = p.planar().unwrap();
                w * (x * x + y * y)
            })
            .sum();
        assert!((v - 0.045).abs() < 1e-5);
    }

    #[test]
    fn domain_checks() {
        let sys = DrivingSystem::golden_rotation();
        assert!(sys.forward(&BasePoint::Circle(1.0)).is_err());
        assert!(sys.forward(&BasePoint::Disk([0.0, 0.0])).is_err());
        let disk = DrivingSystem::static_disk(0.3).unwrap();
        assert!(disk.forward(&BasePoint::Disk([0.3, 0.1])).is_err());
        assert_eq!(
            disk.forward(&BasePoint::Disk([0.1, 0.1])).unwrap(),
            BasePoint::Disk([0.1, 0.1])
        );
        assert!(DrivingSystem::circle_rotation(1.5).is_err());
        assert!(DrivingSystem::static_disk(1.0).is_err());
    }
}
