//! Minkowski four-vectors under the (-,+,+,+) signature, hyperplanes, and
//! Lorentz boosts along the x3 axis.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for unit-normal and lightlike checks.
pub const METRIC_TOL: f64 = 1e-12;

/// Contravariant four-vector `(x0 = t, x1, x2, x3)` in natural units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const fn new(t: f64, x1: f64, x2: f64, x3: f64) -> Self {
        FourVector([t, x1, x2, x3])
    }

    pub fn from_time_space(t: f64, space: [f64; 3]) -> Self {
        FourVector([t, space[0], space[1], space[2]])
    }

    pub fn time(&self) -> f64 {
        self.0[0]
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    /// Sum of squared components, used only to scale tolerances.
    pub fn euclidean_norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, mu: usize) -> &f64 {
        &self.0[mu]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, rhs: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|mu| self.0[mu] + rhs.0[mu]))
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, rhs: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|mu| self.0[mu] - rhs.0[mu]))
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector(self.0.map(|c| -c))
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, s: f64) -> FourVector {
        FourVector(self.0.map(|c| c * s))
    }
}

impl Mul<FourVector> for f64 {
    type Output = FourVector;
    fn mul(self, v: FourVector) -> FourVector {
        v * self
    }
}

/// Metric contraction `a_mu b^mu = -a0 b0 + a1 b1 + a2 b2 + a3 b3`.
pub fn contract(a: &FourVector, b: &FourVector) -> f64 {
    -a.0[0] * b.0[0] + a.0[1] * b.0[1] + a.0[2] * b.0[2] + a.0[3] * b.0[3]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interval {
    Timelike,
    Lightlike,
    Spacelike,
}

/// Classifies by the sign of `contract(x, x)`; values within
/// `1e-12 * max(1, |x|^2)` of zero count as lightlike.
pub fn classify_interval(x: &FourVector) -> Interval {
    let s = contract(x, x);
    let tol = METRIC_TOL * x.euclidean_norm_sq().max(1.0);
    if s.abs() <= tol {
        Interval::Lightlike
    } else if s < 0.0 {
        Interval::Timelike
    } else {
        Interval::Spacelike
    }
}

/// Which kind of 3-surface a hyperplane is. A spacelike plane (fixed time in
/// its rest frame) has a timelike normal; a timelike plane (fixed x3) has a
/// spacelike normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneKind {
    Spacelike,
    Timelike,
}

impl PlaneKind {
    pub fn name(self) -> &'static str {
        match self {
            PlaneKind::Spacelike => "spacelike",
            PlaneKind::Timelike => "timelike",
        }
    }
}

impl fmt::Display for PlaneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A flat hyperplane `{x : contract(n, x) / contract(n, n) = offset}`.
///
/// With this normalization the offset is `a` for the plane `t = a` with
/// `n = (1,0,0,0)` and `b` for `x3 = b` with `n = (0,0,0,1)`, and it is
/// unchanged by boosts because both numerator and denominator are invariant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    normal: FourVector,
    offset: f64,
    kind: PlaneKind,
}

impl Hyperplane {
    pub fn new(normal: FourVector, offset: f64) -> Result<Self> {
        let nn = contract(&normal, &normal);
        if (nn.abs() - 1.0).abs() > METRIC_TOL {
            if nn.abs() <= METRIC_TOL {
                return Err(Error::LightlikeNormal);
            }
            return Err(Error::NonUnitNormal(nn));
        }
        let kind = if nn < 0.0 {
            PlaneKind::Spacelike
        } else {
            PlaneKind::Timelike
        };
        Ok(Hyperplane { normal, offset, kind })
    }

    /// The plane `t = a`, i.e. all of space at one instant.
    pub fn spacelike(a: f64) -> Self {
        Hyperplane {
            normal: FourVector::new(1.0, 0.0, 0.0, 0.0),
            offset: a,
            kind: PlaneKind::Spacelike,
        }
    }

    /// The plane `x3 = b` over all time.
    pub fn timelike(b: f64) -> Self {
        Hyperplane {
            normal: FourVector::new(0.0, 0.0, 0.0, 1.0),
            offset: b,
            kind: PlaneKind::Timelike,
        }
    }

    pub fn normal(&self) -> FourVector {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn kind(&self) -> PlaneKind {
        self.kind
    }

    /// `contract(n, n)`: -1 for spacelike planes, +1 for timelike planes.
    pub fn normal_sign(&self) -> f64 {
        match self.kind {
            PlaneKind::Spacelike => -1.0,
            PlaneKind::Timelike => 1.0,
        }
    }

    /// Component of `v` along the normal, `contract(n, v) / contract(n, n)`.
    /// Reduces to `v0` for `n = (1,0,0,0)` and `v3` for `n = (0,0,0,1)`.
    pub fn normal_component(&self, v: &FourVector) -> f64 {
        contract(&self.normal, v) * self.normal_sign()
    }

    pub fn contains(&self, x: &FourVector) -> bool {
        let tol = METRIC_TOL * x.euclidean_norm_sq().sqrt().max(1.0);
        (self.normal_component(x) - self.offset).abs() <= tol
    }

    /// The event `offset * n`, which lies on the plane.
    pub fn anchor(&self) -> FourVector {
        self.normal * self.offset
    }

    /// True for `t = a` and `x3 = b` planes in their rest frame.
    pub fn is_canonical(&self) -> bool {
        let n = self.normal.0;
        match self.kind {
            PlaneKind::Spacelike => n == [1.0, 0.0, 0.0, 0.0],
            PlaneKind::Timelike => n == [0.0, 0.0, 0.0, 1.0],
        }
    }
}

/// Velocity `beta` along x3 and the derived Lorentz factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoostParameters {
    beta: f64,
    gamma: f64,
}

impl BoostParameters {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta.abs() >= 1.0 {
            return Err(Error::Superluminal(beta));
        }
        // (1-b)(1+b) keeps more digits than 1-b^2 near |b| = 1.
        let gamma = 1.0 / ((1.0 - beta) * (1.0 + beta)).sqrt();
        Ok(BoostParameters { beta, gamma })
    }

    pub fn identity() -> Self {
        BoostParameters {
            beta: 0.0,
            gamma: 1.0,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn inverse(&self) -> Self {
        BoostParameters {
            beta: -self.beta,
            gamma: self.gamma,
        }
    }

    /// Collinear velocity addition: applying `self` then `next`.
    pub fn compose(&self, next: &BoostParameters) -> Result<Self> {
        BoostParameters::new((self.beta + next.beta) / (1.0 + self.beta * next.beta))
    }
}

impl<'de> Deserialize<'de> for BoostParameters {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            beta: f64,
        }
        let raw = Raw::deserialize(d)?;
        BoostParameters::new(raw.beta).map_err(serde::de::Error::custom)
    }
}

/// `(t, x1, x2, x3) -> (g(t + b x3), x1, x2, g(x3 + b t))`.
pub fn boost_vector(x: &FourVector, b: &BoostParameters) -> FourVector {
    let [t, x1, x2, x3] = x.0;
    let (beta, gamma) = (b.beta, b.gamma);
    FourVector([gamma * (t + beta * x3), x1, x2, gamma * (x3 + beta * t)])
}

/// Boosts the normal as a four-vector and recomputes the offset from the
/// boosted anchor event, so the result describes the same set of events.
pub fn boost_hyperplane(s: &Hyperplane, b: &BoostParameters) -> Hyperplane {
    let normal = boost_vector(&s.normal, b);
    let anchor = boost_vector(&s.anchor(), b);
    let sign = s.normal_sign();
    Hyperplane {
        normal,
        offset: contract(&normal, &anchor) * sign,
        kind: s.kind,
    }
}

/// Angle `arctan(beta)` between a boosted detector's world line and the
/// corresponding rest-frame axis.
pub fn world_line_angle(b: &BoostParameters) -> f64 {
    b.beta.atan()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_vec_close(a: &FourVector, b: &FourVector, tol: f64) {
        for mu in 0..4 {
            assert!((a[mu] - b[mu]).abs() <= tol, "component {mu}: {:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn contraction_examples() {
        let e0 = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(contract(&e0, &e0), -1.0);
        let w = 2.5;
        let k = FourVector::new(w, 0.0, 0.0, w);
        assert_eq!(contract(&k, &k), 0.0);
        let a = FourVector::new(2.0, 1.0, 0.0, 0.0);
        let b = FourVector::new(3.0, 4.0, 0.0, 0.0);
        assert_eq!(contract(&a, &b), -2.0);
    }

    #[test]
    fn boost_examples() {
        let b = BoostParameters::new(0.6).unwrap();
        assert!((b.gamma() - 1.25).abs() < 1e-15);
        let x = boost_vector(&FourVector::new(2.0, 0.0, 0.0, 0.0), &b);
        assert_vec_close(&x, &FourVector::new(2.5, 0.0, 0.0, 1.5), 1e-15);

        let y = FourVector::new(0.3, -1.0, 2.0, 7.0);
        assert_eq!(boost_vector(&y, &BoostParameters::new(0.0).unwrap()), y);

        let light = boost_vector(&FourVector::new(1.0, 0.0, 0.0, 1.0), &b);
        assert_vec_close(&light, &FourVector::new(2.0, 0.0, 0.0, 2.0), 1e-15);
        assert_eq!(classify_interval(&light), Interval::Lightlike);
    }

    #[test]
    fn superluminal_rejected() {
        assert!(matches!(BoostParameters::new(1.0), Err(Error::Superluminal(_))));
        assert!(BoostParameters::new(-1.2).is_err());
        assert!(BoostParameters::new(f64::NAN).is_err());
    }

    #[test]
    fn hyperplane_normals_rotate() {
        let b = BoostParameters::new(0.6).unwrap();
        let s = boost_hyperplane(&Hyperplane::spacelike(2.0), &b);
        assert_vec_close(&s.normal(), &FourVector::new(1.25, 0.0, 0.0, 0.75), 1e-15);
        assert_eq!(s.kind(), PlaneKind::Spacelike);
        assert!((s.offset() - 2.0).abs() < 1e-14);

        let t = boost_hyperplane(&Hyperplane::timelike(1.0), &b);
        assert_vec_close(&t.normal(), &FourVector::new(0.75, 0.0, 0.0, 1.25), 1e-15);
        assert_eq!(t.kind(), PlaneKind::Timelike);

        let id = boost_hyperplane(&Hyperplane::timelike(1.0), &BoostParameters::identity());
        assert_eq!(id, Hyperplane::timelike(1.0));
    }

    #[test]
    fn boosted_plane_holds_same_events() {
        let b = BoostParameters::new(-0.45).unwrap();
        let plane = Hyperplane::spacelike(2.0);
        let boosted = boost_hyperplane(&plane, &b);
        for x in [
            FourVector::new(2.0, 0.0, 0.0, 0.0),
            FourVector::new(2.0, 1.0, -3.0, 5.0),
        ] {
            assert!(plane.contains(&x));
            assert!(boosted.contains(&boost_vector(&x, &b)));
        }
    }

    #[test]
    fn angle_examples() {
        let a = world_line_angle(&BoostParameters::new(0.6).unwrap());
        assert!((a - 0.540_419_500_270_583_6).abs() < 1e-15);
        assert_eq!(world_line_angle(&BoostParameters::identity()), 0.0);
        let near = world_line_angle(&BoostParameters::new(1.0 - 1e-12).unwrap());
        assert!((near - std::f64::consts::FRAC_PI_4).abs() < 1e-11);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_interval(&FourVector::new(1.0, 0.0, 0.0, 0.0)),
            Interval::Timelike
        );
        assert_eq!(
            classify_interval(&FourVector::new(1.0, 0.0, 0.0, 1.0)),
            Interval::Lightlike
        );
        assert_eq!(
            classify_interval(&FourVector::new(0.0, 0.0, 0.0, 1.0)),
            Interval::Spacelike
        );
    }

    #[test]
    fn normal_component_matches_rest_frame_energy() {
        // Boost k into the rest frame of the boosted normal and read k0 there.
        let b = BoostParameters::new(0.6).unwrap();
        let plane = boost_hyperplane(&Hyperplane::spacelike(0.0), &b);
        let k = FourVector::new(1.0, 0.0, 0.0, 1.0);
        let k_rest = boost_vector(&k, &b.inverse());
        assert!((plane.normal_component(&k) - 0.5).abs() < 1e-15);
        assert!((k_rest.time() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_unit_normals_rejected() {
        assert!(matches!(
            Hyperplane::new(FourVector::new(2.0, 0.0, 0.0, 0.0), 0.0),
            Err(Error::NonUnitNormal(_))
        ));
        assert!(matches!(
            Hyperplane::new(FourVector::new(1.0, 0.0, 0.0, 1.0), 0.0),
            Err(Error::LightlikeNormal)
        ));
        let ok = Hyperplane::new(FourVector::new(1.25, 0.0, 0.0, 0.75), 3.0).unwrap();
        assert_eq!(ok.kind(), PlaneKind::Spacelike);
    }
}
