//! Phase tensors, the smoothed Heaviside and the four-phase interpolation.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plane fourth-order elasticity tensor in Voigt form over the basis
/// `(11, 22, 12)` with engineering shear, so `voigt[2][2] = A_1212`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ElasticTensor4 {
    voigt: [[f64; 3]; 3],
}

/// Plane reduction used when converting `(E, nu)` into bulk and shear moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneModel {
    #[default]
    Stress,
    Strain,
}

fn voigt_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (1, 1) => 0,
        (2, 2) => 1,
        (1, 2) | (2, 1) => 2,
        _ => panic!("tensor indices must be 1 or 2, got ({i}, {j})"),
    }
}

impl ElasticTensor4 {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Symmetrizes the input: only the upper triangle is read.
    pub fn from_voigt(m: [[f64; 3]; 3]) -> Self {
        let mut voigt = m;
        for r in 0..3 {
            for c in 0..r {
                voigt[r][c] = m[c][r];
            }
        }
        Self { voigt }
    }

    /// Stores all nine entries as given; used for computed tensors whose
    /// symmetry is itself under test.
    pub fn from_voigt_full(m: [[f64; 3]; 3]) -> Self {
        Self { voigt: m }
    }

    /// `2 mu I4 + (kappa - mu) I2 ⊗ I2`, the isotropic plane tensor.
    pub fn from_bulk_shear(kappa: f64, mu: f64) -> Self {
        Self::from_voigt([
            [kappa + mu, kappa - mu, 0.0],
            [kappa - mu, kappa + mu, 0.0],
            [0.0, 0.0, mu],
        ])
    }

    /// Isotropic tensor from Young modulus and Poisson ratio under plane stress.
    pub fn isotropic(young: f64, poisson: f64) -> Result<Self> {
        Self::isotropic_with(young, poisson, PlaneModel::Stress)
    }

    pub fn isotropic_with(young: f64, poisson: f64, plane: PlaneModel) -> Result<Self> {
        if !(young > 0.0 && young.is_finite()) {
            return Err(Error::Material(format!("Young modulus must be positive, got {young}")));
        }
        if !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::Material(format!(
                "Poisson ratio must lie in (-1, 0.5), got {poisson}"
            )));
        }
        let mu = young / (2.0 * (1.0 + poisson));
        let kappa = match plane {
            PlaneModel::Stress => young / (2.0 * (1.0 - poisson)),
            PlaneModel::Strain => young / (2.0 * (1.0 + poisson) * (1.0 - 2.0 * poisson)),
        };
        Ok(Self::from_bulk_shear(kappa, mu))
    }

    pub fn voigt(&self) -> &[[f64; 3]; 3] {
        &self.voigt
    }

    /// Component `A_ijkl` with `i, j, k, l ∈ {1, 2}`.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.voigt[voigt_index(i, j)][voigt_index(k, l)]
    }

    /// Bilinear form `a : A : b` on engineering-shear Voigt strains.
    pub fn contract(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for r in 0..3 {
            let row = &self.voigt[r];
            s += a[r] * (row[0] * b[0] + row[1] * b[1] + row[2] * b[2]);
        }
        s
    }

    pub fn apply(&self, strain: &[f64; 3]) -> [f64; 3] {
        let m = &self.voigt;
        [
            m[0][0] * strain[0] + m[0][1] * strain[1] + m[0][2] * strain[2],
            m[1][0] * strain[0] + m[1][1] * strain[1] + m[1][2] * strain[2],
            m[2][0] * strain[0] + m[2][1] * strain[1] + m[2][2] * strain[2],
        ]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.voigt;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Option<Self> {
        let m = &self.voigt;
        let det = self.determinant();
        let scale = self.max_abs().powi(3);
        if scale == 0.0 || det.abs() <= 1e-14 * scale {
            return None;
        }
        let inv = |a: f64| a / det;
        Some(Self {
            voigt: [
                [
                    inv(m[1][1] * m[2][2] - m[1][2] * m[2][1]),
                    inv(m[0][2] * m[2][1] - m[0][1] * m[2][2]),
                    inv(m[0][1] * m[1][2] - m[0][2] * m[1][1]),
                ],
                [
                    inv(m[1][2] * m[2][0] - m[1][0] * m[2][2]),
                    inv(m[0][0] * m[2][2] - m[0][2] * m[2][0]),
                    inv(m[0][2] * m[1][0] - m[0][0] * m[1][2]),
                ],
                [
                    inv(m[1][0] * m[2][1] - m[1][1] * m[2][0]),
                    inv(m[0][1] * m[2][0] - m[0][0] * m[2][1]),
                    inv(m[0][0] * m[1][1] - m[0][1] * m[1][0]),
                ],
            ],
        })
    }

    /// Sylvester's criterion on the symmetric Voigt matrix.
    pub fn is_positive_definite(&self) -> bool {
        let m = &self.voigt;
        let minor2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        m[0][0] > 0.0 && minor2 > 0.0 && self.determinant() > 0.0
    }

    pub fn max_abs(&self) -> f64 {
        self.voigt
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..3).all(|r| (0..3).all(|c| (self.voigt[r][c] - self.voigt[c][r]).abs() <= tol))
    }
}

impl Add for ElasticTensor4 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for r in 0..3 {
            for c in 0..3 {
                self.voigt[r][c] += rhs.voigt[r][c];
            }
        }
        self
    }
}

impl Sub for ElasticTensor4 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for r in 0..3 {
            for c in 0..3 {
                self.voigt[r][c] -= rhs.voigt[r][c];
            }
        }
        self
    }
}

impl Mul<ElasticTensor4> for f64 {
    type Output = ElasticTensor4;
    fn mul(self, mut rhs: ElasticTensor4) -> ElasticTensor4 {
        for row in rhs.voigt.iter_mut() {
            for v in row.iter_mut() {
                *v *= self;
            }
        }
        rhs
    }
}

/// The C¹ regularized Heaviside of half-width `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heaviside {
    eps: f64,
}

impl Heaviside {
    pub fn new(eps: f64) -> Self {
        assert!(eps > 0.0, "Heaviside half-width must be positive");
        Self { eps }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn value(&self, t: f64) -> f64 {
        heaviside(t, self.eps)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        heaviside_derivative(t, self.eps)
    }
}

pub fn heaviside(t: f64, eps: f64) -> f64 {
    // Closed at ±ε: sin(±π) is not exactly zero in floating point.
    if t <= -eps {
        0.0
    } else if t >= eps {
        1.0
    } else {
        0.5 * (1.0 + t / eps + (PI * t / eps).sin() / PI)
    }
}

pub fn heaviside_derivative(t: f64, eps: f64) -> f64 {
    if t.abs() > eps {
        0.0
    } else {
        (1.0 + (PI * t / eps).cos()) / (2.0 * eps)
    }
}

/// The four phase tensors, their optional volume targets and the interface half-width.
///
/// Phase numbering follows the partition by the two sub-domains `S1 = {d1 < 0}`
/// and `S2 = {d2 < 0}`: phase 1 is `S1 ∩ S2`, phase 2 is `S1ᶜ ∩ S2`,
/// phase 3 is `S1 ∩ S2ᶜ`, phase 4 is `S1ᶜ ∩ S2ᶜ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSet {
    pub tensors: [ElasticTensor4; 4],
    pub volume_targets: [Option<f64>; 4],
    pub heaviside: Heaviside,
}

impl PhaseSet {
    pub fn new(tensors: [ElasticTensor4; 4], volume_targets: [Option<f64>; 4], eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("interface half-width must be positive, got {eps}")));
        }
        for (k, t) in volume_targets.iter().enumerate() {
            if let Some(v) = t {
                if !(0.0..=1.0).contains(v) {
                    return Err(Error::Config(format!(
                        "volume target of phase {} must lie in [0, 1], got {v}",
                        k + 1
                    )));
                }
            }
        }
        Ok(Self {
            tensors,
            volume_targets,
            heaviside: Heaviside::new(eps),
        })
    }

    pub fn eps(&self) -> f64 {
        self.heaviside.eps()
    }

    fn mix(&self, h1: f64, h2: f64) -> ElasticTensor4 {
        let w = weights(h1, h2);
        let [a1, a2, a3, a4] = self.tensors;
        w[0] * a1 + w[1] * a2 + w[2] * a3 + w[3] * a4
    }

    /// Smoothed tensor at a point with signed distances `(d1, d2)`.
    pub fn interpolate_tensor(&self, d1: f64, d2: f64) -> ElasticTensor4 {
        self.mix(self.heaviside.value(d1), self.heaviside.value(d2))
    }

    /// Same interpolation, parameterized directly by the Heaviside values.
    pub fn interpolate_weights(&self, h1: f64, h2: f64) -> ElasticTensor4 {
        self.mix(h1, h2)
    }

    pub fn phase_densities(&self, d1: f64, d2: f64) -> [f64; 4] {
        weights(self.heaviside.value(d1), self.heaviside.value(d2))
    }

    /// `∂A/∂h_i` evaluated with the other sub-domain's distance `d_other`.
    pub fn a_star(&self, d_other: f64) -> ElasticTensor4 {
        let h = self.heaviside.value(d_other);
        self.a_star_from_weight(h)
    }

    pub fn a_star_from_weight(&self, h_other: f64) -> ElasticTensor4 {
        let [a1, a2, a3, a4] = self.tensors;
        (a2 - a1) + h_other * (a1 - a2 - a3 + a4)
    }

    pub fn h_star(&self, d_other: f64, multipliers: &[f64; 4]) -> f64 {
        h_star_from_weight(self.heaviside.value(d_other), multipliers)
    }

    /// `∂A/∂h_set` for sub-domain `set` (0 or 1) given the other Heaviside
    /// value. For the second sub-domain the roles of phases 2 and 3 swap.
    pub fn tensor_sensitivity(&self, set: usize, h_other: f64) -> ElasticTensor4 {
        let [a1, a2, a3, a4] = self.tensors;
        let cross = a1 - a2 - a3 + a4;
        match set {
            0 => (a2 - a1) + h_other * cross,
            _ => (a3 - a1) + h_other * cross,
        }
    }
}

/// `∂(Σ ℓ_k ι_k)/∂h_set`, the multiplier counterpart of
/// [`PhaseSet::tensor_sensitivity`].
pub fn multiplier_sensitivity(set: usize, h_other: f64, l: &[f64; 4]) -> f64 {
    let cross = l[0] - l[1] - l[2] + l[3];
    match set {
        0 => l[1] - l[0] + h_other * cross,
        _ => l[2] - l[0] + h_other * cross,
    }
}

/// `∂(Σ ℓ_k ι_k)/∂h_i` given the other Heaviside value.
pub fn h_star_from_weight(h_other: f64, l: &[f64; 4]) -> f64 {
    l[1] - l[0] + h_other * (l[0] - l[1] - l[2] + l[3])
}

fn weights(h1: f64, h2: f64) -> [f64; 4] {
    [
        (1.0 - h1) * (1.0 - h2),
        h1 * (1.0 - h2),
        (1.0 - h1) * h2,
        h1 * h2,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn paper_phases(eps: f64) -> PhaseSet {
        let t = |e| ElasticTensor4::isotropic(e, 0.3).unwrap();
        PhaseSet::new([t(0.91), t(0.0001), t(1.82), t(0.0001)], [Some(0.3), None, Some(0.04), None], eps)
            .unwrap()
    }

    #[test]
    fn isotropic_plane_stress_values() {
        let a = ElasticTensor4::isotropic(0.91, 0.3).unwrap();
        assert!(close(a.get(1, 1, 1, 1), 1.0, 1e-14));
        assert!(close(a.get(2, 2, 2, 2), 1.0, 1e-14));
        assert!(close(a.get(1, 1, 2, 2), 0.3, 1e-14));
        assert!(close(a.get(1, 2, 1, 2), 0.35, 1e-14));
        assert_eq!(a.get(1, 1, 1, 2), 0.0);

        let b = ElasticTensor4::isotropic(1.82, 0.3).unwrap();
        assert_eq!(b, 2.0 * a);

        let c = ElasticTensor4::isotropic(1.0, 0.0).unwrap();
        assert_eq!(c.get(1, 1, 2, 2), 0.0);
        assert!(close(c.get(1, 2, 1, 2), 0.5, 1e-15));
        assert!(close(c.get(1, 1, 1, 1), 1.0, 1e-15));
    }

    #[test]
    fn minor_and_major_symmetry() {
        let a = ElasticTensor4::isotropic(2.0, 0.2).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                for k in 1..=2 {
                    for l in 1..=2 {
                        assert_eq!(a.get(i, j, k, l), a.get(j, i, k, l));
                        assert_eq!(a.get(i, j, k, l), a.get(k, l, i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn plane_strain_is_stiffer_in_bulk() {
        let s = ElasticTensor4::isotropic_with(1.0, 0.3, PlaneModel::Stress).unwrap();
        let e = ElasticTensor4::isotropic_with(1.0, 0.3, PlaneModel::Strain).unwrap();
        assert_eq!(s.get(1, 2, 1, 2), e.get(1, 2, 1, 2));
        assert!(e.get(1, 1, 1, 1) > s.get(1, 1, 1, 1));
    }

    #[test]
    fn rejects_nonphysical_moduli() {
        assert!(ElasticTensor4::isotropic(0.0, 0.3).is_err());
        assert!(ElasticTensor4::isotropic(-1.0, 0.3).is_err());
        assert!(ElasticTensor4::isotropic(1.0, 0.5).is_err());
        assert!(ElasticTensor4::isotropic(1.0, -1.0).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let a = ElasticTensor4::isotropic(0.91, 0.3).unwrap();
        let inv = a.inverse().unwrap();
        for r in 0..3 {
            let mut e = [0.0; 3];
            e[r] = 1.0;
            let back = inv.apply(&a.apply(&e));
            for c in 0..3 {
                assert!(close(back[c], e[c], 1e-13));
            }
        }
        assert!(ElasticTensor4::zero().inverse().is_none());
    }

    #[test]
    fn heaviside_values() {
        let eps = 0.02;
        assert_eq!(heaviside(0.0, eps), 0.5);
        assert_eq!(heaviside(eps, eps), 1.0);
        assert_eq!(heaviside(-eps, eps), 0.0);
        let expected = 0.75 + 1.0 / (2.0 * PI);
        assert!(close(heaviside(eps / 2.0, eps), expected, 1e-15));
        assert!(close(expected, 0.909155, 1e-6));
        assert_eq!(heaviside(-1.0, eps), 0.0);
        assert_eq!(heaviside(1.0, eps), 1.0);
    }

    #[test]
    fn heaviside_derivative_values() {
        let eps = 0.03;
        assert!(close(heaviside_derivative(0.0, eps), 1.0 / eps, 1e-12));
        assert!(close(heaviside_derivative(eps, eps), 0.0, 1e-12));
        assert!(close(heaviside_derivative(-eps, eps), 0.0, 1e-12));
        // midpoint rule over [-eps, eps]
        let m = 20_000;
        let h = 2.0 * eps / m as f64;
        let integral: f64 = (0..m)
            .map(|k| heaviside_derivative(-eps + (k as f64 + 0.5) * h, eps) * h)
            .sum();
        assert!(close(integral, 1.0, 1e-8));
    }

    #[test]
    fn heaviside_derivative_matches_finite_difference() {
        let eps = 0.05;
        for k in -12..=12 {
            let t = k as f64 * eps / 10.0;
            let d = 1e-7;
            let fd = (heaviside(t + d, eps) - heaviside(t - d, eps)) / (2.0 * d);
            assert!(close(fd, heaviside_derivative(t, eps), 1e-6), "t = {t}");
        }
    }

    #[test]
    fn interpolation_limits() {
        let p = paper_phases(0.02);
        assert_eq!(p.interpolate_tensor(-1.0, -1.0), p.tensors[0]);
        assert_eq!(p.interpolate_tensor(1.0, 1.0), p.tensors[3]);
        let mid = p.interpolate_tensor(0.0, 0.0);
        let avg = 0.25 * (p.tensors[0] + p.tensors[1] + p.tensors[2] + p.tensors[3]);
        for r in 0..3 {
            for c in 0..3 {
                assert!(close(mid.voigt()[r][c], avg.voigt()[r][c], 1e-15));
            }
        }
    }

    #[test]
    fn densities_examples() {
        let p = paper_phases(0.02);
        assert_eq!(p.phase_densities(0.0, 1.0), [0.0, 0.0, 0.5, 0.5]);
        assert_eq!(p.phase_densities(-1.0, -1.0), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn a_star_and_h_star_examples() {
        let p = paper_phases(0.02);
        let [a1, a2, a3, a4] = p.tensors;
        assert_eq!(p.a_star(-1.0), a2 - a1);
        assert_eq!(p.a_star(1.0), a4 - a3);
        let same = PhaseSet::new([a1; 4], [None; 4], 0.02).unwrap();
        for d in [-1.0, -0.01, 0.0, 0.013, 1.0] {
            assert_eq!(same.a_star(d), ElasticTensor4::zero());
        }
        let l = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(p.h_star(0.3, &[0.0; 4]), 0.0);
        assert_eq!(p.h_star(-1.0, &l), 1.0);
        assert_eq!(p.h_star(1.0, &l), 1.0);
    }

    #[test]
    fn rejects_bad_phase_set() {
        let a = ElasticTensor4::isotropic(1.0, 0.3).unwrap();
        assert!(PhaseSet::new([a; 4], [None; 4], 0.0).is_err());
        assert!(PhaseSet::new([a; 4], [Some(1.5), None, None, None], 0.1).is_err());
    }

    proptest! {
        #[test]
        fn densities_sum_to_one(d1 in -0.2f64..0.2, d2 in -0.2f64..0.2, eps in 0.001f64..0.1) {
            let p = paper_phases(eps);
            let w = p.phase_densities(d1, d2);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }

        #[test]
        fn heaviside_monotone(a in -0.2f64..0.2, b in -0.2f64..0.2, eps in 0.001f64..0.1) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(heaviside(lo, eps) <= heaviside(hi, eps));
            prop_assert!(heaviside_derivative(a, eps) >= 0.0);
            if a.abs() > eps {
                prop_assert_eq!(heaviside_derivative(a, eps), 0.0);
            }
        }

        #[test]
        fn interpolation_is_bounded_by_phases(d1 in -0.1f64..0.1, d2 in -0.1f64..0.1,
                                              e0 in -1.0f64..1.0, e1 in -1.0f64..1.0, e2 in -1.0f64..1.0) {
            let p = paper_phases(0.02);
            let e = [e0, e1, e2];
            let q = p.interpolate_tensor(d1, d2).contract(&e, &e);
            let qs: Vec<f64> = p.tensors.iter().map(|t| t.contract(&e, &e)).collect();
            let lo = qs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(q >= lo - 1e-12 && q <= hi + 1e-12);
        }

        #[test]
        fn a_star_is_derivative_in_h1(h1 in 0.0f64..1.0, h2 in 0.0f64..1.0) {
            let p = paper_phases(0.02);
            let dh = 1e-6;
            let fd = (1.0 / (2.0 * dh)) * (p.interpolate_weights(h1 + dh, h2) - p.interpolate_weights(h1 - dh, h2));
            let exact = p.a_star_from_weight(h2);
            let scale = exact.max_abs().max(1e-300);
            for r in 0..3 {
                for c in 0..3 {
                    prop_assert!((fd.voigt()[r][c] - exact.voigt()[r][c]).abs() <= 1e-8 * scale);
                }
            }
        }

        #[test]
        fn sensitivities_match_finite_differences(h1 in 0.0f64..1.0, h2 in 0.0f64..1.0,
                                                  l in proptest::array::uniform4(-2.0f64..2.0)) {
            let p = PhaseSet::new(
                [1.0, 0.01, 2.0, 0.5].map(|e| ElasticTensor4::isotropic(e, 0.3).unwrap()),
                [None; 4],
                0.02,
            ).unwrap();
            let dh = 1e-6;
            let volume = |a: f64, b: f64| weights(a, b).iter().zip(&l).map(|(w, m)| w * m).sum::<f64>();
            for set in 0..2 {
                let (plus, minus, other) = if set == 0 {
                    ((h1 + dh, h2), (h1 - dh, h2), h2)
                } else {
                    ((h1, h2 + dh), (h1, h2 - dh), h1)
                };
                let fd = (1.0 / (2.0 * dh)) * (p.interpolate_weights(plus.0, plus.1) - p.interpolate_weights(minus.0, minus.1));
                let exact = p.tensor_sensitivity(set, other);
                for r in 0..3 {
                    for c in 0..3 {
                        prop_assert!((fd.voigt()[r][c] - exact.voigt()[r][c]).abs() <= 1e-8 * exact.max_abs());
                    }
                }
                let fd_l = (volume(plus.0, plus.1) - volume(minus.0, minus.1)) / (2.0 * dh);
                prop_assert!((fd_l - multiplier_sensitivity(set, other, &l)).abs() <= 1e-8);
            }
        }
    }
}
