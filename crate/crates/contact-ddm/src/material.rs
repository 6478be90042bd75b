//! Plane-elasticity constitutive models.
//!
//! A material produces the symmetric positive definite 3x3 matrix `D`
//! relating the engineering strain vector (eps_11, eps_22, 2*eps_12) to the
//! stress vector (sig_11, sig_22, sig_12), under either the plane-stress or
//! plane-strain hypothesis.
//!
//! For the transversely isotropic model the plane of isotropy is parallel to
//! x2 = 0: `e` and `nu` act in the x1 direction, `e_t`, `nu_t` and `g_t`
//! along the x2 axis. The plane-stress compliance is assembled as
//!
//! ```text
//!   [ 1/e      -nu_t/e_t   0     ]
//!   [ -nu_t/e_t  1/e_t     0     ]
//!   [ 0          0         1/g_t ]
//! ```
//!
//! and inverted; plane strain inverts the 3x3 normal-compliance block of the
//! corresponding three-dimensional law instead.

use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneHypothesis {
    PlaneStress,
    PlaneStrain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MaterialKind {
    /// Isotropic with Young's modulus `e` and Poisson ratio `nu`.
    Isotropic { e: f64, nu: f64 },
    /// Transversely isotropic, plane of isotropy parallel to x2 = 0.
    TransverselyIsotropic {
        /// In-plane Young's modulus (x1 direction).
        e: f64,
        /// Transverse Young's modulus (x2 axis).
        e_t: f64,
        /// In-plane Poisson ratio.
        nu: f64,
        /// Transverse Poisson ratio.
        nu_t: f64,
        /// Transverse shear modulus.
        g_t: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub kind: MaterialKind,
    pub hypothesis: PlaneHypothesis,
}

impl Material {
    pub fn isotropic(e: f64, nu: f64, hypothesis: PlaneHypothesis) -> Self {
        Self {
            kind: MaterialKind::Isotropic { e, nu },
            hypothesis,
        }
    }

    pub fn transversely_isotropic(
        e: f64,
        e_t: f64,
        nu: f64,
        nu_t: f64,
        g_t: f64,
        hypothesis: PlaneHypothesis,
    ) -> Self {
        Self {
            kind: MaterialKind::TransverselyIsotropic { e, e_t, nu, nu_t, g_t },
            hypothesis,
        }
    }
}

/// Returns the 3x3 constitutive matrix, checked symmetric positive definite.
pub fn constitutive_matrix(material: &Material) -> Result<Matrix3<f64>> {
    let d = match (material.kind, material.hypothesis) {
        (MaterialKind::Isotropic { e, nu }, hyp) => {
            if e <= 0.0 {
                return Err(Error::InvalidMaterial(format!("E = {e} must be positive")));
            }
            match hyp {
                PlaneHypothesis::PlaneStress => {
                    let f = e / (1.0 - nu * nu);
                    Matrix3::new(
                        f,
                        f * nu,
                        0.0,
                        f * nu,
                        f,
                        0.0,
                        0.0,
                        0.0,
                        e / (2.0 * (1.0 + nu)),
                    )
                }
                PlaneHypothesis::PlaneStrain => {
                    let f = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
                    Matrix3::new(
                        f * (1.0 - nu),
                        f * nu,
                        0.0,
                        f * nu,
                        f * (1.0 - nu),
                        0.0,
                        0.0,
                        0.0,
                        e / (2.0 * (1.0 + nu)),
                    )
                }
            }
        }
        (MaterialKind::TransverselyIsotropic { e, e_t, nu, nu_t, g_t }, hyp) => {
            if e <= 0.0 || e_t <= 0.0 || g_t <= 0.0 {
                return Err(Error::InvalidMaterial(
                    "moduli must be positive".to_string(),
                ));
            }
            match hyp {
                PlaneHypothesis::PlaneStress => {
                    let s = Matrix2::new(1.0 / e, -nu_t / e_t, -nu_t / e_t, 1.0 / e_t);
                    let c = s.try_inverse().ok_or_else(|| {
                        Error::InvalidMaterial("singular plane-stress compliance".into())
                    })?;
                    Matrix3::new(
                        c[(0, 0)],
                        c[(0, 1)],
                        0.0,
                        c[(1, 0)],
                        c[(1, 1)],
                        0.0,
                        0.0,
                        0.0,
                        g_t,
                    )
                }
                PlaneHypothesis::PlaneStrain => {
                    // Normal block of the 3D compliance, axes (x1, x2, x3),
                    // x2 the symmetry axis, x1-x3 the plane of isotropy.
                    let s3 = Matrix3::new(
                        1.0 / e,
                        -nu_t / e_t,
                        -nu / e,
                        -nu_t / e_t,
                        1.0 / e_t,
                        -nu_t / e_t,
                        -nu / e,
                        -nu_t / e_t,
                        1.0 / e,
                    );
                    let c3 = s3.try_inverse().ok_or_else(|| {
                        Error::InvalidMaterial("singular plane-strain compliance".into())
                    })?;
                    Matrix3::new(
                        c3[(0, 0)],
                        c3[(0, 1)],
                        0.0,
                        c3[(1, 0)],
                        c3[(1, 1)],
                        0.0,
                        0.0,
                        0.0,
                        g_t,
                    )
                }
            }
        }
    };

    let (b, _) = eigen_bounds(&d);
    if !(b > 0.0) || !d.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidMaterial(format!(
            "constitutive matrix is not positive definite (min eigenvalue {b:.3e})"
        )));
    }
    Ok(d)
}

/// Smallest and largest eigenvalue of the constitutive matrix.
pub fn spectral_bounds(material: &Material) -> Result<(f64, f64)> {
    Ok(eigen_bounds(&constitutive_matrix(material)?))
}

fn eigen_bounds(d: &Matrix3<f64>) -> (f64, f64) {
    let eig = d.symmetric_eigenvalues();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in eig.iter() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hertz_transversal() -> Material {
        // E/E' = 2, G/G' = 2, nu = nu' = 0.3
        let e = 1.0;
        let g = e / (2.0 * (1.0 + 0.3));
        Material::transversely_isotropic(e, e / 2.0, 0.3, 0.3, g / 2.0, PlaneHypothesis::PlaneStress)
    }

    #[test]
    fn isotropic_no_poisson_decouples() {
        let m = Material::isotropic(1.0, 0.0, PlaneHypothesis::PlaneStress);
        let d = constitutive_matrix(&m).unwrap();
        let expected = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5);
        assert!((d - expected).abs().max() < 1e-15);
    }

    #[test]
    fn isotropic_plane_stress_values() {
        let m = Material::isotropic(1.0, 0.3, PlaneHypothesis::PlaneStress);
        let d = constitutive_matrix(&m).unwrap();
        // closed plane-stress forms evaluated independently
        assert!((d[(0, 0)] - 1.0 / 0.91).abs() < 1e-12);
        assert!((d[(0, 1)] - 0.3 / 0.91).abs() < 1e-12);
        assert!((d[(2, 2)] - 1.0 / 2.6).abs() < 1e-12);
        assert!((d[(0, 0)] - 1.098_901).abs() < 1e-6);
        assert!((d[(0, 1)] - 0.329_670).abs() < 1e-6);
        assert!((d[(2, 2)] - 0.384_615).abs() < 1e-6);
    }

    #[test]
    fn transversal_is_spd() {
        let d = constitutive_matrix(&hertz_transversal()).unwrap();
        assert!((d[(0, 1)] - d[(1, 0)]).abs() < 1e-15);
        let (b, _) = eigen_bounds(&d);
        assert!(b > 0.0);
        // stiffer along the plane of isotropy than across it
        assert!(d[(0, 0)] > d[(1, 1)]);
    }

    #[test]
    fn spectral_bounds_diagonal() {
        let m = Material::isotropic(1.0, 0.0, PlaneHypothesis::PlaneStress);
        let (b, d) = spectral_bounds(&m).unwrap();
        assert!((b - 0.5).abs() < 1e-14);
        assert!((d - 1.0).abs() < 1e-14);
    }

    /// Bisection on the characteristic polynomial as an independent
    /// eigenvalue oracle.
    #[test]
    fn spectral_bounds_against_bisection() {
        let m = Material::isotropic(1.0, 0.3, PlaneHypothesis::PlaneStress);
        let d = constitutive_matrix(&m).unwrap();
        let charpoly = |l: f64| {
            let a = d - Matrix3::identity() * l;
            a.determinant()
        };
        let bisect = |mut lo: f64, mut hi: f64| {
            assert!(charpoly(lo) * charpoly(hi) < 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if charpoly(lo) * charpoly(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        // D has eigenvalues {D33, D11 - D12, D11 + D12} here; bracket each.
        let lmin = bisect(0.1, 0.5);
        let lmax = bisect(1.2, 2.0);
        let (b, dmax) = spectral_bounds(&m).unwrap();
        assert!((b - lmin).abs() < 1e-10, "{b} vs {lmin}");
        assert!((dmax - lmax).abs() < 1e-10, "{dmax} vs {lmax}");
    }

    #[test]
    fn quadratic_form_bounded_by_spectral_bounds() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(11);
        for mat in [
            Material::isotropic(1.0, 0.3, PlaneHypothesis::PlaneStress),
            Material::isotropic(2.5, 0.2, PlaneHypothesis::PlaneStrain),
            hertz_transversal(),
        ] {
            let d = constitutive_matrix(&mat).unwrap();
            let (b, dd) = spectral_bounds(&mat).unwrap();
            for _ in 0..500 {
                let e = nalgebra::Vector3::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                );
                let q = (d * e).dot(&e);
                let n2 = e.dot(&e);
                assert!(q >= b * n2 - 1e-12);
                assert!(q <= dd * n2 + 1e-12);
            }
        }
    }

    #[test]
    fn transversal_reduces_to_isotropic() {
        for hyp in [PlaneHypothesis::PlaneStress, PlaneHypothesis::PlaneStrain] {
            let e = 2.3;
            let nu = 0.27;
            let g = e / (2.0 * (1.0 + nu));
            let iso = constitutive_matrix(&Material::isotropic(e, nu, hyp)).unwrap();
            let tr =
                constitutive_matrix(&Material::transversely_isotropic(e, e, nu, nu, g, hyp))
                    .unwrap();
            let rel = (iso - tr).abs().max() / iso.abs().max();
            assert!(rel < 1e-12, "hyp {hyp:?}: rel {rel}");
        }
    }

    #[test]
    fn rejects_non_spd_parameters() {
        // nu close to the plane-stress positive-definiteness limit and beyond
        let bad = Material::isotropic(1.0, 1.1, PlaneHypothesis::PlaneStress);
        assert!(constitutive_matrix(&bad).is_err());
        // E'/E < nu_t^2 makes the transversal compliance indefinite
        let bad_t = Material::transversely_isotropic(
            1.0,
            0.05,
            0.3,
            0.3,
            0.2,
            PlaneHypothesis::PlaneStress,
        );
        assert!(constitutive_matrix(&bad_t).is_err());
    }
}
