use super::{cross, AttitudeError, Dcm, ParamKind, Quat};
use crate::{Mat3, Vec3};

/// `C = C1(φ) C2(θ) C3(ψ)` for `q = [φ, θ, ψ]`.
pub fn dcm_from_euler321(q: &Vec3) -> Dcm {
    let (sphi, cphi) = q.x.sin_cos();
    let (sth, cth) = q.y.sin_cos();
    let (spsi, cpsi) = q.z.sin_cos();
    Dcm::new_unchecked(Mat3::new(
        cth * cpsi,
        cth * spsi,
        -sth,
        -cphi * spsi + sphi * sth * cpsi,
        cphi * cpsi + sphi * sth * spsi,
        sphi * cth,
        sphi * spsi + cphi * sth * cpsi,
        -sphi * cpsi + cphi * sth * spsi,
        cphi * cth,
    ))
}

/// Extracts `[φ, θ, ψ]`, failing within `margin` of `|θ| = π/2`.
pub fn euler321_from_dcm(c: &Dcm, margin: f64) -> Result<Vec3, AttitudeError> {
    let m = c.matrix();
    let theta = -m[(0, 2)].clamp(-1.0, 1.0).asin();
    if theta.abs() >= std::f64::consts::FRAC_PI_2 - margin {
        let phi = m[(1, 2)].atan2(m[(2, 2)]);
        let psi = m[(0, 1)].atan2(m[(0, 0)]);
        return Err(AttitudeError::Singular {
            kind: ParamKind::Euler321,
            params: [phi, theta, psi],
        });
    }
    Ok(Vec3::new(m[(1, 2)].atan2(m[(2, 2)]), theta, m[(0, 1)].atan2(m[(0, 0)])))
}

/// `C = (η² - εᵀε) 1 + 2εεᵀ - 2η ε^×`.
pub fn dcm_from_quat(q: &Quat) -> Dcm {
    let (e, n) = (&q.eps, q.eta);
    Dcm::new_unchecked(
        Mat3::identity() * (n * n - e.norm_squared()) + e * e.transpose() * 2.0
            - cross(e) * (2.0 * n),
    )
}

/// Shepperd's four-branch extraction; returns the representative with `η ≥ 0`.
pub fn quat_from_dcm(c: &Dcm) -> Quat {
    let m = c.matrix();
    let tr = m.trace();
    let candidates = [tr, m[(0, 0)], m[(1, 1)], m[(2, 2)]];
    let (branch, _) = candidates
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });

    let q = match branch {
        0 => {
            let eta = 0.5 * (1.0 + tr).max(0.0).sqrt();
            let k = 0.25 / eta;
            Quat::new(
                Vec3::new(
                    (m[(1, 2)] - m[(2, 1)]) * k,
                    (m[(2, 0)] - m[(0, 2)]) * k,
                    (m[(0, 1)] - m[(1, 0)]) * k,
                ),
                eta,
            )
        }
        1 => {
            let e1 = 0.5 * (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).max(0.0).sqrt();
            let k = 0.25 / e1;
            Quat::new(
                Vec3::new(e1, (m[(0, 1)] + m[(1, 0)]) * k, (m[(0, 2)] + m[(2, 0)]) * k),
                (m[(1, 2)] - m[(2, 1)]) * k,
            )
        }
        2 => {
            let e2 = 0.5 * (1.0 - m[(0, 0)] + m[(1, 1)] - m[(2, 2)]).max(0.0).sqrt();
            let k = 0.25 / e2;
            Quat::new(
                Vec3::new((m[(0, 1)] + m[(1, 0)]) * k, e2, (m[(1, 2)] + m[(2, 1)]) * k),
                (m[(2, 0)] - m[(0, 2)]) * k,
            )
        }
        _ => {
            let e3 = 0.5 * (1.0 - m[(0, 0)] - m[(1, 1)] + m[(2, 2)]).max(0.0).sqrt();
            let k = 0.25 / e3;
            Quat::new(
                Vec3::new((m[(0, 2)] + m[(2, 0)]) * k, (m[(1, 2)] + m[(2, 1)]) * k, e3),
                (m[(0, 1)] - m[(1, 0)]) * k,
            )
        }
    };
    if q.eta < 0.0 {
        Quat::new(-q.eps, -q.eta)
    } else {
        q
    }
}

/// `sin(x/2) / x`, stable near zero.
fn half_sinc(x: f64) -> f64 {
    if x < 1e-4 {
        0.5 - x * x / 48.0
    } else {
        (0.5 * x).sin() / x
    }
}

pub fn dcm_from_rotvec(phi: &Vec3) -> Dcm {
    let angle = phi.norm();
    dcm_from_quat(&Quat::new(phi * half_sinc(angle), (0.5 * angle).cos()))
}

/// Rotation vector with angle in `[0, π]`.
pub fn rotvec_from_dcm(c: &Dcm) -> Vec3 {
    let q = quat_from_dcm(c);
    let n = q.eps.norm();
    if n < 1e-8 {
        // angle ≈ 2n/η, so φ ≈ 2ε/η to second order
        return q.eps * (2.0 / q.eta);
    }
    q.eps * (2.0 * n.atan2(q.eta) / n)
}

pub fn dcm_from_mrp(sigma: &Vec3) -> Dcm {
    let s2 = sigma.norm_squared();
    let d = 1.0 + s2;
    dcm_from_quat(&Quat::new(sigma * (2.0 / d), (1.0 - s2) / d))
}

/// MRPs from the `η ≥ 0` quaternion, so `|σ| ≤ 1`.
pub fn mrp_from_dcm(c: &Dcm) -> Vec3 {
    let q = quat_from_dcm(c);
    q.eps / (1.0 + q.eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attitude::DEFAULT_SINGULARITY_MARGIN;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_dcm(rng: &mut ChaCha8Rng) -> Dcm {
        // random unit quaternion, both hemispheres
        let q = Quat::new(
            Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            rng.gen_range(-1.0..1.0),
        )
        .normalize();
        dcm_from_quat(&q)
    }

    fn max_diff(a: &Dcm, b: &Dcm) -> f64 {
        (a.matrix() - b.matrix()).abs().max()
    }

    #[test]
    fn euler_examples() {
        assert_eq!(*dcm_from_euler321(&Vec3::zeros()).matrix(), Mat3::identity());
        let c = dcm_from_euler321(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        let expected = Mat3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((c.matrix() - expected).abs().max() < 1e-15);
    }

    #[test]
    fn euler_matches_principal_product() {
        let q = Vec3::new(0.3, -0.7, 2.1);
        let c = Dcm::c1(q.x).compose(&Dcm::c2(q.y)).compose(&Dcm::c3(q.z));
        assert!(max_diff(&c, &dcm_from_euler321(&q)) < 1e-15);
    }

    #[test]
    fn euler_gimbal_lock_rejected() {
        let c = dcm_from_euler321(&Vec3::new(0.1, FRAC_PI_2, 0.2));
        assert!(matches!(
            euler321_from_dcm(&c, DEFAULT_SINGULARITY_MARGIN),
            Err(AttitudeError::Singular { kind: ParamKind::Euler321, .. })
        ));
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let c = random_dcm(&mut rng);
            assert!(c.orthonormality_error() < 1e-12);

            let q = quat_from_dcm(&c);
            assert!(q.eta >= 0.0);
            assert!(max_diff(&dcm_from_quat(&q), &c) < 1e-12);
            let q2 = quat_from_dcm(&dcm_from_quat(&q));
            assert!((q2.eps - q.eps).norm() + (q2.eta - q.eta).abs() < 1e-12);

            assert!(max_diff(&dcm_from_rotvec(&rotvec_from_dcm(&c)), &c) < 1e-9);
            assert!(max_diff(&dcm_from_mrp(&mrp_from_dcm(&c)), &c) < 1e-9);
            assert!(mrp_from_dcm(&c).norm() <= 1.0 + 1e-12);
            if let Ok(e) = euler321_from_dcm(&c, 1e-3) {
                assert!(max_diff(&dcm_from_euler321(&e), &c) < 1e-9);
            }
        }
    }

    #[test]
    fn rotvec_matches_axis_angle_formula() {
        let axis = Vec3::new(1.0, -2.0, 0.5).normalize();
        let angle: f64 = 0.8;
        let expected = Mat3::identity() * angle.cos() + axis * axis.transpose() * (1.0 - angle.cos())
            - cross(&axis) * angle.sin();
        assert!((dcm_from_rotvec(&(axis * angle)).matrix() - expected).abs().max() < 1e-14);
        let back = rotvec_from_dcm(&dcm_from_rotvec(&(axis * angle)));
        assert!((back - axis * angle).norm() < 1e-12);
        // near π the extraction stays on [0, π]
        let c = dcm_from_rotvec(&(axis * (PI - 1e-6)));
        assert!((rotvec_from_dcm(&c).norm() - (PI - 1e-6)).abs() < 1e-8);
    }

    #[test]
    fn small_rotvec_series_branch() {
        let phi = Vec3::new(1e-9, -2e-9, 3e-10);
        let back = rotvec_from_dcm(&dcm_from_rotvec(&phi));
        assert!((back - phi).norm() < 1e-15);
    }
}
