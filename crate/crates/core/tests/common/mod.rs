//! Independent oracles shared by the integration tests and the acceptance
//! runner. Everything here is computed with nalgebra's rotation and
//! isometry types (or by brute force), never with the crate's own
//! conversions.
#![allow(dead_code)]

use std::path::PathBuf;

use dqvs::dq::{adjoint, dq_distance, Pose, Quaternion, Twist, UnitQuaternion};
use dqvs::kinematics::KinematicChain;
use nalgebra as na;
use nalgebra::{DVector, Matrix3, Matrix6, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn normal3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniformly distributed rotation (normalized Gaussian 4-vector).
pub fn random_rotation(rng: &mut ChaCha8Rng) -> na::UnitQuaternion<f64> {
    let q = na::Quaternion::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    na::UnitQuaternion::from_quaternion(q)
}

pub fn random_isometry(rng: &mut ChaCha8Rng, scale: f64) -> na::Isometry3<f64> {
    let t = Vector3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    );
    na::Isometry3::from_parts(t.into(), random_rotation(rng))
}

pub fn to_dq_rotation(r: &na::UnitQuaternion<f64>) -> UnitQuaternion {
    UnitQuaternion::new_normalize(Quaternion::new(r.w, r.i, r.j, r.k)).expect("unit input")
}

pub fn to_pose(iso: &na::Isometry3<f64>) -> Pose {
    Pose::from_rt(&to_dq_rotation(&iso.rotation), &iso.translation.vector)
}

/// Reads a pose's coefficients back through nalgebra: rotation from the
/// primary part, translation as the vector part of `2 x_D x_P*`.
pub fn to_isometry(p: &Pose) -> na::Isometry3<f64> {
    let c = p.coeffs();
    let primary = na::Quaternion::new(c[0], c[1], c[2], c[3]);
    let dual = na::Quaternion::new(c[4], c[5], c[6], c[7]);
    let t = (dual * primary.conjugate()).imag() * 2.0;
    na::Isometry3::from_parts(t.into(), na::UnitQuaternion::new_normalize(primary))
}

/// Largest entry difference between two rigid transforms as 4×4 matrices.
pub fn iso_err(a: &na::Isometry3<f64>, b: &na::Isometry3<f64>) -> f64 {
    (a.to_homogeneous() - b.to_homogeneous()).amax()
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Adjoint of a rigid transform acting on `(ω; v)`.
pub fn adjoint_matrix(iso: &na::Isometry3<f64>) -> Matrix6<f64> {
    let r = iso.rotation.to_rotation_matrix().into_inner();
    let t = iso.translation.vector;
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(skew(&t) * r));
    m
}

/// `‖1 − a*b‖` from the relative transform: `2(1 − cos(φ/2)) + ‖t‖²/4`.
pub fn distance_oracle(a: &na::Isometry3<f64>, b: &na::Isometry3<f64>) -> f64 {
    let rel = a.inverse() * b;
    let phi = rel.rotation.angle();
    (2.0 * (1.0 - (0.5 * phi).cos()) + rel.translation.vector.norm_squared() / 4.0).sqrt()
}

/// Worst deviation of every algebra invariant over `n` seeded instances.
pub fn algebra_checks(n: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = rng(seed);
    let names = [
        "quaternion product vs rotation matrices",
        "quaternion product unit norm",
        "axis-angle vs Rotation3",
        "inner/cross vs 3-vector",
        "pose product vs homogeneous product",
        "conjugate vs inverse transform",
        "from_rt/to_rt round trip",
        "rt construction vs homogeneous",
        "log vs rotation logarithm",
        "adjoint vs 6x6 adjoint",
        "adjoint inverse round trip",
        "vec6 round trip",
        "distance vs closed form",
        "distance symmetry",
        "distance triangle inequality",
        "distance left invariance",
    ];
    let mut worst = vec![0.0f64; names.len()];
    let mut note = |i: usize, e: f64| worst[i] = worst[i].max(if e.is_nan() { f64::INFINITY } else { e });

    for _ in 0..n {
        let ra = random_rotation(&mut rng);
        let rb = random_rotation(&mut rng);
        let (qa, qb) = (to_dq_rotation(&ra), to_dq_rotation(&rb));
        let prod = qa * qb;
        let m = (ra * rb).to_rotation_matrix().into_inner();
        note(0, (prod.to_rotation_matrix() - m).amax());
        note(1, (prod.quaternion().norm() - 1.0).abs());

        let axis = na::Unit::new_normalize(normal3(&mut rng));
        let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let aa = UnitQuaternion::from_axis_angle(&axis, phi).expect("unit axis");
        note(2, (aa.to_rotation_matrix() - na::Rotation3::from_axis_angle(&axis, phi).into_inner()).amax());

        let (u, v) = (normal3(&mut rng), normal3(&mut rng));
        let inner = Quaternion::inner(&Quaternion::pure(u), &Quaternion::pure(v)).expect("pure");
        let cross = Quaternion::cross(&Quaternion::pure(u), &Quaternion::pure(v)).expect("pure");
        note(3, (inner - u.dot(&v)).abs().max((cross.im - u.cross(&v)).amax()).max(cross.re.abs()));

        let (ia, ib) = (random_isometry(&mut rng, 1.0), random_isometry(&mut rng, 1.0));
        let (pa, pb) = (to_pose(&ia), to_pose(&ib));
        note(4, iso_err(&to_isometry(&(pa * pb)), &(ia * ib)));
        note(5, iso_err(&to_isometry(&pa.conjugate()), &ia.inverse()));

        let (r, t) = pa.to_rt();
        let back = Pose::from_rt(&r, &t);
        let d = back
            .coeffs()
            .iter()
            .zip(pa.coeffs())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        note(6, d);
        note(7, iso_err(&to_isometry(&pa), &ia));

        let log = pa.log();
        let expect_w = ia.rotation.scaled_axis() * 0.5;
        let expect_v = ia.translation.vector * 0.5;
        note(8, (log.angular - expect_w).amax().max((log.linear - expect_v).amax()));

        let y = Twist::new(normal3(&mut rng), normal3(&mut rng));
        let ad = adjoint(&pa, &y).vec6();
        note(9, (ad - adjoint_matrix(&ia) * y.vec6()).amax());
        let round = adjoint(&pa.conjugate(), &adjoint(&pa, &y));
        note(10, (round.vec6() - y.vec6()).amax());
        let v6: Vector6<f64> = y.vec6();
        note(11, (Twist::from_vec6(&v6).vec6() - v6).amax());

        let ic = random_isometry(&mut rng, 1.0);
        let pc = to_pose(&ic);
        note(12, (dq_distance(&pa, &pb) - distance_oracle(&ia, &ib)).abs());
        note(13, (dq_distance(&pa, &pb) - dq_distance(&pb, &pa)).abs());
        note(14, (dq_distance(&pa, &pc) - dq_distance(&pa, &pb) - dq_distance(&pb, &pc)).max(0.0));
        note(15, (dq_distance(&(pc * pa), &(pc * pb)) - dq_distance(&pa, &pb)).abs());
    }
    names.into_iter().zip(worst).collect()
}

/// The reference arm rebuilt directly as nalgebra isometries.
pub fn reference_fk_oracle(q: &DVector<f64>) -> na::Isometry3<f64> {
    let offsets = [0.0, 0.34, 0.0, 0.40, 0.0, 0.40, 0.0];
    let mut x = na::Isometry3::identity();
    for (i, (&dz, &angle)) in offsets.iter().zip(q.iter()).enumerate() {
        let axis = if i % 2 == 0 { Vector3::z_axis() } else { Vector3::y_axis() };
        x = x * na::Translation3::new(0.0, 0.0, dz) * na::UnitQuaternion::from_axis_angle(&axis, angle);
    }
    x * na::Translation3::new(0.0, 0.0, 0.126)
}

/// Central differences of the forward kinematics through nalgebra:
/// column `i` is `(rotvec(R₊R₋ᵀ); t₊ − t₋) / 2h`.
pub fn fd_jacobian(chain: &KinematicChain, q: &DVector<f64>, h: f64) -> na::Matrix6xX<f64> {
    let mut m = na::Matrix6xX::zeros(q.len());
    for i in 0..q.len() {
        let mut plus = q.clone();
        let mut minus = q.clone();
        plus[i] += h;
        minus[i] -= h;
        let a = to_isometry(&chain.forward_kinematics(&plus).expect("dof"));
        let b = to_isometry(&chain.forward_kinematics(&minus).expect("dof"));
        let w = (a.rotation * b.rotation.inverse()).scaled_axis() / (2.0 * h);
        let v = (a.translation.vector - b.translation.vector) / (2.0 * h);
        m.fixed_view_mut::<3, 1>(0, i).copy_from(&w);
        m.fixed_view_mut::<3, 1>(3, i).copy_from(&v);
    }
    m
}

/// Uniform configuration within the joint limits.
pub fn random_q(chain: &KinematicChain, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_iterator(
        chain.dof(),
        chain.joints().iter().map(|j| rng.random_range(j.lower..j.upper)),
    )
}

/// Max `|J − J_fd|` over `trials` random configurations.
pub fn jacobian_fd_error(chain: &KinematicChain, trials: usize, h: f64, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let q = random_q(chain, &mut rng);
        let j = chain.geometric_jacobian(&q).expect("dof");
        worst = worst.max((j.matrix - fd_jacobian(chain, &q, h)).amax());
    }
    worst
}

/// Runs the command line in-process and returns `(code, stdout, stderr)`.
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("dqvs").chain(args.iter().copied());
    let code = dqvs::io::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).expect("utf8"), String::from_utf8(err).expect("utf8"))
}
