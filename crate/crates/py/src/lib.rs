//! Python bindings for `dqvs`: poses, the kinematic chain, one controller
//! step, grasp scoring and nearest-pose search, and whole episodes.

use std::path::PathBuf;

use dqvs::dq::{self, UnitQuaternion};
use dqvs::grasp::{self, FingerFeatures, GraspCandidate};
use dqvs::servo::{self, ControllerGains, ControllerState};
use dqvs::{io, sim, KinematicChain};
use nalgebra::{DMatrix, DVector, Vector3};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: dqvs::Error) -> PyErr {
    match e {
        dqvs::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn v3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn arr3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Unit dual quaternion rigid transform, coefficients
/// `[w, x, y, z, w', x', y', z']`.
#[pyclass(name = "Pose", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyPose(dqvs::Pose);

#[pymethods]
impl PyPose {
    #[new]
    #[pyo3(signature = (coeffs, tol = io::POSE_TOLERANCE))]
    fn new(coeffs: [f64; 8], tol: f64) -> PyResult<Self> {
        dqvs::Pose::from_coeffs(coeffs, tol).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn identity() -> Self {
        Self(dqvs::Pose::identity())
    }

    /// Rotation of `angle` radians about the unit `axis`, then translation `t`.
    #[staticmethod]
    #[pyo3(signature = (axis, angle, t = [0.0; 3]))]
    fn from_axis_angle(axis: [f64; 3], angle: f64, t: [f64; 3]) -> PyResult<Self> {
        let r = UnitQuaternion::from_axis_angle(&v3(axis), angle).map_err(py_err)?;
        Ok(Self(dqvs::Pose::from_rt(&r, &v3(t))))
    }

    #[staticmethod]
    fn from_translation(t: [f64; 3]) -> Self {
        Self(dqvs::Pose::from_translation(&v3(t)))
    }

    fn coeffs(&self) -> [f64; 8] {
        self.0.coeffs()
    }

    fn translation(&self) -> [f64; 3] {
        arr3(&self.0.translation())
    }

    /// Rotation quaternion `[w, x, y, z]`.
    fn rotation(&self) -> [f64; 4] {
        self.0.rotation().quaternion().coeffs()
    }

    fn rotation_angle(&self) -> f64 {
        self.0.rotation_angle()
    }

    fn conjugate(&self) -> Self {
        Self(self.0.conjugate())
    }

    /// `(angular, linear)` half-angle twist.
    fn log(&self) -> ([f64; 3], [f64; 3]) {
        let t = self.0.log();
        (arr3(&t.angular), arr3(&t.linear))
    }

    fn transform_point(&self, p: [f64; 3]) -> [f64; 3] {
        arr3(&self.0.transform_point(&v3(p)))
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        let m = self.0.to_homogeneous();
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Pose({:?})", self.0.coeffs())
    }
}

/// Pose metric `‖1 − a*b‖` on canonical-sign dual quaternions.
#[pyfunction]
fn dq_distance(a: &PyPose, b: &PyPose) -> f64 {
    dq::dq_distance(&a.0, &b.0)
}

#[pyclass(name = "Chain", frozen)]
struct PyChain(KinematicChain);

#[pymethods]
impl PyChain {
    /// The bundled 7-joint reference arm.
    #[staticmethod]
    fn reference() -> Self {
        Self(KinematicChain::reference_7dof())
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::parse_chain_file(&path).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn home() -> Vec<f64> {
        KinematicChain::reference_home().iter().copied().collect()
    }

    #[getter]
    fn dof(&self) -> usize {
        self.0.dof()
    }

    /// `(lower, upper)` per joint.
    fn limits(&self) -> Vec<(f64, f64)> {
        self.0.joints().iter().map(|j| (j.lower, j.upper)).collect()
    }

    fn forward_kinematics(&self, q: Vec<f64>) -> PyResult<PyPose> {
        self.0.forward_kinematics(&DVector::from_vec(q)).map(PyPose).map_err(py_err)
    }

    /// 6 × n geometric Jacobian as row lists, angular rows first.
    fn jacobian(&self, q: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let j = self.0.geometric_jacobian(&DVector::from_vec(q)).map_err(py_err)?;
        Ok(j.matrix.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    /// Largest central-difference Jacobian error over `trials` random
    /// configurations.
    #[pyo3(signature = (trials = 100, step = 1e-6, seed = 0))]
    fn check_jacobian(&self, trials: usize, step: f64, seed: u64) -> PyResult<f64> {
        dqvs::kinematics::max_jacobian_error(&self.0, trials, step, seed).map_err(py_err)
    }

    fn null_space_cost(&self, q: Vec<f64>) -> f64 {
        servo::null_space_cost(&self.0, &DVector::from_vec(q))
    }
}

/// One controller iteration from `q` toward `target`; returns a dict with
/// the new joints, the pre-step error, Lyapunov value and clamp flag.
#[pyfunction]
#[pyo3(signature = (chain, q, target, k = 2.0, ks = -0.5, damping = 1e-3, dt = 0.05, nullspace = true))]
#[allow(clippy::too_many_arguments)]
fn servo_step<'py>(
    py: Python<'py>,
    chain: &PyChain,
    q: Vec<f64>,
    target: &PyPose,
    k: f64,
    ks: f64,
    damping: f64,
    dt: f64,
    nullspace: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let gains = ControllerGains::new(k, ks, damping, dt).map_err(py_err)?;
    let state = ControllerState::new(&chain.0, DVector::from_vec(q), target.0).map_err(py_err)?;
    let r = servo::step(&state, &chain.0, &gains, nullspace);
    let (te, re) = servo::error_magnitudes(&r.error);
    let d = PyDict::new(py);
    d.set_item("q", r.state.q.iter().copied().collect::<Vec<f64>>())?;
    d.set_item("pose", PyPose(r.state.x_c))?;
    d.set_item("error", PyPose(r.error))?;
    d.set_item("translation_error", te)?;
    d.set_item("rotation_error", re)?;
    d.set_item("lyapunov", r.lyapunov.v)?;
    d.set_item("lyapunov_after", r.lyapunov_after.v)?;
    d.set_item("clamped", r.clamped)?;
    d.set_item("secondary_twist", r.secondary_twist)?;
    Ok(d)
}

/// `(weight, covariance rows, samples)` for one finger.
type FingerArgs = (f64, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// LoCoMo score of a candidate with the given fingers.
#[pyfunction]
fn locomo_score(gamma: f64, ns: f64, fingers: Vec<FingerArgs>) -> PyResult<f64> {
    let mut out = Vec::with_capacity(fingers.len());
    for (weight, cov, psi) in fingers {
        let n = cov.len();
        if cov.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("covariance must be square"));
        }
        out.push(FingerFeatures {
            weight,
            covariance: DMatrix::from_fn(n, n, |i, j| cov[i][j]),
            psi: psi.into_iter().map(DVector::from_vec).collect(),
        });
    }
    let c = GraspCandidate {
        id: 0,
        grasp: dqvs::Pose::identity(),
        pregrasp_offset: 0.0,
        gamma,
        ns,
        fingers: out,
        precomputed_score: None,
    };
    grasp::locomo_score(&c).map_err(py_err)
}

/// Distances divided by their range `max − min`; all zeros when every
/// distance ties.
#[pyfunction]
fn rerank(distances: Vec<f64>) -> Vec<f64> {
    grasp::rerank(&distances).values
}

#[pyclass(name = "VpTree", frozen)]
struct PyVpTree(grasp::VpTree);

#[pymethods]
impl PyVpTree {
    #[new]
    #[pyo3(signature = (poses, seed = 0))]
    fn new(poses: Vec<PyPose>, seed: u64) -> PyResult<Self> {
        let poses: Vec<dqvs::Pose> = poses.into_iter().map(|p| p.0).collect();
        grasp::VpTree::from_poses(&poses, seed).map(Self).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// `(index, distance)` of the `k` nearest poses, closest first.
    fn k_nearest(&self, query: &PyPose, k: usize) -> PyResult<Vec<(u32, f64)>> {
        let hits = self.0.k_nearest(&query.0, k).map_err(py_err)?;
        Ok(hits.into_iter().map(|n| (n.id, n.distance)).collect())
    }
}

/// Runs the episode described by a scenario file and returns a summary
/// dict. `seed` overrides the scenario's observation seed.
#[pyfunction]
#[pyo3(signature = (path, seed = None, rerank = None, nullspace = None))]
fn run_scenario<'py>(
    py: Python<'py>,
    path: PathBuf,
    seed: Option<u64>,
    rerank: Option<bool>,
    nullspace: Option<bool>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = io::parse_scenario(&path).map_err(py_err)?;
    if let Some(s) = seed {
        cfg.observation.seed = s;
    }
    if let Some(r) = rerank {
        cfg.rerank = r;
    }
    if let Some(n) = nullspace {
        cfg.nullspace = n;
    }
    let r = py.detach(|| sim::run_episode(&cfg)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("success", r.success)?;
    d.set_item("time_to_grasp", r.time_to_grasp)?;
    d.set_item("switches", r.switches)?;
    d.set_item("clamp_events", r.clamp_events.len())?;
    d.set_item("steps", r.telemetry.len())?;
    let last = r.telemetry.last();
    d.set_item("final_translation_error", last.map(|row| row.translation_error))?;
    d.set_item("final_rotation_error", last.map(|row| row.rotation_error))?;
    Ok(d)
}

#[pymodule]
fn dqvs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPose>()?;
    m.add_class::<PyChain>()?;
    m.add_class::<PyVpTree>()?;
    m.add_function(wrap_pyfunction!(dq_distance, m)?)?;
    m.add_function(wrap_pyfunction!(servo_step, m)?)?;
    m.add_function(wrap_pyfunction!(locomo_score, m)?)?;
    m.add_function(wrap_pyfunction!(rerank, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
