//! Python bindings. Trajectories cross the boundary as lists of points, each point
//! a list of coordinates.

use cct_core::datagen::{self, SyntheticConfig};
use cct_core::frechet::{self, DistanceMode};
use cct_core::{
    BuildOptions, BuildVariant, CctError, CctIndex, Counters, ErrorModel, InsertVariant, QueryKind, QuerySpec, Trajectory,
    TrajectorySet,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: CctError) -> PyErr {
    match e {
        CctError::Io(e) => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn to_traj(id: u64, points: Vec<Vec<f64>>) -> PyResult<Trajectory> {
    let dim = points.first().map_or(0, Vec::len);
    if points.iter().any(|p| p.len() != dim) {
        return Err(PyValueError::new_err(format!("trajectory {id}: points differ in dimension")));
    }
    Trajectory::new(id, dim, points.concat()).map_err(err)
}

fn to_points(t: &Trajectory) -> Vec<Vec<f64>> {
    t.vertices().map(<[f64]>::to_vec).collect()
}

fn to_set(trajs: Vec<Vec<Vec<f64>>>, ids: Option<Vec<u64>>) -> PyResult<TrajectorySet> {
    let ids = ids.unwrap_or_else(|| (0..trajs.len() as u64).collect());
    if ids.len() != trajs.len() {
        return Err(PyValueError::new_err("ids and trajectories differ in length"));
    }
    let v = ids.into_iter().zip(trajs).map(|(id, p)| to_traj(id, p)).collect::<PyResult<_>>()?;
    TrajectorySet::new(v).map_err(err)
}

fn counters<'py>(py: Python<'py>, c: &Counters) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("df_calls", c.df_calls)?;
    d.set_item("dfd_calls", c.dfd_calls)?;
    d.set_item("bound_calls", c.bound_calls())?;
    d.set_item("node_visits", c.node_visits)?;
    Ok(d)
}

/// A Cluster Center Tree over a set of trajectories.
#[pyclass(name = "Index")]
struct PyIndex {
    inner: CctIndex,
}

#[pymethods]
impl PyIndex {
    /// Builds an index. `variant` is one of exact, relaxed, approx, inserts.
    #[new]
    #[pyo3(signature = (trajectories, ids=None, variant="relaxed", seed=0))]
    fn new(trajectories: Vec<Vec<Vec<f64>>>, ids: Option<Vec<u64>>, variant: &str, seed: u64) -> PyResult<Self> {
        let variant = match variant {
            "exact" => BuildVariant::Exact,
            "relaxed" => BuildVariant::Relaxed,
            "approx" => BuildVariant::Approx,
            "inserts" => BuildVariant::Inserts,
            v => return Err(PyValueError::new_err(format!("unknown build variant {v:?}"))),
        };
        let set = to_set(trajectories, ids)?;
        let inner = CctIndex::build(set, variant, &BuildOptions::seeded(seed)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CctIndex::load(path).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn build_stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        counters(py, &self.inner.build_stats().totals())
    }

    /// Inserts one trajectory. `variant` is one of exact, approx, standard.
    #[pyo3(signature = (id, points, variant="exact"))]
    fn insert(&mut self, id: u64, points: Vec<Vec<f64>>, variant: &str) -> PyResult<()> {
        let variant = match variant {
            "exact" => InsertVariant::Exact,
            "approx" => InsertVariant::Approx,
            "standard" => InsertVariant::Standard,
            v => return Err(PyValueError::new_err(format!("unknown insert variant {v:?}"))),
        };
        self.inner.insert(to_traj(id, points)?, variant).map_err(err)?;
        Ok(())
    }

    fn trajectory(&self, id: u64) -> Option<Vec<Vec<f64>>> {
        self.inner.trajectory(id).map(to_points)
    }

    /// Runs one query. Give `k` for kNN, `tau` for a range query, neither for NN.
    /// At most one of `eadd`, `erel` and `implicit` may be set.
    #[pyo3(signature = (points, k=None, tau=None, eadd=None, erel=None, implicit=false, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn query<'py>(
        &self,
        py: Python<'py>,
        points: Vec<Vec<f64>>,
        k: Option<usize>,
        tau: Option<f64>,
        eadd: Option<f64>,
        erel: Option<f64>,
        implicit: bool,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let kind = match (k, tau) {
            (Some(k), None) => QueryKind::Knn(k),
            (None, Some(t)) => QueryKind::Rnn(t),
            (None, None) => QueryKind::Nn,
            _ => return Err(PyValueError::new_err("give k or tau, not both")),
        };
        let model = match (eadd, erel, implicit) {
            (None, None, false) => ErrorModel::Additive(0.0),
            (Some(e), None, false) => ErrorModel::Additive(e),
            (None, Some(e), false) => ErrorModel::Relative(e),
            (None, None, true) => ErrorModel::Implicit,
            _ => return Err(PyValueError::new_err("eadd, erel and implicit are exclusive")),
        };
        let q = to_traj(u64::MAX, points)?;
        let spec = QuerySpec::new(kind).with_error(model).with_seed(seed);
        let res = cct_core::query(&self.inner, &q, &spec).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("ids", res.ids)?;
        d.set_item("stats", counters(py, &res.instr.totals())?)?;
        if let Some(e) = res.reported_error {
            d.set_item("e_add", e.e_add)?;
            d.set_item("e_rel", e.e_rel)?;
        }
        Ok(d)
    }

    /// Tree quality metrics as a JSON string.
    #[pyo3(signature = (oracle=false))]
    fn quality(&self, oracle: bool) -> PyResult<String> {
        let q = self.inner.quality(oracle).map_err(err)?;
        serde_json::to_string(&q).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn check_invariants(&self) -> PyResult<bool> {
        Ok(self.inner.check_nesting().is_ok() && self.inner.bounding_violations_exact(1e-9).is_empty())
    }
}

/// Continuous Fréchet distance between two trajectories.
#[pyfunction]
fn frechet_distance(p: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> PyResult<f64> {
    frechet::distance(&to_traj(0, p)?, &to_traj(1, q)?, DistanceMode::Auto).map_err(err)
}

/// Whether the continuous Fréchet distance is at most `eps`.
#[pyfunction]
fn frechet_decide(p: Vec<Vec<f64>>, q: Vec<Vec<f64>>, eps: f64) -> PyResult<bool> {
    frechet::decide(&to_traj(0, p)?, &to_traj(1, q)?, eps).map_err(err)
}

/// Synthetic clustered random walks. Returns (ids, trajectories, query pool ids).
#[pyfunction]
#[pyo3(signature = (total=5000, cluster_size=10, straightness=0.95, max_edge=0.6, avg_size=15, dim=2, seed=0, noise=500, pool=1000))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn gen_synthetic(
    total: usize,
    cluster_size: usize,
    straightness: f64,
    max_edge: f64,
    avg_size: usize,
    dim: usize,
    seed: u64,
    noise: usize,
    pool: usize,
) -> PyResult<(Vec<u64>, Vec<Vec<Vec<f64>>>, Vec<u64>)> {
    let cfg = SyntheticConfig {
        cluster_size,
        straightness,
        max_edge,
        avg_size,
        total,
        dim,
        seed,
        noise_count: noise,
        query_count: pool,
    };
    let data = datagen::gen_synthetic(&cfg).map_err(err)?;
    let ids = data.set.iter().map(|t| t.id()).collect();
    let trajs = data.set.iter().map(to_points).collect();
    Ok((ids, trajs, data.query_pool))
}

#[pymodule]
fn cct(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyIndex>()?;
    m.add_function(wrap_pyfunction!(frechet_distance, m)?)?;
    m.add_function(wrap_pyfunction!(frechet_decide, m)?)?;
    m.add_function(wrap_pyfunction!(gen_synthetic, m)?)?;
    Ok(())
}
