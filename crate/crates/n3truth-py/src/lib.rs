//! Python module `n3truth`.

use n3truth::model::Model as CoreModel;
use n3truth::proof::{curry_derivation as core_curry, Calculus, Limits, Outcome, Prover};
use n3truth::semantics::{validate_structure, Assignment, Evaluator, Point};
use n3truth::syntax::{parse_formula, parse_sequent, Formula, Universe};
use n3truth::truth::{iterate_fixed_point, Cond, Engine, FixedPointResult, RunOptions};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn bad<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cond_of(name: &str) -> PyResult<Cond> {
    Cond::parse(name).ok_or_else(|| bad(format!("unknown condition `{name}`")))
}

/// A loaded model file.
#[pyclass(module = "n3truth")]
struct Model {
    inner: CoreModel,
}

impl Model {
    fn formula(&self, text: &str) -> PyResult<Formula> {
        parse_formula(text, &self.inner.env).map(|f| self.inner.env.canonical(&f)).map_err(bad)
    }
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Model> {
        CoreModel::load(std::path::Path::new(path)).map(|inner| Model { inner }).map_err(bad)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Model> {
        CoreModel::parse(text).map(|inner| Model { inner }).map_err(bad)
    }

    #[getter]
    fn digest(&self) -> String {
        self.inner.digest.clone()
    }

    #[getter]
    fn n_interps(&self) -> usize {
        self.inner.structure.n_interps()
    }

    #[getter]
    fn n_worlds(&self) -> usize {
        self.inner.structure.n_worlds()
    }

    /// Violations of the structure conditions; empty when valid.
    fn validate(&self) -> Vec<String> {
        validate_structure(&self.inner.structure, &self.inner.env).into_iter().map(|v| v.0).collect()
    }

    #[pyo3(signature = (depth=None))]
    fn universe(&self, depth: Option<usize>) -> PyResult<Vec<String>> {
        let u = self.inner.universe(depth).map_err(bad)?;
        Ok(u.iter().map(|f| f.to_string()).collect())
    }

    /// "true", "false" or "undefined", with the truth predicate empty.
    #[pyo3(signature = (formula, interp=0, world=0))]
    fn eval(&self, formula: &str, interp: usize, world: usize) -> PyResult<String> {
        let f = self.formula(formula)?;
        let s = &self.inner.structure;
        let closed = n3truth::semantics::close_under(s, &f, &Assignment::new()).map_err(bad)?;
        if interp >= s.n_interps() || world >= s.n_worlds() {
            return Err(bad("point out of range"));
        }
        let v = Evaluator::new(s, &self.inner.env).value(Point { w: world, j: interp, m: None }, &closed).map_err(bad)?;
        Ok(v.to_string())
    }

    #[pyo3(signature = (cond=None, depth=None))]
    fn fixpoint(&self, cond: Option<&str>, depth: Option<usize>) -> PyResult<FixedPoint> {
        let cond = match cond {
            Some(c) => cond_of(c)?,
            None => self.inner.cond.unwrap_or(Cond::Nve),
        };
        let u = self.inner.universe(Some(depth.unwrap_or(self.inner.depth))).map_err(bad)?;
        let r = iterate_fixed_point(&self.inner.structure, &self.inner.env, &u, cond, &RunOptions::default())
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(FixedPoint { model: self.inner.clone(), u, cond, r })
    }

    fn __repr__(&self) -> String {
        format!("<Model {} interps, {} worlds>", self.n_interps(), self.n_worlds())
    }
}

/// Outcome of a fixed-point run, kept together with its model.
#[pyclass(module = "n3truth")]
struct FixedPoint {
    model: CoreModel,
    u: Universe,
    cond: Cond,
    r: FixedPointResult,
}

impl FixedPoint {
    fn with_kss<T>(&self, f: impl FnOnce(&Engine<'_>, &n3truth::truth::Family<'_>) -> T) -> PyResult<T> {
        if !self.r.is_fixed_point() {
            return Err(PyRuntimeError::new_err("no fixed point was reached"));
        }
        let mut e = Engine::new(&self.model.structure, &self.model.env, &self.u, Limits::default());
        let fam = e.result_family(self.cond, &self.r);
        let kss = e.generated_substructure(&fam);
        Ok(f(&e, &kss.sub))
    }

    fn formula(&self, text: &str) -> PyResult<Formula> {
        parse_formula(text, &self.model.env).map(|f| self.model.env.canonical(&f)).map_err(bad)
    }
}

#[pymethods]
impl FixedPoint {
    #[getter]
    fn cond(&self) -> &'static str {
        self.cond.name()
    }

    #[getter]
    fn status(&self) -> String {
        self.r.status.clone()
    }

    #[getter]
    fn is_fixed_point(&self) -> bool {
        self.r.is_fixed_point()
    }

    #[getter]
    fn reason(&self) -> Option<String> {
        self.r.reason.clone()
    }

    #[getter]
    fn detail(&self) -> Option<String> {
        self.r.detail.clone()
    }

    #[getter]
    fn stage(&self) -> usize {
        self.r.stage
    }

    #[getter]
    fn verified(&self) -> bool {
        self.r.verification.as_ref().is_some_and(|v| v.theta_fixes_g && v.big_theta_fixes_z)
    }

    /// Sentences of g at the named world and interpretation.
    #[pyo3(signature = (interp, world=None))]
    fn cell(&self, interp: &str, world: Option<&str>) -> PyResult<Vec<String>> {
        self.r
            .valuation
            .iter()
            .find(|c| c.interp == interp && world.is_none_or(|w| c.world == w))
            .map(|c| c.sentences.clone())
            .ok_or_else(|| bad(format!("no cell for {interp}")))
    }

    fn naivety(&self) -> PyResult<Vec<String>> {
        self.with_kss(|e, z| e.check_naivety(z))
    }

    /// (principle, asserted, instances, violations) per principle.
    fn principles(&self) -> PyResult<Vec<(String, bool, usize, Vec<String>)>> {
        let cond = self.cond;
        self.with_kss(|e, z| {
            e.check_principles(cond, z).into_iter().map(|p| (p.principle, p.asserted, p.instances, p.violations)).collect()
        })
    }

    /// Both sides of the deduction theorem over the fixed point.
    fn deduction_theorem(&self, gamma: Vec<String>, phi: &str, psi: &str) -> PyResult<(bool, bool)> {
        let g = gamma.iter().map(|t| self.formula(t)).collect::<PyResult<Vec<_>>>()?;
        let (phi, psi) = (self.formula(phi)?, self.formula(psi)?);
        self.with_kss(|e, z| e.deduction_theorem(z, &g, &phi, &psi))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.r).expect("result serializes")
    }

    fn __repr__(&self) -> String {
        format!("<FixedPoint {} {} at stage {}>", self.cond.name(), self.r.status, self.r.stage)
    }
}

/// Returns (verdict, proof text or None). Unknown names are declared on the
/// fly unless a model is given.
#[pyfunction]
#[pyo3(signature = (sequent, calculus="n3", identity=false, model=None, budget=200_000))]
fn prove(
    sequent: &str,
    calculus: &str,
    identity: bool,
    model: Option<&Model>,
    budget: usize,
) -> PyResult<(String, Option<String>)> {
    let calc = Calculus::parse(calculus).ok_or_else(|| bad(format!("unknown calculus `{calculus}`")))?;
    let mut env = model.map(|m| m.inner.env.clone()).unwrap_or_default();
    let (g, d) = parse_sequent(sequent, &mut env, model.is_none()).map_err(bad)?;
    let limits = Limits { max_nodes: budget, ..Limits::default() };
    Ok(match Prover::new(calc, identity, &env, limits).prove(&g, &d) {
        Outcome::Proved(t) => ("proved".into(), t.map(|t| t.to_text())),
        Outcome::NotProved => ("not-proved".into(), None),
        Outcome::Unknown => ("unknown".into(), None),
    })
}

/// The derivation of `false` from a Curry sentence, as indented text.
#[pyfunction]
fn curry_derivation(model: &Model, name: &str) -> PyResult<String> {
    core_curry(&model.inner.env, name).map(|t| t.to_text()).map_err(bad)
}

/// Runs the command line in-process: (exit code, stdout, stderr).
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let out = n3truth::cli::run(std::iter::once("n3truth".to_string()).chain(args));
    (out.code, out.stdout, out.stderr)
}

#[pymodule(name = "n3truth")]
fn py_n3truth(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<FixedPoint>()?;
    m.add_function(wrap_pyfunction!(prove, m)?)?;
    m.add_function(wrap_pyfunction!(curry_derivation, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
