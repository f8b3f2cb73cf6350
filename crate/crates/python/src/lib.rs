//! Python extension module exposing the core types and operations:
//! exact SL₂(𝔽_p) arithmetic, subset algebra, the growth pipeline, the
//! factorizer, and the Cayley-graph experiments.
//!
//! Matrices cross the boundary as 4-tuples (a, b, c, d) of residues;
//! subsets as the `Subset` class or lists of canonical indices.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use sl2lab::borel::Factorizer as CoreFactorizer;
use sl2lab::cayley::{
    bfs_diameter, free_word_check, girth as cayley_girth, mixing_time, offdiag_generators,
    random_pairs, spectral_lambda2_dense, spectral_lambda2_power, CayleyContext,
    DEFAULT_BFS_CAP, DEFAULT_WALK_CAP, DENSE_SPECTRAL_CAP,
};
use sl2lab::growth::{growth_certificate, GrowthParams};
use sl2lab::gset::{
    self, borel_subgroup, pathological_fixture, random_generating_set, random_subset,
    FixtureKind, GroupSet, DEFAULT_CLOSURE_CAP,
};
use sl2lab::seed::trial_rng;
use sl2lab::sl2::{SL2Ctx, SL2Elem};
use sl2lab::zpadd::{sorge_find_xi, sumproduct_stats, ZpSet};

type PyMat = (u64, u64, u64, u64);

fn to_py(g: SL2Elem) -> PyMat {
    (g.a.value(), g.b.value(), g.c.value(), g.d.value())
}

fn val_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Group context for one prime p.
#[pyclass]
#[derive(Clone)]
struct Context {
    ctx: SL2Ctx,
}

impl Context {
    fn elem(&self, m: PyMat) -> PyResult<SL2Elem> {
        self.ctx.new_elem(m.0, m.1, m.2, m.3).map_err(val_err)
    }

    fn gens_from(&self, spec: &Bound<'_, PyAny>) -> PyResult<Vec<SL2Elem>> {
        if let Ok(name) = spec.extract::<String>() {
            return match name.as_str() {
                "offdiag1" => offdiag_generators(self.ctx, 1).map_err(val_err),
                "offdiag3" => offdiag_generators(self.ctx, 3).map_err(val_err),
                lit => self.ctx.parse_elem(lit).map(|g| vec![g]).map_err(val_err),
            };
        }
        let mats: Vec<PyMat> = spec.extract()?;
        mats.into_iter().map(|m| self.elem(m)).collect()
    }
}

#[pymethods]
impl Context {
    #[new]
    fn new(p: u64) -> PyResult<Self> {
        Ok(Context {
            ctx: SL2Ctx::new(p).map_err(val_err)?,
        })
    }

    #[getter]
    fn p(&self) -> u64 {
        self.ctx.p()
    }

    /// |SL₂(𝔽_p)| = p(p² − 1).
    #[getter]
    fn order(&self) -> u64 {
        self.ctx.order()
    }

    fn mul(&self, g: PyMat, h: PyMat) -> PyResult<PyMat> {
        Ok(to_py(self.ctx.mul(self.elem(g)?, self.elem(h)?)))
    }

    fn inv(&self, g: PyMat) -> PyResult<PyMat> {
        Ok(to_py(self.ctx.inv(self.elem(g)?)))
    }

    fn trace(&self, g: PyMat) -> PyResult<u64> {
        Ok(self.ctx.trace(self.elem(g)?).value())
    }

    fn encode(&self, g: PyMat) -> PyResult<u64> {
        Ok(self.ctx.encode(self.elem(g)?))
    }

    fn decode(&self, idx: u64) -> PyResult<PyMat> {
        Ok(to_py(self.ctx.decode(idx).map_err(val_err)?))
    }

    /// Parse the "a,b;c,d" literal format.
    fn parse(&self, s: &str) -> PyResult<PyMat> {
        Ok(to_py(self.ctx.parse_elem(s).map_err(val_err)?))
    }

    fn format(&self, g: PyMat) -> PyResult<String> {
        Ok(self.ctx.format_elem(self.elem(g)?))
    }

    fn fp_inv(&self, a: u64) -> PyResult<u64> {
        let f = self.ctx.field();
        Ok(f.inv(f.elem(a)).map_err(val_err)?.value())
    }

    /// Canonical square root mod p, or None for non-residues.
    fn fp_sqrt(&self, a: u64) -> Option<u64> {
        let f = self.ctx.field();
        f.sqrt(f.elem(a)).map(|r| r.value())
    }

    /// (trace, refinement tag); equal iff conjugate.
    fn conj_class(&self, g: PyMat) -> PyResult<(u64, String)> {
        let id = self.ctx.conj_class_id(self.elem(g)?);
        Ok((id.trace, format!("{:?}", id.tag)))
    }

    /// "Split" | "NonSplit" | "Parabolic" | "Central".
    fn eigen_kind(&self, g: PyMat) -> PyResult<String> {
        Ok(format!("{:?}", self.ctx.eigen(self.elem(g)?).kind))
    }

    // -- subsets ---------------------------------------------------------

    fn subset(&self, mats: Vec<PyMat>) -> PyResult<Subset> {
        let elems: Vec<SL2Elem> = mats
            .into_iter()
            .map(|m| self.elem(m))
            .collect::<PyResult<_>>()?;
        Ok(Subset {
            inner: GroupSet::from_elems(self.ctx, &elems),
        })
    }

    fn subset_from_indices(&self, indices: Vec<u64>) -> PyResult<Subset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.ctx.order()) {
            return Err(PyValueError::new_err(format!("index {bad} out of range")));
        }
        Ok(Subset {
            inner: GroupSet::from_index_iter(self.ctx, indices),
        })
    }

    fn random_subset(&self, k: usize, seed: u64) -> PyResult<Subset> {
        if k as u64 > self.ctx.order() {
            return Err(PyValueError::new_err("k exceeds the group order"));
        }
        let mut rng = trial_rng(seed, 0);
        Ok(Subset {
            inner: random_subset(self.ctx, k, &mut rng),
        })
    }

    fn random_generating_subset(&self, k: usize, seed: u64) -> PyResult<Subset> {
        let mut rng = trial_rng(seed, 0);
        Ok(Subset {
            inner: random_generating_set(self.ctx, k, &mut rng, DEFAULT_CLOSURE_CAP)
                .map_err(run_err)?,
        })
    }

    /// The upper-triangular Borel subgroup, |H| = p(p−1).
    fn borel(&self) -> Subset {
        Subset {
            inner: borel_subgroup(self.ctx),
        }
    }

    /// "coset" (gH) or "subgroup_plus_point" (H ∪ {g}).
    fn fixture(&self, kind: &str) -> PyResult<Subset> {
        let kind = match kind {
            "coset" => FixtureKind::Coset,
            "subgroup_plus_point" => FixtureKind::SubgroupPlusPoint,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown fixture kind {other:?}"
                )))
            }
        };
        Ok(Subset {
            inner: pathological_fixture(self.ctx, kind).map_err(val_err)?.set,
        })
    }

    // -- experiments -----------------------------------------------------

    /// Exact diameter and sphere sizes for the given generators.
    fn diameter(&self, gens: &Bound<'_, PyAny>) -> PyResult<(u32, Vec<u64>)> {
        let cx = CayleyContext::new(self.ctx, &self.gens_from(gens)?).map_err(val_err)?;
        let res = bfs_diameter(&cx, DEFAULT_BFS_CAP).map_err(run_err)?;
        Ok((res.diameter, res.sphere_sizes))
    }

    /// Shortest nontrivial relation length up to max_len, or None.
    fn girth(&self, gens: &Bound<'_, PyAny>, max_len: u32) -> PyResult<Option<u32>> {
        let cx = CayleyContext::new(self.ctx, &self.gens_from(gens)?).map_err(val_err)?;
        Ok(cayley_girth(&cx, max_len, DEFAULT_BFS_CAP)
            .map_err(run_err)?
            .relation_len)
    }

    fn mixing_time(&self, gens: &Bound<'_, PyAny>) -> PyResult<u32> {
        let cx = CayleyContext::new(self.ctx, &self.gens_from(gens)?).map_err(val_err)?;
        Ok(mixing_time(&cx, DEFAULT_WALK_CAP).map_err(run_err)?.mixing_time)
    }

    /// λ₂ of the lazy walk kernel; method: "dense" | "power" | "auto".
    fn lambda2(&self, gens: &Bound<'_, PyAny>, method: &str) -> PyResult<f64> {
        let cx = CayleyContext::new(self.ctx, &self.gens_from(gens)?).map_err(val_err)?;
        let use_dense = match method {
            "dense" => true,
            "power" => false,
            "auto" => self.ctx.order() <= DENSE_SPECTRAL_CAP,
            other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
        };
        let out = if use_dense {
            spectral_lambda2_dense(&cx).map_err(run_err)?
        } else {
            spectral_lambda2_power(&cx, 1e-8, 1_000_000, DEFAULT_WALK_CAP).map_err(run_err)?
        };
        Ok(out.lambda2)
    }

    /// Full certificate chain for one subset, as a JSON string.
    fn growth_certificate_json(&self, a: &Subset, delta: f64) -> PyResult<String> {
        let chain = growth_certificate(&a.inner, delta, &GrowthParams::default())
            .map_err(run_err)?;
        Ok(chain.to_json())
    }

    /// (generating_fraction, short_loop_fraction) over uniform pairs.
    fn random_pairs_summary(&self, trials: u64, seed: u64) -> PyResult<(f64, f64)> {
        let stats = random_pairs(self.ctx, trials, seed, DEFAULT_BFS_CAP).map_err(run_err)?;
        Ok((stats.generating_fraction, stats.short_loop_fraction))
    }
}

/// Finite subset of SL₂(𝔽_p) over canonical indices.
#[pyclass]
#[derive(Clone)]
struct Subset {
    inner: GroupSet,
}

#[pymethods]
impl Subset {
    #[getter]
    fn card(&self) -> u64 {
        self.inner.card()
    }

    fn contains(&self, g: PyMat) -> PyResult<bool> {
        let ctx = self.inner.ctx();
        Ok(self
            .inner
            .contains_elem(ctx.new_elem(g.0, g.1, g.2, g.3).map_err(val_err)?))
    }

    fn indices(&self) -> Vec<u64> {
        self.inner.to_sorted_indices()
    }

    fn union(&self, other: &Subset) -> PyResult<Subset> {
        Ok(Subset {
            inner: self.inner.union(&other.inner).map_err(val_err)?,
        })
    }

    fn inverse(&self) -> Subset {
        Subset {
            inner: self.inner.inverse_set(),
        }
    }

    /// Exact product set {x·y}.
    fn product(&self, other: &Subset) -> PyResult<Subset> {
        Ok(Subset {
            inner: gset::product_set(&self.inner, &other.inner).map_err(val_err)?,
        })
    }

    /// Ball A_r: products of at most r factors from A ∪ A⁻¹ ∪ {1}.
    fn ball(&self, r: usize) -> PyResult<Subset> {
        if r == 0 {
            return Err(PyValueError::new_err("radius must be >= 1"));
        }
        Ok(Subset {
            inner: gset::ball(&self.inner, r),
        })
    }

    fn ruzsa_distance(&self, other: &Subset) -> PyResult<f64> {
        gset::ruzsa_distance(&self.inner, &other.inner).map_err(val_err)
    }

    fn generates(&self) -> PyResult<bool> {
        Ok(gset::generates(&self.inner, DEFAULT_CLOSURE_CAP)
            .map_err(run_err)?
            .0)
    }

    fn trace_set(&self) -> Vec<u64> {
        sl2lab::growth::trace_set(&self.inner).to_vec()
    }

    /// Sorted canonical indices as a JSON array.
    fn to_json(&self) -> String {
        self.inner.to_json()
    }
}

/// Precomputed bounded-length factorization tables over one source set.
#[pyclass]
struct Factorizer {
    inner: CoreFactorizer,
}

#[pymethods]
impl Factorizer {
    #[new]
    fn new(source: &Subset, force: bool) -> PyResult<Self> {
        Ok(Factorizer {
            inner: CoreFactorizer::new(source.inner.clone(), force).map_err(val_err)?,
        })
    }

    /// Word over A ∪ A⁻¹ of length ≤ 64: list of (canonical index, inverted).
    fn factorize(&self, g: PyMat) -> PyResult<Vec<(u64, bool)>> {
        let ctx = self.inner.ctx();
        let target = ctx.new_elem(g.0, g.1, g.2, g.3).map_err(val_err)?;
        let word = self.inner.factorize(target).map_err(run_err)?;
        Ok(word.factors.iter().map(|f| (f.index, f.inverted)).collect())
    }

    /// Construction statistics (bucket sizes, pigeonhole diagonals, word
    /// length bound) as a dict.
    fn stats(&self) -> std::collections::HashMap<String, u64> {
        let s = &self.inner.stats;
        [
            ("p", s.p),
            ("set_card", s.set_card),
            ("lower_bucket_size", s.lower_bucket_size),
            ("upper_bucket_size", s.upper_bucket_size),
            ("upper_attac_r", s.upper_attac_r),
            ("lower_attac_r", s.lower_attac_r),
            ("max_unipotent_word_len", s.max_unipotent_word_len as u64),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// max(|A+A|, |A·A|) measurement for A ⊆ 𝔽_p^*.
#[pyfunction]
fn sumproduct(p: u64, members: Vec<u64>) -> PyResult<(u64, u64, f64)> {
    let a = ZpSet::from_members(p, members);
    let st = sumproduct_stats(&a).map_err(val_err)?;
    Ok((st.sum_card, st.prod_card, st.exponent))
}

/// Dilate lemma: (xi, |A + xi·A|, bound_holds, count_holds).
#[pyfunction]
fn sorge(p: u64, a: Vec<u64>, s: Vec<u64>, c: f64) -> PyResult<(u64, u64, bool, bool)> {
    let a = ZpSet::from_members(p, a);
    let s = ZpSet::from_members(p, s);
    let out = sorge_find_xi(&a, &s, c).map_err(val_err)?;
    Ok((out.xi, out.sumset_card, out.bound_holds, out.count_holds))
}

/// (words_tested, violations) for integer generators modulo p.
#[pyfunction]
fn free_words(
    gens: Vec<(i64, i64, i64, i64)>,
    p: u64,
    max_len: u32,
    trials: u64,
    seed: u64,
) -> PyResult<(u64, u64)> {
    let mats: Vec<[i64; 4]> = gens.iter().map(|&(a, b, c, d)| [a, b, c, d]).collect();
    let report = free_word_check(&mats, p, max_len, trials, seed).map_err(val_err)?;
    Ok((report.words_tested, report.violations))
}

#[pymodule]
fn _sl2lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Context>()?;
    m.add_class::<Subset>()?;
    m.add_class::<Factorizer>()?;
    m.add_function(wrap_pyfunction!(sumproduct, m)?)?;
    m.add_function(wrap_pyfunction!(sorge, m)?)?;
    m.add_function(wrap_pyfunction!(free_words, m)?)?;
    Ok(())
}
