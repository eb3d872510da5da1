//! Patch representations at scale `V_k` and the minimal count `pat_ω(A_n, V_k)`.
//!
//! Two patches are `V_k`-close when each point of one lies within 2-adic
//! distance `2^{-k}` of a point of the other. Because `V_k` is a subgroup this
//! says exactly that both patches have the same image in `Q_2 / V_k`, so
//! closeness is an equivalence relation and the closeness graph is a disjoint
//! union of cliques. The general solvers in [`crate::domination`] are still
//! used; on such graphs greedy and the packing bound coincide.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ball::coset_rep;
use crate::construction::StageSet;
use crate::domination::{self, Neighbourhoods};
use crate::dyadic::Dyadic;
use crate::patch::{patch_set, Patch, PatchSet};
use crate::pointset::{xi_plus, FinitePointSet};
use crate::{Error, Result};

pub const DEFAULT_EXACT_LIMIT: usize = 24;

fn image_mod_v(p: &Patch, k: i64) -> BTreeSet<Dyadic> {
    p.points.iter().map(|x| coset_rep(x, -k)).collect()
}

pub fn v_close(p: &Patch, q: &Patch, k: i64) -> Result<bool> {
    if p.radius_exp != q.radius_exp {
        return Err(Error::InvalidParameter(format!(
            "patches of different radius: A_{} vs A_{}",
            p.radius_exp, q.radius_exp
        )));
    }
    Ok(image_mod_v(p, k) == image_mod_v(q, k))
}

/// Distinct patches with the `V_k`-closeness relation.
#[derive(Debug, Clone)]
pub struct ClosenessGraph {
    pub vertices: Vec<Patch>,
    pub k: i64,
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl ClosenessGraph {
    pub fn new(patches: &PatchSet, k: i64) -> Self {
        let vertices: Vec<Patch> = patches.patches().cloned().collect();
        let mut ids: HashMap<BTreeSet<Dyadic>, usize> = HashMap::new();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of = Vec::with_capacity(vertices.len());
        for (v, p) in vertices.iter().enumerate() {
            let next = ids.len();
            let c = *ids.entry(image_mod_v(p, k)).or_insert(next);
            if c == classes.len() {
                classes.push(Vec::new());
            }
            classes[c].push(v);
            class_of.push(c);
        }
        ClosenessGraph {
            vertices,
            k,
            class_of,
            classes,
        }
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.class_of[u] == self.class_of[v]
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

impl Neighbourhoods for ClosenessGraph {
    fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    fn closed(&self, v: usize) -> &[usize] {
        &self.classes[self.class_of[v]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BranchAndBound,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representation {
    /// Upper bound on `pat_ω(A, V_k)`; equal to it when `exact`.
    pub count: usize,
    pub representatives: Vec<Patch>,
    pub exact: bool,
    pub lower_bound: usize,
    pub method: Method,
}

/// Minimum dominating set of the closeness graph over distinct patches.
///
/// Equal patches are mutually close, so dominating the distinct patches is
/// the same as dominating all anchors.
pub fn min_representation(patches: &PatchSet, k: i64, exact_limit: usize) -> Representation {
    let graph = ClosenessGraph::new(patches, k);
    let n = graph.vertex_count();
    let (chosen, method) = match (n <= exact_limit.min(64)).then(|| domination::exact(&graph)) {
        Some(Some(set)) => (set, Method::BranchAndBound),
        _ => (domination::greedy(&graph), Method::Greedy),
    };
    let count = chosen.len();
    let lower_bound = match method {
        Method::BranchAndBound => count,
        Method::Greedy => domination::packing_lower_bound(&graph),
    };
    Representation {
        count,
        representatives: chosen
            .into_iter()
            .map(|v| graph.vertices[v].clone())
            .collect(),
        exact: lower_bound == count,
        lower_bound,
        method,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatRow {
    pub n: u32,
    pub k: i64,
    pub pat_count: usize,
    pub exact: bool,
    pub lower_bound: usize,
    pub ratio: f64,
}

/// `pat_ω(A_n, V_k)` for each built stage, row 0 from stage 1.
pub fn pat_series(stages: &[StageSet], k: i64, exact_limit: usize) -> Vec<PatRow> {
    let Some(first) = stages.first() else {
        return Vec::new();
    };
    std::iter::once((0u32, &first.omega))
        .chain(stages.iter().map(|s| (s.n as u32, &s.omega)))
        .map(|(n, omega)| {
            let rep = min_representation(&patch_set(omega, i64::from(n)), k, exact_limit);
            PatRow {
                n,
                k,
                pat_count: rep.count,
                exact: rep.exact,
                lower_bound: rep.lower_bound,
                ratio: (rep.count as f64).ln() / (1u64 << n) as f64,
            }
        })
        .collect()
}

/// `(ξ^{a_l} + ω_l) ∩ A_{a_K}` for the last built stage `K`: the model set
/// that `ω` stays `V_l`-close to.
pub fn model_set_companion(stages: &[StageSet], l: usize) -> Result<FinitePointSet> {
    let last = stages
        .last()
        .ok_or_else(|| Error::InvalidParameter("no stages".into()))?;
    let stage = stages
        .iter()
        .find(|s| s.n as usize == l)
        .ok_or_else(|| Error::InvalidParameter(format!("stage {l} not built")))?;
    xi_plus(&stage.omega, stage.a_u32(), last.a_u32())
}
