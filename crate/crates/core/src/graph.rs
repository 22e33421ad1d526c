//! Index families, their incidence graphs, and ergodicity.
//!
//! An index family assigns to every coordinate `i ∈ 1..=p` a vector of source
//! indices `α_i`. The incidence graph has an edge `(α_{i,j}, i)` for every
//! selected source. The mean-type mapping built from the family has a unique
//! invariant mean when that graph is ergodic: strongly connected with period 1.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index vectors `α_1, …, α_p` with 1-based entries in `1..=p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily")]
pub struct IndexFamily {
    p: usize,
    alpha: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawFamily {
    p: usize,
    alpha: Vec<Vec<usize>>,
    #[serde(default)]
    d: Option<Vec<usize>>,
}

impl TryFrom<RawFamily> for IndexFamily {
    type Error = Error;

    fn try_from(raw: RawFamily) -> Result<Self> {
        let fam = IndexFamily::new(raw.p, raw.alpha)?;
        if let Some(d) = raw.d {
            if d != fam.d() {
                return Err(Error::InvalidFamily(format!(
                    "declared lengths {d:?} do not match alpha lengths {:?}",
                    fam.d()
                )));
            }
        }
        Ok(fam)
    }
}

impl IndexFamily {
    pub fn new(p: usize, alpha: Vec<Vec<usize>>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidFamily("dimension p must be positive".into()));
        }
        if alpha.len() != p {
            return Err(Error::InvalidFamily(format!(
                "expected {p} index vectors, got {}",
                alpha.len()
            )));
        }
        for (i, a) in alpha.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::InvalidFamily(format!(
                    "index vector {} is empty",
                    i + 1
                )));
            }
            if let Some(&bad) = a.iter().find(|&&j| j == 0 || j > p) {
                return Err(Error::Index { index: bad, p });
            }
        }
        Ok(Self { p, alpha })
    }

    /// `α_i = (1..=p) \ {i}`: the family behind the barycentric operator.
    pub fn barycentric(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidFamily(
                "the barycentric family needs p >= 2".into(),
            ));
        }
        let alpha = (1..=p)
            .map(|i| (1..=p).filter(|&j| j != i).collect())
            .collect();
        Self::new(p, alpha)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> Vec<usize> {
        self.alpha.iter().map(Vec::len).collect()
    }

    pub fn alpha(&self) -> &[Vec<usize>] {
        &self.alpha
    }

    pub fn graph(&self) -> IncidenceGraph {
        build_graph(self)
    }
}

/// A directed graph on vertices `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceGraph {
    vertex_count: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl IncidenceGraph {
    /// A graph from explicit 1-based edges.
    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        for &(u, v) in &edges {
            for w in [u, v] {
                if w == 0 || w > vertex_count {
                    return Err(Error::Index {
                        index: w,
                        p: vertex_count,
                    });
                }
            }
        }
        Ok(Self {
            vertex_count,
            edges,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    /// 0-based out-neighbour lists (or in-neighbours when `reverse`).
    fn adjacency(&self, reverse: bool) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(u, v) in &self.edges {
            if reverse {
                adj[v - 1].push(u - 1);
            } else {
                adj[u - 1].push(v - 1);
            }
        }
        adj
    }
}

/// BFS levels from vertex 0; `None` for unreachable vertices.
fn bfs_levels(adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    if adj.is_empty() {
        return level;
    }
    level[0] = Some(0);
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        let next = level[u].map(|l| l + 1);
        for &v in &adj[u] {
            if level[v].is_none() {
                level[v] = next;
                queue.push_back(v);
            }
        }
    }
    level
}

/// Builds `G_α`; repeated indices give a single edge.
pub fn build_graph(fam: &IndexFamily) -> IncidenceGraph {
    let edges = fam
        .alpha
        .iter()
        .enumerate()
        .flat_map(|(i, a)| a.iter().map(move |&src| (src, i + 1)))
        .collect();
    IncidenceGraph {
        vertex_count: fam.p,
        edges,
    }
}

/// Strong connectivity: every vertex reaches and is reached from vertex 1.
pub fn is_irreducible(g: &IncidenceGraph) -> bool {
    if g.vertex_count == 0 {
        return false;
    }
    let forward = bfs_levels(&g.adjacency(false));
    let backward = bfs_levels(&g.adjacency(true));
    forward.iter().chain(&backward).all(Option::is_some)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The gcd of all cycle lengths of an irreducible graph.
///
/// With BFS levels `ℓ` from any root, the period is the gcd over all edges
/// `(u, v)` of `ℓ(u) + 1 − ℓ(v)`.
pub fn period(g: &IncidenceGraph) -> Result<usize> {
    if !is_irreducible(g) {
        return Err(Error::NotIrreducible);
    }
    let level = bfs_levels(&g.adjacency(false));
    let d = g.edges.iter().fold(0usize, |acc, &(u, v)| {
        let lu = level[u - 1].expect("irreducible");
        let lv = level[v - 1].expect("irreducible");
        gcd(acc, (lu + 1).abs_diff(lv))
    });
    if d == 0 {
        // strongly connected without edges: a single isolated vertex
        return Err(Error::NoCycles);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub irreducible: bool,
    /// Defined only for irreducible graphs with at least one cycle.
    pub period: Option<usize>,
    pub ergodic: bool,
}

pub fn ergodicity(g: &IncidenceGraph) -> ErgodicityReport {
    let irreducible = is_irreducible(g);
    let period = if irreducible { period(g).ok() } else { None };
    ErgodicityReport {
        irreducible,
        period,
        ergodic: irreducible && period == Some(1),
    }
}

pub fn is_ergodic(fam: &IndexFamily) -> ErgodicityReport {
    ergodicity(&build_graph(fam))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: usize) -> IncidenceGraph {
        build_graph(&IndexFamily::barycentric(p).unwrap())
    }

    /// gcd of simple-cycle lengths by depth-first enumeration. Each cycle is
    /// rooted at its smallest vertex.
    fn brute_force_period(g: &IncidenceGraph) -> Option<usize> {
        let n = g.vertex_count();
        let adj = g.adjacency(false);
        let mut acc = 0;
        fn dfs(
            adj: &[Vec<usize>],
            root: usize,
            u: usize,
            depth: usize,
            on_path: &mut Vec<bool>,
            acc: &mut usize,
        ) {
            for &v in &adj[u] {
                if v == root {
                    *acc = gcd(*acc, depth + 1);
                } else if v > root && !on_path[v] {
                    on_path[v] = true;
                    dfs(adj, root, v, depth + 1, on_path, acc);
                    on_path[v] = false;
                }
            }
        }
        for root in 0..n {
            let mut on_path = vec![false; n];
            on_path[root] = true;
            dfs(&adj, root, root, 0, &mut on_path, &mut acc);
        }
        (acc > 0).then_some(acc)
    }

    #[test]
    fn q3_is_complete_minus_loops() {
        let g =
            build_graph(&IndexFamily::new(3, vec![vec![2, 3], vec![1, 3], vec![1, 2]]).unwrap());
        let expected: BTreeSet<_> = [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)].into();
        assert_eq!(g.edges(), &expected);
        assert_eq!(g, q(3));
    }

    #[test]
    fn small_families() {
        let one = build_graph(&IndexFamily::new(1, vec![vec![1]]).unwrap());
        assert_eq!(one.edges(), &BTreeSet::from([(1, 1)]));
        let two = build_graph(&IndexFamily::new(2, vec![vec![2], vec![1]]).unwrap());
        assert_eq!(two.edges(), &BTreeSet::from([(1, 2), (2, 1)]));
        // repeated indices collapse
        let dup = build_graph(&IndexFamily::new(2, vec![vec![2, 2, 2], vec![1]]).unwrap());
        assert_eq!(dup, two);
    }

    #[test]
    fn invalid_families() {
        assert!(IndexFamily::new(0, vec![]).is_err());
        assert!(IndexFamily::new(2, vec![vec![1]]).is_err());
        assert!(IndexFamily::new(2, vec![vec![1], vec![]]).is_err());
        assert!(matches!(
            IndexFamily::new(2, vec![vec![3], vec![1]]),
            Err(Error::Index { index: 3, p: 2 })
        ));
        assert!(IndexFamily::new(2, vec![vec![0], vec![1]]).is_err());
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&q(4)));
        let loops = IncidenceGraph::from_edges(2, [(1, 1), (2, 2)]).unwrap();
        assert!(!is_irreducible(&loops));
        let path = IncidenceGraph::from_edges(3, [(1, 2), (2, 3)]).unwrap();
        assert!(!is_irreducible(&path));
    }

    #[test]
    fn periods() {
        let two = IncidenceGraph::from_edges(2, [(1, 2), (2, 1)]).unwrap();
        assert_eq!(period(&two).unwrap(), 2);
        assert_eq!(period(&q(3)).unwrap(), 1);
        let tri = IncidenceGraph::from_edges(3, [(1, 2), (2, 3), (3, 1)]).unwrap();
        assert_eq!(period(&tri).unwrap(), 3);
        let path = IncidenceGraph::from_edges(3, [(1, 2), (2, 3)]).unwrap();
        assert_eq!(period(&path), Err(Error::NotIrreducible));
        let lonely = IncidenceGraph::from_edges(1, []).unwrap();
        assert_eq!(period(&lonely), Err(Error::NoCycles));
        let looped = IncidenceGraph::from_edges(1, [(1, 1)]).unwrap();
        assert_eq!(period(&looped).unwrap(), 1);
    }

    #[test]
    fn barycentric_family_is_ergodic() {
        let r = is_ergodic(&IndexFamily::barycentric(4).unwrap());
        assert!(r.ergodic && r.irreducible && r.period == Some(1));
        for p in 3..=10 {
            assert!(ergodicity(&q(p)).ergodic, "Q_{p}");
        }
        let r = is_ergodic(&IndexFamily::barycentric(2).unwrap());
        assert_eq!(
            r,
            ErgodicityReport {
                irreducible: true,
                period: Some(2),
                ergodic: false
            }
        );
    }

    #[test]
    fn period_matches_cycle_enumeration_exhaustively_up_to_four_vertices() {
        for n in 1..=4usize {
            let pairs: Vec<(usize, usize)> =
                (1..=n).flat_map(|u| (1..=n).map(move |v| (u, v))).collect();
            for mask in 0u32..(1 << pairs.len()) {
                let edges = pairs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &e)| e);
                let g = IncidenceGraph::from_edges(n, edges).unwrap();
                match period(&g) {
                    Ok(d) => assert_eq!(Some(d), brute_force_period(&g), "{g:?}"),
                    Err(Error::NotIrreducible) => assert!(!is_irreducible(&g)),
                    Err(Error::NoCycles) => assert_eq!(brute_force_period(&g), None),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn family_json_round_trip() {
        let fam: IndexFamily =
            serde_json::from_str(r#"{"p":4,"alpha":[[2,3,4],[1,3,4],[1,2,4],[1,2,3]]}"#).unwrap();
        assert_eq!(fam, IndexFamily::barycentric(4).unwrap());
        let bad = serde_json::from_str::<IndexFamily>(r#"{"p":2,"alpha":[[3],[1]]}"#);
        assert!(bad.is_err());
        let mismatched =
            serde_json::from_str::<IndexFamily>(r#"{"p":2,"d":[2,1],"alpha":[[2],[1]]}"#);
        assert!(mismatched.is_err());
    }
}
