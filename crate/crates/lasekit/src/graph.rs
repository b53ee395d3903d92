//! Sparse symmetric graph storage, edge-list ingestion, and breadth-first
//! graph distances.
//!
//! The adjacency structure is compressed-row form over `u32` column indices,
//! storing both directions of every undirected edge. Graphs are immutable
//! after construction and safe to share across threads.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::collections::VecDeque;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Edge-list dialect accepted by [`ingest_edge_list`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeListFormat {
    /// Per line: split on ',' when present, otherwise on whitespace.
    #[default]
    Auto,
    Whitespace,
    Comma,
}

/// Counts of normalisations applied while ingesting a dirty edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub nodes: usize,
    pub edges: usize,
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
}

/// Undirected simple graph with 0/1 adjacency in compressed row form.
///
/// Invariants: symmetric (both directions stored), no self-loops, no
/// duplicate edges, neighbour lists sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    node_ids: Option<Vec<String>>,
}

/// Hop counts from a single BFS source; `None` marks unreachable nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDistances {
    pub source: usize,
    pub dist: Vec<Option<u32>>,
}

impl GraphDistances {
    /// Hop distance to `j`, or `None` if unreachable.
    pub fn get(&self, j: usize) -> Option<u32> {
        self.dist[j]
    }
}

impl Graph {
    /// Build from an undirected edge set over nodes `0..n`. Edges are
    /// symmetrised and deduplicated; self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= n {
                return Err(Error::IndexOutOfRange { index: a, n });
            }
            if b >= n {
                return Err(Error::IndexOutOfRange { index: b, n });
            }
            if a == b {
                continue;
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            set.insert((lo as u32, hi as u32));
        }
        Ok(Self::from_edge_set(n, &set, None))
    }

    fn from_edge_set(
        n: usize,
        edges: &BTreeSet<(u32, u32)>,
        node_ids: Option<Vec<String>>,
    ) -> Graph {
        let mut degree = vec![0usize; n];
        for &(a, b) in edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0usize);
        for d in &degree {
            row_ptr.push(row_ptr.last().unwrap() + d);
        }
        let mut col_idx = vec![0u32; row_ptr[n]];
        let mut cursor = row_ptr.clone();
        for &(a, b) in edges {
            col_idx[cursor[a as usize]] = b;
            cursor[a as usize] += 1;
            col_idx[cursor[b as usize]] = a;
            cursor[b as usize] += 1;
        }
        // BTreeSet iteration gives each row's neighbours in ascending order
        // for the first endpoint only; sort every row to guarantee it.
        for i in 0..n {
            col_idx[row_ptr[i]..row_ptr[i + 1]].sort_unstable();
        }
        Graph {
            n,
            row_ptr,
            col_idx,
            node_ids,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Sorted neighbour list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// External label of node `i` when the graph came from a labelled file.
    pub fn node_id(&self, i: usize) -> Option<&str> {
        self.node_ids.as_ref().map(|ids| ids[i].as_str())
    }

    pub fn node_ids(&self) -> Option<&[String]> {
        self.node_ids.as_deref()
    }

    /// Resolve an external label to its dense index.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.node_ids
            .as_ref()
            .and_then(|ids| ids.iter().position(|l| l == label))
    }

    /// y = A x for the 0/1 adjacency matrix.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for &j in self.neighbors(i) {
                acc += x[j as usize];
            }
            y[i] = acc;
        }
    }

    /// Dense adjacency matrix; intended for small graphs and test oracles.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut a = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for &j in self.neighbors(i) {
                a[(i, j as usize)] = 1.0;
            }
        }
        a
    }

    /// Exact unweighted shortest-path hop counts from `source`.
    pub fn bfs_distances(&self, source: usize) -> Result<GraphDistances> {
        if source >= self.n {
            return Err(Error::IndexOutOfRange {
                index: source,
                n: self.n,
            });
        }
        let mut dist = vec![None; self.n];
        dist[source] = Some(0u32);
        let mut queue = VecDeque::new();
        queue.push_back(source as u32);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize].unwrap();
            for &v in self.neighbors(u as usize) {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(GraphDistances { source, dist })
    }

    /// Nodes within hop distance `m` of `source`, source included, sorted.
    pub fn m_hop_neighborhood(&self, source: usize, m: u32) -> Result<Vec<usize>> {
        if source >= self.n {
            return Err(Error::IndexOutOfRange {
                index: source,
                n: self.n,
            });
        }
        // Truncated BFS: stop expanding at depth m.
        let mut dist = vec![None; self.n];
        dist[source] = Some(0u32);
        let mut members = vec![source];
        let mut queue = VecDeque::new();
        queue.push_back(source as u32);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize].unwrap();
            if du == m {
                continue;
            }
            for &v in self.neighbors(u as usize) {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(du + 1);
                    members.push(v as usize);
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        Ok(members)
    }

    /// Subgraph induced by `nodes`, plus the map from new index to original
    /// index (ascending in the original index).
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<(Graph, Vec<usize>)> {
        if nodes.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut index_map: Vec<usize> = nodes.to_vec();
        index_map.sort_unstable();
        index_map.dedup();
        if let Some(&bad) = index_map.iter().find(|&&i| i >= self.n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                n: self.n,
            });
        }
        let mut old_to_new = vec![u32::MAX; self.n];
        for (new, &old) in index_map.iter().enumerate() {
            old_to_new[old] = new as u32;
        }
        let mut edges = BTreeSet::new();
        for (new_i, &old_i) in index_map.iter().enumerate() {
            for &old_j in self.neighbors(old_i) {
                let new_j = old_to_new[old_j as usize];
                if new_j != u32::MAX && (new_i as u32) < new_j {
                    edges.insert((new_i as u32, new_j));
                }
            }
        }
        let node_ids = self
            .node_ids
            .as_ref()
            .map(|ids| index_map.iter().map(|&i| ids[i].clone()).collect());
        Ok((
            Self::from_edge_set(index_map.len(), &edges, node_ids),
            index_map,
        ))
    }

    /// Write one `label label` line per edge, '#' comment header included.
    /// Uses external labels when present, dense indices otherwise.
    pub fn write_edge_list<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "# undirected edge list, {} nodes, {} edges",
            self.n,
            self.edge_count()
        )?;
        for i in 0..self.n {
            for &j in self.neighbors(i) {
                let j = j as usize;
                if i < j {
                    match &self.node_ids {
                        Some(ids) => writeln!(w, "{} {}", ids[i], ids[j])?,
                        None => writeln!(w, "{} {}", i, j)?,
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Write the `index,label` node map used to rejoin external coordinates.
    pub fn write_node_map<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "index,label")?;
        for i in 0..self.n {
            match &self.node_ids {
                Some(ids) => writeln!(w, "{},{}", i, ids[i])?,
                None => writeln!(w, "{},{}", i, i)?,
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Read an edge list: one edge per line, two whitespace- or comma-separated
/// labels, '#' lines ignored. Labels map to dense indices in first-appearance
/// order. Self-loops and duplicates are normalised away and counted.
pub fn ingest_edge_list<P: AsRef<Path>>(
    path: P,
    format: EdgeListFormat,
) -> Result<(Graph, IngestReport)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let display = path.display().to_string();

    let mut labels: Vec<String> = Vec::new();
    let mut label_index: HashMap<String, u32> = HashMap::new();
    let intern = |label: &str, labels: &mut Vec<String>, map: &mut HashMap<String, u32>| -> u32 {
        if let Some(&i) = map.get(label) {
            return i;
        }
        let i = labels.len() as u32;
        labels.push(label.to_string());
        map.insert(label.to_string(), i);
        i
    };

    let mut edges: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut report = IngestReport::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = match format {
            EdgeListFormat::Comma => trimmed.split(',').map(str::trim).collect(),
            EdgeListFormat::Whitespace => trimmed.split_whitespace().collect(),
            EdgeListFormat::Auto => {
                if trimmed.contains(',') {
                    trimmed.split(',').map(str::trim).collect()
                } else {
                    trimmed.split_whitespace().collect()
                }
            }
        };
        if tokens.len() != 2 || tokens.iter().any(|t| t.is_empty()) {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: format!("expected two node labels, got {:?}", trimmed),
            });
        }
        let a = intern(tokens[0], &mut labels, &mut label_index);
        let b = intern(tokens[1], &mut labels, &mut label_index);
        if a == b {
            report.self_loops_dropped += 1;
            continue;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if !edges.insert(key) {
            report.duplicate_edges_dropped += 1;
        }
    }
    if labels.is_empty() {
        return Err(Error::Degenerate(format!("empty edge list: {display}")));
    }
    let n = labels.len();
    report.nodes = n;
    report.edges = edges.len();
    Ok((Graph::from_edge_set(n, &edges, Some(labels)), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_from_str(contents: &str) -> Result<(Graph, IngestReport)> {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), contents).unwrap();
        ingest_edge_list(f.path(), EdgeListFormat::Auto)
    }

    #[test]
    fn ingest_path_graph() {
        let (g, rep) = graph_from_str("0 1\n1 2").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && !g.has_edge(0, 2));
        assert_eq!(rep.self_loops_dropped, 0);
        assert_eq!(rep.duplicate_edges_dropped, 0);
    }

    #[test]
    fn ingest_dedup_and_loop_removal() {
        let (g, rep) = graph_from_str("a b\nb a\na a").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(rep.self_loops_dropped, 1);
        assert_eq!(rep.duplicate_edges_dropped, 1);
        assert_eq!(g.node_id(0), Some("a"));
        assert_eq!(g.node_id(1), Some("b"));
    }

    #[test]
    fn ingest_comma_dialect_and_comments() {
        let (g, _) = graph_from_str("# comment\nx,y\ny,z\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn ingest_rejects_malformed_line() {
        let err = graph_from_str("0 1\n2\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_empty_file() {
        assert!(graph_from_str("# nothing here\n").is_err());
    }

    #[test]
    fn ingestion_idempotence() {
        let (g, _) = graph_from_str("a b\nb c\nc a\nd b").unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        g.write_edge_list(f.path()).unwrap();
        let (g2, rep2) = ingest_edge_list(f.path(), EdgeListFormat::Auto).unwrap();
        assert_eq!(g, g2);
        assert_eq!(rep2.duplicate_edges_dropped, 0);
    }

    #[test]
    fn bfs_on_path() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let d = g.bfs_distances(0).unwrap();
        assert_eq!(d.dist, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn bfs_disconnected() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let d = g.bfs_distances(0).unwrap();
        assert_eq!(d.dist, vec![Some(0), Some(1), None, None]);
    }

    #[test]
    fn bfs_source_out_of_range() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(g.bfs_distances(2).is_err());
    }

    #[test]
    fn m_hop_examples() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(g.m_hop_neighborhood(1, 1).unwrap(), vec![0, 1, 2]);
        assert_eq!(g.m_hop_neighborhood(1, 0).unwrap(), vec![1]);
        assert_eq!(g.m_hop_neighborhood(0, 3).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn induced_subgraph_triangle() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let (sub, map) = g.induced_subgraph(&[0, 1]).unwrap();
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.edge_count(), 1);
        assert_eq!(map, vec![0, 1]);
    }

    #[test]
    fn induced_subgraph_identity() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let (sub, map) = g.induced_subgraph(&[0, 1, 2, 3]).unwrap();
        assert_eq!(sub, g);
        assert_eq!(map, vec![0, 1, 2, 3]);
    }

    #[test]
    fn induced_subgraph_rejects_empty() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(g.induced_subgraph(&[]).is_err());
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        // Small LCG; good enough for structural test instances.
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if next() < p {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    /// All-pairs Floyd–Warshall oracle on the dense adjacency.
    fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<u32>>> {
        let n = g.node_count();
        let inf = u32::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for i in 0..n {
            d[i][i] = 0;
            for &j in g.neighbors(i) {
                d[i][j as usize] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k].saturating_add(d[k][j]);
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d.into_iter()
            .map(|row| row.into_iter().map(|x| (x < inf).then_some(x)).collect())
            .collect()
    }

    #[test]
    fn bfs_matches_floyd_warshall() {
        for seed in 0..6u64 {
            let g = random_graph(20, 0.3, seed);
            let oracle = floyd_warshall(&g);
            for s in 0..g.node_count() {
                let d = g.bfs_distances(s).unwrap();
                assert_eq!(d.dist, oracle[s], "seed {seed} source {s}");
            }
        }
    }

    #[test]
    fn m_hop_matches_bfs_threshold() {
        for seed in 0..4u64 {
            let g = random_graph(25, 0.15, seed);
            for s in [0usize, 7, 24] {
                let d = g.bfs_distances(s).unwrap();
                for m in 0..4u32 {
                    let expect: Vec<usize> = (0..g.node_count())
                        .filter(|&j| matches!(d.dist[j], Some(h) if h <= m))
                        .collect();
                    assert_eq!(g.m_hop_neighborhood(s, m).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn induced_subgraph_matches_dense_slice() {
        for seed in 0..4u64 {
            let g = random_graph(18, 0.3, seed);
            let dense = g.to_dense();
            let nodes: Vec<usize> = (0..18).filter(|i| i % 3 != 0).collect();
            let (sub, map) = g.induced_subgraph(&nodes).unwrap();
            for (bi, &oi) in map.iter().enumerate() {
                for (bj, &oj) in map.iter().enumerate() {
                    assert_eq!(
                        sub.has_edge(bi, bj),
                        dense[(oi, oj)] == 1.0,
                        "seed {seed} pair ({bi},{bj})"
                    );
                }
            }
            // symmetry preserved
            let sd = sub.to_dense();
            assert_eq!(sd, sd.transpose());
        }
    }
}
