use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::units::SimDuration;

pub const MAX_PAIRING_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("no {k}-regular graph on {n} nodes: n*k must be even")]
    OddDegreeSum { n: usize, k: usize },
    #[error("degree {k} must be below the node count {n}")]
    DegreeTooLarge { n: usize, k: usize },
    #[error("degree 0 cannot connect {n} nodes")]
    Disconnected { n: usize },
    #[error("no simple connected pairing found after {0} attempts")]
    Exhausted(usize),
    #[error("invalid delay bounds [{lo}, {hi}]")]
    InvalidDelayBounds { lo: f64, hi: f64 },
}

/// Undirected peer graph with a fixed delay on each directed link.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    adjacency: Vec<Vec<usize>>,
    delays: Vec<Vec<SimDuration>>,
}

impl Topology {
    /// Builds a graph from undirected edges; neighbor lists are kept sorted.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let delays = adjacency.iter().map(|l| vec![SimDuration::ZERO; l.len()]).collect();
        Topology { adjacency, delays }
    }

    /// A lone node without links.
    pub fn single() -> Self {
        Topology::from_edges(1, &[])
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Delay of the directed link `from -> to`, if the link exists.
    pub fn delay(&self, from: usize, to: usize) -> Option<SimDuration> {
        let pos = self.adjacency[from].binary_search(&to).ok()?;
        Some(self.delays[from][pos])
    }

    pub fn directed_delays(&self) -> impl Iterator<Item = (usize, usize, SimDuration)> + '_ {
        self.adjacency.iter().enumerate().flat_map(move |(a, list)| {
            list.iter().enumerate().map(move |(i, &b)| (a, b, self.delays[a][i]))
        })
    }

    pub fn is_simple(&self) -> bool {
        self.adjacency.iter().enumerate().all(|(a, list)| {
            !list.contains(&a) && list.windows(2).all(|w| w[0] != w[1])
        })
    }

    pub fn is_connected(&self) -> bool {
        if self.adjacency.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for &b in &self.adjacency[a] {
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Uniform random `k`-regular simple connected graph via the pairing (configuration)
/// model, redrawing the whole matching until it is simple and connected.
pub fn random_k_regular<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Topology, TopologyError> {
    if !(n * k).is_multiple_of(2) {
        return Err(TopologyError::OddDegreeSum { n, k });
    }
    if k >= n && n > 1 {
        return Err(TopologyError::DegreeTooLarge { n, k });
    }
    if n == 1 {
        return Ok(Topology::single());
    }
    if k == 0 {
        return Err(TopologyError::Disconnected { n });
    }
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    for _ in 0..MAX_PAIRING_ATTEMPTS {
        points.shuffle(rng);
        let edges: Vec<(usize, usize)> = points.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        if edges.iter().any(|(a, b)| a == b) {
            continue;
        }
        let topology = Topology::from_edges(n, &edges);
        if topology.is_simple() && topology.is_connected() {
            return Ok(topology);
        }
    }
    Err(TopologyError::Exhausted(MAX_PAIRING_ATTEMPTS))
}

/// Draws an independent uniform delay in `[lo, hi]` seconds for every directed link.
/// Links are visited in (from, to) order so the assignment is reproducible.
pub fn sample_delays<R: Rng + ?Sized>(
    topology: &mut Topology,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<(), TopologyError> {
    if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
        return Err(TopologyError::InvalidDelayBounds { lo, hi });
    }
    for row in &mut topology.delays {
        for d in row.iter_mut() {
            let secs = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            *d = SimDuration::from_secs(secs);
        }
    }
    Ok(())
}
