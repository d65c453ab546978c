use crate::error::{OccError, Result};

/// Partition of the level axis into corridors `C_m = [x_m - eps_{m-1}, x_m + eps_m)`.
///
/// Interior edges sit halfway between consecutive nodes. The outer edges
/// mirror the neighbouring half-width; they only matter for bin widths,
/// since lookup sends every level below (above) the grid to the first
/// (last) bin.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorGrid {
    nodes: Vec<f64>,
    edges: Vec<f64>,
}

impl CorridorGrid {
    /// Grid from strictly increasing nodes (at least two).
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(OccError::Config(
                "a grid built from nodes needs at least two nodes".into(),
            ));
        }
        check_increasing(&nodes)?;
        let m = nodes.len();
        let mut edges = Vec::with_capacity(m + 1);
        edges.push(nodes[0] - 0.5 * (nodes[1] - nodes[0]));
        for w in nodes.windows(2) {
            edges.push(0.5 * (w[0] + w[1]));
        }
        edges.push(nodes[m - 1] + 0.5 * (nodes[m - 1] - nodes[m - 2]));
        Ok(Self { nodes, edges })
    }

    /// Grid from nodes and explicit bin edges, `edges.len() == nodes.len() + 1`,
    /// with each node inside its bin.
    pub fn with_edges(nodes: Vec<f64>, edges: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || edges.len() != nodes.len() + 1 {
            return Err(OccError::Dimension(format!(
                "{} nodes need {} edges, got {}",
                nodes.len(),
                nodes.len() + 1,
                edges.len()
            )));
        }
        check_increasing(&nodes)?;
        check_increasing(&edges)?;
        for (m, x) in nodes.iter().enumerate() {
            if *x < edges[m] || *x >= edges[m + 1] {
                return Err(OccError::Config(format!(
                    "node {x} lies outside its bin [{}, {})",
                    edges[m],
                    edges[m + 1]
                )));
            }
        }
        Ok(Self { nodes, edges })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn node(&self, m: usize) -> f64 {
        self.nodes[m]
    }

    /// Half-widths `eps_m = (x_{m+1} - x_m) / 2`, one per pair of consecutive nodes.
    pub fn half_widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[1] - w[0])).collect()
    }

    /// `[left, right)` bounds of bin `m`.
    pub fn bin_bounds(&self, m: usize) -> (f64, f64) {
        (self.edges[m], self.edges[m + 1])
    }

    pub fn bin_width(&self, m: usize) -> f64 {
        self.edges[m + 1] - self.edges[m]
    }

    /// Bin containing `x`. Boundary levels belong to the bin on their right;
    /// levels outside the grid map to the nearest edge bin.
    pub fn bin_index(&self, x: f64) -> usize {
        let interior = &self.edges[1..self.edges.len() - 1];
        interior.partition_point(|e| *e <= x)
    }
}

fn check_increasing(xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(OccError::Config("grid values must be finite".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OccError::Config(
            "grid values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Equally spaced grid of `n_bins` nodes on `[center - half_span, center + half_span]`.
///
/// `n_bins` must be odd so that `center` is a node. A single bin covers
/// `[center - half_span, center + half_span)` and absorbs every level.
pub fn make_grid(center: f64, half_span: f64, n_bins: usize) -> Result<CorridorGrid> {
    if !(half_span > 0.0) || !half_span.is_finite() || !center.is_finite() {
        return Err(OccError::Config(format!(
            "grid half span must be positive and finite, got {half_span}"
        )));
    }
    if n_bins == 0 || n_bins.is_multiple_of(2) {
        return Err(OccError::Config(format!(
            "grid bin count must be odd and positive, got {n_bins}"
        )));
    }
    if n_bins == 1 {
        return CorridorGrid::with_edges(
            vec![center],
            vec![center - half_span, center + half_span],
        );
    }
    let spacing = 2.0 * half_span / (n_bins - 1) as f64;
    let lo = center - half_span;
    let nodes = (0..n_bins).map(|k| lo + k as f64 * spacing).collect();
    CorridorGrid::new(nodes)
}
