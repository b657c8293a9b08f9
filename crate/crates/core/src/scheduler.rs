//! Pilot scheduling: overlap graph, saturation-based UT grouping, and greedy
//! assignment of time/frequency phase-shift pairs to groups.

use crate::channel::{SystemConfig, TbGrid, UserChannel};
use crate::error::{Error, Result};
use crate::pilot::{equivalent_shift, overlap_eta, PhaseShiftPair, PilotAssignment};
use crate::tensor::DenseTensor;
use num_complex::Complex64;

/// Undirected weighted overlap graph on the UT set: an edge joins two UTs
/// whose TB power distributions overlap by more than the threshold.
#[derive(Debug, Clone)]
pub struct OverlapGraph {
    vertex_count: usize,
    /// Edges (u, v, eta) with u < v, in scan order.
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<usize>>,
    pub gamma_thr: f64,
}

impl OverlapGraph {
    pub fn from_edges(vertex_count: usize, edges: Vec<(usize, usize, f64)>, gamma_thr: f64) -> Self {
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(u, v, _) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        OverlapGraph {
            vertex_count,
            edges,
            adjacency,
            gamma_thr,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count).map(|u| self.degree(u)).max().unwrap_or(0)
    }
}

/// Pairwise overlap degrees above `gamma_thr` become edges.
pub fn build_overlap_graph(channels: &[UserChannel], gamma_thr: f64) -> Result<OverlapGraph> {
    if !(0.0..1.0).contains(&gamma_thr) {
        return Err(Error::InvalidConfig(format!(
            "overlap threshold {gamma_thr} must be in [0, 1)"
        )));
    }
    let mut edges = Vec::new();
    for u in 0..channels.len() {
        for v in u + 1..channels.len() {
            let prod = channels[u].w.hadamard(&channels[v].w)?;
            if prod.data().iter().all(|z| *z == Complex64::ZERO) {
                continue;
            }
            let eta = overlap_eta(&channels[u].w, &channels[v].w)?;
            if eta > gamma_thr {
                edges.push((u, v, eta));
            }
        }
    }
    Ok(OverlapGraph::from_edges(channels.len(), edges, gamma_thr))
}

/// Proper coloring of the UT set; groups are the color classes.
#[derive(Debug, Clone)]
pub struct UtGroups {
    /// Color of each UT, 1..=count.
    pub color: Vec<usize>,
    pub count: usize,
    /// Group members, ascending, indexed by color - 1.
    pub members: Vec<Vec<usize>>,
    /// Per-group aggregate power distribution.
    pub aggregate_power: Vec<DenseTensor>,
}

/// Degree-of-saturation greedy coloring. Starts from the highest-degree
/// vertex; each step colors the uncolored vertex with the most distinct
/// neighbor colors (ties broken by higher degree, then lower id) with the
/// smallest color absent from its neighborhood.
pub fn dsatur_group(graph: &OverlapGraph, channels: &[UserChannel]) -> Result<UtGroups> {
    let n = graph.vertex_count();
    if n != channels.len() {
        return Err(Error::InvalidConfig(format!(
            "graph has {n} vertices, got {} channels",
            channels.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("cannot group an empty UT set".into()));
    }
    let mut color = vec![0usize; n];
    let mut remaining = n;

    let smallest_free = |u: usize, color: &[usize]| -> usize {
        let mut used: Vec<usize> = graph
            .neighbors(u)
            .iter()
            .map(|&v| color[v])
            .filter(|&c| c > 0)
            .collect();
        used.sort_unstable();
        used.dedup();
        let mut candidate = 1;
        for c in used {
            if c == candidate {
                candidate += 1;
            } else if c > candidate {
                break;
            }
        }
        candidate
    };

    // Seed with the maximum-degree vertex (lowest id on ties).
    let start = (0..n).max_by_key(|&u| (graph.degree(u), n - u)).unwrap();
    color[start] = 1;
    remaining -= 1;

    while remaining > 0 {
        let mut best: Option<(usize, usize, usize)> = None; // (sat, degree, id)
        for u in 0..n {
            if color[u] != 0 {
                continue;
            }
            let mut seen: Vec<usize> = graph
                .neighbors(u)
                .iter()
                .map(|&v| color[v])
                .filter(|&c| c > 0)
                .collect();
            seen.sort_unstable();
            seen.dedup();
            let sat = seen.len();
            let better = match best {
                None => true,
                Some((bs, bd, bi)) => {
                    (sat, graph.degree(u)) > (bs, bd)
                        || ((sat, graph.degree(u)) == (bs, bd) && u < bi)
                }
            };
            if better {
                best = Some((sat, graph.degree(u), u));
            }
        }
        let (_, _, u) = best.unwrap();
        color[u] = smallest_free(u, &color);
        remaining -= 1;
    }

    let count = *color.iter().max().unwrap();
    let mut members = vec![Vec::new(); count];
    for (u, &c) in color.iter().enumerate() {
        members[c - 1].push(u);
    }
    let shape = channels[0].w.shape().to_vec();
    let mut aggregate_power = Vec::with_capacity(count);
    for group in &members {
        let mut acc = DenseTensor::zeros(shape.clone());
        for &u in group {
            acc = acc.add(&channels[u].w)?;
        }
        aggregate_power.push(acc);
    }
    Ok(UtGroups {
        color,
        count,
        members,
        aggregate_power,
    })
}

/// Knobs for the phase-pair search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScheduleOptions {
    /// Overlap threshold gamma: smaller separates more aggressively at a
    /// higher scan cost.
    pub gamma_thr: f64,
    /// Stride of the frequency-shift scan; `None` uses the orthogonal
    /// spacing N_f.
    pub phi_stride: Option<usize>,
    /// Scan every frequency shift instead of the strided subset.
    pub full_phi_scan: bool,
    /// Restrict to frequency-only shifts (time shift fixed to zero).
    pub freq_only: bool,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions {
            gamma_thr: 0.05,
            phi_stride: None,
            full_phi_scan: false,
            freq_only: false,
        }
    }
}

impl ScheduleOptions {
    fn phi_candidates(&self, cfg: &SystemConfig) -> Vec<usize> {
        let k = cfg.valid_subcarriers;
        if self.full_phi_scan {
            (0..k).collect()
        } else {
            let stride = self.phi_stride.unwrap_or_else(|| cfg.delay_bins()).max(1);
            (0..k).step_by(stride).collect()
        }
    }

    fn time_candidates(&self, cfg: &SystemConfig) -> Vec<usize> {
        if self.freq_only {
            vec![0]
        } else {
            (0..cfg.slots_per_frame).collect()
        }
    }
}

/// Greedy pair selection: group 0 takes (0, 0); every later group takes the
/// first pair whose shifted aggregate power overlaps the union of already
/// scheduled powers by at most gamma, falling back to the minimizing pair.
/// Time shifts are scanned before frequency shifts.
pub fn assign_tfpsp(
    groups: &UtGroups,
    cfg: &SystemConfig,
    grid: &TbGrid,
    opts: &ScheduleOptions,
) -> Result<PilotAssignment> {
    let phis = opts.phi_candidates(cfg);
    let times = opts.time_candidates(cfg);
    let users: usize = groups.members.iter().map(|g| g.len()).sum();
    let mut pairs = vec![PhaseShiftPair { freq: 0, time: 0 }; users];

    let mut scheduled_sum = groups.aggregate_power[0].clone();
    for i in 1..groups.count {
        let w_i = &groups.aggregate_power[i];
        let mut chosen = PhaseShiftPair { freq: 0, time: 0 };
        if w_i.data().iter().any(|z| *z != Complex64::ZERO) {
            let mut best: Option<(f64, PhaseShiftPair)> = None;
            'scan: for &phi in &phis {
                for &time in &times {
                    let shifted = equivalent_shift(w_i, phi as i64, time as i64, grid)?;
                    let eta = overlap_eta(&shifted, &scheduled_sum)?;
                    if best.map_or(true, |(b, _)| eta < b) {
                        best = Some((eta, PhaseShiftPair { freq: phi, time }));
                    }
                    if eta <= opts.gamma_thr {
                        break 'scan;
                    }
                }
            }
            chosen = best.expect("non-empty scan").1;
        }
        for &u in &groups.members[i] {
            pairs[u] = chosen;
        }
        let shifted = equivalent_shift(w_i, chosen.freq as i64, chosen.time as i64, grid)?;
        scheduled_sum = scheduled_sum.add(&shifted)?;
    }
    for &u in &groups.members[0] {
        pairs[u] = PhaseShiftPair { freq: 0, time: 0 };
    }
    Ok(PilotAssignment::new(pairs))
}

/// Scheduling objective: sum over ordered UT pairs of the overlap degree of
/// their shifted power distributions.
pub fn schedule_objective(
    channels: &[UserChannel],
    assignment: &PilotAssignment,
    grid: &TbGrid,
) -> Result<f64> {
    let shifted = crate::pilot::shifted_powers(channels, assignment, grid)?;
    let mut total = 0.0;
    for u in 0..shifted.len() {
        for v in 0..shifted.len() {
            if u == v {
                continue;
            }
            let prod = shifted[u].hadamard(&shifted[v])?;
            if prod.data().iter().any(|z| *z != Complex64::ZERO) {
                total += overlap_eta(&shifted[u], &shifted[v])?;
            }
        }
    }
    Ok(total)
}

/// Summary written next to an assignment.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ScheduleReport {
    pub group_count: usize,
    pub max_residual_eta: f64,
    pub objective: f64,
}

/// Full pipeline: overlap graph, grouping, pair assignment, and diagnostics.
pub fn schedule(
    channels: &[UserChannel],
    cfg: &SystemConfig,
    grid: &TbGrid,
    opts: &ScheduleOptions,
) -> Result<(PilotAssignment, ScheduleReport)> {
    let graph = build_overlap_graph(channels, opts.gamma_thr)?;
    let groups = dsatur_group(&graph, channels)?;
    let assignment = assign_tfpsp(&groups, cfg, grid, opts)?;
    let (_, max_residual_eta) = crate::pilot::theorem1_condition(channels, &assignment, grid)?;
    let objective = schedule_objective(channels, &assignment, grid)?;
    Ok((
        assignment,
        ScheduleReport {
            group_count: groups.count,
            max_residual_eta,
            objective,
        },
    ))
}
