//! Greedy descent step for set flows on masks.
//!
//! Candidate cells are ranked by the Hadamard density `|∂u/∂n|²` of the state
//! function that drives the functional (the relevant eigenfunctions, or the
//! torsion function) and accepted in batches while the incremental objective
//! decreases. Thin gaps of the complement ("seams", such as a cut through an
//! annulus) change the topology and are invisible to the shape derivative, so
//! they are tried as whole groups first.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capmeasure::{apply_phi, FunctionalKind, FunctionalSpec, SpectralPhi};
use crate::error::{Error, Result};
use crate::grid::{measure_stats, ScalarGridField, ShapeMask};
use crate::pde::{eigen_solve, principal_eigenpair, torsion, Coefficient, EigenOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreedyParams {
    /// Cells per batch before halving.
    pub batch_size: usize,
    /// Thickness, in cells, of the candidate band around the set.
    pub ring_width: usize,
    /// Single cells tried once batches of one fail.
    pub scan_limit: usize,
}

impl Default for GreedyParams {
    fn default() -> Self {
        GreedyParams {
            batch_size: 8,
            ring_width: 2,
            scan_limit: 16,
        }
    }
}

impl GreedyParams {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.ring_width == 0 {
            return Err(Error::invalid("greedy batch size and ring width must be positive"));
        }
        Ok(())
    }
}

/// Value of `F̂` on a mask together with the fields used for ranking.
#[derive(Clone, Debug)]
pub struct ShapeEvaluation {
    /// `F̂(M)`, penalties included.
    pub value: f64,
    /// Computed eigenvalues (`λ₁` at least when requested).
    pub lambdas: Vec<f64>,
    /// State functions whose normal derivatives rank candidates.
    pub potentials: Vec<ScalarGridField>,
}

impl ShapeEvaluation {
    pub fn lambda1(&self) -> Option<f64> {
        self.lambdas.first().copied()
    }
}

pub(crate) fn evaluate_mask(
    mask: &ShapeMask,
    spec: &FunctionalSpec,
    guess: Option<&ScalarGridField>,
    want_lambda: bool,
) -> Result<ShapeEvaluation> {
    let mut lambdas = Vec::new();
    let mut potentials = Vec::new();
    let base = match spec.kind {
        FunctionalKind::Zero => 0.0,
        FunctionalKind::Volume => mask.volume(),
        FunctionalKind::Spectral { phi, k } => {
            if mask.is_empty() {
                return Err(Error::EmptyMask("spectral functionals need a nonempty set"));
            }
            let opts = EigenOptions {
                guess: guess.cloned(),
                ..EigenOptions::default()
            };
            let r = eigen_solve(Coefficient::Mask(mask), k, &opts)?;
            let v = apply_phi(phi, &r.eigenvalues);
            lambdas = r.eigenvalues;
            potentials = match phi {
                SpectralPhi::LambdaK => vec![r.eigenfunctions[k - 1].clone()],
                SpectralPhi::Sum => r.eigenfunctions,
            };
            v
        }
        FunctionalKind::Energy | FunctionalKind::Integral { .. } => {
            let w = torsion(Coefficient::Mask(mask))?;
            let v = FunctionalSpec { scale: 1.0, ..*spec }.evaluate(&w)?;
            potentials.push(w.into_field());
            v
        }
    };
    if want_lambda && lambdas.is_empty() {
        lambdas.push(if mask.is_empty() {
            f64::INFINITY
        } else {
            principal_eigenpair(mask)?.lambda1()
        });
    }
    let p = spec.penalties;
    let stats = measure_stats(mask);
    Ok(ShapeEvaluation {
        value: spec.scale * base + p.volume * stats.volume + p.perimeter * stats.perimeter,
        lambdas,
        potentials,
    })
}

/// Outcome of one greedy step.
#[derive(Clone, Debug)]
pub struct GreedyStep {
    pub mask: ShapeMask,
    pub evaluation: ShapeEvaluation,
    /// `|M_{n+1} \ M_n|`.
    pub distance: f64,
    /// Accepted cell groups in order.
    pub batches: Vec<Vec<usize>>,
    /// Number of accepted groups that were seams.
    pub seam_fills: usize,
    pub evaluations: usize,
}

/// Band of outside cells within `width` face steps of the set: `layer[k]`
/// is the step count, zero for cells outside the band.
fn band(mask: &ShapeMask, width: usize) -> Vec<usize> {
    let d = mask.domain();
    let mut layer = vec![0usize; d.len()];
    let mut frontier: Vec<usize> = mask.iter_inside().collect();
    for l in 1..=width {
        let mut next = Vec::new();
        for &k in &frontier {
            for n in d.neighbors(k).into_iter().flatten() {
                if !mask.contains(n) && !d.is_ring(n) && layer[n] == 0 {
                    layer[n] = l;
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    layer
}

/// Band cells enclosed along an axis by set cells within `width` steps on
/// both sides, grouped by face connectivity.
fn seam_groups(mask: &ShapeMask, layer: &[usize], width: usize) -> Vec<Vec<usize>> {
    let d = mask.domain();
    let [nx, ny] = d.cells();
    let hits = |k: usize, di: isize, dj: isize| -> bool {
        let (i, j) = d.coords(k);
        let (mut i, mut j) = (i as isize, j as isize);
        for _ in 0..width {
            i += di;
            j += dj;
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                return false;
            }
            let q = d.index(i as usize, j as usize);
            if mask.contains(q) {
                return true;
            }
            if d.is_ring(q) {
                return false;
            }
        }
        false
    };
    let is_seam: Vec<bool> = (0..d.len())
        .map(|k| {
            layer[k] > 0 && ((hits(k, -1, 0) && hits(k, 1, 0)) || (d.dim() == 2 && hits(k, 0, -1) && hits(k, 0, 1)))
        })
        .collect();
    let mut seen = vec![false; d.len()];
    let mut groups = Vec::new();
    for s in 0..d.len() {
        if !is_seam[s] || seen[s] {
            continue;
        }
        let mut group = vec![s];
        seen[s] = true;
        let mut i = 0;
        while i < group.len() {
            let k = group[i];
            i += 1;
            for n in d.neighbors(k).into_iter().flatten() {
                if is_seam[n] && !seen[n] {
                    seen[n] = true;
                    group.push(n);
                }
            }
        }
        group.sort_unstable();
        groups.push(group);
    }
    groups
}

/// Band cells sorted by decreasing Hadamard score (ties by index).
fn ranked_candidates(mask: &ShapeMask, potentials: &[ScalarGridField], layer: &[usize], width: usize) -> Vec<usize> {
    let d = mask.domain();
    let h = d.h();
    let mut score = vec![0.0f64; d.len()];
    for k in 0..d.len() {
        if layer[k] != 1 {
            continue;
        }
        let mut s = 0.0;
        for n in d.neighbors(k).into_iter().flatten() {
            if mask.contains(n) {
                s += if potentials.is_empty() {
                    1.0
                } else {
                    potentials.iter().map(|u| (u.get(n) / h).powi(2)).sum::<f64>()
                };
            }
        }
        score[k] = s;
    }
    for l in 2..=width {
        for k in 0..d.len() {
            if layer[k] != l {
                continue;
            }
            let parent = d
                .neighbors(k)
                .into_iter()
                .flatten()
                .filter(|&n| layer[n] == l - 1)
                .map(|n| score[n])
                .fold(0.0, f64::max);
            score[k] = 0.5 * parent;
        }
    }
    let mut cand: Vec<usize> = (0..d.len()).filter(|&k| layer[k] > 0).collect();
    cand.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    cand
}

/// The best `take` cells in rank order that keep the set connected to its
/// previous components: deeper cells enter only next to a chosen cell.
fn connected_prefix(mask: &ShapeMask, ranked: &[usize], layer: &[usize], take: usize) -> Vec<usize> {
    let d = mask.domain();
    let mut chosen: Vec<usize> = Vec::with_capacity(take);
    let mut pending: Vec<usize> = Vec::new();
    for &c in ranked {
        if chosen.len() == take {
            break;
        }
        if layer[c] == 1 {
            chosen.push(c);
        } else {
            pending.push(c);
        }
        // deeper cells waiting for a chosen neighbour
        let mut progress = true;
        while progress && chosen.len() < take {
            progress = false;
            if let Some(i) = pending
                .iter()
                .position(|&p| d.neighbors(p).into_iter().flatten().any(|n| chosen.contains(&n)))
            {
                chosen.push(pending.remove(i));
                progress = true;
            }
        }
    }
    chosen
}

/// One descent step of the incremental problem restricted to supersets of
/// `mn`. Never worse than staying put.
pub(crate) fn greedy_step(
    spec: &FunctionalSpec,
    mn: &ShapeMask,
    base: &ShapeEvaluation,
    eps: f64,
    params: &GreedyParams,
) -> Result<GreedyStep> {
    let d = *mn.domain();
    let vol = d.cell_volume();
    let n0 = mn.count();
    let objective_of = |e: &ShapeEvaluation, count: usize| {
        let dv = (count - n0) as f64 * vol;
        e.value + dv * dv / (2.0 * eps)
    };
    let mut cur = mn.clone();
    let mut cur_eval = base.clone();
    let mut cur_obj = base.value;
    let mut batches: Vec<Vec<usize>> = Vec::new();
    let mut seam_fills = 0;
    let mut evaluations = 0;
    let mut batch = params.batch_size;
    let mut rejected_seams: HashSet<Vec<usize>> = HashSet::new();
    let margin = |obj: f64| 1e-12 * (1.0 + obj.abs());

    // evaluations of candidate sets may fail (e.g. a stalled eigen solve);
    // such candidates are simply not taken
    let try_set = |cur: &ShapeMask, cur_eval: &ShapeEvaluation, cells: &[usize]| {
        let m = cur.with_cells(cells).ok()?;
        let guess = cur_eval.potentials.first();
        let e = evaluate_mask(&m, spec, guess, false).ok()?;
        let obj = objective_of(&e, m.count());
        Some((m, e, obj))
    };

    loop {
        let layer = band(&cur, params.ring_width);
        let seams: Vec<Vec<usize>> = seam_groups(&cur, &layer, params.ring_width)
            .into_iter()
            .filter(|g| !rejected_seams.contains(g))
            .collect();
        if !seams.is_empty() {
            evaluations += seams.len();
            let results: Vec<_> = seams.par_iter().map(|g| try_set(&cur, &cur_eval, g)).collect();
            let mut best: Option<(usize, (ShapeMask, ShapeEvaluation, f64))> = None;
            for (i, r) in results.into_iter().enumerate() {
                if let Some(r) = r {
                    if r.2 < cur_obj - margin(cur_obj) && best.as_ref().is_none_or(|b| r.2 < b.1 .2) {
                        best = Some((i, r));
                    }
                }
            }
            match best {
                Some((i, (m, e, obj))) => {
                    batches.push(seams[i].clone());
                    seam_fills += 1;
                    cur = m;
                    cur_eval = e;
                    cur_obj = obj;
                    continue;
                }
                None => rejected_seams.extend(seams),
            }
        }

        let ranked = ranked_candidates(&cur, &cur_eval.potentials, &layer, params.ring_width);
        if ranked.is_empty() {
            break;
        }
        let chosen = connected_prefix(&cur, &ranked, &layer, batch);
        let take = chosen.len();
        evaluations += 1;
        if let Some((m, e, obj)) = try_set(&cur, &cur_eval, &chosen) {
            if obj < cur_obj - margin(cur_obj) {
                batches.push(chosen);
                cur = m;
                cur_eval = e;
                cur_obj = obj;
                continue;
            }
        }
        if take > 1 {
            batch = (take / 2).max(1);
            continue;
        }
        // single adjacent cells beyond the top-ranked one, in rank order
        let tail: Vec<usize> = ranked
            .iter()
            .filter(|&&c| layer[c] == 1 && c != chosen[0])
            .take(params.scan_limit)
            .copied()
            .collect();
        evaluations += tail.len();
        let results: Vec<_> = tail.par_iter().map(|&c| try_set(&cur, &cur_eval, &[c])).collect();
        let found = results
            .into_iter()
            .zip(&tail)
            .find_map(|(r, &c)| r.filter(|r| r.2 < cur_obj - margin(cur_obj)).map(|r| (c, r)));
        match found {
            Some((c, (m, e, obj))) => {
                batches.push(vec![c]);
                cur = m;
                cur_eval = e;
                cur_obj = obj;
            }
            None => break,
        }
    }
    let distance = (cur.count() - n0) as f64 * vol;
    Ok(GreedyStep {
        mask: cur,
        evaluation: cur_eval,
        distance,
        batches,
        seam_fills,
        evaluations,
    })
}
