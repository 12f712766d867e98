//! Delay scans and deterministic grid / coordinate-descent search over the
//! interleave delays of an aperiodic train.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::molecule::{MoleculeSpec, Parity};
use crate::observables::JSeries;
use crate::scenario::Scenario;
use crate::trains::{interleaved_train, InterleaveTemplate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    TotalCoherence,
    HighJCoherence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: ObjectiveKind,
    /// Smallest J counted by the high-J kind.
    pub j_min: u32,
}

impl Objective {
    pub fn total() -> Self {
        Objective {
            kind: ObjectiveKind::TotalCoherence,
            j_min: 0,
        }
    }

    /// Σ_{J>17} |ρ̃|², expressed as the first allowed J above 17.
    pub fn high_j(mol: &MoleculeSpec) -> Self {
        let j_min = (18..).find(|&j| mol.parity.allows(j)).unwrap_or(18);
        Objective {
            kind: ObjectiveKind::HighJCoherence,
            j_min,
        }
    }

    pub fn validate(&self, mol: &MoleculeSpec) -> Result<()> {
        if self.kind == ObjectiveKind::HighJCoherence
            && mol.parity != Parity::Both
            && !mol.parity.allows(self.j_min)
        {
            log::warn!(
                "objective J_min = {} is not an allowed J for {}; the sum starts at the next allowed J",
                self.j_min,
                mol.name
            );
        }
        Ok(())
    }

    pub fn value(&self, power: &JSeries) -> f64 {
        match self.kind {
            ObjectiveKind::TotalCoherence => power.sum_from(0),
            ObjectiveKind::HighJCoherence => power.sum_from(self.j_min),
        }
    }
}

/// Builds the train, propagates the thermal ensemble and scores the
/// coherences at the scenario's probe time.
pub fn evaluate_objective(
    tpl: &InterleaveTemplate,
    obj: &Objective,
    scenario: &Scenario,
    averaged: bool,
) -> Result<f64> {
    Ok(obj.value(&line_power(tpl, scenario, averaged)?))
}

fn line_power(tpl: &InterleaveTemplate, scenario: &Scenario, averaged: bool) -> Result<JSeries> {
    let train = interleaved_train(tpl)?;
    Ok(scenario
        .observe_with(&train, scenario.probe_time(&train), averaged)?
        .coherence_power)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Delay {
    T1,
    T2,
    T3,
    T4,
}

impl Delay {
    pub fn get(self, tpl: &InterleaveTemplate) -> Option<f64> {
        match self {
            Delay::T1 => tpl.t1,
            Delay::T2 => tpl.t2,
            Delay::T3 => tpl.effective_t3(),
            Delay::T4 => Some(tpl.t4),
        }
    }

    pub fn set(self, tpl: &InterleaveTemplate, v: f64) -> InterleaveTemplate {
        let mut out = tpl.clone();
        match self {
            Delay::T1 => out.t1 = Some(v),
            Delay::T2 => out.t2 = Some(v),
            Delay::T3 => out.t3 = Some(v),
            Delay::T4 => out.t4 = v,
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCurve {
    pub delay: Delay,
    pub values: Vec<f64>,
    pub objective: Vec<f64>,
    /// |ρ̃_J|² at each scan point.
    pub line_power: Vec<JSeries>,
}

impl ScanCurve {
    /// Indices of interior local maxima (plateaus report their first point).
    pub fn local_maxima(&self) -> Vec<usize> {
        local_extrema(&self.objective, |a, b| a > b)
    }

    pub fn local_minima(&self) -> Vec<usize> {
        local_extrema(&self.objective, |a, b| a < b)
    }
}

fn local_extrema(y: &[f64], better: impl Fn(f64, f64) -> bool) -> Vec<usize> {
    let mut out = Vec::new();
    let n = y.len();
    let mut k = 1;
    while k + 1 < n {
        if better(y[k], y[k - 1]) {
            let mut e = k;
            while e + 1 < n && y[e + 1] == y[k] {
                e += 1;
            }
            if e + 1 < n && better(y[k], y[e + 1]) {
                out.push(k);
            }
            k = e + 1;
        } else {
            k += 1;
        }
    }
    out
}

/// Objective on a grid of one delay with all other delays fixed.
pub fn scan_delay(
    tpl: &InterleaveTemplate,
    delay: Delay,
    values: &[f64],
    obj: &Objective,
    scenario: &Scenario,
    averaged: bool,
) -> Result<ScanCurve> {
    for &v in values {
        if !(v >= 0.0 && v <= tpl.t4) && delay != Delay::T4 {
            return Err(invalid("scan", format!("delay {v} outside [0, T4]")));
        }
    }
    let line_power: Vec<JSeries> = values
        .par_iter()
        .map(|&v| line_power(&delay.set(tpl, v), scenario, averaged))
        .collect::<Result<_>>()?;
    Ok(ScanCurve {
        delay,
        values: values.to_vec(),
        objective: line_power.iter().map(|p| obj.value(p)).collect(),
        line_power,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub coarse_step: f64,
    pub fine_step: f64,
    /// Each delay is searched within ± this of its starting value.
    pub half_width: f64,
    pub constrain_t3: bool,
    /// Safety cap on refinement passes.
    pub max_passes: usize,
    /// Re-evaluate the optimum over the scenario's intensity profile.
    pub final_average: bool,
}

impl SearchSpec {
    /// Coarse T_rev/200, fine T_rev/2000, ±0.06 T_rev.
    pub fn for_revival(t_rev: f64) -> Self {
        SearchSpec {
            coarse_step: t_rev / 200.0,
            fine_step: t_rev / 2000.0,
            half_width: 0.06 * t_rev,
            constrain_t3: true,
            max_passes: 50,
            final_average: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fine_step > 0.0 && self.coarse_step >= self.fine_step) {
            return Err(invalid(
                "search",
                "steps must satisfy 0 < fine_step ≤ coarse_step",
            ));
        }
        if !(self.half_width > 0.0) {
            return Err(invalid("search", "half_width must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Initial,
    Coarse,
    Fine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub evaluations: usize,
    pub stage: Stage,
    /// T1, T2, T3, T4 in seconds (NaN where absent).
    pub delays: [f64; 4],
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub template: InterleaveTemplate,
    pub objective: f64,
    pub initial_objective: f64,
    /// Optimum re-scored over the intensity profile.
    pub averaged_objective: Option<f64>,
    pub evaluations: usize,
    pub passes: usize,
    pub trace: Vec<TraceEntry>,
}

impl OptimizationResult {
    pub fn delays(&self) -> [f64; 4] {
        delays_of(&self.template)
    }
}

fn delays_of(tpl: &InterleaveTemplate) -> [f64; 4] {
    [Delay::T1, Delay::T2, Delay::T3, Delay::T4].map(|d| d.get(tpl).unwrap_or(f64::NAN))
}

struct Search<'a> {
    obj: &'a Objective,
    scenario: &'a Scenario,
    evaluations: usize,
}

impl Search<'_> {
    /// Scores candidates in parallel; ordering violations score `None`.
    fn score(&mut self, cands: &[InterleaveTemplate]) -> Result<Vec<Option<f64>>> {
        self.evaluations += cands.len();
        cands
            .par_iter()
            .map(|t| {
                if t.validate().is_err() {
                    return Ok(None);
                }
                evaluate_objective(t, self.obj, self.scenario, false).map(Some)
            })
            .collect()
    }

    /// Best of `values` for one coordinate (first maximum, values ascending).
    fn best_along(
        &mut self,
        base: &InterleaveTemplate,
        delay: Delay,
        values: &[f64],
    ) -> Result<Option<(f64, f64)>> {
        let cands: Vec<_> = values.iter().map(|&v| delay.set(base, v)).collect();
        let scores = self.score(&cands)?;
        let mut best: Option<(f64, f64)> = None;
        for (&v, s) in values.iter().zip(scores) {
            if let Some(s) = s {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((v, s));
                }
            }
        }
        Ok(best)
    }
}

fn grid(lo: f64, hi: f64, step: f64, include: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    v.push(include);
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * step);
    v
}

/// Coarse scan of each delay, then cyclic fine coordinate descent until no
/// delay moves by more than one fine step. Ties go to the smaller delay.
pub fn optimize_delays(
    tpl: &InterleaveTemplate,
    obj: &Objective,
    search: &SearchSpec,
    scenario: &Scenario,
) -> Result<OptimizationResult> {
    search.validate()?;
    obj.validate(scenario.mol())?;
    let mut current = InterleaveTemplate {
        constrain_t3: search.constrain_t3,
        ..tpl.clone()
    };
    if current.constrain_t3 {
        current.t3 = None;
    } else if current.t3.is_none() {
        current.t3 = tpl.effective_t3();
    }
    current.validate()?;

    let mut coords: Vec<Delay> = Vec::new();
    if current.t1.is_some() {
        coords.push(Delay::T1);
    }
    if current.t2.is_some() {
        coords.push(Delay::T2);
    }
    if !current.constrain_t3 && current.t3.is_some() {
        coords.push(Delay::T3);
    }
    coords.push(Delay::T4);
    let bounds: Vec<(f64, f64)> = coords
        .iter()
        .map(|d| {
            let c = d.get(&current).unwrap_or_default();
            ((c - search.half_width).max(search.fine_step), c + search.half_width)
        })
        .collect();

    let mut s = Search {
        obj,
        scenario,
        evaluations: 0,
    };
    let mut value = s.score(std::slice::from_ref(&current))?[0]
        .ok_or_else(|| invalid("template", "initial delays violate the ordering"))?;
    let initial_objective = value;
    let mut trace = vec![TraceEntry {
        evaluations: s.evaluations,
        stage: Stage::Initial,
        delays: delays_of(&current),
        objective: value,
    }];

    let accept = |current: &mut InterleaveTemplate,
                      value: &mut f64,
                      d: Delay,
                      found: Option<(f64, f64)>,
                      stage: Stage,
                      evals: usize,
                      trace: &mut Vec<TraceEntry>|
     -> f64 {
        let old = d.get(current).unwrap_or_default();
        match found {
            Some((v, score)) if score > *value || (score == *value && v < old) => {
                *current = d.set(current, v);
                *value = score;
                trace.push(TraceEntry {
                    evaluations: evals,
                    stage,
                    delays: delays_of(current),
                    objective: score,
                });
                (v - old).abs()
            }
            _ => 0.0,
        }
    };

    for (i, &d) in coords.iter().enumerate() {
        let (lo, hi) = bounds[i];
        let here = d.get(&current).unwrap_or_default();
        let values = grid(lo, hi, search.coarse_step, here);
        let found = s.best_along(&current, d, &values)?;
        accept(&mut current, &mut value, d, found, Stage::Coarse, s.evaluations, &mut trace);
    }

    let span = (search.coarse_step / search.fine_step).round() as i64;
    let mut passes = 0;
    loop {
        passes += 1;
        let mut largest = 0.0f64;
        for (i, &d) in coords.iter().enumerate() {
            let (lo, hi) = bounds[i];
            let here = d.get(&current).unwrap_or_default();
            let values: Vec<f64> = (-span..=span)
                .map(|k| here + k as f64 * search.fine_step)
                .filter(|&v| v >= lo - 1e-9 * search.fine_step && v <= hi + 1e-9 * search.fine_step)
                .collect();
            let found = s.best_along(&current, d, &values)?;
            let moved = accept(&mut current, &mut value, d, found, Stage::Fine, s.evaluations, &mut trace);
            largest = largest.max(moved);
        }
        if largest <= search.fine_step * (1.0 + 1e-9) || passes >= search.max_passes {
            break;
        }
    }

    let averaged_objective = if search.final_average {
        Some(evaluate_objective(&current, obj, scenario, true)?)
    } else {
        None
    };
    Ok(OptimizationResult {
        template: current,
        objective: value,
        initial_objective,
        averaged_objective,
        evaluations: s.evaluations,
        passes,
        trace,
    })
}
