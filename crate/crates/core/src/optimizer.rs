//! Derivative-free local minimizers and the layerwise `scanlast` search.

use std::sync::{Arc, Mutex};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{self, angle_domains, AngleSchedule, AnsatzKind, CircuitPlan};
use crate::error::{Error, Result};
use crate::metrics::{Scorer, DEFAULT_TIE_TOLERANCE};
use crate::problem::{energy_table, feasible_basis, ProblemInstance};
use crate::seeding::{self, derive_seed, fnv1a};
use crate::subspace_sim::{dicke_state, Subspace, SubspaceState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Set when the objective returned a non-finite value.
    pub aborted: bool,
}

pub trait Minimizer: Sync {
    fn minimize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        start: &[f64],
        step_scales: &[f64],
        budget: usize,
    ) -> Result<Minimum>;
}

/// Budgeted evaluator that remembers the best point seen. `eval` returns
/// `None` once the budget is spent or after a non-finite value.
struct Tracker<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> f64,
    budget: usize,
    used: usize,
    best_x: Vec<f64>,
    best_f: f64,
    aborted: bool,
}

impl<'a> Tracker<'a> {
    fn new(f: &'a mut dyn FnMut(&[f64]) -> f64, budget: usize) -> Self {
        Self {
            f,
            budget,
            used: 0,
            best_x: Vec::new(),
            best_f: f64::INFINITY,
            aborted: false,
        }
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.aborted || self.used >= self.budget {
            return None;
        }
        self.used += 1;
        let v = (self.f)(x);
        if !v.is_finite() {
            self.aborted = true;
            return None;
        }
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        Some(v)
    }

    fn finish(self, start: &[f64]) -> Minimum {
        let point = if self.best_x.is_empty() {
            start.to_vec()
        } else {
            self.best_x
        };
        Minimum {
            point,
            value: self.best_f,
            evaluations: self.used,
            aborted: self.aborted,
        }
    }
}

fn validate(start: &[f64], step_scales: &[f64], budget: usize) -> Result<()> {
    if start.is_empty() {
        return Err(Error::invalid("empty start point"));
    }
    if step_scales.len() != start.len() {
        return Err(Error::invalid("step scales must match the dimension"));
    }
    if step_scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::invalid("step scales must be positive"));
    }
    if budget < start.len() {
        return Err(Error::invalid("budget must be at least the dimension"));
    }
    Ok(())
}

/// Powell's direction-set method with Brent line searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Powell {
    pub ftol: f64,
    /// Absolute tolerance of each line search, in units of the direction.
    pub line_tol: f64,
}

impl Default for Powell {
    fn default() -> Self {
        Self {
            ftol: 1e-8,
            line_tol: 1e-6,
        }
    }
}

const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105;

impl Powell {
    /// Minimizes along `x + t d`; returns the new point and value, or `None`
    /// when the evaluator stops.
    fn line_min(&self, tr: &mut Tracker, x: &[f64], d: &[f64], fx: f64) -> Option<(Vec<f64>, f64)> {
        let at = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(xi, di)| xi + t * di).collect() };

        // Bracket a minimum: a < b < c (or reversed) with f(b) <= f(a), f(c).
        let (mut a, mut fa) = (0.0, fx);
        let (mut b, mut fb) = (1.0, tr.eval(&at(1.0))?);
        if fb > fa {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
        let mut c = b + GOLD * (b - a);
        let mut fc = tr.eval(&at(c))?;
        let mut expansions = 0;
        while fc < fb {
            (a, fa) = (b, fb);
            (b, fb) = (c, fc);
            c = b + GOLD * (b - a);
            fc = tr.eval(&at(c))?;
            expansions += 1;
            if expansions > 40 {
                break;
            }
        }
        let _ = fa;

        // Brent's method on the bracket.
        let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };
        let (mut xm, mut fxm) = (b, fb);
        let (mut w, mut fw) = (b, fb);
        let (mut v, mut fv) = (b, fb);
        let mut e: f64 = 0.0;
        let mut step: f64 = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let tol1 = self.line_tol * xm.abs() + 1e-10;
            let tol2 = 2.0 * tol1;
            if (xm - mid).abs() <= tol2 - 0.5 * (hi - lo) {
                break;
            }
            let mut use_golden = true;
            if e.abs() > tol1 {
                let r = (xm - w) * (fxm - fv);
                let mut q = (xm - v) * (fxm - fw);
                let mut p = (xm - v) * q - (xm - w) * r;
                q = 2.0 * (q - r);
                if q > 0.0 {
                    p = -p;
                }
                q = q.abs();
                let e_old = e;
                e = step;
                if p.abs() < (0.5 * q * e_old).abs() && p > q * (lo - xm) && p < q * (hi - xm) {
                    step = p / q;
                    let u = xm + step;
                    if u - lo < tol2 || hi - u < tol2 {
                        step = tol1.copysign(mid - xm);
                    }
                    use_golden = false;
                }
            }
            if use_golden {
                e = if xm >= mid { lo - xm } else { hi - xm };
                step = CGOLD * e;
            }
            let u = if step.abs() >= tol1 {
                xm + step
            } else {
                xm + tol1.copysign(step)
            };
            let fu = tr.eval(&at(u))?;
            if fu <= fxm {
                if u >= xm {
                    lo = xm;
                } else {
                    hi = xm;
                }
                (v, fv) = (w, fw);
                (w, fw) = (xm, fxm);
                (xm, fxm) = (u, fu);
            } else {
                if u < xm {
                    lo = u;
                } else {
                    hi = u;
                }
                if fu <= fw || w == xm {
                    (v, fv) = (w, fw);
                    (w, fw) = (u, fu);
                } else if fu <= fv || v == xm || v == w {
                    (v, fv) = (u, fu);
                }
            }
        }
        if fxm <= fx {
            Some((at(xm), fxm))
        } else {
            Some((x.to_vec(), fx))
        }
    }

    fn run(&self, tr: &mut Tracker, start: &[f64], scales: &[f64]) -> Option<()> {
        let dim = start.len();
        let axes = || -> Vec<Vec<f64>> {
            (0..dim)
                .map(|i| {
                    let mut d = vec![0.0; dim];
                    d[i] = scales[i];
                    d
                })
                .collect()
        };
        let mut dirs = axes();
        let mut x = start.to_vec();
        let mut fx = tr.eval(&x)?;
        let mut cycle = 0usize;
        loop {
            let (x_start, f_start) = (x.clone(), fx);
            let (mut biggest, mut ibig) = (0.0, 0);
            for (i, d) in dirs.iter().enumerate() {
                let before = fx;
                (x, fx) = self.line_min(tr, &x, d, fx)?;
                if before - fx > biggest {
                    biggest = before - fx;
                    ibig = i;
                }
            }
            if 2.0 * (f_start - fx) <= self.ftol * (f_start.abs() + fx.abs()) + 1e-20 {
                return Some(());
            }
            cycle += 1;
            if cycle % dim == 0 {
                dirs = axes();
                continue;
            }
            let new_dir: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
            let extrap: Vec<f64> = x.iter().zip(&new_dir).map(|(a, d)| a + d).collect();
            let fe = tr.eval(&extrap)?;
            if fe < f_start {
                let t = 2.0 * (f_start - 2.0 * fx + fe) * (f_start - fx - biggest).powi(2)
                    - biggest * (f_start - fe).powi(2);
                if t < 0.0 {
                    (x, fx) = self.line_min(tr, &x, &new_dir, fx)?;
                    dirs[ibig] = dirs[dim - 1].clone();
                    dirs[dim - 1] = new_dir;
                }
            }
        }
    }
}

impl Minimizer for Powell {
    fn minimize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        start: &[f64],
        step_scales: &[f64],
        budget: usize,
    ) -> Result<Minimum> {
        validate(start, step_scales, budget)?;
        let mut tr = Tracker::new(objective, budget);
        let _ = self.run(&mut tr, start, step_scales);
        Ok(tr.finish(start))
    }
}

pub fn powell_minimize(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    step_scales: &[f64],
    budget: usize,
) -> Result<Minimum> {
    Powell::default().minimize(objective, start, step_scales, budget)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub ftol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { ftol: 1e-10 }
    }
}

impl NelderMead {
    fn run(&self, tr: &mut Tracker, start: &[f64], scales: &[f64]) -> Option<()> {
        let dim = start.len();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        simplex.push((start.to_vec(), tr.eval(start)?));
        for i in 0..dim {
            let mut x = start.to_vec();
            x[i] += scales[i];
            let f = tr.eval(&x)?;
            simplex.push((x, f));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (f_best, f_worst) = (simplex[0].1, simplex[dim].1);
            if (f_worst - f_best).abs() <= self.ftol * (f_best.abs() + f_worst.abs()) + 1e-20 {
                return Some(());
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|k| simplex[..dim].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64)
                .collect();
            let toward = |t: f64, worst: &[f64]| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(worst)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };
            let worst = simplex[dim].0.clone();
            let xr = toward(-1.0, &worst);
            let fr = tr.eval(&xr)?;
            if fr < f_best {
                let xe = toward(-2.0, &worst);
                let fe = tr.eval(&xe)?;
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
            } else {
                let (xc, fc) = if fr < f_worst {
                    let xc = toward(-0.5, &worst);
                    let fc = tr.eval(&xc)?;
                    (xc, fc)
                } else {
                    let xc = toward(0.5, &worst);
                    let fc = tr.eval(&xc)?;
                    (xc, fc)
                };
                if fc < f_worst.min(fr) {
                    simplex[dim] = (xc, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> = best
                            .iter()
                            .zip(&vertex.0)
                            .map(|(b, v)| b + 0.5 * (v - b))
                            .collect();
                        let f = tr.eval(&x)?;
                        *vertex = (x, f);
                    }
                }
            }
        }
    }
}

impl Minimizer for NelderMead {
    fn minimize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        start: &[f64],
        step_scales: &[f64],
        budget: usize,
    ) -> Result<Minimum> {
        validate(start, step_scales, budget)?;
        let mut tr = Tracker::new(objective, budget);
        let _ = self.run(&mut tr, start, step_scales);
        Ok(tr.finish(start))
    }
}

/// Evaluation budget of one local optimization at layer `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum FoptRule {
    Constant(usize),
    /// `k * p`
    PerLayer(usize),
}

impl FoptRule {
    pub fn budget(self, p: usize) -> usize {
        match self {
            FoptRule::Constant(b) => b,
            FoptRule::PerLayer(k) => k * p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanlastConfig {
    pub w0: usize,
    pub q: usize,
    pub w: usize,
    pub f_opt: FoptRule,
    pub p_max: usize,
    pub master_seed: u64,
    #[serde(default = "default_r")]
    pub r: u32,
}

fn default_r() -> u32 {
    5
}

impl ScanlastConfig {
    pub fn paper(p_max: usize, master_seed: u64) -> Self {
        Self {
            w0: 50,
            q: 10,
            w: 250,
            f_opt: FoptRule::Constant(250),
            p_max,
            master_seed,
            r: 5,
        }
    }

    pub fn desk(p_max: usize, master_seed: u64) -> Self {
        Self {
            w0: 10,
            q: 3,
            w: 20,
            f_opt: FoptRule::Constant(100),
            p_max,
            master_seed,
            r: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let budget_ok = match self.f_opt {
            FoptRule::Constant(b) | FoptRule::PerLayer(b) => b > 0,
        };
        if self.w0 == 0 || self.q == 0 || self.w == 0 || self.p_max == 0 || self.r == 0 || !budget_ok
        {
            return Err(Error::invalid("scanlast parameters must all be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub schedule: AngleSchedule,
    pub value: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerResult {
    pub p: usize,
    /// Sorted by value ascending; at most `q` entries.
    pub schedules: Vec<Candidate>,
    pub evaluations: usize,
}

impl LayerResult {
    pub fn best(&self) -> &Candidate {
        &self.schedules[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressRecord {
    pub instance: String,
    pub kind: AnsatzKind,
    pub p: usize,
    pub start_index: usize,
    pub evals: usize,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanlastRun {
    pub layers: Vec<LayerResult>,
    pub progress: Vec<ProgressRecord>,
    pub ordering_seed: u64,
    /// First simulator error, if the run stopped early.
    pub error: Option<String>,
}

impl ScanlastRun {
    pub fn total_evaluations(&self) -> usize {
        self.layers.iter().map(|l| l.evaluations).sum()
    }
}

/// Network ordering seed shared by every ansatz kind on one instance.
pub fn ordering_seed(master_seed: u64, instance_id: &str) -> u64 {
    derive_seed(&[master_seed, fnv1a(instance_id), fnv1a("ordering")])
}

pub fn start_seed(
    master_seed: u64,
    instance_id: &str,
    p: usize,
    survivor: usize,
    batch: usize,
) -> u64 {
    derive_seed(&[
        master_seed,
        fnv1a(instance_id),
        p as u64,
        survivor as u64,
        batch as u64,
    ])
}

/// `<BEST_R>` of a plan's output as a function of flat angles.
pub struct Objective {
    plan: CircuitPlan,
    start: SubspaceState,
    scorer: Arc<Scorer>,
    r: u32,
}

impl Objective {
    pub fn new(plan: CircuitPlan, start: SubspaceState, scorer: Arc<Scorer>, r: u32) -> Self {
        Self {
            plan,
            start,
            scorer,
            r,
        }
    }

    pub fn evaluate(&self, angles: &[f64]) -> Result<f64> {
        let sched = AngleSchedule::from_flat(angles.to_vec())?;
        let out = ansatz::execute(&self.plan, &sched, self.start.clone())?;
        self.scorer.best_r(&out.probabilities(), self.r)
    }
}

fn compare(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.evaluations.cmp(&b.evaluations))
        .then_with(|| {
            a.schedule
                .as_flat()
                .iter()
                .zip(b.schedule.as_flat())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

pub fn scanlast(
    instance: &ProblemInstance,
    kind: AnsatzKind,
    config: &ScanlastConfig,
) -> Result<ScanlastRun> {
    scanlast_with(instance, kind, config, &Powell::default())
}

pub fn scanlast_with(
    instance: &ProblemInstance,
    kind: AnsatzKind,
    config: &ScanlastConfig,
    minimizer: &dyn Minimizer,
) -> Result<ScanlastRun> {
    config.validate()?;
    let basis = feasible_basis(instance.n(), instance.kappa())?;
    let table = energy_table(instance, &basis)?;
    let scorer = Arc::new(Scorer::from_table(&table, DEFAULT_TIE_TOLERANCE)?);
    let space = Subspace::new(basis);
    let start_state = dicke_state(&space)?;
    let (gmax, bmax) = angle_domains(instance)?;
    let oseed = ordering_seed(config.master_seed, instance.id());

    let mut run = ScanlastRun {
        layers: Vec::new(),
        progress: Vec::new(),
        ordering_seed: oseed,
        error: None,
    };
    let mut survivors: Vec<Candidate> = Vec::new();

    for p in 1..=config.p_max {
        let plan = ansatz::build(kind, instance, p, oseed)?;
        let objective = Objective::new(plan, start_state.clone(), Arc::clone(&scorer), config.r);
        let budget = config.f_opt.budget(p).max(2 * p);
        let scales: Vec<f64> = (0..p).flat_map(|_| [gmax / 8.0, bmax / 8.0]).collect();

        // (start index, start angles)
        let starts: Vec<(usize, Vec<f64>)> = if p == 1 {
            (0..config.w0)
                .map(|b| {
                    let mut rng = seeding::rng(start_seed(config.master_seed, instance.id(), 1, 0, b));
                    (b, vec![rng.gen::<f64>() * gmax, rng.gen::<f64>() * bmax])
                })
                .collect()
        } else {
            survivors
                .iter()
                .enumerate()
                .flat_map(|(s, cand)| {
                    let prev = cand.schedule.as_flat().to_vec();
                    (0..config.w).map(move |b| {
                        let tail = match b {
                            0 => [0.0, 0.0],
                            1 => [prev[prev.len() - 2], prev[prev.len() - 1]],
                            _ => {
                                let mut rng = seeding::rng(start_seed(
                                    config.master_seed,
                                    instance.id(),
                                    p,
                                    s,
                                    b,
                                ));
                                [rng.gen::<f64>() * gmax, rng.gen::<f64>() * bmax]
                            }
                        };
                        let mut x = prev.clone();
                        x.extend(tail);
                        (s * config.w + b, x)
                    })
                })
                .collect()
        };

        let failure: Mutex<Option<String>> = Mutex::new(None);
        let results: Vec<Result<(usize, Minimum)>> = starts
            .par_iter()
            .map(|(idx, x0)| {
                let mut f = |x: &[f64]| match objective.evaluate(x) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.lock().expect("poisoned").get_or_insert(e.to_string());
                        f64::NAN
                    }
                };
                minimizer.minimize(&mut f, x0, &scales, budget).map(|m| (*idx, m))
            })
            .collect();

        let mut candidates = Vec::with_capacity(results.len());
        let mut evaluations = 0;
        for res in results {
            let (idx, m) = res?;
            evaluations += m.evaluations;
            run.progress.push(ProgressRecord {
                instance: instance.id().to_string(),
                kind,
                p,
                start_index: idx,
                evals: m.evaluations,
                best_value: m.value,
            });
            if m.value.is_finite() {
                candidates.push(Candidate {
                    schedule: AngleSchedule::from_flat(m.point)?,
                    value: m.value,
                    evaluations: m.evaluations,
                });
            }
        }
        if let Some(msg) = failure.into_inner().expect("poisoned") {
            run.error = Some(msg);
            return Ok(run);
        }
        candidates.sort_by(compare);
        candidates.truncate(config.q);
        if candidates.is_empty() {
            run.error = Some(format!("no finite candidate at p = {p}"));
            return Ok(run);
        }
        survivors = candidates.clone();
        run.layers.push(LayerResult {
            p,
            schedules: candidates,
            evaluations,
        });
    }
    Ok(run)
}
