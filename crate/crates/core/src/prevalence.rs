//! Sampling experiments over classifications: segment (line) experiments
//! with empirical class masses, unordered-basin checks for unstable
//! equilibria, the homogeneous-convergence experiment for discretized
//! systems, and the bundled property suite.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{
    check_convergence_criterion, check_nonordering, classify_frozen, lsd_verdict_from, Classification,
    ClassifierParams, FrozenClassification, FrozenOutcome, LsdVerdict, TrajectoryClass,
};
use crate::equilibrium::{analyze_equilibrium, EquilibriumDb, Stability};
use crate::error::{CoreError, Result};
use crate::flow::{check_monotone, IntegratorConfig, TerminalFlag};
use crate::model::Model;
use crate::order::{ConeOrder, Segment, StateVec};

/// Deterministic per-trial RNG: one ChaCha stream per trial index, so results
/// are independent of execution order and thread count.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Initial-data samplers. The Fourier sampler draws smooth no-flux-compatible
/// profiles and is the canonical choice for discretized systems; the uniform
/// box sampler draws each coordinate independently.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SamplerSpec {
    UniformBox { ranges: Vec<(f64, f64)> },
    Fourier { offset_range: (f64, f64), coeff_range: (f64, f64), modes: usize },
}

pub fn sample_state(spec: &SamplerSpec, model: &Model, rng: &mut ChaCha8Rng) -> Result<StateVec> {
    let layout = model.layout();
    let (n, m) = (layout.species, layout.nodes);
    match spec {
        SamplerSpec::UniformBox { ranges } => {
            if ranges.len() != n {
                return Err(CoreError::InvalidParameter {
                    name: "ranges",
                    detail: format!("expected {n} per-species ranges, got {}", ranges.len()),
                });
            }
            let mut data = vec![0.0; n * m];
            for s in 0..n {
                let (lo, hi) = ranges[s];
                for j in 0..m {
                    data[s * m + j] = rng.gen_range(lo..=hi);
                }
            }
            StateVec::new(data, layout)
        }
        SamplerSpec::Fourier { offset_range, coeff_range, modes } => {
            let grid = model.grid().ok_or(CoreError::InvalidParameter {
                name: "sampler",
                detail: "the Fourier sampler needs a grid-backed model".to_string(),
            })?;
            let mut data = vec![0.0; n * m];
            for s in 0..n {
                let c = rng.gen_range(offset_range.0..=offset_range.1);
                let bx: Vec<f64> =
                    (0..*modes).map(|_| rng.gen_range(coeff_range.0..=coeff_range.1)).collect();
                let by: Vec<f64> = match grid {
                    crate::grid::Grid::OneD { .. } => Vec::new(),
                    crate::grid::Grid::TwoD { .. } => {
                        (0..*modes).map(|_| rng.gen_range(coeff_range.0..=coeff_range.1)).collect()
                    }
                };
                for j in 0..m {
                    let mut v = c;
                    match grid {
                        crate::grid::Grid::OneD { length, .. } => {
                            let x = grid.x_coord(j);
                            for (k, b) in bx.iter().enumerate() {
                                v += b * ((k + 1) as f64 * std::f64::consts::PI * x / length).cos();
                            }
                        }
                        crate::grid::Grid::TwoD { length_x, length_y, nodes_x, .. } => {
                            let x = grid.x_coord(j % nodes_x);
                            let y = grid.y_coord(j / nodes_x);
                            for (k, b) in bx.iter().enumerate() {
                                v += b * ((k + 1) as f64 * std::f64::consts::PI * x / length_x).cos();
                            }
                            for (k, b) in by.iter().enumerate() {
                                v += b * ((k + 1) as f64 * std::f64::consts::PI * y / length_y).cos();
                            }
                        }
                    }
                    data[s * m + j] = v;
                }
            }
            StateVec::new(data, layout)
        }
    }
}

/// Draws a strictly cone-positive perturbation direction matched to the
/// sampler (rough for the box sampler, smooth with a positive floor for the
/// Fourier one).
pub fn sample_positive_direction(
    spec: &SamplerSpec,
    model: &Model,
    order: &ConeOrder,
    rng: &mut ChaCha8Rng,
) -> Result<StateVec> {
    let layout = model.layout();
    let (n, m) = (layout.species, layout.nodes);
    let mut data = vec![0.0; n * m];
    match spec {
        SamplerSpec::UniformBox { ranges } => {
            for s in 0..n {
                let half = 0.5 * (ranges[s].1 - ranges[s].0);
                for j in 0..m {
                    data[s * m + j] = order.sign(s) * half * rng.gen_range(0.01..=1.0);
                }
            }
        }
        SamplerSpec::Fourier { modes, .. } => {
            let grid = model.grid().ok_or(CoreError::InvalidParameter {
                name: "sampler",
                detail: "the Fourier sampler needs a grid-backed model".to_string(),
            })?;
            let axes = match grid {
                crate::grid::Grid::OneD { .. } => 1.0,
                crate::grid::Grid::TwoD { .. } => 2.0,
            };
            for s in 0..n {
                let c = rng.gen_range(0.1..=0.4);
                let amp = c / (2.0 * *modes as f64 * axes);
                let bx: Vec<f64> = (0..*modes).map(|_| rng.gen_range(-amp..=amp)).collect();
                let by: Vec<f64> = match grid {
                    crate::grid::Grid::OneD { .. } => Vec::new(),
                    crate::grid::Grid::TwoD { .. } => (0..*modes).map(|_| rng.gen_range(-amp..=amp)).collect(),
                };
                for j in 0..m {
                    let mut v = c;
                    match grid {
                        crate::grid::Grid::OneD { length, .. } => {
                            let x = grid.x_coord(j);
                            for (k, b) in bx.iter().enumerate() {
                                v += b * ((k + 1) as f64 * std::f64::consts::PI * x / length).cos();
                            }
                        }
                        crate::grid::Grid::TwoD { length_x, length_y, nodes_x, .. } => {
                            let x = grid.x_coord(j % nodes_x);
                            let y = grid.y_coord(j / nodes_x);
                            for (k, b) in bx.iter().enumerate() {
                                v += b * ((k + 1) as f64 * std::f64::consts::PI * x / length_x).cos();
                            }
                            for (k, b) in by.iter().enumerate() {
                                v += b * ((k + 1) as f64 * std::f64::consts::PI * y / length_y).cos();
                            }
                        }
                    }
                    // Positive by construction: |sum of modes| <= c/2.
                    data[s * m + j] = order.sign(s) * v;
                }
            }
        }
    }
    StateVec::new(data, layout)
}

/// Maps a batch of points to frozen classifications against a read-only
/// equilibrium set. Callers may parallelize, provided results come back in
/// input order.
pub type PhaseMap<'a> =
    dyn Fn(&[StateVec], &EquilibriumDb) -> Result<Vec<FrozenClassification>> + Sync + 'a;

/// The sequential phase map used by in-process experiments.
pub fn sequential_phase_map<'a>(
    model: &'a Model,
    params: &'a ClassifierParams,
    cfg: &'a IntegratorConfig,
) -> impl Fn(&[StateVec], &EquilibriumDb) -> Result<Vec<FrozenClassification>> + Sync + 'a {
    move |points, db| points.iter().map(|p| classify_frozen(model, p, db, params, cfg)).collect()
}

/// Two-phase deterministic classification of a point batch: classify against
/// the frozen set, merge newly discovered equilibria in index order, then
/// reclassify once. The result is identical for any parallel `map`.
pub fn classify_points_two_phase(
    model: &Model,
    order: &ConeOrder,
    points: &[StateVec],
    db: &mut EquilibriumDb,
    params: &ClassifierParams,
    cfg: &IntegratorConfig,
    map: &PhaseMap<'_>,
) -> Result<Vec<Classification>> {
    let phase1 = map(points, db)?;
    let mut merged_any = false;
    for fc in &phase1 {
        if let FrozenOutcome::NewEquilibrium(state) = &fc.outcome {
            if db.match_state(state).is_none() {
                let rec = analyze_equilibrium(model, order, state, &params.analysis, cfg)?;
                db.register(rec);
                merged_any = true;
            }
        }
    }
    let finals = if merged_any { map(points, db)? } else { phase1 };
    Ok(finals
        .into_iter()
        .map(|fc| {
            let class = match fc.outcome {
                FrozenOutcome::Classified(c) => c,
                // A candidate surviving the merge pass indicates a
                // registration miss; absorbed as Undetermined.
                FrozenOutcome::NewEquilibrium(_) => TrajectoryClass::Undetermined,
            };
            Classification { class, evidence: fc.evidence, omega: fc.omega }
        })
        .collect())
}

/// Fraction of segment points carrying the given class label: the Riemann
/// approximation of the uniform segment measure of that class.
pub fn segment_measure(classes: &[TrajectoryClass], label: &str) -> f64 {
    let count = classes.iter().filter(|c| c.label() == label).count();
    count as f64 / classes.len() as f64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassMasses {
    pub convergent: f64,
    pub quasiconvergent: f64,
    pub non_quasiconvergent: f64,
    pub undetermined: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LineReport {
    pub n: usize,
    pub classes: Vec<TrajectoryClass>,
    pub masses: ClassMasses,
    /// Distinct equilibria hit, in order of first appearance along the
    /// segment parameter.
    pub limit_chain: Vec<usize>,
    /// Consecutive chain members are ordered in the cone.
    pub chain_ordered: bool,
    /// Points convergent to a linearly unstable equilibrium.
    pub unstable_hits: usize,
    #[serde(skip)]
    pub evidence: Vec<crate::classify::Evidence>,
}

/// Classifies the `N+1` equispaced segment points and aggregates masses,
/// the chain of limits, and hits on unstable equilibria.
pub fn line_experiment_with(
    model: &Model,
    order: &ConeOrder,
    segment: &Segment,
    n: usize,
    db: &mut EquilibriumDb,
    params: &ClassifierParams,
    cfg: &IntegratorConfig,
    map: &PhaseMap<'_>,
) -> Result<LineReport> {
    if n < 2 {
        return Err(CoreError::InvalidParameter {
            name: "N",
            detail: format!("line experiments need N >= 2, got {n}"),
        });
    }
    let points = segment.points(n)?;
    let classifications = classify_points_two_phase(model, order, &points, db, params, cfg, map)?;

    let total = classifications.len() as f64;
    let count = |label: &str| {
        classifications.iter().filter(|c| c.class.label() == label).count() as f64 / total
    };
    let masses = ClassMasses {
        convergent: count("convergent"),
        quasiconvergent: count("quasiconvergent"),
        non_quasiconvergent: count("non_quasiconvergent"),
        undetermined: count("undetermined"),
    };

    let mut limit_chain: Vec<usize> = Vec::new();
    let mut unstable_hits = 0;
    for c in &classifications {
        if let TrajectoryClass::Convergent(id) = c.class {
            if !limit_chain.contains(&id) {
                limit_chain.push(id);
            }
            if db.get(id).stability == Stability::LinearlyUnstable {
                unstable_hits += 1;
            }
        }
    }
    let mut chain_ordered = true;
    for w in limit_chain.windows(2) {
        if !order.leq(&db.get(w[0]).state, &db.get(w[1]).state)? {
            chain_ordered = false;
        }
    }

    let (classes, evidence) = classifications.into_iter().map(|c| (c.class, c.evidence)).unzip();
    Ok(LineReport { n, classes, masses, limit_chain, chain_ordered, unstable_hits, evidence })
}

pub fn line_experiment(
    model: &Model,
    order: &ConeOrder,
    segment: &Segment,
    n: usize,
    db: &mut EquilibriumDb,
    params: &ClassifierParams,
    cfg: &IntegratorConfig,
) -> Result<LineReport> {
    let map = sequential_phase_map(model, params, cfg);
    line_experiment_with(model, order, segment, n, db, params, cfg, &map)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasinReport {
    pub equilibrium: usize,
    pub pairs_tested: usize,
    /// Ordered pairs found with both members converging to the target
    /// (expected 0: strict basins of unstable equilibria are unordered).
    pub ordered_pairs_found: usize,
}

/// Samples ordered pairs `(x, x + w)`, `w > 0`, and counts pairs where both
/// members converge to the given linearly unstable equilibrium.
#[allow(clippy::too_many_arguments)]
pub fn basin_unordered_check_with(
    model: &Model,
    order: &ConeOrder,
    target: usize,
    trials: usize,
    bounds: &[(f64, f64)],
    seed: u64,
    db: &EquilibriumDb,
    map: &PhaseMap<'_>,
) -> Result<BasinReport> {
    let rec = db.get(target);
    if rec.stability != Stability::LinearlyUnstable {
        return Err(CoreError::InvalidParameter {
            name: "target",
            detail: "basin unorderedness applies to linearly unstable equilibria".to_string(),
        });
    }
    let spec = SamplerSpec::UniformBox { ranges: bounds.to_vec() };
    let mut points = Vec::with_capacity(2 * trials);
    for trial in 0..trials {
        let mut rng = substream(seed, trial as u64);
        let x = sample_state(&spec, model, &mut rng)?;
        let w = sample_positive_direction(&spec, model, order, &mut rng)?;
        let y = x.add_scaled(1.0, &w)?;
        debug_assert!(order.lt(&x, &y).unwrap());
        points.push(x);
        points.push(y);
    }
    // No merge phase: only hits on the already-registered target matter.
    let frozen = map(&points, db)?;
    let mut found = 0;
    for pair in frozen.chunks(2) {
        let hit = |fc: &FrozenClassification| {
            matches!(fc.outcome, FrozenOutcome::Classified(TrajectoryClass::Convergent(id)) if id == target)
        };
        if hit(&pair[0]) && hit(&pair[1]) {
            found += 1;
        }
    }
    Ok(BasinReport { equilibrium: target, pairs_tested: trials, ordered_pairs_found: found })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomogeneityTrial {
    pub class: TrajectoryClass,
    pub limit: Option<usize>,
    /// Spatial sup-variation per species of the limiting equilibrium.
    pub limit_variation: Vec<f64>,
    pub uniform: bool,
    pub blowup: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub trials: Vec<HomogeneityTrial>,
    pub fraction_uniform: f64,
    pub blowup_count: usize,
}

/// Draws `m_trials` random initial profiles, classifies them, and reports
/// the fraction converging to a spatially uniform equilibrium (per-species
/// variation at most `eps_uniform`). Blowups are tallied separately.
#[allow(clippy::too_many_arguments)]
pub fn homogeneity_experiment_with(
    model: &Model,
    order: &ConeOrder,
    sampler: &SamplerSpec,
    m_trials: usize,
    seed: u64,
    eps_uniform: f64,
    db: &mut EquilibriumDb,
    params: &ClassifierParams,
    cfg: &IntegratorConfig,
    map: &PhaseMap<'_>,
) -> Result<HomogeneityReport> {
    if !model.is_rd() {
        return Err(CoreError::InvalidParameter {
            name: "model",
            detail: "the homogeneity experiment needs a grid-backed model".to_string(),
        });
    }
    let mut points = Vec::with_capacity(m_trials);
    for trial in 0..m_trials {
        let mut rng = substream(seed, trial as u64);
        points.push(sample_state(sampler, model, &mut rng)?);
    }
    let classifications = classify_points_two_phase(model, order, &points, db, params, cfg, map)?;
    let n_species = model.layout().species;
    let mut trials = Vec::with_capacity(m_trials);
    let mut uniform_count = 0;
    let mut blowup_count = 0;
    for c in classifications {
        let blowup = c.evidence.flag == TerminalFlag::Blowup;
        if blowup {
            blowup_count += 1;
        }
        let (limit, variation, uniform) = match c.class {
            TrajectoryClass::Convergent(id) => {
                let st = &db.get(id).state;
                let var: Vec<f64> = (0..n_species).map(|s| st.spatial_variation(s)).collect();
                let uni = var.iter().all(|v| *v <= eps_uniform);
                (Some(id), var, uni)
            }
            _ => (None, vec![f64::NAN; n_species], false),
        };
        if uniform {
            uniform_count += 1;
        }
        trials.push(HomogeneityTrial { class: c.class, limit, limit_variation: variation, uniform, blowup });
    }
    Ok(HomogeneityReport {
        trials,
        fraction_uniform: uniform_count as f64 / m_trials as f64,
        blowup_count,
    })
}

/// Counts for the bundled property suite over one model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertyReport {
    pub monotone_pairs_checked: usize,
    pub monotone_violations: usize,
    pub worst_order_margin: f64,
    pub lsd_checked: usize,
    pub lsd_violations: usize,
    pub cc_checked: usize,
    pub cc_applicable: usize,
    pub cc_violations: usize,
    pub nonordering_checked: usize,
    pub nonordering_violations: usize,
    pub basin_reports: Vec<BasinReport>,
    /// Up to 32 human-readable violation descriptions.
    pub details: Vec<String>,
}

impl PropertyReport {
    pub fn total_violations(&self) -> usize {
        self.monotone_violations
            + self.lsd_violations
            + self.cc_violations
            + self.nonordering_violations
            + self.basin_reports.iter().map(|b| b.ordered_pairs_found).sum::<usize>()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertySuiteParams {
    pub monotone_pairs: usize,
    pub monotone_t_samples: Vec<f64>,
    pub lsd_pairs: usize,
    pub cc_points: usize,
    pub cc_horizon: f64,
    pub basin_trials: usize,
    pub seed: u64,
}

impl Default for PropertySuiteParams {
    fn default() -> Self {
        PropertySuiteParams {
            monotone_pairs: 200,
            monotone_t_samples: vec![1.0, 5.0, 10.0],
            lsd_pairs: 100,
            cc_points: 50,
            cc_horizon: 1.0,
            basin_trials: 200,
            seed: 0,
        }
    }
}

/// Order-preservation, limit-set dichotomy, convergence-criterion,
/// nonordering, and unordered-basin checks over seeded random samples.
/// Expects the equilibrium set to be pre-populated by a sweep.
#[allow(clippy::too_many_arguments)]
pub fn property_suite(
    model: &Model,
    order: &ConeOrder,
    sampler: &SamplerSpec,
    basin_bounds: &[(f64, f64)],
    db: &mut EquilibriumDb,
    suite: &PropertySuiteParams,
    params: &ClassifierParams,
    cfg: &IntegratorConfig,
) -> Result<PropertyReport> {
    let mut details: Vec<String> = Vec::new();
    let push_detail = |details: &mut Vec<String>, msg: String| {
        if details.len() < 32 {
            details.push(msg);
        }
    };

    // Order preservation on random ordered pairs.
    let mut monotone_violations = 0;
    let mut worst_margin = f64::INFINITY;
    for trial in 0..suite.monotone_pairs {
        let mut rng = substream(suite.seed, trial as u64);
        let x = sample_state(sampler, model, &mut rng)?;
        let w = sample_positive_direction(sampler, model, order, &mut rng)?;
        let y = x.add_scaled(1.0, &w)?;
        let rep = check_monotone(model, &x, &y, order, &suite.monotone_t_samples, params.tol_order, cfg)?;
        worst_margin = worst_margin.min(rep.min_margin());
        if !rep.violations.is_empty() {
            monotone_violations += rep.violations.len();
            push_detail(
                &mut details,
                format!("order violation on pair {trial}: margin {}", rep.violations[0].margin),
            );
        }
    }

    // Limit-set dichotomy plus nonordering of the tails it estimates.
    let mut lsd_violations = 0;
    let mut nonordering_checked = 0;
    let mut nonordering_violations = 0;
    for trial in 0..suite.lsd_pairs {
        let mut rng = substream(suite.seed ^ 0x51ab_71ed, trial as u64);
        let x = sample_state(sampler, model, &mut rng)?;
        let w = sample_positive_direction(sampler, model, order, &mut rng)?;
        let y = x.add_scaled(1.0, &w)?;
        let cx = crate::classify::classify(model, order, &x, db, params, cfg)?;
        let cy = crate::classify::classify(model, order, &y, db, params, cfg)?;
        for omega in [&cx.omega, &cy.omega] {
            nonordering_checked += 1;
            if !check_nonordering(omega, order, params.eps_conv, params.tol_order)? {
                nonordering_violations += 1;
                push_detail(&mut details, format!("ordered omega tail on lsd pair {trial}"));
            }
        }
        let verdict = lsd_verdict_from(order, &cx, &cy, db.match_radius(), params.tol_order)?;
        if let LsdVerdict::Violation { detail } = verdict {
            lsd_violations += 1;
            push_detail(&mut details, format!("lsd violation on pair {trial}: {detail}"));
        }
    }

    // Convergence criterion instances.
    let mut cc_applicable = 0;
    let mut cc_violations = 0;
    for trial in 0..suite.cc_points {
        let mut rng = substream(suite.seed ^ 0xcc00_55aa, trial as u64);
        let x = sample_state(sampler, model, &mut rng)?;
        let rep = check_convergence_criterion(model, order, &x, suite.cc_horizon, db, params, cfg)?;
        if rep.applicable {
            cc_applicable += 1;
            if rep.satisfied != Some(true) {
                cc_violations += 1;
                push_detail(
                    &mut details,
                    format!("convergence criterion applicable but unsatisfied at point {trial} ({:?})", rep.class),
                );
            }
        }
    }

    // Unordered strict basins of every linearly unstable equilibrium.
    let unstable_ids: Vec<usize> = (0..db.len())
        .filter(|&id| db.get(id).stability == Stability::LinearlyUnstable)
        .collect();
    let mut basin_reports = Vec::new();
    let map = sequential_phase_map(model, params, cfg);
    for id in unstable_ids {
        let rep = basin_unordered_check_with(
            model,
            order,
            id,
            suite.basin_trials,
            basin_bounds,
            suite.seed ^ (0xba51_0000 + id as u64),
            db,
            &map,
        )?;
        if rep.ordered_pairs_found > 0 {
            push_detail(
                &mut details,
                format!("{} ordered pairs in the strict basin of equilibrium {id}", rep.ordered_pairs_found),
            );
        }
        basin_reports.push(rep);
    }

    Ok(PropertyReport {
        monotone_pairs_checked: suite.monotone_pairs,
        monotone_violations,
        worst_order_margin: worst_margin,
        lsd_checked: suite.lsd_pairs,
        lsd_violations,
        cc_checked: suite.cc_points,
        cc_applicable,
        cc_violations,
        nonordering_checked,
        nonordering_violations,
        basin_reports,
        details,
    })
}
