//! Equilibrium location (damped Newton), spectral radius of the linearized
//! time-T flow, stability classification, and strong-positivity probes.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::flow::{IntegratorConfig, Rhs, Rk54, TerminalFlag};
use crate::model::{FrozenLinearization, Model};
use crate::order::{ConeOrder, StateVec};

/// Stability class of an equilibrium by the spectral radius of the
/// linearized time-T flow: below, inside, or above the neutral band
/// around 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    LinearlyStable,
    NeutrallyStable,
    LinearlyUnstable,
}

/// `rho < 1 - band` is stable, `rho > 1 + band` unstable, neutral in
/// between. Exact neutrality is not decidable in floating point, hence the
/// band.
pub fn classify_stability(rho: f64, neutral_band: f64) -> Stability {
    if rho < 1.0 - neutral_band {
        Stability::LinearlyStable
    } else if rho > 1.0 + neutral_band {
        Stability::LinearlyUnstable
    } else {
        Stability::NeutrallyStable
    }
}

/// Membership in the set of neutrally-or-linearly stable equilibria.
pub fn is_stable_set_member(stability: Stability) -> bool {
    stability != Stability::LinearlyUnstable
}

#[derive(Clone, Debug)]
pub struct NewtonSolution {
    pub state: StateVec,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct NewtonFailure {
    pub last_residual: f64,
    pub iterations: usize,
    pub singular_jacobian: bool,
}

impl std::fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Newton did not converge: residual {} after {} iterations{}",
            self.last_residual,
            self.iterations,
            if self.singular_jacobian { " (singular Jacobian)" } else { "" }
        )
    }
}

/// Damped Newton on `F(u) = 0`: full steps with Armijo backtracking on the
/// Euclidean residual norm, halving up to 30 times. Succeeds when the sup
/// residual drops to `tol`.
pub fn find_equilibrium(
    model: &Model,
    seed: &StateVec,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<NewtonSolution, NewtonFailure> {
    let mut u = seed.as_slice().to_vec();
    let mut scratch = model.scratch();
    let dim = u.len();
    let mut f = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut f_trial = vec![0.0; dim];
    let mut last_residual = f64::INFINITY;

    for iter in 0..=max_iter {
        if model.eval_into(&u, &mut f, &mut scratch).is_err() {
            return Err(NewtonFailure { last_residual, iterations: iter, singular_jacobian: false });
        }
        let res = sup(&f);
        last_residual = res;
        if res <= tol {
            let state = StateVec::new(u, model.layout()).map_err(|_| NewtonFailure {
                last_residual: res,
                iterations: iter,
                singular_jacobian: false,
            })?;
            return Ok(NewtonSolution { state, residual: res, iterations: iter });
        }
        if iter == max_iter {
            break;
        }

        let system = match model.factor_jacobian(&u) {
            Ok(s) => s,
            Err(_) => return Err(NewtonFailure { last_residual: res, iterations: iter, singular_jacobian: false }),
        };
        if system.is_singular() {
            return Err(NewtonFailure { last_residual: res, iterations: iter, singular_jacobian: true });
        }
        // delta solves J delta = -F.
        let mut delta: Vec<f64> = f.iter().map(|v| -v).collect();
        system.solve_in_place(&mut delta);

        let f0 = norm2(&f);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            for i in 0..dim {
                trial[i] = u[i] + lambda * delta[i];
            }
            if model.eval_into(&trial, &mut f_trial, &mut scratch).is_ok() {
                let ft = norm2(&f_trial);
                if ft <= (1.0 - 1e-4 * lambda) * f0 {
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(NewtonFailure { last_residual: res, iterations: iter, singular_jacobian: false });
        }
        std::mem::swap(&mut u, &mut trial);
    }
    Err(NewtonFailure { last_residual, iterations: max_iter, singular_jacobian: false })
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Integrates the variational equation `v' = J(e) v`, `v(0) = w`, over
/// `[0, T]` with the adaptive scheme (the linearization is frozen at `e`).
pub fn linearized_flow_apply(
    model: &Model,
    e: &StateVec,
    w: &StateVec,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<StateVec> {
    let lin = model.freeze_jacobian(e.as_slice())?;
    apply_frozen(&lin, w.as_slice(), horizon, cfg).map(|v| StateVec::from_raw(v, model.layout()))
}

fn apply_frozen(lin: &FrozenLinearization, w: &[f64], horizon: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let mut lap = vec![0.0; lin.layout().nodes];
    let rhs: Rhs<'_> = Box::new(move |v: &[f64], out: &mut [f64]| {
        lin.apply_into(v, out, &mut lap);
        true
    });
    let mut driver = Rk54::new(rhs, w.to_vec(), cfg.rel_tol, cfg.abs_tol, cfg.max_step_count);
    let flag = driver.advance_to(horizon, &mut |_, _| {});
    if flag != TerminalFlag::ReachedHorizon {
        return Err(CoreError::FlowIncomplete { flag, t: driver.time() });
    }
    Ok(driver.state().to_vec())
}

/// Parameters for spectral analysis of an equilibrium.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisParams {
    /// Time horizon of the linearized flow whose spectral radius is taken.
    pub horizon: f64,
    pub power_tol: f64,
    pub max_power_iter: usize,
    /// Horizon doublings allowed when the power iteration stalls (slow
    /// dominant-ratio separation).
    pub max_horizon_doublings: usize,
    pub neutral_band: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            horizon: 1.0,
            power_tol: 1e-8,
            max_power_iter: 500,
            max_horizon_doublings: 5,
            neutral_band: 1e-3,
            newton_tol: 1e-10,
            newton_max_iter: 50,
        }
    }
}

/// Power iteration on `w -> linearized_flow(e) w` at horizon `T`, sup-norm
/// normalized, started from the all-ones vector. Converges when successive
/// ratio estimates agree to `power_tol`; a persistent miss (complex dominant
/// pair) is an error the caller may retry at doubled horizon.
pub fn spectral_radius(
    model: &Model,
    e: &StateVec,
    horizon: f64,
    power_tol: f64,
    max_power_iter: usize,
    cfg: &IntegratorConfig,
) -> Result<(f64, StateVec)> {
    let lin = model.freeze_jacobian(e.as_slice())?;
    spectral_radius_frozen(&lin, horizon, power_tol, max_power_iter, cfg)
        .map(|(rho, v)| (rho, StateVec::from_raw(v, model.layout())))
}

fn spectral_radius_frozen(
    lin: &FrozenLinearization,
    horizon: f64,
    power_tol: f64,
    max_power_iter: usize,
    cfg: &IntegratorConfig,
) -> Result<(f64, Vec<f64>)> {
    let dim = lin.layout().len();
    let mut w = vec![1.0; dim];
    let mut prev_est: Option<f64> = None;
    let mut est = 0.0;
    for it in 0..max_power_iter {
        let z = apply_frozen(lin, &w, horizon, cfg)?;
        est = sup(&z);
        if est == 0.0 {
            // The map annihilated the probe; the radius estimate is 0.
            return Ok((0.0, w));
        }
        for (wi, zi) in w.iter_mut().zip(&z) {
            *wi = zi / est;
        }
        if let Some(p) = prev_est {
            if (est - p).abs() <= power_tol * est.max(1.0) {
                return Ok((est, w));
            }
        }
        let _ = it;
        prev_est = Some(est);
    }
    Err(CoreError::SpectralNotConverged { iterations: max_power_iter, horizon, last_estimate: est })
}

/// Strong positivity of the linearized time-T flow at `e`: the principal
/// vector must be strictly positive after sign normalization (margin `eta`),
/// and probe directions spanning the positive cone must map to strictly
/// positive images. Small systems probe every canonical direction; larger
/// ones use 32 strided sparse positive probes covering all coordinates.
pub fn check_irreducible(
    model: &Model,
    order: &ConeOrder,
    e: &StateVec,
    horizon: f64,
    params: &AnalysisParams,
    cfg: &IntegratorConfig,
) -> Result<bool> {
    let (_, principal) = spectral_radius(model, e, horizon, params.power_tol, params.max_power_iter, cfg)?;
    check_irreducible_with_principal(model, order, e, &principal, horizon, cfg)
}

pub(crate) fn check_irreducible_with_principal(
    model: &Model,
    order: &ConeOrder,
    e: &StateVec,
    principal: &StateVec,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<bool> {
    let layout = model.layout();
    let m = layout.nodes;
    let dim = layout.len();

    // (i) Sign-normalized principal vector strictly inside the cone.
    let adjusted: Vec<f64> = principal
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| order.sign(i / m) * v)
        .collect();
    let max_abs = adjusted.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
    let sigma = if adjusted.iter().fold(0.0, |acc, v| acc + v) >= 0.0 { 1.0 } else { -1.0 };
    if max_abs == 0.0 || !adjusted.iter().all(|v| sigma * v >= order.eta()) {
        return Ok(false);
    }

    // (ii) Positive probes map strictly into the cone.
    let lin = model.freeze_jacobian(e.as_slice())?;
    let probes: Vec<Vec<usize>> = if dim <= 32 {
        (0..dim).map(|i| vec![i]).collect()
    } else {
        (0..32).map(|p| (p..dim).step_by(32).collect()).collect()
    };
    let mut w = vec![0.0; dim];
    for support in &probes {
        w.iter_mut().for_each(|v| *v = 0.0);
        for &i in support {
            w[i] = order.sign(i / m);
        }
        let image = apply_frozen(&lin, &w, horizon, cfg)?;
        let strictly_positive = image
            .iter()
            .enumerate()
            .all(|(i, v)| order.sign(i / m) * v > 0.0);
        if !strictly_positive {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fully analyzed equilibrium.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub state: StateVec,
    pub residual: f64,
    /// Horizon actually used by spectral analysis (doubled on retries).
    pub horizon: f64,
    pub rho: f64,
    pub stability: Stability,
    pub principal_vector: StateVec,
    pub irreducible: bool,
}

/// Computes spectral radius, stability class, principal vector, and the
/// strong-positivity flag for a Newton-refined state. Retries at doubled
/// horizon when the power iteration cannot separate the dominant ratio.
pub fn analyze_equilibrium(
    model: &Model,
    order: &ConeOrder,
    state: &StateVec,
    params: &AnalysisParams,
    cfg: &IntegratorConfig,
) -> Result<EquilibriumRecord> {
    let residual = model.residual_sup(state.as_slice())?;
    let mut horizon = params.horizon;
    let mut last_err = None;
    for _ in 0..=params.max_horizon_doublings {
        match spectral_radius(model, state, horizon, params.power_tol, params.max_power_iter, cfg) {
            Ok((rho, principal)) => {
                let principal = sign_normalize(model, order, principal);
                let irreducible =
                    check_irreducible_with_principal(model, order, state, &principal, horizon, cfg)?;
                return Ok(EquilibriumRecord {
                    state: state.clone(),
                    residual,
                    horizon,
                    rho,
                    stability: classify_stability(rho, params.neutral_band),
                    principal_vector: principal,
                    irreducible,
                });
            }
            Err(e @ CoreError::SpectralNotConverged { .. }) => {
                last_err = Some(e);
                horizon *= 2.0;
            }
            Err(other) => return Err(other),
        }
    }
    Err(last_err.expect("loop ran at least once"))
}

fn sign_normalize(model: &Model, order: &ConeOrder, mut v: StateVec) -> StateVec {
    let m = model.layout().nodes;
    // Orient by the sign-adjusted value at the largest-magnitude coordinate.
    let mut lead = 0.0f64;
    for (i, x) in v.as_slice().iter().enumerate() {
        let adj = order.sign(i / m) * x;
        if adj.abs() > lead.abs() {
            lead = adj;
        }
    }
    if lead < 0.0 {
        for x in v.as_mut_slice() {
            *x = -*x;
        }
    }
    let s = v.sup_norm();
    if s > 0.0 {
        for x in v.as_mut_slice() {
            *x /= s;
        }
    }
    v
}

/// Set of analyzed equilibria with sup-norm deduplication radius `delta`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriumDb {
    records: Vec<EquilibriumRecord>,
    match_radius: f64,
}

impl EquilibriumDb {
    pub fn new(match_radius: f64) -> Self {
        EquilibriumDb { records: Vec::new(), match_radius }
    }

    pub fn match_radius(&self) -> f64 {
        self.match_radius
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EquilibriumRecord] {
        &self.records
    }

    pub fn get(&self, id: usize) -> &EquilibriumRecord {
        &self.records[id]
    }

    /// Index of the stored equilibrium within `match_radius` of `state`.
    pub fn match_state(&self, state: &StateVec) -> Option<usize> {
        self.records
            .iter()
            .position(|r| r.state.sup_dist(state) <= self.match_radius)
    }

    /// Minimum sup distance from `state` to any stored equilibrium.
    pub fn distance_to_set(&self, state: &StateVec) -> f64 {
        self.records
            .iter()
            .map(|r| r.state.sup_dist(state))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inserts or merges: within `match_radius` of an existing record the
    /// smaller-residual state wins; otherwise the record is appended.
    /// Returns the record's index.
    pub fn register(&mut self, rec: EquilibriumRecord) -> usize {
        if let Some(id) = self.match_state(&rec.state) {
            if rec.residual < self.records[id].residual {
                self.records[id] = rec;
            }
            return id;
        }
        self.records.push(rec);
        self.records.len() - 1
    }
}

/// Seed sweep configuration: constant states from scalar seeds, plus (for
/// discretized models) low cosine modes around each constant equilibrium
/// found, targeting nonconstant profiles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scalar_seeds: Vec<f64>,
    pub cosine_modes: usize,
    pub cosine_amplitude: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { scalar_seeds: vec![-2.0, -0.5, 0.0, 0.5, 2.0], cosine_modes: 3, cosine_amplitude: 0.5 }
    }
}

/// Per-seed outcome of an equilibrium sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub seed_label: String,
    pub converged: bool,
    pub equilibrium: Option<usize>,
    pub residual: f64,
    pub iterations: usize,
}

/// Runs Newton from every sweep seed, analyzes the successes, and registers
/// them. Returns the per-seed outcomes in deterministic seed order.
pub fn equilibrium_sweep(
    model: &Model,
    order: &ConeOrder,
    sweep: &SweepConfig,
    params: &AnalysisParams,
    cfg: &IntegratorConfig,
    db: &mut EquilibriumDb,
) -> Result<Vec<SweepOutcome>> {
    let layout = model.layout();
    let mut outcomes = Vec::new();
    let mut constants: Vec<StateVec> = Vec::new();

    let run_seed = |label: String, seed: StateVec, db: &mut EquilibriumDb| -> Result<SweepOutcome> {
        match find_equilibrium(model, &seed, params.newton_tol, params.newton_max_iter) {
            Ok(sol) => {
                let id = match db.match_state(&sol.state) {
                    Some(id) => {
                        // Merge through register to keep the smaller residual.
                        let rec = db.get(id).clone();
                        if sol.residual < rec.residual {
                            let refreshed = analyze_equilibrium(model, order, &sol.state, params, cfg)?;
                            db.register(refreshed)
                        } else {
                            id
                        }
                    }
                    None => {
                        let rec = analyze_equilibrium(model, order, &sol.state, params, cfg)?;
                        db.register(rec)
                    }
                };
                Ok(SweepOutcome {
                    seed_label: label,
                    converged: true,
                    equilibrium: Some(id),
                    residual: sol.residual,
                    iterations: sol.iterations,
                })
            }
            Err(fail) => Ok(SweepOutcome {
                seed_label: label,
                converged: false,
                equilibrium: None,
                residual: fail.last_residual,
                iterations: fail.iterations,
            }),
        }
    };

    for &c in &sweep.scalar_seeds {
        let seed = StateVec::constant(c, layout);
        let out = run_seed(format!("const({c})"), seed, db)?;
        if out.converged {
            if let Some(id) = out.equilibrium {
                let st = db.get(id).state.clone();
                if !constants.iter().any(|s| s.sup_dist(&st) <= db.match_radius()) {
                    constants.push(st);
                }
            }
        }
        outcomes.push(out);
    }

    if let Some(grid) = model.grid() {
        let m = layout.nodes;
        let n = layout.species;
        for (ci, base) in constants.clone().into_iter().enumerate() {
            for k in 1..=sweep.cosine_modes {
                let mut data = base.as_slice().to_vec();
                match grid {
                    crate::grid::Grid::OneD { length, nodes } => {
                        for s in 0..n {
                            for j in 0..*nodes {
                                let x = grid.x_coord(j);
                                data[s * m + j] +=
                                    sweep.cosine_amplitude * (k as f64 * std::f64::consts::PI * x / length).cos();
                            }
                        }
                    }
                    crate::grid::Grid::TwoD { length_x, nodes_x, nodes_y, .. } => {
                        for s in 0..n {
                            for iy in 0..*nodes_y {
                                for ix in 0..*nodes_x {
                                    let x = grid.x_coord(ix);
                                    data[s * m + iy * nodes_x + ix] += sweep.cosine_amplitude
                                        * (k as f64 * std::f64::consts::PI * x / length_x).cos();
                                }
                            }
                        }
                    }
                }
                let seed = StateVec::new(data, layout)?;
                let out = run_seed(format!("const#{ci}+cos(k={k})"), seed, db)?;
                outcomes.push(out);
            }
        }
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn tanh2() -> Model {
        Model::network(parse("-u1 + 2*tanh(u2); -u2 + 2*tanh(u1)", 2).unwrap())
    }

    fn state(v: &[f64]) -> StateVec {
        StateVec::new(v.to_vec(), crate::order::Layout::new(v.len(), 1)).unwrap()
    }

    #[test]
    fn newton_exact_root_at_seed() {
        let sol = find_equilibrium(&tanh2(), &state(&[0.0, 0.0]), 1e-10, 50).unwrap();
        assert_eq!(sol.residual, 0.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn newton_finds_upper_equilibrium() {
        let sol = find_equilibrium(&tanh2(), &state(&[2.0, 2.0]), 1e-12, 50).unwrap();
        let a = sol.state.as_slice()[0];
        assert!((a - sol.state.as_slice()[1]).abs() < 1e-12);
        // Fixed point of a = 2 tanh a.
        assert!((a - 2.0 * a.tanh()).abs() < 1e-11);
        assert!(a > 1.9 && a < 1.93);
    }

    #[test]
    fn newton_failure_reports_residual() {
        // No zero anywhere: u' = exp(u1) has no equilibrium.
        let model = Model::network(parse("exp(u1)", 1).unwrap());
        let fail = find_equilibrium(&model, &state(&[0.0]), 1e-10, 8).unwrap_err();
        assert!(fail.last_residual > 0.0);
        assert!(fail.iterations <= 8);
    }

    #[test]
    fn singular_jacobian_flagged() {
        // Rank-one system: the Jacobian [[1,1],[1,1]] is exactly singular.
        let model = Model::network(parse("u1 + u2; u1 + u2", 2).unwrap());
        let fail = find_equilibrium(&model, &state(&[1.0, -2.0]), 1e-10, 50).unwrap_err();
        assert!(fail.singular_jacobian);
    }

    #[test]
    fn linearized_flow_examples() {
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12);
        // w = 0 maps to 0.
        let model = tanh2();
        let zero = state(&[0.0, 0.0]);
        let img = linearized_flow_apply(&model, &zero, &zero, 1.0, &cfg).unwrap();
        assert_eq!(img.as_slice(), &[0.0, 0.0]);

        // Scalar decay: e^{-1}.
        let decay = Model::network(parse("-u1", 1).unwrap());
        let img = linearized_flow_apply(&decay, &state(&[0.0]), &state(&[1.0]), 1.0, &cfg).unwrap();
        assert!((img.as_slice()[0] - (-1.0f64).exp()).abs() < 1e-6);

        // (1,1) is the dominant eigenvector of the origin linearization.
        let img = linearized_flow_apply(&model, &zero, &state(&[1.0, 1.0]), 1.0, &cfg).unwrap();
        let e1 = 1.0f64.exp();
        assert!((img.as_slice()[0] - e1).abs() < 1e-5);
        assert!((img.as_slice()[1] - e1).abs() < 1e-5);
    }

    #[test]
    fn spectral_radius_at_origin_is_e() {
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12);
        let (rho, v) = spectral_radius(&tanh2(), &state(&[0.0, 0.0]), 1.0, 1e-8, 500, &cfg).unwrap();
        let expect = 1.0f64.exp();
        assert!((rho - expect).abs() / expect < 1e-3, "rho = {rho}");
        assert!(v.as_slice().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn spectral_radius_identity_flow() {
        let model = Model::network(parse("0*u1; 0*u2", 2).unwrap());
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12);
        let (rho, _) = spectral_radius(&model, &state(&[0.3, 0.4]), 1.0, 1e-8, 500, &cfg).unwrap();
        assert!((rho - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stability_bands() {
        assert_eq!(classify_stability(2.718, 1e-3), Stability::LinearlyUnstable);
        assert_eq!(classify_stability(1.0, 1e-3), Stability::NeutrallyStable);
        assert_eq!(classify_stability(0.434, 1e-3), Stability::LinearlyStable);
        assert!(is_stable_set_member(Stability::NeutrallyStable));
        assert!(!is_stable_set_member(Stability::LinearlyUnstable));
    }

    #[test]
    fn irreducibility_examples() {
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12);
        let order = ConeOrder::positive(2);
        let params = AnalysisParams::default();
        // Coupled network at its upper equilibrium.
        let model = tanh2();
        let sol = find_equilibrium(&model, &state(&[2.0, 2.0]), 1e-12, 50).unwrap();
        assert!(check_irreducible(&model, &order, &sol.state, 1.0, &params, &cfg).unwrap());

        // Decoupled system: probe images have zero coordinates.
        let dec = Model::network(parse("-u1; -u2", 2).unwrap());
        assert!(!check_irreducible(&dec, &order, &state(&[0.0, 0.0]), 1.0, &params, &cfg).unwrap());
    }

    #[test]
    fn register_dedups_within_radius() {
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12);
        let order = ConeOrder::positive(2);
        let params = AnalysisParams::default();
        let model = tanh2();
        let mut db = EquilibriumDb::new(1e-4);
        let zero = analyze_equilibrium(&model, &order, &state(&[0.0, 0.0]), &params, &cfg).unwrap();
        assert_eq!(db.register(zero.clone()), 0);
        assert_eq!(db.len(), 1);
        // Duplicate within delta merges.
        let mut nudged = zero.clone();
        nudged.state = state(&[5e-5, -5e-5]);
        nudged.residual = 1.0;
        assert_eq!(db.register(nudged), 0);
        assert_eq!(db.len(), 1);
        // Distant record appends.
        let sol = find_equilibrium(&model, &state(&[2.0, 2.0]), 1e-12, 50).unwrap();
        let upper = analyze_equilibrium(&model, &order, &sol.state, &params, &cfg).unwrap();
        assert_eq!(db.register(upper), 1);
        assert_eq!(db.len(), 2);
    }

    #[test]
    fn tanh2_sweep_finds_exactly_three() {
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12);
        let order = ConeOrder::positive(2);
        let params = AnalysisParams::default();
        let model = tanh2();
        let mut db = EquilibriumDb::new(1e-4);
        let outcomes =
            equilibrium_sweep(&model, &order, &SweepConfig::default(), &params, &cfg, &mut db).unwrap();
        assert_eq!(db.len(), 3);
        assert!(outcomes.iter().all(|o| o.converged));
    }
}
