//! Numerical semiflow: adaptive embedded RK 5(4) for network models and a
//! semi-implicit scheme (Crank-Nicolson diffusion + explicit Heun reaction)
//! for discretized systems, plus trajectory recording, the finite-horizon
//! stay-in predicate, and the order-preservation checker.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{CoreError, Result};
use crate::linalg::BandedMatrix;
use crate::model::Model;
use crate::order::{check_layout, ConeOrder, StateVec};

/// Sup-norm threshold beyond which a run is declared blown up. Bounded
/// orbits are a standing hypothesis; crossing this marks its violation
/// rather than an integrator error.
pub const BLOWUP_SUP: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    AdaptiveRk54,
    ImexCnHeun,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Fixed step for the semi-implicit scheme; ignored by the adaptive one.
    #[serde(default)]
    pub dt: f64,
    pub max_step_count: usize,
}

impl IntegratorConfig {
    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorConfig { scheme: Scheme::AdaptiveRk54, rel_tol, abs_tol, dt: 0.0, max_step_count: 1_000_000 }
    }

    pub fn imex(dt: f64) -> Self {
        IntegratorConfig { scheme: Scheme::ImexCnHeun, rel_tol: 1e-8, abs_tol: 1e-10, dt, max_step_count: 10_000_000 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "tolerances",
                detail: format!("rel_tol and abs_tol must be > 0, got {} / {}", self.rel_tol, self.abs_tol),
            });
        }
        if self.scheme == Scheme::ImexCnHeun && !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CoreError::InvalidParameter {
                name: "dt",
                detail: format!("semi-implicit scheme needs dt > 0, got {}", self.dt),
            });
        }
        if self.max_step_count == 0 {
            return Err(CoreError::InvalidParameter {
                name: "max_step_count",
                detail: "must be positive".to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalFlag {
    ReachedHorizon,
    StepLimitExceeded,
    Blowup,
}

/// Recorded orbit segment: every accepted step, times strictly increasing,
/// first state equal to the initial datum. Only a `Blowup` run may carry a
/// non-finite entry, and only in its last state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVec>,
    terminal: TerminalFlag,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVec] {
        &self.states
    }

    pub fn terminal(&self) -> TerminalFlag {
        self.terminal
    }

    pub fn final_state(&self) -> &StateVec {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    /// CSV rows `t, u_1, ..., u_dim` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.states[0].len();
        write!(w, "t")?;
        for i in 0..dim {
            write!(w, ",u{}", i + 1)?;
        }
        writeln!(w)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for v in s.as_slice() {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Endpoint of an integration together with how it ended.
#[derive(Clone, Debug)]
pub struct FlowResult {
    pub state: StateVec,
    pub t: f64,
    pub flag: TerminalFlag,
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with PI step control (FSAL).
// ---------------------------------------------------------------------------

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FACC1: f64 = 5.0; // 1 / fac_min
const FACC2: f64 = 0.1; // 1 / fac_max

/// RHS callback; returns false when the field cannot be evaluated (domain
/// error), which the driver treats as a failed stage.
pub type Rhs<'a> = Box<dyn FnMut(&[f64], &mut [f64]) -> bool + 'a>;

pub(crate) struct Rk54<'a> {
    rhs: Rhs<'a>,
    y: Vec<f64>,
    t: f64,
    h: f64,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    facold: f64,
    fsal_valid: bool,
    rel_tol: f64,
    abs_tol: f64,
    steps: usize,
    max_steps: usize,
}

impl<'a> Rk54<'a> {
    pub(crate) fn new(rhs: Rhs<'a>, y0: Vec<f64>, rel_tol: f64, abs_tol: f64, max_steps: usize) -> Self {
        let dim = y0.len();
        Rk54 {
            rhs,
            y: y0,
            t: 0.0,
            h: 0.0,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            ytmp: vec![0.0; dim],
            ynew: vec![0.0; dim],
            facold: 1e-4,
            fsal_valid: false,
            rel_tol,
            abs_tol,
            steps: 0,
            max_steps,
        }
    }

    pub(crate) fn time(&self) -> f64 {
        self.t
    }

    pub(crate) fn state(&self) -> &[f64] {
        &self.y
    }

    fn sup(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    fn initial_step(&mut self, t_end: f64) -> f64 {
        let dim = self.y.len();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..dim {
            let sc = self.abs_tol + self.rel_tol * self.y[i].abs();
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.k[0][i] / sc).powi(2);
        }
        d0 = (d0 / dim as f64).sqrt();
        d1 = (d1 / dim as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(t_end - self.t).max(1e-12);
        for i in 0..dim {
            self.ytmp[i] = self.y[i] + h0 * self.k[0][i];
        }
        if !(self.rhs)(&self.ytmp, &mut self.k[1]) {
            return h0;
        }
        let mut d2 = 0.0;
        for i in 0..dim {
            let sc = self.abs_tol + self.rel_tol * self.y[i].abs();
            d2 += ((self.k[1][i] - self.k[0][i]) / sc).powi(2);
        }
        d2 = (d2 / dim as f64).sqrt() / h0;
        let dd = d1.max(d2);
        let h1 = if dd <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dd).powf(0.2) };
        h1.min(100.0 * h0).min(t_end - self.t)
    }

    /// Integrates up to `t_end`, invoking `on_accept` after every accepted
    /// step. Returns `ReachedHorizon` on success.
    pub(crate) fn advance_to(&mut self, t_end: f64, on_accept: &mut dyn FnMut(f64, &[f64])) -> TerminalFlag {
        if t_end <= self.t {
            return TerminalFlag::ReachedHorizon;
        }
        if !self.fsal_valid {
            let Rk54 { rhs, y, k, .. } = self;
            if !(rhs)(y, &mut k[0]) || !k[0].iter().all(|v| v.is_finite()) {
                return TerminalFlag::Blowup;
            }
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(t_end);
        }
        loop {
            if self.t >= t_end {
                return TerminalFlag::ReachedHorizon;
            }
            if self.steps >= self.max_steps {
                return TerminalFlag::StepLimitExceeded;
            }
            if self.h < 1e-14 * self.t.abs().max(1.0) {
                return TerminalFlag::StepLimitExceeded;
            }
            let mut h = self.h;
            let mut clipped = false;
            if self.t + h >= t_end {
                h = t_end - self.t;
                clipped = true;
            }
            self.steps += 1;

            let ok = self.stages(h);
            let err = if ok { self.error_norm(h) } else { f64::INFINITY };

            if !err.is_finite() {
                // Failed stage: shrink hard and retry (no FSAL damage; k[0]
                // still holds f at the current state).
                self.h = h * 0.25;
                continue;
            }

            let fac11 = err.powf(EXPO1);
            if err <= 1.0 {
                self.facold = err.max(1e-4);
                let fac = (fac11 / self.facold.powf(BETA) / SAFE).clamp(FACC2, FACC1);
                let hnew = h / fac;
                self.t = if clipped { t_end } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.ynew);
                self.k.swap(0, 6); // FSAL
                on_accept(self.t, &self.y);
                if Self::sup(&self.y) > BLOWUP_SUP {
                    return TerminalFlag::Blowup;
                }
                self.h = hnew;
            } else {
                self.h = h / (fac11 / SAFE).min(FACC1);
            }
        }
    }

    /// Evaluates the six fresh stages plus the FSAL stage; false on failure.
    fn stages(&mut self, h: f64) -> bool {
        let dim = self.y.len();
        macro_rules! stage {
            ($target:expr, $($coef:expr => $src:expr),+) => {{
                for i in 0..dim {
                    self.ytmp[i] = self.y[i] $(+ h * $coef * self.k[$src][i])+;
                }
                let Rk54 { rhs, k, ytmp, .. } = self;
                let (_, tail) = k.split_at_mut($target);
                let ks = &mut tail[0];
                if !(rhs)(ytmp, ks) || !ks.iter().all(|v| v.is_finite()) {
                    return false;
                }
            }};
        }
        stage!(1, A21 => 0);
        stage!(2, A31 => 0, A32 => 1);
        stage!(3, A41 => 0, A42 => 1, A43 => 2);
        stage!(4, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
        stage!(5, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
        for i in 0..dim {
            self.ynew[i] = self.y[i]
                + h * (B1 * self.k[0][i]
                    + B3 * self.k[2][i]
                    + B4 * self.k[3][i]
                    + B5 * self.k[4][i]
                    + B6 * self.k[5][i]);
        }
        if !self.ynew.iter().all(|v| v.is_finite()) {
            return false;
        }
        let Rk54 { rhs, k, ynew, .. } = self;
        (rhs)(ynew, &mut k[6]) && k[6].iter().all(|v| v.is_finite())
    }

    fn error_norm(&self, h: f64) -> f64 {
        let dim = self.y.len();
        let mut acc = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let sc = self.abs_tol + self.rel_tol * self.y[i].abs().max(self.ynew[i].abs());
            acc += (e / sc).powi(2);
        }
        (acc / dim as f64).sqrt()
    }
}

// ---------------------------------------------------------------------------
// Crank-Nicolson diffusion + explicit Heun reaction, fixed step.
// ---------------------------------------------------------------------------

/// Nodewise reaction evaluation on the flat layout; false on domain error.
fn eval_reaction_nodewise(model: &Model, u: &[f64], out: &mut [f64], vars: &mut [f64], comp: &mut [f64]) -> bool {
    let layout = model.layout();
    let (n, m) = (layout.species, layout.nodes);
    for j in 0..m {
        for s in 0..n {
            vars[s] = u[s * m + j];
        }
        if model.reaction().eval_into(vars, comp).is_err() {
            return false;
        }
        for s in 0..n {
            out[s * m + j] = comp[s];
        }
    }
    true
}

struct ImexStepper<'a> {
    model: &'a Model,
    dt: f64,
    y: Vec<f64>,
    step_index: u64,
    /// Per-species factorization of `I - (dt d_s / 2) Lap`; `None` for
    /// species without diffusion (the solve is the identity).
    factors: Vec<Option<crate::linalg::BandedLu>>,
    diff_term: Vec<f64>,
    f_k: Vec<f64>,
    f_star: Vec<f64>,
    u_star: Vec<f64>,
    vars: Vec<f64>,
    comp: Vec<f64>,
    lap: Vec<f64>,
    steps: usize,
    max_steps: usize,
}

impl<'a> ImexStepper<'a> {
    fn new(model: &'a Model, y0: Vec<f64>, dt: f64, max_steps: usize) -> Result<Self> {
        let layout = model.layout();
        let dim = layout.len();
        let n = layout.species;
        let m = layout.nodes;
        let mut factors: Vec<Option<crate::linalg::BandedLu>> = vec![None; n];
        if let (Some(grid), Some(diffusion)) = (model.grid(), model.diffusion()) {
            let bw = match grid {
                crate::grid::Grid::OneD { .. } => 1,
                crate::grid::Grid::TwoD { nodes_x, .. } => *nodes_x,
            };
            for (s, &d) in diffusion.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let mut a = BandedMatrix::zeros(m, bw, bw);
                for node in 0..m {
                    a.add(node, node, 1.0);
                    for (nb, w) in grid.laplacian_row(node) {
                        a.add(node, nb, -0.5 * dt * d * w);
                    }
                }
                let lu = a.factor().map_err(|sng| CoreError::InvalidParameter {
                    name: "imex",
                    detail: format!("diffusion matrix singular at column {}", sng.column),
                })?;
                factors[s] = Some(lu);
            }
        }
        Ok(ImexStepper {
            model,
            dt,
            y: y0,
            step_index: 0,
            factors,
            diff_term: vec![0.0; dim],
            f_k: vec![0.0; dim],
            f_star: vec![0.0; dim],
            u_star: vec![0.0; dim],
            vars: vec![0.0; n],
            comp: vec![0.0; n],
            lap: vec![0.0; m],
            steps: 0,
            max_steps,
        })
    }

    fn time(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    fn state(&self) -> &[f64] {
        &self.y
    }

    /// One fixed step; false signals a domain failure during reaction
    /// evaluation (treated as blowup by the driver).
    fn step_once(&mut self) -> bool {
        let layout = self.model.layout();
        let (n, m) = (layout.species, layout.nodes);

        // Explicit diffusion half: diff_term = D Lap y.
        self.diff_term.iter_mut().for_each(|v| *v = 0.0);
        if let (Some(grid), Some(diffusion)) = (self.model.grid(), self.model.diffusion()) {
            for s in 0..n {
                if diffusion[s] == 0.0 {
                    continue;
                }
                grid.neumann_laplacian_into(&self.y[s * m..(s + 1) * m], &mut self.lap)
                    .expect("layout is consistent");
                for j in 0..m {
                    self.diff_term[s * m + j] = diffusion[s] * self.lap[j];
                }
            }
        }

        if !eval_reaction_nodewise(self.model, &self.y, &mut self.f_k, &mut self.vars, &mut self.comp) {
            return false;
        }

        // Predictor: (I - dt/2 L) u* = y + dt/2 L y + dt f(y).
        for i in 0..self.y.len() {
            self.u_star[i] = self.y[i] + 0.5 * self.dt * self.diff_term[i] + self.dt * self.f_k[i];
        }
        for s in 0..n {
            if let Some(lu) = &self.factors[s] {
                lu.solve_in_place(&mut self.u_star[s * m..(s + 1) * m]);
            }
        }
        if !self.u_star.iter().all(|v| v.is_finite()) {
            return false;
        }

        if !eval_reaction_nodewise(self.model, &self.u_star, &mut self.f_star, &mut self.vars, &mut self.comp) {
            return false;
        }

        // Corrector: (I - dt/2 L) y+ = y + dt/2 L y + dt/2 (f(y) + f(u*)).
        for i in 0..self.y.len() {
            self.u_star[i] =
                self.y[i] + 0.5 * self.dt * self.diff_term[i] + 0.5 * self.dt * (self.f_k[i] + self.f_star[i]);
        }
        for s in 0..n {
            if let Some(lu) = &self.factors[s] {
                lu.solve_in_place(&mut self.u_star[s * m..(s + 1) * m]);
            }
        }
        std::mem::swap(&mut self.y, &mut self.u_star);
        self.step_index += 1;
        true
    }

    /// Advances to the step grid point nearest `t_target` (within dt/2).
    fn advance_to(&mut self, t_target: f64, on_accept: &mut dyn FnMut(f64, &[f64])) -> TerminalFlag {
        let target_index = (t_target / self.dt).round() as i64;
        let target_index = target_index.max(self.step_index as i64) as u64;
        while self.step_index < target_index {
            if self.steps >= self.max_steps {
                return TerminalFlag::StepLimitExceeded;
            }
            self.steps += 1;
            if !self.step_once() {
                // Domain failure mid-step: the state is still the last good
                // one; end the run there.
                return TerminalFlag::Blowup;
            }
            on_accept(self.time(), &self.y);
            let sup = self.y.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
            if !sup.is_finite() || sup > BLOWUP_SUP {
                return TerminalFlag::Blowup;
            }
        }
        TerminalFlag::ReachedHorizon
    }
}

// ---------------------------------------------------------------------------
// Public driver
// ---------------------------------------------------------------------------

enum Driver<'a> {
    Rk54(Rk54<'a>),
    Imex(ImexStepper<'a>),
}

/// Incremental integration handle: advance to successive absolute times and
/// read the state in between. The semi-implicit scheme lands on the step-grid
/// point nearest each requested time (within half a step).
pub struct FlowSampler<'a> {
    driver: Driver<'a>,
    layout: crate::order::Layout,
    flag: TerminalFlag,
}

impl<'a> FlowSampler<'a> {
    pub fn new(model: &'a Model, x0: &StateVec, cfg: &IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        if x0.layout() != model.layout() {
            return Err(CoreError::LayoutMismatch { left: x0.layout(), right: model.layout() });
        }
        let layout = model.layout();
        let driver = match cfg.scheme {
            Scheme::AdaptiveRk54 => {
                let mut scratch = model.scratch();
                let rhs: Rhs<'a> = Box::new(move |y: &[f64], out: &mut [f64]| {
                    model.eval_into(y, out, &mut scratch).is_ok()
                });
                Driver::Rk54(Rk54::new(rhs, x0.as_slice().to_vec(), cfg.rel_tol, cfg.abs_tol, cfg.max_step_count))
            }
            Scheme::ImexCnHeun => {
                Driver::Imex(ImexStepper::new(model, x0.as_slice().to_vec(), cfg.dt, cfg.max_step_count)?)
            }
        };
        Ok(FlowSampler { driver, layout, flag: TerminalFlag::ReachedHorizon })
    }

    /// Integrates forward to (the grid point nearest) `t`, recording every
    /// accepted step through `on_accept`. No-op if already terminal.
    pub fn advance_recording(&mut self, t: f64, on_accept: &mut dyn FnMut(f64, &[f64])) -> TerminalFlag {
        if self.flag != TerminalFlag::ReachedHorizon {
            return self.flag;
        }
        self.flag = match &mut self.driver {
            Driver::Rk54(d) => d.advance_to(t, on_accept),
            Driver::Imex(d) => d.advance_to(t, on_accept),
        };
        self.flag
    }

    pub fn advance_to(&mut self, t: f64) -> TerminalFlag {
        self.advance_recording(t, &mut |_, _| {})
    }

    pub fn time(&self) -> f64 {
        match &self.driver {
            Driver::Rk54(d) => d.time(),
            Driver::Imex(d) => d.time(),
        }
    }

    pub fn raw_state(&self) -> &[f64] {
        match &self.driver {
            Driver::Rk54(d) => d.state(),
            Driver::Imex(d) => d.state(),
        }
    }

    pub fn state(&self) -> StateVec {
        StateVec::from_raw(self.raw_state().to_vec(), self.layout)
    }

    pub fn flag(&self) -> TerminalFlag {
        self.flag
    }
}

/// Integrates the semiflow from `x0` to `t_end`, recording every accepted
/// step.
pub fn flow(model: &Model, x0: &StateVec, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "t_end",
            detail: format!("horizon must be finite and >= 0, got {t_end}"),
        });
    }
    let mut sampler = FlowSampler::new(model, x0, cfg)?;
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let layout = model.layout();
    let flag = sampler.advance_recording(t_end, &mut |t, y| {
        times.push(t);
        states.push(StateVec::from_raw(y.to_vec(), layout));
    });
    Ok(Trajectory { times, states, terminal: flag })
}

/// Point evaluation of the semiflow: the state at (the step-grid point
/// nearest) `t`, without intermediate recording.
pub fn flow_at(model: &Model, x0: &StateVec, t: f64, cfg: &IntegratorConfig) -> Result<FlowResult> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "t",
            detail: format!("time must be finite and >= 0, got {t}"),
        });
    }
    let mut sampler = FlowSampler::new(model, x0, cfg)?;
    let flag = sampler.advance_to(t);
    Ok(FlowResult { state: sampler.state(), t: sampler.time(), flag })
}

/// Outcome of the finite-horizon stay-in predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StaysIn {
    pub holds: bool,
    pub flag: TerminalFlag,
}

/// Checks that the predicate holds at every recorded state with time in
/// `[r, horizon]`. A necessary-condition check only: it inspects the finite
/// horizon, not all of `t >= r`. Runs that blow up report `holds = false`
/// with the flag surfaced.
pub fn stays_in(
    model: &Model,
    x0: &StateVec,
    predicate: &dyn Fn(&StateVec) -> bool,
    r: f64,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<StaysIn> {
    if !(0.0 <= r && r <= horizon) {
        return Err(CoreError::InvalidParameter {
            name: "r",
            detail: format!("need 0 <= r <= horizon, got r = {r}, horizon = {horizon}"),
        });
    }
    let traj = flow(model, x0, horizon, cfg)?;
    if traj.terminal() != TerminalFlag::ReachedHorizon {
        return Ok(StaysIn { holds: false, flag: traj.terminal() });
    }
    for (t, s) in traj.times().iter().zip(traj.states()) {
        if *t >= r && !predicate(s) {
            return Ok(StaysIn { holds: false, flag: traj.terminal() });
        }
    }
    Ok(StaysIn { holds: true, flag: traj.terminal() })
}

/// A sample time where order preservation failed, with the offending margin
/// (most negative sign-adjusted coordinate of `flow(y) - flow(x)`).
#[derive(Clone, Copy, Debug)]
pub struct OrderViolation {
    pub t: f64,
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct MonotoneReport {
    /// `(t, margin)` for every compared sample, in ascending time order.
    pub margins: Vec<(f64, f64)>,
    pub violations: Vec<OrderViolation>,
}

impl MonotoneReport {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().fold(f64::INFINITY, |m, (_, v)| m.min(*v))
    }
}

/// Integrates both trajectories and compares them at each sample time;
/// requires `x <= y`. A violation is any sign-adjusted coordinate of
/// `flow_t(y) - flow_t(x)` below `-tol_order`.
pub fn check_monotone(
    model: &Model,
    x: &StateVec,
    y: &StateVec,
    order: &ConeOrder,
    t_samples: &[f64],
    tol_order: f64,
    cfg: &IntegratorConfig,
) -> Result<MonotoneReport> {
    check_layout(x, y)?;
    if !order.leq(x, y)? {
        return Err(CoreError::InvalidParameter {
            name: "x",
            detail: "check_monotone requires x <= y in the cone order".to_string(),
        });
    }
    let mut times: Vec<f64> = t_samples.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).expect("sample times must not be NaN"));
    let mut sx = FlowSampler::new(model, x, cfg)?;
    let mut sy = FlowSampler::new(model, y, cfg)?;
    let mut margins = Vec::with_capacity(times.len());
    let mut violations = Vec::new();
    for &t in &times {
        let fx = sx.advance_to(t);
        let fy = sy.advance_to(t);
        if fx != TerminalFlag::ReachedHorizon {
            return Err(CoreError::FlowIncomplete { flag: fx, t: sx.time() });
        }
        if fy != TerminalFlag::ReachedHorizon {
            return Err(CoreError::FlowIncomplete { flag: fy, t: sy.time() });
        }
        let margin = order.adjusted_min_diff(&sx.state(), &sy.state())?;
        margins.push((t, margin));
        if margin < -tol_order {
            violations.push(OrderViolation { t, margin });
        }
    }
    Ok(MonotoneReport { margins, violations })
}
