//! Evaluatable vector fields: plain reaction networks and method-of-lines
//! reaction-diffusion systems `F(u) = D Lap(u) + f(u)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsl::ReactionField;
use crate::error::{CoreError, Result};
use crate::grid::Grid;
use crate::linalg::{BandedMatrix, DenseMatrix, LuSolver};
use crate::order::Layout;

/// Threshold below which Newton systems use a dense factorization.
pub const DENSE_NEWTON_LIMIT: usize = 64;

#[derive(Clone, Debug)]
enum Space {
    /// Plain ODE network; one "node" per species.
    Point,
    /// Method-of-lines discretization with per-species diffusion.
    Grid { grid: Grid, diffusion: Vec<f64> },
}

/// A vector field with exact Jacobian access.
#[derive(Clone, Debug)]
pub struct Model {
    reaction: ReactionField,
    space: Space,
    layout: Layout,
}

impl Model {
    /// A plain ODE network `u' = f(u)`.
    pub fn network(reaction: ReactionField) -> Self {
        let layout = Layout::new(reaction.arity(), 1);
        Model { reaction, space: Space::Point, layout }
    }

    /// Assembles `F(u) = D Lap(u) + f(u)` on the given grid.
    pub fn assemble(grid: Grid, diffusion: Vec<f64>, reaction: ReactionField) -> Result<Self> {
        if diffusion.len() != reaction.arity() {
            return Err(CoreError::ArityMismatch { arity: reaction.arity(), expected: diffusion.len() });
        }
        if !diffusion.iter().all(|d| d.is_finite() && *d >= 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "diffusion",
                detail: "diffusion coefficients must be finite and >= 0".to_string(),
            });
        }
        let layout = Layout::new(reaction.arity(), grid.node_count());
        Ok(Model { reaction, space: Space::Grid { grid, diffusion }, layout })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn reaction(&self) -> &ReactionField {
        &self.reaction
    }

    pub fn is_rd(&self) -> bool {
        matches!(self.space, Space::Grid { .. })
    }

    pub fn grid(&self) -> Option<&Grid> {
        match &self.space {
            Space::Point => None,
            Space::Grid { grid, .. } => Some(grid),
        }
    }

    pub fn diffusion(&self) -> Option<&[f64]> {
        match &self.space {
            Space::Point => None,
            Space::Grid { diffusion, .. } => Some(diffusion),
        }
    }

    /// `out = F(u)` on the flat species-major layout.
    pub fn eval_into(&self, u: &[f64], out: &mut [f64], scratch: &mut EvalScratch) -> Result<()> {
        let n = self.layout.species;
        let m = self.layout.nodes;
        debug_assert_eq!(u.len(), n * m);
        debug_assert_eq!(out.len(), n * m);
        for j in 0..m {
            for s in 0..n {
                scratch.vars[s] = u[s * m + j];
            }
            self.reaction.eval_into(&scratch.vars, &mut scratch.res)?;
            for s in 0..n {
                out[s * m + j] = scratch.res[s];
            }
        }
        if let Space::Grid { grid, diffusion } = &self.space {
            for s in 0..n {
                if diffusion[s] == 0.0 {
                    continue;
                }
                grid.neumann_laplacian_into(&u[s * m..(s + 1) * m], &mut scratch.lap)?;
                let d = diffusion[s];
                for j in 0..m {
                    out[s * m + j] += d * scratch.lap[j];
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.layout.len()];
        let mut scratch = EvalScratch::for_model(self);
        self.eval_into(u, &mut out, &mut scratch)?;
        Ok(out)
    }

    /// Sup norm of `F(u)`.
    pub fn residual_sup(&self, u: &[f64]) -> Result<f64> {
        Ok(self.eval(u)?.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    pub fn scratch(&self) -> EvalScratch {
        EvalScratch::for_model(self)
    }

    /// Factors the Jacobian of `F` at `u` for Newton solves: dense below
    /// [`DENSE_NEWTON_LIMIT`] unknowns, banded (node-major ordering) above.
    pub fn factor_jacobian(&self, u: &[f64]) -> Result<NewtonSystem> {
        let n = self.layout.species;
        let m = self.layout.nodes;
        let dim = n * m;
        let mut vars = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        if dim <= DENSE_NEWTON_LIMIT {
            let mut a = DenseMatrix::zeros(dim);
            for j in 0..m {
                for s in 0..n {
                    vars[s] = u[s * m + j];
                }
                self.reaction.jacobian_into(&vars, &mut jac)?;
                for r in 0..n {
                    for c in 0..n {
                        a.add(r * m + j, c * m + j, jac[r * n + c]);
                    }
                }
            }
            if let Space::Grid { grid, diffusion } = &self.space {
                for s in 0..n {
                    if diffusion[s] == 0.0 {
                        continue;
                    }
                    for node in 0..m {
                        for (nb, w) in grid.laplacian_row(node) {
                            a.add(s * m + node, s * m + nb, diffusion[s] * w);
                        }
                    }
                }
            }
            let lu = a.factor().map_err(|s| CoreError::InvalidParameter {
                name: "jacobian",
                detail: format!("singular at column {}", s.column),
            });
            return Ok(NewtonSystem {
                solver: SolverKind::Dense(lu.ok()),
                layout: self.layout,
            });
        }

        // Node-major banded assembly: flat index node * n + species keeps the
        // bandwidth at n * (x-neighbor stride of the grid).
        let Space::Grid { grid, diffusion } = &self.space else {
            unreachable!("large systems are always grid-backed");
        };
        let stride = match grid {
            Grid::OneD { .. } => 1,
            Grid::TwoD { nodes_x, .. } => *nodes_x,
        };
        let bw = n * stride;
        let mut a = BandedMatrix::zeros(dim, bw, bw);
        for j in 0..m {
            for s in 0..n {
                vars[s] = u[s * m + j];
            }
            self.reaction.jacobian_into(&vars, &mut jac)?;
            for r in 0..n {
                for c in 0..n {
                    a.add(j * n + r, j * n + c, jac[r * n + c]);
                }
            }
        }
        for s in 0..n {
            if diffusion[s] == 0.0 {
                continue;
            }
            for node in 0..m {
                for (nb, w) in grid.laplacian_row(node) {
                    a.add(node * n + s, nb * n + s, diffusion[s] * w);
                }
            }
        }
        let lu = a.factor().map_err(|sng| CoreError::InvalidParameter {
            name: "jacobian",
            detail: format!("singular at column {}", sng.column),
        });
        Ok(NewtonSystem {
            solver: SolverKind::BandedNodeMajor(lu.ok()),
            layout: self.layout,
        })
    }

    /// Jacobian of `F` at `e`, frozen for variational integration; exposed
    /// through matrix-vector products only.
    pub fn freeze_jacobian(&self, e: &[f64]) -> Result<FrozenLinearization> {
        let n = self.layout.species;
        let m = self.layout.nodes;
        let mut vars = vec![0.0; n];
        let mut node_jacs = vec![0.0; m * n * n];
        for j in 0..m {
            for s in 0..n {
                vars[s] = e[s * m + j];
            }
            self.reaction.jacobian_into(&vars, &mut node_jacs[j * n * n..(j + 1) * n * n])?;
        }
        let space = match &self.space {
            Space::Point => None,
            Space::Grid { grid, diffusion } => Some((grid.clone(), diffusion.clone())),
        };
        Ok(FrozenLinearization { layout: self.layout, node_jacs, space })
    }
}

/// Reusable buffers for `Model::eval_into`.
#[derive(Clone, Debug)]
pub struct EvalScratch {
    vars: Vec<f64>,
    res: Vec<f64>,
    lap: Vec<f64>,
}

impl EvalScratch {
    fn for_model(model: &Model) -> Self {
        EvalScratch {
            vars: vec![0.0; model.layout.species],
            res: vec![0.0; model.layout.species],
            lap: vec![0.0; model.layout.nodes],
        }
    }
}

#[derive(Clone, Debug)]
enum SolverKind {
    Dense(Option<crate::linalg::DenseLu>),
    BandedNodeMajor(Option<crate::linalg::BandedLu>),
}

/// A factored Newton system; `None` solvers mark a singular Jacobian.
#[derive(Clone, Debug)]
pub struct NewtonSystem {
    solver: SolverKind,
    layout: Layout,
}

impl NewtonSystem {
    pub fn is_singular(&self) -> bool {
        match &self.solver {
            SolverKind::Dense(o) => o.is_none(),
            SolverKind::BandedNodeMajor(o) => o.is_none(),
        }
    }

    /// Solves `J x = rhs` in place on the species-major layout.
    pub fn solve_in_place(&self, rhs: &mut [f64]) -> bool {
        match &self.solver {
            SolverKind::Dense(Some(lu)) => {
                lu.solve_in_place(rhs);
                true
            }
            SolverKind::BandedNodeMajor(Some(lu)) => {
                let n = self.layout.species;
                let m = self.layout.nodes;
                let mut tmp = vec![0.0; rhs.len()];
                for s in 0..n {
                    for j in 0..m {
                        tmp[j * n + s] = rhs[s * m + j];
                    }
                }
                lu.solve_in_place(&mut tmp);
                for s in 0..n {
                    for j in 0..m {
                        rhs[s * m + j] = tmp[j * n + s];
                    }
                }
                true
            }
            _ => false,
        }
    }
}

impl From<NewtonSystem> for Option<LuSolver> {
    fn from(sys: NewtonSystem) -> Self {
        match sys.solver {
            SolverKind::Dense(o) => o.map(LuSolver::Dense),
            SolverKind::BandedNodeMajor(o) => o.map(LuSolver::Banded),
        }
    }
}

/// `J(e)` held fixed: per-node reaction blocks plus the diffusion stencil.
#[derive(Clone, Debug)]
pub struct FrozenLinearization {
    layout: Layout,
    node_jacs: Vec<f64>,
    space: Option<(Grid, Vec<f64>)>,
}

impl FrozenLinearization {
    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// `out = J(e) v`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64], lap: &mut [f64]) {
        let n = self.layout.species;
        let m = self.layout.nodes;
        for j in 0..m {
            let block = &self.node_jacs[j * n * n..(j + 1) * n * n];
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += block[r * n + c] * v[c * m + j];
                }
                out[r * m + j] = acc;
            }
        }
        if let Some((grid, diffusion)) = &self.space {
            for s in 0..n {
                if diffusion[s] == 0.0 {
                    continue;
                }
                grid.neumann_laplacian_into(&v[s * m..(s + 1) * m], lap)
                    .expect("frozen linearization layout is consistent");
                let d = diffusion[s];
                for j in 0..m {
                    out[s * m + j] += d * lap[j];
                }
            }
        }
    }
}

/// Witness of a failed cooperativity or irreducibility audit.
#[derive(Clone, Debug, PartialEq)]
pub enum CooperativityWitness {
    /// Off-diagonal Jacobian entry below tolerance at a sampled point.
    NegativeEntry { row: usize, col: usize, point: Vec<f64>, value: f64 },
    /// No directed path `from -> to` in the sampled coupling pattern.
    NoPath { from: usize, to: usize },
}

/// Result of sampling the reaction Jacobian over a box.
#[derive(Clone, Debug)]
pub struct CooperativityReport {
    pub cooperative: bool,
    pub irreducible: bool,
    pub witness: Option<CooperativityWitness>,
    pub samples_checked: usize,
}

const COOP_TOL: f64 = 1e-12;

/// Audits `df_i/du_j >= 0` (i != j) and strong connectivity of the coupling
/// pattern on `samples` points drawn uniformly from the box. A sampled audit,
/// not a proof; the box and count are part of the report.
pub fn check_cooperative_irreducible(
    reaction: &ReactionField,
    bounds: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Result<CooperativityReport> {
    let n = reaction.arity();
    if bounds.len() != n {
        return Err(CoreError::InvalidParameter {
            name: "bounds",
            detail: format!("expected {n} per-species intervals, got {}", bounds.len()),
        });
    }
    if samples < 1 {
        return Err(CoreError::InvalidParameter {
            name: "samples",
            detail: "need at least one sample".to_string(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jac = vec![0.0; n * n];
    let mut point = vec![0.0; n];
    let mut pattern = vec![false; n * n];
    let mut witness: Option<CooperativityWitness> = None;
    for _ in 0..samples {
        for (p, (lo, hi)) in point.iter_mut().zip(bounds) {
            *p = rng.gen_range(*lo..=*hi);
        }
        reaction.jacobian_into(&point, &mut jac).map_err(|e| match e {
            CoreError::Eval { component, message } => CoreError::Eval {
                component,
                message: format!("{message} (while sampling the box at {point:?})"),
            },
            other => other,
        })?;
        for r in 0..n {
            for c in 0..n {
                if r == c {
                    continue;
                }
                let v = jac[r * n + c];
                if v < -COOP_TOL && witness.is_none() {
                    witness = Some(CooperativityWitness::NegativeEntry {
                        row: r,
                        col: c,
                        point: point.clone(),
                        value: v,
                    });
                }
                if v > COOP_TOL {
                    pattern[r * n + c] = true;
                }
            }
        }
    }
    let cooperative = witness.is_none();
    let unreachable_pair = first_unreachable_pair(&pattern, n);
    let irreducible = unreachable_pair.is_none();
    if cooperative && !irreducible {
        let (from, to) = unreachable_pair.unwrap();
        witness = Some(CooperativityWitness::NoPath { from, to });
    }
    Ok(CooperativityReport { cooperative, irreducible, witness, samples_checked: samples })
}

/// Max inf-norm of the reaction Jacobian over sampled box points; used to
/// budget the explicit reaction step.
pub fn reaction_lipschitz_estimate(
    reaction: &ReactionField,
    bounds: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = reaction.arity();
    if bounds.len() != n {
        return Err(CoreError::InvalidParameter {
            name: "bounds",
            detail: format!("expected {n} per-species intervals, got {}", bounds.len()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jac = vec![0.0; n * n];
    let mut point = vec![0.0; n];
    let mut lf = 0.0f64;
    for _ in 0..samples.max(1) {
        for (p, (lo, hi)) in point.iter_mut().zip(bounds) {
            *p = rng.gen_range(*lo..=*hi);
        }
        reaction.jacobian_into(&point, &mut jac)?;
        for r in 0..n {
            let row: f64 = jac[r * n..(r + 1) * n].iter().map(|v| v.abs()).sum();
            lf = lf.max(row);
        }
    }
    Ok(lf)
}

fn first_unreachable_pair(pattern: &[bool], n: usize) -> Option<(usize, usize)> {
    // Transitive closure of the coupling digraph; vertices reach themselves.
    let mut reach = vec![false; n * n];
    for i in 0..n {
        reach[i * n + i] = true;
    }
    for i in 0..n {
        for j in 0..n {
            if pattern[i * n + j] {
                reach[i * n + j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i * n + k] {
                for j in 0..n {
                    if reach[k * n + j] {
                        reach[i * n + j] = true;
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if !reach[i * n + j] {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn zero_diffusion_reduces_to_nodewise_reaction() {
        let f = parse("u1 - u1^3", 1).unwrap();
        let grid = Grid::interval(1.0, 5).unwrap();
        let model = Model::assemble(grid, vec![0.0], f.clone()).unwrap();
        let u = [0.3, -0.4, 1.0, 0.0, 2.0];
        let fu = model.eval(&u).unwrap();
        for (j, &v) in u.iter().enumerate() {
            assert_eq!(fu[j], f.eval(&[v]).unwrap()[0]);
        }
    }

    #[test]
    fn zero_reaction_constant_state_is_equilibrium() {
        let f = parse("0*u1", 1).unwrap();
        let grid = Grid::interval(1.0, 7).unwrap();
        let model = Model::assemble(grid, vec![0.3], f).unwrap();
        let u = vec![1.25; 7];
        assert!(model.residual_sup(&u).unwrap() < 1e-13);
    }

    #[test]
    fn chafee_constant_one_is_equilibrium() {
        let f = parse("u1 - u1^3", 1).unwrap();
        let grid = Grid::interval(1.0, 201).unwrap();
        let model = Model::assemble(grid, vec![0.01], f).unwrap();
        let u = vec![1.0; 201];
        assert!(model.residual_sup(&u).unwrap() < 1e-13);
    }

    #[test]
    fn diffusion_must_be_nonnegative() {
        let f = parse("u1", 1).unwrap();
        let grid = Grid::interval(1.0, 5).unwrap();
        assert!(Model::assemble(grid, vec![-0.1], f).is_err());
    }

    #[test]
    fn arity_mismatch_rejected() {
        let f = parse("u1; u2", 2).unwrap();
        let grid = Grid::interval(1.0, 5).unwrap();
        assert!(matches!(
            Model::assemble(grid, vec![0.1], f),
            Err(CoreError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn cooperativity_examples() {
        let tanh2 = parse("-u1 + 2*tanh(u2); -u2 + 2*tanh(u1)", 2).unwrap();
        let rep = check_cooperative_irreducible(&tanh2, &[(-3.0, 3.0), (-3.0, 3.0)], 64, 1).unwrap();
        assert!(rep.cooperative && rep.irreducible);
        assert!(rep.witness.is_none());
        assert_eq!(rep.samples_checked, 64);

        let decoupled = parse("-u1; -u2", 2).unwrap();
        let rep = check_cooperative_irreducible(&decoupled, &[(-1.0, 1.0), (-1.0, 1.0)], 16, 1).unwrap();
        assert!(rep.cooperative);
        assert!(!rep.irreducible);
        assert!(matches!(rep.witness, Some(CooperativityWitness::NoPath { .. })));

        let competitive = parse("-u1 - u2; -u2 - u1", 2).unwrap();
        let rep = check_cooperative_irreducible(&competitive, &[(-1.0, 1.0), (-1.0, 1.0)], 16, 1).unwrap();
        assert!(!rep.cooperative);
        match rep.witness {
            Some(CooperativityWitness::NegativeEntry { row, col, .. }) => {
                assert!((row, col) == (0, 1) || (row, col) == (1, 0));
            }
            other => panic!("expected negative-entry witness, got {other:?}"),
        }
    }

    #[test]
    fn scalar_reaction_is_trivially_irreducible() {
        let f = parse("u1 - u1^3", 1).unwrap();
        let rep = check_cooperative_irreducible(&f, &[(-1.5, 1.5)], 8, 1).unwrap();
        assert!(rep.cooperative && rep.irreducible);
    }

    #[test]
    fn lipschitz_estimate_brackets_cubic() {
        let f = parse("u1 - u1^3", 1).unwrap();
        let lf = reaction_lipschitz_estimate(&f, &[(-1.5, 1.5)], 256, 9).unwrap();
        // |1 - 3u^2| on [-1.5, 1.5] peaks at 5.75.
        assert!(lf > 4.5 && lf <= 5.75 + 1e-9, "lf = {lf}");
    }

    #[test]
    fn frozen_linearization_matches_directional_difference() {
        let f = parse("-u1 + 2*tanh(u2); -u2 + 2*tanh(u1)", 2).unwrap();
        let model = Model::network(f);
        let e = [0.3, -0.2];
        let lin = model.freeze_jacobian(&e).unwrap();
        let v = [0.7, 0.4];
        let mut jv = vec![0.0; 2];
        let mut lap = vec![0.0; 1];
        lin.apply_into(&v, &mut jv, &mut lap);
        let h = 1e-7;
        let fp = model.eval(&[e[0] + h * v[0], e[1] + h * v[1]]).unwrap();
        let fm = model.eval(&[e[0] - h * v[0], e[1] - h * v[1]]).unwrap();
        for i in 0..2 {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            assert!((jv[i] - fd).abs() < 1e-6);
        }
    }
}
