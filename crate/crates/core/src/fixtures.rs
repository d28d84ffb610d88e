//! Built-in models used by the experiments and the acceptance suite.

use crate::dsl::parse;
use crate::error::Result;
use crate::flow::IntegratorConfig;
use crate::grid::Grid;
use crate::model::Model;
use crate::order::ConeOrder;
use crate::prevalence::SamplerSpec;

/// A ready-to-run model with its cone order, integrator settings, sampling
/// boxes, and equilibrium-sweep seeds.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub model: Model,
    pub order: ConeOrder,
    pub integrator: IntegratorConfig,
    /// Box over which cooperativity/irreducibility is audited.
    pub cooperativity_box: Vec<(f64, f64)>,
    pub scalar_seeds: Vec<f64>,
    /// Canonical initial-data sampler.
    pub sampler: SamplerSpec,
    /// Per-species box for basin sampling.
    pub basin_box: Vec<(f64, f64)>,
}

pub const NAMES: [(&str, &str); 3] = [
    (
        "tanh2",
        "two-species mutual-activation network (bistable with an unstable origin); \
         drives the equilibrium-classification, line, basin, and property acceptance tests",
    ),
    (
        "chafee",
        "scalar bistable reaction u - u^3 with diffusion 0.01 on [0,1], 201 nodes; \
         drives the nonconstant-equilibrium instability and homogeneity acceptance tests",
    ),
    (
        "rd2",
        "two-species mutual-activation reaction with diffusion 0.05 on [0,1], 101 nodes; \
         drives the homogeneity and property acceptance tests",
    ),
];

pub fn get(name: &str) -> Option<Fixture> {
    match name {
        "tanh2" => Some(tanh2()),
        "chafee" => Some(chafee()),
        "rd2" => Some(rd2()),
        _ => None,
    }
}

fn describe(name: &str) -> &'static str {
    NAMES.iter().find(|(n, _)| *n == name).map(|(_, d)| *d).unwrap()
}

/// `u1' = -u1 + 2 tanh(u2)`, `u2' = -u2 + 2 tanh(u1)`: cooperative,
/// irreducible, bistable. Equilibria are the origin and +-(a, a) with
/// `a = 2 tanh(a)`.
pub fn tanh2() -> Fixture {
    let reaction = parse("-u1 + 2*tanh(u2); -u2 + 2*tanh(u1)", 2).expect("fixture source parses");
    Fixture {
        name: "tanh2",
        description: describe("tanh2"),
        model: Model::network(reaction),
        order: ConeOrder::positive(2),
        integrator: IntegratorConfig::adaptive(1e-8, 1e-10),
        cooperativity_box: vec![(-3.0, 3.0), (-3.0, 3.0)],
        scalar_seeds: vec![-2.0, -0.5, 0.0, 0.5, 2.0],
        sampler: SamplerSpec::UniformBox { ranges: vec![(-2.0, 2.0), (-2.0, 2.0)] },
        basin_box: vec![(-2.0, 2.0), (-2.0, 2.0)],
    }
}

/// Bistable scalar reaction-diffusion on [0,1]: `u_t = 0.01 u_xx + u - u^3`.
/// The diffusion is small enough that nonconstant equilibrium profiles
/// exist; every one of them is linearly unstable on this convex domain.
pub fn chafee() -> Fixture {
    chafee_sized(201)
}

/// Same reaction and diffusion as [`chafee`] on a configurable grid, for
/// resolution sweeps.
pub fn chafee_sized(nodes: usize) -> Fixture {
    let reaction = parse("u1 - u1^3", 1).expect("fixture source parses");
    let grid = Grid::interval(1.0, nodes).expect("fixture grid is valid");
    let model = Model::assemble(grid, vec![0.01], reaction).expect("fixture assembles");
    Fixture {
        name: "chafee",
        description: describe("chafee"),
        model,
        order: ConeOrder::positive(1),
        // dt keeps the explicit reaction update well inside its stability
        // budget over the sampling box (|1 - 3u^2| <= 5.75 there).
        integrator: IntegratorConfig::imex(0.05),
        cooperativity_box: vec![(-1.5, 1.5)],
        scalar_seeds: vec![-2.0, -0.5, 0.0, 0.5, 2.0],
        sampler: SamplerSpec::Fourier { offset_range: (-1.2, 1.2), coeff_range: (-0.25, 0.25), modes: 4 },
        basin_box: vec![(-1.5, 1.5)],
    }
}

/// The mutual-activation pair with equal diffusion on [0,1], 101 nodes.
pub fn rd2() -> Fixture {
    let reaction = parse("-u1 + 2*tanh(u2); -u2 + 2*tanh(u1)", 2).expect("fixture source parses");
    let grid = Grid::interval(1.0, 101).expect("fixture grid is valid");
    let model = Model::assemble(grid, vec![0.05, 0.05], reaction).expect("fixture assembles");
    Fixture {
        name: "rd2",
        description: describe("rd2"),
        model,
        order: ConeOrder::positive(2),
        integrator: IntegratorConfig::imex(0.05),
        cooperativity_box: vec![(-3.0, 3.0), (-3.0, 3.0)],
        scalar_seeds: vec![-2.0, -0.5, 0.0, 0.5, 2.0],
        sampler: SamplerSpec::Fourier { offset_range: (-2.2, 2.2), coeff_range: (-0.3, 0.3), modes: 4 },
        basin_box: vec![(-2.0, 2.0), (-2.0, 2.0)],
    }
}

/// Checks that a fixed step keeps the explicit reaction update within its
/// stability budget (`dt * L_f <= 0.5`) over the given box.
pub fn reaction_cfl_ok(model: &Model, bounds: &[(f64, f64)], dt: f64, samples: usize, seed: u64) -> Result<bool> {
    let lf = crate::model::reaction_lipschitz_estimate(model.reaction(), bounds, samples, seed)?;
    Ok(dt * lf <= 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_cooperative_irreducible;

    #[test]
    fn exactly_three_fixtures() {
        assert_eq!(NAMES.len(), 3);
        for (name, _) in NAMES {
            assert!(get(name).is_some());
        }
        assert!(get("foo").is_none());
    }

    #[test]
    fn fixtures_are_cooperative_and_irreducible() {
        for (name, _) in NAMES {
            let f = get(name).unwrap();
            let rep =
                check_cooperative_irreducible(f.model.reaction(), &f.cooperativity_box, 64, 1).unwrap();
            assert!(rep.cooperative, "{name} not cooperative");
            assert!(rep.irreducible, "{name} not irreducible");
        }
    }

    #[test]
    fn fixed_steps_respect_reaction_budget() {
        for name in ["chafee", "rd2"] {
            let f = get(name).unwrap();
            assert!(reaction_cfl_ok(&f.model, &f.cooperativity_box, f.integrator.dt, 256, 3).unwrap(), "{name}");
        }
    }
}
