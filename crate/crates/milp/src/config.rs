use serde::{Deserialize, Serialize};

/// Which LP engine evaluates relaxations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Dense tableau for small models, sparse simplex otherwise.
    #[default]
    Auto,
    Dense,
    Sparse,
    /// Interior point; LP only, solutions are not basic.
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub eps: f64,
    pub eps_int: f64,
    pub node_limit: usize,
    pub iter_limit: usize,
    pub threads: usize,
    pub seed: u64,
    pub engine: Engine,
    /// Force Bland's rule from the first pivot instead of only after a degenerate streak.
    pub bland: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps: 1e-6,
            eps_int: 1e-6,
            node_limit: 200_000,
            iter_limit: 1_000_000,
            threads: 1,
            seed: 0,
            engine: Engine::Auto,
            bland: false,
        }
    }
}

/// Largest `rows * columns` handled by the dense tableau under [`Engine::Auto`].
pub const DENSE_AUTO_LIMIT: usize = 250_000;
