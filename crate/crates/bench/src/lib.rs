//! Shared fixtures for the criterion benches.

use musielak::{Field, Grid, KirchhoffSpec, NFunctionSpec, ProblemSpec};

/// The reference problem (`Φ = t²`, `A(t) = 2t`, `g ≡ 1`, `γ ≡ 1/2`) on an
/// `n × n` unit square.
pub fn reference_2d(n: usize) -> ProblemSpec {
    problem(Grid::rectangle([1.0, 1.0], [n, n]).unwrap(), NFunctionSpec::power(2.0).unwrap())
}

/// Same data with an arbitrary N-function.
pub fn problem(grid: Grid, nf: NFunctionSpec) -> ProblemSpec {
    ProblemSpec::sampled(grid, nf, KirchhoffSpec::power(2.0, 2.0).unwrap(), |_, _| 1.0, |_, _| 0.5).unwrap()
}

/// A smooth positive test field.
pub fn bump(grid: Grid) -> Field {
    Field::hat(grid).scaled(0.3)
}
