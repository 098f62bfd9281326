use crate::error::{Error, Result};
use crate::linalg::{OrthoSubspace, RealVector};
use crate::operators::Operator;

/// Find `x ∈ V`, `u ∈ V⊥` with `u = T(x)`.
#[derive(Debug, Clone)]
pub struct InclusionProblem {
    operator: Operator,
    subspace: OrthoSubspace,
    solution: Option<Solution>,
}

/// The unique solution pair `(x*, u*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: RealVector,
    pub u: RealVector,
}

impl InclusionProblem {
    pub fn new(operator: Operator, subspace: OrthoSubspace) -> Result<Self> {
        if operator.dim() != subspace.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: operator.dim(),
                got: subspace.ambient_dim(),
            });
        }
        Ok(Self {
            operator,
            subspace,
            solution: None,
        })
    }

    pub fn with_solution(mut self, solution: Solution) -> Result<Self> {
        for v in [&solution.x, &solution.u] {
            if v.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    got: v.len(),
                });
            }
        }
        self.solution = Some(solution);
        Ok(self)
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn subspace(&self) -> &OrthoSubspace {
        &self.subspace
    }

    pub fn solution(&self) -> Option<&Solution> {
        self.solution.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }
}
