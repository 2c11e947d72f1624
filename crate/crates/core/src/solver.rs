use crate::error::Result;
use crate::model::Termination;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Finished(Termination),
}

/// One alternating-minimization iteration at a time.
///
/// Construction performs initialization, so timing `step` alone measures the
/// per-iteration cost.
pub trait IterativeSolver {
    fn step(&mut self) -> Result<StepOutcome>;

    fn iterations(&self) -> usize;

    fn is_finished(&self) -> bool;

    /// Steps until a termination condition fires.
    fn run_to_end(&mut self) -> Result<Termination> {
        loop {
            if let StepOutcome::Finished(t) = self.step()? {
                return Ok(t);
            }
        }
    }
}

/// `|prev − cur| ≤ tol · |prev|`, with the zero-objective case counting as converged.
pub(crate) fn relative_change_below(prev: f64, cur: f64, tol: f64) -> bool {
    (prev - cur).abs() <= tol * prev.abs()
}
