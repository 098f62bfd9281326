//! Problem generation, reference solutions, sweeps and figures.

pub mod certify;
pub mod figure;
pub mod generator;
pub mod oracle;
pub mod sweep;

pub use certify::{certify_problem, CertifyOptions, CertifyReport, IterationBoundCheck};
pub use figure::{closed_form_points, points_from_rows, render_svg, FigurePoint};
pub use generator::{generate_problem, GeneratorParams, ProblemSpec};
pub use oracle::solve_kkt_oracle;
pub use sweep::{run_sweep, ResultRow, StartPoint, SweepConfig};
