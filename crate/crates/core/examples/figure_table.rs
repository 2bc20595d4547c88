//! Figure datasets as CSV through the report layer (analytic columns only here).
use thrifty_shadow::report::{cmd_figure, write_report, FigureRequest, Format};
use thrifty_shadow::sim::{FigureId, FigureParams};

fn main() -> thrifty_shadow::Result<()> {
    let req = FigureRequest {
        figure: FigureId::Depolarizing,
        params: FigureParams { circuits: Some(0), grid: Some(vec![0.0, 0.25, 0.5, 0.75, 1.0]), ..Default::default() },
    };
    write_report(&cmd_figure(&req)?, Format::Csv, std::io::stdout().lock())
}
