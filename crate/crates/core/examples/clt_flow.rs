//! Entropy along the doubling map from a uniform start, printed as CSV.

use santalo_lab::cli::{emit_plotdata, Trace};
use santalo_lab::grid::{clt_flow, Grid, GridMeasure};

fn main() -> santalo_lab::Result<()> {
    let r = 4.0 * 3f64.sqrt();
    let start = GridMeasure::uniform_1d(Grid::line(-r, r, 4096)?, -3f64.sqrt(), 3f64.sqrt())?;
    let trace = clt_flow(&start, 10)?;
    print!("{}", emit_plotdata(Trace::Flow(&trace))?);
    println!("# Gaussian entropy {:.7}", 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln());
    Ok(())
}
