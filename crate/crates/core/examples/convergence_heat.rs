//! Grid refinement for p = 2 against `2 + sin(x1) e^{-t}` on a box.

use trudinger::solver::{convergence_study, write_orders_csv, ConvergenceSpec};

fn main() -> trudinger::Result<()> {
    let report = convergence_study(&ConvergenceSpec::heat(2)?)?;
    write_orders_csv(&report, std::io::stdout())?;
    println!("errors decrease: {}, final order {:.3}", report.errors_decrease(), report.final_order().unwrap_or(f64::NAN));
    Ok(())
}
