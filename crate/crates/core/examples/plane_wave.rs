//! Grid refinement for p = 3 against the plane wave `exp(a·x + |a|^3 t)` on
//! a cell-centred grid.

use trudinger::solver::{convergence_study, ConvergenceSpec};

fn main() -> trudinger::Result<()> {
    let report = convergence_study(&ConvergenceSpec::plane_wave()?)?;
    for row in &report.rows {
        let order = row.order.map_or("-".to_string(), |o| format!("{o:.3}"));
        println!("cells {:?}  h {:.4}  error {:.3e}  order {order}  steps {}", row.cells, row.h, row.error, row.steps);
    }
    Ok(())
}
