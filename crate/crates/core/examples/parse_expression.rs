//! Boundary data as text: parse, inspect and evaluate an expression.
//! Pass an expression as the first argument to try your own.

use trudinger::expr::parse_expression;

fn main() {
    let src = std::env::args().nth(1).unwrap_or_else(|| "2 + 0.5*sin(2*x1)*cos(1+t) + 0.3*x2".into());
    match parse_expression(&src) {
        Ok(e) => {
            println!("parsed:  {}", e.tree());
            println!("uses x1..x{} and {}", e.tree().dimension_used(), if e.tree().uses_time() { "t" } else { "no t" });
            for (x, t) in [([0.0, 0.0], 0.0), ([1.0, 0.0], 0.5), ([0.0, -1.0], 1.0)] {
                println!("h({x:?}, {t}) = {:.6}", e.eval(&x, t));
            }
        }
        Err(err) => {
            println!("{src}");
            println!("{}^ {err}", " ".repeat(err.offset()));
        }
    }
}
