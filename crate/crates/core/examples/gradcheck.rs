//! Reverse-mode autodiff on a tiny expression, then the full
//! finite-difference suite over every op and channel stage.

use ecmarl::experiment::gradcheck_report;
use ecmarl::tensor::{Graph, Tensor};

fn main() -> ecmarl::Result<()> {
    // f(x, w) = sum(tanh(x·W)), gradient w.r.t. both inputs
    let mut g = Graph::new();
    let x = g.input(Tensor::matrix(1, 2, vec![0.5, -1.0])?);
    let w = g.input(Tensor::matrix(2, 2, vec![0.1, 0.2, 0.3, 0.4])?);
    let h = g.matmul(x, w)?;
    let h = g.tanh(h);
    let f = g.sum(h);
    g.backward(f)?;
    println!("f = {:.6}", g.value(f).item());
    println!("df/dx = {:?}", g.grad(x).unwrap_or_default());
    println!("df/dW = {:?}", g.grad(w).unwrap_or_default());

    let report = gradcheck_report(false, 0);
    print!("{}", report.render());
    println!("all passed: {}", report.passed());
    Ok(())
}
