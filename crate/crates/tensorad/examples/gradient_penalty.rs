//! Fit a one-layer tanh model while penalising its input sensitivity.
//!
//! The penalty is built from `grad(.., create_graph = true)`, so the
//! parameter update differentiates through a gradient.
//!
//! ```bash
//! cargo run -p tensorad --example gradient_penalty
//! ```

use tensorad::{grad, Tape, Tensor};

fn main() -> tensorad::Result<()> {
    let xs = Tensor::new(&[6, 2], vec![-1.0, 0.5, -0.5, 0.2, 0.0, -0.3, 0.5, 0.9, 1.0, -0.8, 1.5, 0.1])?;
    let ys = Tensor::new(&[6, 1], vec![-0.7, -0.4, -0.1, 0.5, 0.3, 0.8])?;
    let w0 = Tensor::new(&[2, 1], vec![0.1, -0.1])?;

    for mu in [0.0, 0.5] {
        let mut w = w0.clone();
        for step in 0..=200 {
            let tape = Tape::new();
            let x = tape.var(&xs);
            let wv = tape.var(&w);
            let pred = x.matmul(&wv)?.tanh();
            let fit = pred.sub(&ys)?.square().mean();
            let dx = grad(&pred.sum(), &[&x], true)?.remove(0);
            let loss = fit.add(&dx.square().mean().scale(mu))?;
            let gw = grad(&loss, &[&wv], false)?.remove(0);
            if step % 50 == 0 {
                let sensitivity = dx.square().mean().item();
                println!("mu {mu} step {step:>3}: fit {:.5}  sensitivity {sensitivity:.5}  w {:.3?}", fit.item(), w.data());
            }
            w = w.sub(&gw.scale(0.5))?;
        }
        println!();
    }
    Ok(())
}
