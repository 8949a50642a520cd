//! Analytic gradients of a conv → batch-norm → leaky ReLU → linear stack
//! against central finite differences.

use microdoppler::autograd::check::{max_relative_error, numeric_gradient};
use microdoppler::autograd::{Graph, Mode, Tensor};
use microdoppler::seed::rng_for;
use microdoppler::Result;
use rand::Rng;

fn loss(x: &[f64], w: &[f64], lw: &[f64], grads: bool) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let mut g = Graph::<f64>::new();
    let xv = g.leaf(Tensor::new(&[2, 1, 6, 6], x.to_vec())?, grads)?;
    let wv = g.leaf(Tensor::new(&[3, 1, 3, 3], w.to_vec())?, grads)?;
    let b = g.input(Tensor::zeros(&[3]))?;
    let gamma = g.input(Tensor::full(&[3], 1.0))?;
    let beta = g.input(Tensor::zeros(&[3]))?;
    let (mut mean, mut var) = (vec![0.0; 3], vec![1.0; 3]);
    let lwv = g.input(Tensor::new(&[27, 4], lw.to_vec())?)?;
    let h = g.conv2d(xv, wv, b, 2, 1)?;
    let h = g.batchnorm2d(h, gamma, beta, &mut mean, &mut var, Mode::Train)?;
    let h = g.leaky_relu(h, 0.01)?;
    let h = g.reshape(h, &[2, 27])?;
    let logits = g.linear(h, lwv, None)?;
    let l = g.softmax_cross_entropy(logits, &[1, 3])?;
    let value = g.value(l).item();
    if !grads {
        return Ok((value, vec![], vec![]));
    }
    g.backward(l)?;
    let gx = g.grad(xv).expect("input grad").to_f64_vec();
    let gw = g.grad(wv).expect("weight grad").to_f64_vec();
    Ok((value, gx, gw))
}

fn main() -> Result<()> {
    let mut rng = rng_for(0, "gradcheck");
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let (x, w, lw) = (draw(72), draw(27), draw(108));
    let (value, gx, gw) = loss(&x, &w, &lw, true)?;
    let nx = numeric_gradient(|p| Ok(loss(p, &w, &lw, false)?.0), &x, 1e-5)?;
    let nw = numeric_gradient(|p| Ok(loss(&x, p, &lw, false)?.0), &w, 1e-5)?;
    println!("loss {value:.6}");
    println!("input gradient:  max relative error {:.2e}", max_relative_error(&gx, &nx));
    println!("kernel gradient: max relative error {:.2e}", max_relative_error(&gw, &nw));
    Ok(())
}
