//! Fits a two-layer network to a noisy sine with the tape-based autodiff
//! engine and Adam, then checks one gradient against finite differences.

use alcr::autodiff::{adam_step, clip_global_norm, AdamConfig, AdamState, Graph, ParamStore, Tensor};
use alcr::rng::RngStream;

fn main() -> alcr::Result<()> {
    let mut rng = RngStream::new(1);
    let n = 64;
    let xs: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.sin() + 0.05 * (rng.uniform() - 0.5)).collect();

    let mut init = |rows, cols| {
        let data = (0..rows * cols).map(|_| rng.uniform() - 0.5).collect();
        Tensor::matrix(rows, cols, data)
    };
    let mut params = ParamStore::new();
    let w1 = params.insert("w1", init(1, 16)?)?;
    let b1 = params.insert("b1", init(1, 16)?)?;
    let w2 = params.insert("w2", init(16, 1)?)?;

    let loss_of = |params: &ParamStore| -> (f64, alcr::autodiff::Gradients) {
        let mut g = Graph::new(params);
        let x = g.constant(n, 1, xs.clone());
        let y = g.constant(n, 1, ys.clone());
        let (w1, b1, w2) = (g.param(w1), g.param(b1), g.param(w2));
        let h = g.matmul(x, w1);
        let h = g.add_row(h, b1);
        let h = g.tanh(h);
        let pred = g.matmul(h, w2);
        let err = g.sub(pred, y);
        let sq = g.mul(err, err);
        let s = g.sum(sq);
        let loss = g.affine(s, 1.0 / n as f64, 0.0);
        (g.scalar(loss), g.backward(loss).expect("scalar loss"))
    };

    let mut adam = AdamState::new(&params);
    for step in 0..=2000 {
        let (loss, grads) = loss_of(&params);
        if step % 400 == 0 {
            println!("step {step:>4}  mse {loss:.5}");
        }
        adam_step(
            &mut params,
            &clip_global_norm(grads, 400.0),
            &mut adam,
            0.01,
            &AdamConfig::default(),
        )?;
    }

    let (_, grads) = loss_of(&params);
    let h = 1e-6;
    let mut p = params.clone();
    p.get_mut(w2).data_mut()[3] += h;
    let up = loss_of(&p).0;
    p.get_mut(w2).data_mut()[3] -= 2.0 * h;
    let down = loss_of(&p).0;
    println!(
        "d loss / d w2[3]: analytic {:.6e}, central difference {:.6e}",
        grads.get(w2).map_or(0.0, |t| t.data()[3]),
        (up - down) / (2.0 * h)
    );
    Ok(())
}
