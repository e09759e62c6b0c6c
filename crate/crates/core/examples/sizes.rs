use fluxlink_core::lattice::*;
use fluxlink_core::model::*;
use fluxlink_core::solver::*;
use fluxlink_core::sparse::LinearOp;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let g = build_ladder(5).unwrap();
    let words = magnetization_basis(g.n_links(), 0);
    let op = HImpSectorOp::new(Arc::new(g.clone()), words.clone(), 1.0, 75.0, 1.0, PairMode::All, true);
    let n = op.dim();
    let t = Instant::now();
    let mut x = vec![0.0; n];
    let y = {
        let mut y = vec![0.0; n];
        x[0] = 1.0;
        op.apply(&x, &mut y);
        y
    };
    println!("matvec time: {:?}  y0={}", t.elapsed(), y[0]);
    let t = Instant::now();
    match preconditioned_ground(&op, 2, 1e-8, 7, 80) {
        Ok(r) => println!("l=5: E={:?} iters={} time={:?}", r.energies, r.iterations, t.elapsed()),
        Err(e) => println!("l=5 FAILED after {:?}: {e}", t.elapsed()),
    }
}
