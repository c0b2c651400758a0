use isac_core::sdp::*;
use num_complex::Complex64;
fn c(re: f64, im: f64) -> Complex64 { Complex64::new(re, im) }
fn main() {
    let mut p = HermSdpProblem::new();
    let x = p.add_block("X", 2);
    p.objective.push((x, HermCoeff::Sparse(vec![(0, 0, c(1.0, 0.0))])));
    p.constraints.push(HermConstraint::eq(1.0).with_term(x, HermCoeff::Sparse(vec![(0, 1, c(0.5, 0.0))])));
    p.constraints.push(HermConstraint::eq(0.5).with_term(x, HermCoeff::Sparse(vec![(0, 1, c(0.0, 0.5))])));
    p.constraints.push(HermConstraint::eq(1.0).with_term(x, HermCoeff::Sparse(vec![(1, 1, c(1.0, 0.0))])));
    let sol = solve_hermitian(&p).unwrap();
    println!("status {:?} obj {} iters {} skew {:.3e} pres {:.2e} dres {:.2e} gap {:.2e}",
        sol.status, sol.objective, sol.iterations, sol.embedding_skew[0],
        sol.primal_residual, sol.dual_residual, sol.gap);
}
