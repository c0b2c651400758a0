// inspect the lifted SDR solution itself
use isac_core::channel::*;
use isac_core::linalg::*;
use isac_core::sdp::*;
use isac_core::system::*;
use num_complex::Complex64;

fn main() {
    let seed = 1002u64;
    let ch = gen_channels(&Geometry::default_layout(), &PropagationParams::default(),
        Dims { m: 4, n: 3, k: 2 }, &NoisePowers::default(), seed).unwrap();
    let params = SystemParams::from_db(30.0, &[6.0, 6.0], 256).unwrap();
    let v0 = ReflectCoeffs::all_ones(3);
    let design = match isac_core::beamform::transmit_step(&ch, &v0, &params, ReceiverType::I).unwrap() {
        isac_core::beamform::StepResult::Feasible(d) => d,
        _ => panic!(),
    };
    let scaled = ScaledSystem::new(&ch, &params);
    let design_scaled = design.scale_power(1.0 / params.p0);
    let lifted = reflect_quadratics(&scaled.ch, &design_scaled);
    let n = 3usize;
    let kk = 2usize;

    let mut p = HermSdpProblem::new();
    let v_block = p.add_block("V", n + 1);
    let beta_blocks: Vec<usize> = (0..kk).map(|k| p.add_block(format!("beta{k}"), 1)).collect();
    for &b in &beta_blocks {
        p.objective.push((b, HermCoeff::scaled_identity(1, -1.0)));
    }
    for idx in 0..=n {
        p.constraints.push(HermConstraint::eq(1.0).with_term(v_block,
            HermCoeff::Sparse(vec![(idx, idx, Complex64::ONE)])));
    }
    let mut dmats = vec![];
    for k in 0..kk {
        let mut d = lifted.q[k][k].scale(1.0 / scaled.params.gamma[k]);
        for i in 0..kk {
            if i != k { d = d.sub(&lifted.q[k][i]); }
        }
        d = d.sub(&lifted.q0[k]);
        let row_scale = 1.0 / (1.0 + d.as_matrix().fro_norm());
        p.constraints.push(
            HermConstraint::ge(scaled.ch.sigma_k_sq[k] * row_scale)
                .with_term(v_block, HermCoeff::from_matrix(&d.scale(row_scale)))
                .with_term(beta_blocks[k], HermCoeff::Sparse(vec![(0, 0, Complex64::new(-row_scale, 0.0))])),
        );
        dmats.push(d);
    }
    let sol = solve_hermitian(&p).unwrap();
    println!("status {:?} obj {} iters {}", sol.status, sol.objective, sol.iterations);
    println!("beta0 {:.4e} beta1 {:.4e}", sol.blocks[1][(0,0)].re, sol.blocks[2][(0,0)].re);
    let vm = &sol.blocks[0];
    let eig = herm_eig(vm).unwrap();
    println!("V eigs: {:?}", eig.values);
    for k in 0..kk {
        println!("lifted slack k={k}: {:.4e}", trace_prod(&HermitianMatrix::new(dmats[k].as_matrix().clone()).unwrap(), vm) - scaled.ch.sigma_k_sq[k]);
    }
    // slack of ideal rank-one from principal eigenvector
    let principal: Vec<Complex64> = (0..=n).map(|i| eig.vectors[(i, n)]).collect();
    let base = principal[n].arg();
    let cand = ReflectCoeffs::from_phases((0..n).map(|i| principal[i].arg() - base).collect());
    let h = combined_channel(&scaled.ch, &cand);
    let slacks = sinr_slacks(&design_scaled, &h, &scaled.params.gamma, &scaled.ch.sigma_k_sq, ReceiverType::I);
    println!("eigen-round exact slacks: {slacks:?}");
}
