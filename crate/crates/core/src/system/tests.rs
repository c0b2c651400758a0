use super::*;
use crate::channel::{gen_channels, Dims, Geometry, NoisePowers, PropagationParams};
use crate::linalg::vec_norm;
use crate::rng::StreamRng;
use approx::assert_relative_eq;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn test_channels(seed: u64, dims: Dims) -> ChannelSet {
    gen_channels(
        &Geometry::default_layout(),
        &PropagationParams::default(),
        dims,
        &NoisePowers::default(),
        seed,
    )
    .unwrap()
}

fn random_design(rng: &mut StreamRng, m: usize, k: usize, power: f64) -> TransmitDesign {
    let mut w = Vec::with_capacity(k);
    for _ in 0..k {
        let raw: Vec<Complex64> = (0..m).map(|_| rng.complex_normal()).collect();
        let s = (power / (k as f64 + 1.0)).sqrt() / vec_norm(&raw);
        w.push(raw.into_iter().map(|z| z * s).collect());
    }
    let r0 = crate::linalg::tests::random_pd(rng, m);
    let r0 = r0.scale(power / (k as f64 + 1.0) / r0.trace());
    TransmitDesign { w, r0 }
}

fn random_unit_modulus(rng: &mut StreamRng, n: usize) -> ReflectCoeffs {
    ReflectCoeffs::from_phases((0..n).map(|_| rng.uniform_phase()).collect())
}

#[test]
fn combined_channel_no_reflection() {
    let mut ch = test_channels(1, Dims { m: 4, n: 3, k: 2 });
    for hr in &mut ch.h_r {
        hr.iter_mut().for_each(|z| *z = Complex64::ZERO);
    }
    let h = combined_channel(&ch, &ReflectCoeffs::all_ones(3));
    for (hk, hd) in h.iter().zip(&ch.h_d) {
        for (a, b) in hk.iter().zip(hd) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}

#[test]
fn combined_channel_scalar_irs() {
    let ch = test_channels(2, Dims { m: 3, n: 1, k: 1 });
    let h = combined_channel(&ch, &ReflectCoeffs::all_ones(1));
    let gt = ch.g.adjoint().matvec(&ch.h_r[0]);
    for i in 0..3 {
        let expect = ch.h_d[0][i] + gt[i];
        assert!((h[0][i] - expect).norm() < 1e-15 * expect.norm().max(1e-30));
    }
}

#[test]
fn combined_channel_entrywise_oracle() {
    let ch = test_channels(3, Dims { m: 4, n: 3, k: 2 });
    let mut rng = StreamRng::new(77);
    let coeffs = random_unit_modulus(&mut rng, 3);
    let v = coeffs.v();
    let h = combined_channel(&ch, &coeffs);
    for k in 0..2 {
        for col in 0..4 {
            // h_k[col] = h_d[col] + sum_n conj(v_n) conj(G[n][col]) h_r[n]
            let mut expect = ch.h_d[k][col];
            for n in 0..3 {
                expect += v[n].conj() * ch.g[(n, col)].conj() * ch.h_r[k][n];
            }
            assert!((h[k][col] - expect).norm() < 1e-13 * expect.norm().max(1e-30));
        }
    }
}

#[test]
fn sinr_single_user_no_sensing() {
    let ch = test_channels(4, Dims { m: 4, n: 2, k: 1 });
    let h = combined_channel(&ch, &ReflectCoeffs::all_ones(2));
    let mut rng = StreamRng::new(5);
    let mut design = random_design(&mut rng, 4, 1, 1.0);
    design.r0 = HermitianMatrix::zeros(4);
    let expect = crate::linalg::cdot(&h[0], &design.w[0]).norm_sqr() / ch.sigma_k_sq[0];
    for rx in [ReceiverType::I, ReceiverType::II] {
        let got = sinr(&design, &h, &ch.sigma_k_sq, rx);
        assert_relative_eq!(got[0], expect, max_relative = 1e-12);
    }
}

#[test]
fn sinr_orthogonal_beam_is_zero() {
    let h = vec![vec![c(1.0, 0.0), c(0.0, 0.0)]];
    let design = TransmitDesign {
        w: vec![vec![c(0.0, 0.0), c(1.0, 0.0)]],
        r0: HermitianMatrix::zeros(2),
    };
    let got = sinr(&design, &h, &[1e-9], ReceiverType::I);
    assert_eq!(got[0], 0.0);
}

#[test]
fn sinr_matches_scalar_expansion() {
    let ch = test_channels(6, Dims { m: 4, n: 3, k: 2 });
    let mut rng = StreamRng::new(6);
    let coeffs = random_unit_modulus(&mut rng, 3);
    let h = combined_channel(&ch, &coeffs);
    let design = random_design(&mut rng, 4, 2, 1.0);
    for rx in [ReceiverType::I, ReceiverType::II] {
        let got = sinr(&design, &h, &ch.sigma_k_sq, rx);
        for k in 0..2 {
            // Direct scalar evaluation with explicit loops.
            let dot = |a: &[Complex64], b: &[Complex64]| {
                let mut s = c(0.0, 0.0);
                for i in 0..a.len() {
                    s += a[i].conj() * b[i];
                }
                s
            };
            let num = dot(&h[k], &design.w[k]).norm_sqr();
            let mut den = ch.sigma_k_sq[k];
            for i in 0..2 {
                if i != k {
                    den += dot(&h[k], &design.w[i]).norm_sqr();
                }
            }
            if rx == ReceiverType::I {
                let r0h = design.r0.as_matrix().matvec(&h[k]);
                den += dot(&h[k], &r0h).re;
            }
            assert_relative_eq!(got[k], num / den, max_relative = 1e-11);
        }
    }
}

#[test]
fn type_two_sinr_dominates_type_one() {
    let ch = test_channels(7, Dims { m: 4, n: 3, k: 3 });
    let mut rng = StreamRng::new(8);
    let coeffs = random_unit_modulus(&mut rng, 3);
    let h = combined_channel(&ch, &coeffs);
    let design = random_design(&mut rng, 4, 3, 1.0);
    let g1 = sinr(&design, &h, &ch.sigma_k_sq, ReceiverType::I);
    let g2 = sinr(&design, &h, &ch.sigma_k_sq, ReceiverType::II);
    for k in 0..3 {
        assert!(g2[k] >= g1[k]);
    }
}

#[test]
fn crb_identity_case() {
    let g = CMatrix::identity(2);
    let rx = HermitianMatrix::identity(2);
    assert_relative_eq!(crb(&g, &rx, 1.0, 1).unwrap(), 4.0, max_relative = 1e-12);
}

#[test]
fn crb_homogeneity_in_rx() {
    let ch = test_channels(9, Dims { m: 4, n: 4, k: 1 });
    let mut rng = StreamRng::new(9);
    let design = random_design(&mut rng, 4, 1, 1.0);
    let rx = design.rx();
    let base = crb(&ch.g, &rx, ch.sigma_r_sq, 256).unwrap();
    let scaled = crb(&ch.g, &rx.scale(3.0), ch.sigma_r_sq, 256).unwrap();
    assert_relative_eq!(scaled, base / 3.0, max_relative = 1e-10);
}

#[test]
fn crb_matches_explicit_inverse() {
    let mut rng = StreamRng::new(10);
    let ch = test_channels(10, Dims { m: 4, n: 4, k: 1 });
    let rx = crate::linalg::tests::random_pd(&mut rng, 4);
    let got = crb(&ch.g, &rx, 2.5, 16).unwrap();
    // Oracle via explicit inverse traces.
    let inv_trace = |m: &HermitianMatrix| {
        let inv = crate::linalg::solve_psd(m, &CMatrix::identity(m.dim())).unwrap();
        inv.trace().re
    };
    let f1 = inv_trace(&HermitianMatrix::symmetrized(
        ch.g.mul(rx.as_matrix()).mul(&ch.g.adjoint()),
    ));
    let f2 = inv_trace(&HermitianMatrix::symmetrized(ch.g.mul(&ch.g.adjoint())));
    assert_relative_eq!(got, 2.5 / 16.0 * f1 * f2, max_relative = 1e-9);
}

#[test]
fn crb_error_names_failing_factor() {
    let g = CMatrix::zeros(2, 2);
    let rx = HermitianMatrix::identity(2);
    match crb(&g, &rx, 1.0, 1) {
        Err(SystemError::CrbNearSingular { factor, .. }) => {
            assert_eq!(factor, "G R_x G^H");
        }
        other => panic!("expected near-singular error, got {other:?}"),
    }
}

#[test]
fn crb_is_independent_of_reflection() {
    // Eq-level statement: the CRB takes no reflection input; changing v
    // changes SINRs but not the CRB of a fixed design.
    let ch = test_channels(11, Dims { m: 4, n: 3, k: 1 });
    let mut rng = StreamRng::new(11);
    let design = random_design(&mut rng, 4, 1, 1.0);
    let rx = design.rx();
    let c1 = crb(&ch.g, &rx, ch.sigma_r_sq, 64).unwrap();
    let v_a = random_unit_modulus(&mut rng, 3);
    let v_b = random_unit_modulus(&mut rng, 3);
    let s_a = sinr(&design, &combined_channel(&ch, &v_a), &ch.sigma_k_sq, ReceiverType::I);
    let s_b = sinr(&design, &combined_channel(&ch, &v_b), &ch.sigma_k_sq, ReceiverType::I);
    assert!((s_a[0] - s_b[0]).abs() > 1e-12 * s_a[0]);
    let c2 = crb(&ch.g, &rx, ch.sigma_r_sq, 64).unwrap();
    assert_eq!(c1, c2);
}

#[test]
fn total_power_examples() {
    let zero = TransmitDesign::zero(2, 1);
    assert_eq!(zero.total_power(), 0.0);

    let design = TransmitDesign {
        w: vec![vec![c(2f64.sqrt(), 0.0), c(0.0, 0.0)]],
        r0: HermitianMatrix::identity(2),
    };
    assert_relative_eq!(design.total_power(), 4.0, max_relative = 1e-12);

    let mut rng = StreamRng::new(12);
    let d = random_design(&mut rng, 3, 2, 2.0);
    let mut expect = 0.0;
    for w in &d.w {
        for z in w {
            expect += z.norm_sqr();
        }
    }
    for i in 0..3 {
        expect += d.r0[(i, i)].re;
    }
    assert_relative_eq!(d.total_power(), expect, max_relative = 1e-12);
}

#[test]
fn rescaling_invariance() {
    // Scaling all channels by c and noise powers by c^2 leaves SINR fixed;
    // scaling G by c and sigma_R^2 by c^2 multiplies the CRB by c^-2.
    let ch = test_channels(13, Dims { m: 4, n: 3, k: 2 });
    let mut rng = StreamRng::new(13);
    let coeffs = random_unit_modulus(&mut rng, 3);
    let design = random_design(&mut rng, 4, 2, 1.0);
    let cscale = 13.7_f64;

    let scaled = ChannelSet {
        g: ch.g.clone(),
        h_d: ch
            .h_d
            .iter()
            .map(|v| v.iter().map(|z| z * cscale).collect())
            .collect(),
        h_r: ch
            .h_r
            .iter()
            .map(|v| v.iter().map(|z| z * cscale).collect())
            .collect(),
        sigma_k_sq: ch.sigma_k_sq.iter().map(|s| s * cscale * cscale).collect(),
        sigma_r_sq: ch.sigma_r_sq,
    };
    let s_orig = sinr(
        &design,
        &combined_channel(&ch, &coeffs),
        &ch.sigma_k_sq,
        ReceiverType::I,
    );
    let s_scaled = sinr(
        &design,
        &combined_channel(&scaled, &coeffs),
        &scaled.sigma_k_sq,
        ReceiverType::I,
    );
    for (a, b) in s_orig.iter().zip(&s_scaled) {
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }

    let rx = design.rx();
    let base = crb(&ch.g, &rx, ch.sigma_r_sq, 64).unwrap();
    let g_scaled = ch.g.scale(c(cscale, 0.0));
    let crb_scaled = crb(&g_scaled, &rx, ch.sigma_r_sq * cscale * cscale, 64).unwrap();
    assert_relative_eq!(crb_scaled * cscale * cscale, base, max_relative = 1e-10);
}

#[test]
fn reflect_quadratics_zero_sensing() {
    let ch = test_channels(14, Dims { m: 3, n: 2, k: 1 });
    let mut rng = StreamRng::new(14);
    let mut design = random_design(&mut rng, 3, 1, 1.0);
    design.r0 = HermitianMatrix::zeros(3);
    let lifted = reflect_quadratics(&ch, &design);
    assert!(lifted.q0[0].as_matrix().fro_norm() < 1e-15);
}

#[test]
fn reflect_quadratics_two_point_check() {
    let ch = test_channels(15, Dims { m: 2, n: 1, k: 1 });
    let mut rng = StreamRng::new(15);
    let design = random_design(&mut rng, 2, 1, 1.0);
    let lifted = reflect_quadratics(&ch, &design);
    for phase in [0.0, std::f64::consts::PI] {
        let coeffs = ReflectCoeffs::from_phases(vec![phase]);
        let h = combined_channel(&ch, &coeffs);
        let vt = [coeffs.v()[0], c(1.0, 0.0)];
        let got = lifted.q[0][0].quad_form(&vt);
        let expect = crate::linalg::cdot(&h[0], &design.w[0]).norm_sqr();
        assert_relative_eq!(got, expect, max_relative = 1e-10);
        let got0 = lifted.q0[0].quad_form(&vt);
        let expect0 = design.r0.quad_form(&h[0]);
        assert_relative_eq!(got0, expect0, max_relative = 1e-10);
    }
}

#[test]
fn reflect_quadratics_randomized_identity() {
    let ch = test_channels(16, Dims { m: 4, n: 3, k: 2 });
    let mut rng = StreamRng::new(16);
    let design = random_design(&mut rng, 4, 2, 1.0);
    let lifted = reflect_quadratics(&ch, &design);
    for _ in 0..100 {
        let coeffs = random_unit_modulus(&mut rng, 3);
        let h = combined_channel(&ch, &coeffs);
        let mut vt = coeffs.v();
        vt.push(c(1.0, 0.0));
        for k in 0..2 {
            for i in 0..2 {
                let got = lifted.q[k][i].quad_form(&vt);
                let expect = crate::linalg::cdot(&h[k], &design.w[i]).norm_sqr();
                assert_relative_eq!(got, expect, max_relative = 1e-10, epsilon = 1e-30);
            }
            let got0 = lifted.q0[k].quad_form(&vt);
            let expect0 = design.r0.quad_form(&h[k]);
            assert_relative_eq!(got0, expect0, max_relative = 1e-10, epsilon = 1e-30);
        }
    }
}

#[test]
fn scaled_system_preserves_sinr_and_objective() {
    let ch = test_channels(17, Dims { m: 4, n: 4, k: 2 });
    let params = SystemParams::from_db(30.0, &[10.0, 10.0], 256).unwrap();
    let scaled = ScaledSystem::new(&ch, &params);
    assert_relative_eq!(scaled.params.p0, 1.0);
    let max_sigma = scaled
        .ch
        .sigma_k_sq
        .iter()
        .fold(f64::MIN, |a, &b| a.max(b));
    assert_relative_eq!(max_sigma, 1.0, max_relative = 1e-12);

    let mut rng = StreamRng::new(17);
    let coeffs = random_unit_modulus(&mut rng, 4);
    // A unit-power design in scaled space maps to a P0-power physical one.
    let design_scaled = random_design(&mut rng, 4, 2, 1.0);
    let design_phys = scaled.design_to_physical(&design_scaled);
    assert_relative_eq!(
        design_phys.total_power(),
        params.p0 * design_scaled.total_power(),
        max_relative = 1e-12
    );

    let s_scaled = sinr(
        &design_scaled,
        &combined_channel(&scaled.ch, &coeffs),
        &scaled.ch.sigma_k_sq,
        ReceiverType::I,
    );
    let s_phys = sinr(
        &design_phys,
        &combined_channel(&ch, &coeffs),
        &ch.sigma_k_sq,
        ReceiverType::I,
    );
    for (a, b) in s_scaled.iter().zip(&s_phys) {
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }

    // Objective map-back: tr((G Rx G^H)^-1) recovered exactly.
    let rx_scaled = design_scaled.rx();
    let obj_scaled = crate::linalg::trace_inv(&HermitianMatrix::symmetrized(
        scaled
            .g_obj
            .mul(rx_scaled.as_matrix())
            .mul(&scaled.g_obj.adjoint()),
    ))
    .unwrap();
    let rx_phys = design_phys.rx();
    let obj_phys = crate::linalg::trace_inv(&HermitianMatrix::symmetrized(
        ch.g.mul(rx_phys.as_matrix()).mul(&ch.g.adjoint()),
    ))
    .unwrap();
    assert_relative_eq!(
        scaled.objective_to_physical(obj_scaled),
        obj_phys,
        max_relative = 1e-9
    );
}
