// probe criterion-2 configuration: K=1, M=N=8, both types, 20 paired seeds
use isac_core::beamform::*;
use isac_core::channel::*;
use isac_core::system::*;
use std::time::Instant;

fn main() {
    let gamma_db: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let dims = Dims { m: 8, n: 8, k: 1 };
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for seed in 0..20u64 {
        let ch = gen_channels(&Geometry::default_layout(), &PropagationParams::default(),
            dims, &NoisePowers::default(), 1000 + seed).unwrap();
        let params = SystemParams::from_db(30.0, &[gamma_db], 256).unwrap();
        let mut crbs = vec![];
        for rx in [ReceiverType::I, ReceiverType::II] {
            let mut ao = AoConfig::for_receiver(rx);
            ao.rel_tol = 1e-5;
            match alternating_optimize(&ch, &params, &ao, seed) {
                Ok(sol) if sol.status != AoStatus::Infeasible => crbs.push(sol.final_crb().unwrap()),
                Ok(sol) => { println!("seed {seed} {rx:?}: {:?}", sol.status); failures += 1; }
                Err(e) => { println!("seed {seed} {rx:?}: ERROR {e}"); failures += 1; }
            }
        }
        if crbs.len() == 2 {
            let rel = (crbs[0] - crbs[1]).abs() / crbs[0].max(crbs[1]);
            worst = worst.max(rel);
            if rel > 1e-3 { println!("seed {seed}: rel {rel:.3e} I={:.6e} II={:.6e}", crbs[0], crbs[1]); }
        }
    }
    println!("gamma {gamma_db} dB: worst rel {worst:.3e}, failures {failures}, elapsed {:?}", t0.elapsed());
}
