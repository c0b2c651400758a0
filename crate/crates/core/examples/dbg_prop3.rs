use isac_core::beamform::*;
use isac_core::channel::*;
use isac_core::system::*;

fn main() {
    for gamma_db in [10.0, 15.0, 20.0, 25.0] {
        for seed in [3u64, 62, 100] {
            let ch = gen_channels(&Geometry::default_layout(), &PropagationParams::default(),
                Dims { m: 4, n: 4, k: 1 }, &NoisePowers::default(), seed).unwrap();
            let params = SystemParams::from_db(30.0, &[gamma_db], 256).unwrap();
            let mut crbs = vec![];
            for rx in [ReceiverType::I, ReceiverType::II] {
                let mut ao = AoConfig::for_receiver(rx);
                ao.rel_tol = 1e-5;
                let sol = match alternating_optimize(&ch, &params, &ao, seed) { Ok(s) => s, Err(e) => { println!("g={gamma_db} seed={seed} {rx:?}: ERROR {e}"); continue; } };
                let h = combined_channel(&ch, &sol.v);
                let s = sinr(&sol.design, &h, &ch.sigma_k_sq, rx);
                let slack = s[0] / params.gamma[0] - 1.0;
                crbs.push((sol.final_crb().unwrap(), slack, sol.outer_iters, sol.status));
            }
            if crbs.len() < 2 { continue; } let rel = (crbs[0].0 - crbs[1].0).abs() / crbs[0].0;
            println!("g={gamma_db} seed={seed}: I={:.6e}(slack {:.1e},it{},{:?}) II={:.6e}(slack {:.1e},it{},{:?}) rel={:.2e}",
                crbs[0].0, crbs[0].1, crbs[0].2, crbs[0].3, crbs[1].0, crbs[1].1, crbs[1].2, crbs[1].3, rel);
        }
    }
}
