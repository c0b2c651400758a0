// debug binary for reflective step quality
use isac_core::beamform::*;
use isac_core::channel::*;
use isac_core::system::*;
use isac_core::rng::StreamRng;

fn main() {
    for seed in 1000..1006u64 {
        let ch = gen_channels(&Geometry::default_layout(), &PropagationParams::default(),
            Dims { m: 4, n: 3, k: 2 }, &NoisePowers::default(), seed).unwrap();
        let params = SystemParams::from_db(30.0, &[6.0, 6.0], 256).unwrap();
        let v0 = ReflectCoeffs::all_ones(3);
        let design = match transmit_step(&ch, &v0, &params, ReceiverType::I).unwrap() {
            StepResult::Feasible(d) => d,
            StepResult::Infeasible => { println!("seed {seed}: infeasible"); continue; }
        };
        let mut grid_best = f64::NEG_INFINITY;
        let levels = 16;
        for a in 0..levels { for b in 0..levels { for c in 0..levels {
            let phases = vec![
                std::f64::consts::TAU * a as f64 / levels as f64,
                std::f64::consts::TAU * b as f64 / levels as f64,
                std::f64::consts::TAU * c as f64 / levels as f64,
            ];
            let s = min_sinr_slack(&ch, &design, &ReflectCoeffs::from_phases(phases), &params, ReceiverType::I);
            grid_best = grid_best.max(s);
        }}}
        let inc = min_sinr_slack(&ch, &design, &v0, &params, ReceiverType::I);
        let mut rng = StreamRng::new(2000 + seed);
        let got = reflective_step(&ch, &design, &v0, &params, ReceiverType::I, 256, &mut rng).unwrap();
        let got_slack = min_sinr_slack(&ch, &design, &got, &params, ReceiverType::I);
        println!("seed {seed}: incumbent {inc:.6e}  grid {grid_best:.6e}  sdr {got_slack:.6e}  ratio {:.4}", got_slack/grid_best);
    }
}
