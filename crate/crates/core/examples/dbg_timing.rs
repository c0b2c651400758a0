use isac_core::beamform::*;
use isac_core::channel::*;
use isac_core::system::*;
use std::time::Instant;

fn main() {
    let dims = Dims { m: 8, n: 8, k: 3 };
    let ch = gen_channels(&Geometry::default_layout(), &PropagationParams::default(),
        dims, &NoisePowers::default(), 11).unwrap();
    let params = SystemParams::from_db(30.0, &[15.0; 3], 256).unwrap();
    let v = ReflectCoeffs::all_ones(8);

    let t0 = Instant::now();
    let d = transmit_step(&ch, &v, &params, ReceiverType::I).unwrap();
    println!("transmit_step (M=N=8, K=3): {:?}", t0.elapsed());
    let design = match d { StepResult::Feasible(d) => d, _ => panic!() };

    let t0 = Instant::now();
    let mut rng = isac_core::rng::StreamRng::new(5);
    let _ = reflective_step(&ch, &design, &v, &params, ReceiverType::I, 256, &mut rng).unwrap();
    println!("reflective_step (N=8, K=3): {:?}", t0.elapsed());

    let t0 = Instant::now();
    let ao = AoConfig::for_receiver(ReceiverType::I);
    let sol = alternating_optimize(&ch, &params, &ao, 3).unwrap();
    println!("AO (K=3): {:?} ({} iters, status {:?})", t0.elapsed(), sol.outer_iters, sol.status);

    let t0 = Instant::now();
    let sol = benchmark_separate(&ch, &params, ReceiverType::I, 3).unwrap();
    println!("separate (K=3): {:?} ({} alternations, {:?})", t0.elapsed(), sol.outer_iters, sol.status);

    // K = 1 case
    let dims1 = Dims { m: 8, n: 8, k: 1 };
    let ch1 = gen_channels(&Geometry::default_layout(), &PropagationParams::default(),
        dims1, &NoisePowers::default(), 11).unwrap();
    let params1 = SystemParams::from_db(30.0, &[10.0], 256).unwrap();
    let t0 = Instant::now();
    let mut ao1 = AoConfig::for_receiver(ReceiverType::I);
    ao1.rel_tol = 1e-4;
    let sol = alternating_optimize(&ch1, &params1, &ao1, 3).unwrap();
    println!("AO (K=1, rel_tol 1e-4): {:?} ({} iters, {:?})", t0.elapsed(), sol.outer_iters, sol.status);
}
