//! One run at the default scale, printing the spatial and temporal trace.
//!
//! `cargo run --release -p dwis-core --example full_run -- [scheme] [mu] [delta0] [seed] [temporal_steps]`

use std::time::Instant;

use dwis_core::{run, DwisConfig, LevelScheme, Scenario};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scheme: LevelScheme = args.first().map_or("U-SG", String::as_str).parse().expect("scheme");
    let mu: f64 = args.get(1).map_or(Ok(0.3), |s| s.parse()).expect("mu");
    let delta0: f64 = args.get(2).map_or(Ok(0.2), |s| s.parse()).expect("delta0");
    let seed: u64 = args.get(3).map_or(Ok(1), |s| s.parse()).expect("seed");
    let temporal_steps: usize = args.get(4).map_or(Ok(20), |s| s.parse()).expect("temporal steps");

    let started = Instant::now();
    let config = DwisConfig { temporal_steps, ..DwisConfig::standard(scheme, mu, delta0) };
    let result = run(&Scenario::standard(), &config, seed).expect("run failed");
    println!("pilot: {:?}", result.pilot);
    println!("truth range: {:?}", result.truth_range);
    for (phase, records) in [("spatial", &result.spatial), ("temporal", &result.temporal)] {
        for r in records.iter() {
            println!(
                "{phase:8} k={:2} m={:2} delta={:.4} cost={:4} cum={:5} track={:.4} model={:.4} range=({:.2}, {:.2})",
                r.k,
                r.m,
                r.delta,
                r.cost,
                r.cumulative_cost,
                r.tracking_rmse,
                r.modeling_rmse,
                r.range_est.0,
                r.range_est.1
            );
        }
    }
    println!("elapsed: {:.2?}", started.elapsed());
}
