//! Times the serial procedure against the forest and prints the speedup,
//! the overheads relative to the actual tree and the cost-model bound.
//!
//! `cargo run --release --example speedup_bench -- 100000`

use cvforest::*;

fn main() -> Result<()> {
    let examples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let ds = generate_synthetic(Regime::Stable, examples, 50, 0)?;
    let config = InductionConfig { n: 10, ..InductionConfig::default() };
    let folds = config.folds(&ds)?;
    let run = measure_timings(&ds, &folds, &config, Mode::Both, 3)?;
    let r = &run.report;

    println!("N={} a={} n={} repeats={}", r.examples, r.a, r.n, r.repeats);
    println!("T_a={:.4}s T_s={:.4}s T_p={:.4}s", r.t_a, r.t_s.unwrap(), r.t_p.unwrap());
    println!("S={:.2} O_s={:.0}% O_p={:.0}%", r.speedup.unwrap(), r.overhead_serial.unwrap(), r.overhead_parallel.unwrap());
    println!("counter speedup {:.2}", r.counter_speedup.unwrap());
    if let (Some(c), Some(b)) = (r.cost_model, r.bound) {
        println!("t_e={:.2e}s t_p={:.2e}s bound worst {:.2} best {:.0}", c.t_e, c.t_p, b.worst, b.best);
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
