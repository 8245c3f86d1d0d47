//! Prints shots per second for a few representative cells.

use std::time::Instant;

use leakrep::{CodeParams, Experiment, Mode, NoiseParams};

fn main() -> leakrep::Result<()> {
    let shots = 50_000;
    for (mode, d, p) in [
        (Mode::Plain, 3, 1e-3),
        (Mode::Plain, 5, 8e-3),
        (Mode::Leakage, 7, 8e-3),
        (Mode::Teleport, 7, 8e-3),
    ] {
        let exp = Experiment::new(CodeParams::new(d, 10, mode), NoiseParams::with_leakage(p))?;
        let start = Instant::now();
        let est = exp.estimate(shots, 1, 1)?;
        let secs = start.elapsed().as_secs_f64();
        println!("{mode} d={d} p={p}: {:.0} shots/s, p_round={:.3e}", shots as f64 / secs, est.p_round);
    }
    Ok(())
}
