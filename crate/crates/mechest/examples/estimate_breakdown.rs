//! Price a workload run with the built-in cost profile: energy and time as
//! count-weighted sums over the nine instruction categories.

use mechest::costmodel::{estimate, CostProfile};
use mechest::simulator::{run, HardwareConfig, DEFAULT_BUDGET};
use mechest::workloads;

fn main() {
    let profile = CostProfile::builtin();
    for descriptor in workloads::bundled() {
        let pair = descriptor.pair().expect("bundled workloads assemble");
        let state = run(&pair.hard, &HardwareConfig::with_fpu(), DEFAULT_BUDGET).expect("runs");
        let est = estimate(&state.counts, &profile);

        println!("== {} ({} instructions) ==", descriptor.name, state.executed);
        println!(
            "  {:<20} {:>9}  {:>14}  {:>14}",
            "category", "count", "energy [nJ]", "time [ns]"
        );
        for c in &est.per_category {
            if c.count > 0 {
                println!(
                    "  {:<20} {:>9}  {:>14.1}  {:>14.1}",
                    c.category.name(),
                    c.count,
                    c.energy_nj,
                    c.time_ns
                );
            }
        }
        println!(
            "  {:<20} {:>9}  {:>14.1}  {:>14.1}",
            "total",
            state.executed,
            est.energy_nj,
            est.time_ns
        );
        println!(
            "  = {:.3} mJ, {:.3} ms\n",
            est.energy_j() * 1e3,
            est.time_s() * 1e3
        );
    }
}
