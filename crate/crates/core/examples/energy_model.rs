//! Step energies and cost of transport for the simulated humanoid.

use footstep::actions::ActionProfile;
use footstep::energy::{cot, optimal_straight_step, step_energy, EnergyParams, StepGeometry};

fn main() {
    let profile = ActionProfile::sim();
    let p = EnergyParams::default().with_optimal_step(profile.optimal_length);
    let best = optimal_straight_step(&p, profile.max_length);
    println!("mg = {:.1} N, length scale {:.4} m", p.mg(), p.length_scale_m);
    println!(
        "optimal straight step {:.3} m, minimum COT {:.2}\n",
        best.length, best.alpha
    );

    println!("{:>8} {:>12} {:>8}", "l [m]", "E [J]", "COT");
    for i in 1..=8 {
        let l = 0.05 * i as f64;
        let g = StepGeometry::straight(l);
        println!("{l:>8.2} {:>12.1} {:>8.2}", step_energy(&g, &p), cot(&g, &p).unwrap());
    }

    println!("\ncheapest candidate per subset:");
    for subset in &profile.subsets {
        let (a, e) = subset
            .candidates
            .iter()
            .map(|a| (a, profile.energy(a, &p)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        println!(
            "  {:<16} dx {:+.2} dy {:.2} yaw {:+5.1} deg: {e:.1} J",
            format!("{:?}", subset.id),
            a.dx,
            a.dy,
            a.dtheta.to_degrees()
        );
    }
}
