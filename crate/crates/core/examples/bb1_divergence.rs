//! The rotation-doubling example on which BB1 steps diverge.

use alsp::spalbb::bb1_divergence_demo;

fn main() {
    let demo = bb1_divergence_demo([1.0, 0.0], 6);
    for (k, z) in demo.trajectory.iter().enumerate() {
        println!("z_{k} = ({:6}, {:6})", z[0], z[1]);
    }
    println!("‖z_k+1‖² / ‖z_k‖² = {}", demo.observed_squared_factor);
    if let Some(note) = &demo.discrepancy {
        println!("note: {note}");
    }
}
