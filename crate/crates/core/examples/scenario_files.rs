//! Building a scenario from JSON, including a two-dimensional opinion space,
//! and what validation errors look like.

use frachk::{scenario_from_json, solve_uncontrolled};

const PLANAR: &str = r#"{
  "alpha": 0.75, "T": 3, "nu": 1, "K": 2, "n": 300,
  "leader": {"x0": [0, 0]},
  "agents": [{"x0": [1, 0]}, {"x0": [-1, 0.5]}, {"x0": [0, -1]}],
  "weights": [[0, 1, 1], [1, 0, 0], [1, 0, 0]],
  "couplings": [0.5, 0, 0],
  "sweep": {"relaxation": 0.8}
}"#;

fn main() {
    let s = scenario_from_json(PLANAR).expect("valid scenario");
    let free = solve_uncontrolled(&s).expect("solves");
    println!(
        "planar scenario: {} agents in d = {}, terminal diameter {:.4}",
        s.network().agents(),
        s.network().dim(),
        free.agent_diameter(s.grid().intervals())
            .expect("node in range")
    );

    let broken = [
        PLANAR.replace("\"alpha\": 0.75", "\"alpha\": 0.45"),
        PLANAR.replace("[1, 0, 0], [1, 0, 0]", "[1, 0, 0], [1, 0, -1]"),
        PLANAR.replace("\"relaxation\": 0.8", "\"relaxation\": 1.5"),
        PLANAR.replace("{\"x0\": [0, -1]}", "{\"x0\": [0, -1, 2]}"),
        PLANAR.replace("\"nu\": 1,", "\"nu\": 1, \"mu\": 3,"),
    ];
    for text in broken {
        match scenario_from_json(&text) {
            Ok(_) => println!("unexpectedly accepted"),
            Err(e) => println!("rejected: {e}"),
        }
    }
}
