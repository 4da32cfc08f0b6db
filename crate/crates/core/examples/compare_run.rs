//! Controlled versus uncontrolled run of Example 2, written as CSV and JSON
//! into a directory (first argument, default `compare_out`).

use frachk::output::{read_csv, run, Mode};
use frachk::Bundled;

fn main() -> frachk::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "compare_out".into());
    let scenario = Bundled::Example2.scenario();
    let (artifacts, summary) = run(&scenario, Mode::Compare, &out, true)?;
    for path in artifacts.paths() {
        println!("wrote {}", path.display());
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );

    let control = read_csv(
        artifacts
            .control
            .as_ref()
            .expect("compare mode writes a control"),
    )?;
    let u = control.column("u_1").expect("scalar control");
    let saturated = u.iter().filter(|v| v.abs() >= scenario.bound()).count();
    println!("control saturated at {saturated} of {} nodes", u.len());
    Ok(())
}
