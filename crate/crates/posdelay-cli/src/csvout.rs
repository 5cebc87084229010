//! Trajectory CSV: a header row, then one row per grid point with the
//! time, every state entry, and every output entry.

use posdelay_core::sim::Trajectory;

pub fn trajectory_csv(t: &Trajectory) -> String {
    let nx = t.states.first().map_or(0, Vec::len);
    let ny = t.outputs.first().map_or(0, Vec::len);
    let mut s = String::new();
    s.push_str("time");
    for i in 0..nx {
        s.push_str(&format!(",x{}", i + 1));
    }
    for i in 0..ny {
        s.push_str(&format!(",y{}", i + 1));
    }
    s.push('\n');
    for (k, &tk) in t.times.iter().enumerate() {
        s.push_str(&format!("{tk:.9}"));
        for v in &t.states[k] {
            s.push_str(&format!(",{v:.12e}"));
        }
        if !t.outputs.is_empty() {
            for v in &t.outputs[k] {
                s.push_str(&format!(",{v:.12e}"));
            }
        }
        s.push('\n');
    }
    s
}
