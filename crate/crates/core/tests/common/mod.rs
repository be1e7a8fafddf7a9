#![allow(dead_code)]

use rulesched::problem::{Instance, Pattern};

/// Two nurses, one slot with demand 1, undercover weight 10.
/// Nurse 0: `[1]` cost 2, `[0]` cost 0. Nurse 1: `[1]` cost 1, `[0]` cost 0.
pub fn worked_instance() -> Instance {
    Instance::new(
        1,
        1,
        vec![
            vec![Pattern::new(vec![1], 2.0), Pattern::new(vec![0], 0.0)],
            vec![Pattern::new(vec![1], 1.0), Pattern::new(vec![0], 0.0)],
        ],
        vec![vec![1]],
        10.0,
    )
    .unwrap()
}
