use std::io::Write;

use toral_recurrence::verify::{run_check, CHECKS};
use toral_recurrence::Execution;

#[test]
fn acceptance_criteria() {
    // the raw handle bypasses libtest capture, so the lines show on success too
    let mut err = std::io::stderr();
    writeln!(err).unwrap();
    let mut failed = Vec::new();
    for (id, _, _) in CHECKS {
        let r = run_check(id, Execution::Parallel);
        writeln!(err, "{}", r.line()).unwrap();
        if !r.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
