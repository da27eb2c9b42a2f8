//! Acceptance checks live in `tests/acceptance.rs`. They run last in a
//! workspace test run because this package sorts after the others, so a
//! failing check does not hide the remaining test results.
