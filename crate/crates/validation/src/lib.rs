//! Holds the `acceptance` test target, which checks the fourteen
//! acceptance criteria end to end and prints one PASS/FAIL line for each.
//!
//! ```text
//! cargo test -p rotkick-validation --test acceptance
//! cargo test -p rotkick-validation --test acceptance -- 2 6   # selected criteria
//! ```
