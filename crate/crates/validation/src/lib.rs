//! Holds the `acceptance` test target only; run it with
//! `cargo test -p lambda4wm-validation --test acceptance`.
