//! Holds the `acceptance` test target, which exercises the analyzer end to
//! end and prints one verdict per criterion. Run it with
//! `cargo test -p mcfil-validation --test acceptance`.
