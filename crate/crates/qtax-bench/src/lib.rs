//! Helper-free placeholder: the interesting code lives in benches/engine.rs.
