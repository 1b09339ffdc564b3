#[allow(dead_code)]
pub mod serial;
