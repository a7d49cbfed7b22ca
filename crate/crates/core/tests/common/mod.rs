#![allow(dead_code)]

pub mod gradient;
pub mod oracle;
pub mod toy;
