#![allow(dead_code)]

pub mod lq;
