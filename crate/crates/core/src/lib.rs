#![no_std]

extern crate alloc;

pub mod communities;
pub mod context;
pub mod corpus;
pub mod date;
pub mod digest;
pub mod entity;
pub mod extraction;
pub mod graph;
pub mod layout;
pub mod provenance;
pub mod resolution;
pub mod synth;

pub use date::Date;
pub use digest::Digest;
pub use entity::EntityId;
