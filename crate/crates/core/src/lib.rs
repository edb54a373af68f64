//! A simulated privacy ledger and the tools to investigate it.
//!
//! [`ring`], [`lsag`] and [`stealth`] are the primitives; [`ledger`] builds a
//! UTXO chain on them with transparent and ring-signed shielded spends.
//! [`regmap`] maps anonymous identifiers to real identities behind warrants
//! and a hash-chained audit log, and [`tracer`] follows value through the
//! chain. [`scenario`] generates seeded economies with ground truth.

pub mod cli;
pub mod codec;
pub mod group;
pub mod hashing;
pub mod ledger;
pub mod lsag;
pub mod regmap;
pub mod ring;
pub mod scenario;
pub mod stealth;
pub mod tracer;
