//! Mining of library adoption, post-adoption growth and two-person code
//! fights from the patch histories of Python projects.

pub mod adoption;
pub mod author;
pub mod corpus;
pub mod error;
pub mod fights;
pub mod history;
pub mod imports;
pub mod par;
pub mod report;
pub mod stackoverflow;
pub mod stats;
pub mod store;
pub mod synth;

pub use author::{AuthorId, AuthorKey};
pub use error::{Error, Result};
