//! Memento model for requested URIs: URI-M / URI-T / other, URI-R
//! canonicalization and resource classes.

mod canonical;
mod classify;
mod resource;

pub use canonical::{canonicalize, CanonicalizeError};
pub use classify::{classify, ArchiveUri, DatetimeError, InvalidRequest, MementoDatetime, UriClassifier, UriKind};
pub use resource::{classify_resource, ResourceClass, ResourceClassLists, ResourceClassifier};
