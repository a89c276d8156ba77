//! Evaluation toolkit for geoparsing: gazetteer indexing, corpus handling,
//! baseline geotagging and geocoding, metrics and significance tests.

pub mod corpus;
pub mod gazetteer;
pub mod augment;
pub mod geodesy;
pub mod metrics;
pub mod pipeline;
pub mod resolver;
pub mod stats;
pub mod tagger;
pub mod taxonomy;
pub mod text;

pub use geodesy::{great_circle_distance, Coordinate, DistanceKm};
