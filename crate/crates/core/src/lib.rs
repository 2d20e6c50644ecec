pub mod dist;
pub mod error;
pub mod linalg;
pub mod model;
pub mod data;
pub mod diagnostics;
pub mod raise;
pub mod residualize;
pub mod ridge;
pub mod selection;
pub mod compare;
pub mod report;
pub mod cli;
