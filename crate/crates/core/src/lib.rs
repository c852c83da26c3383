// Copyright 2026 qwfluor Contributors
// SPDX-License-Identifier: Apache-2.0

pub mod collective;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod fock;
pub mod linalg;
pub mod medium;
pub mod spectra;

pub use error::{Error, Result};
