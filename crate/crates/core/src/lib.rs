//! Polarization-adjusted convolutional (PAC) codes.
//!
//! A PAC code of length `N = 2^n` carries `K` data bits. The encoder places
//! the data on an index set `A` (the *rate profile*), runs the resulting
//! vector through a rate-1 convolutional precoder, and applies the polar
//! transform. Decoding walks the irregular code tree either sequentially
//! (Fano search on a polarized metric) or with successive-cancellation
//! list decoding.
//!
//! The crate also ships the analysis tools used to build and predict such
//! codes: Gallager's `E0` function and cutoff rates of polarized channels
//! (estimated by genie-aided Monte Carlo), the rate-profile design recipe
//! built on those rates, tail bounds for the sequential-decoding workload,
//! and a reproducible parallel simulation harness.
//!
//! ```
//! use paclab_core::precoder::{conv_encode, insert_data, CodeSpec};
//! use paclab_core::polar::polar_transform;
//!
//! let spec = CodeSpec::new(8, vec![4, 6, 7, 8], vec![1, 1, 1], vec![0; 8]).unwrap();
//! let v = insert_data(&[1, 0, 1, 1], &spec).unwrap();
//! let u = conv_encode(&v, &spec).unwrap();
//! let x = polar_transform(&u).unwrap();
//! assert_eq!(x.len(), 8);
//! ```

pub mod channel;
pub mod cutoff;
pub mod fano;
pub mod list;
pub mod polar;
pub mod precoder;
pub mod profile;
pub mod seeds;
pub mod sim;
