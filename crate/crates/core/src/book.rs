//! The guide's chapters, compiled so their snippets run as doctests.

#[doc = include_str!("../../../book/src/intro.md")]
mod intro {}
#[doc = include_str!("../../../book/src/series.md")]
mod series {}
#[doc = include_str!("../../../book/src/models.md")]
mod models {}
#[doc = include_str!("../../../book/src/frequencies.md")]
mod frequencies {}
#[doc = include_str!("../../../book/src/normalization.md")]
mod normalization {}
#[doc = include_str!("../../../book/src/estimate.md")]
mod estimate {}
#[doc = include_str!("../../../book/src/scanning.md")]
mod scanning {}
