//! The chapters of the guide in `book/src`, included so that `cargo test`
//! runs their code blocks as doc-tests.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/ch01.md")]
pub mod chapter1 {}
#[doc = include_str!("../../../book/src/ch02.md")]
pub mod chapter2 {}
#[doc = include_str!("../../../book/src/ch03.md")]
pub mod chapter3 {}
#[doc = include_str!("../../../book/src/ch04.md")]
pub mod chapter4 {}
#[doc = include_str!("../../../book/src/ch05.md")]
pub mod chapter5 {}
#[doc = include_str!("../../../book/src/ch06.md")]
pub mod chapter6 {}
#[doc = include_str!("../../../book/src/ch07.md")]
pub mod chapter7 {}
