//! Coefficient rings and enumeration of finite domains.

mod domain;
mod ring;

pub use domain::{Budget, DomainIter, DomainSpec, DEFAULT_BUDGET};
pub use ring::{
    format_univariate, is_irreducible, is_prime, least_irreducible, parse_univariate,
    ring_from_text, root_of_unity, Ring, RingSpec, MAX_FIELD_ORDER, MAX_PRIME_POWER_LEVEL,
};
