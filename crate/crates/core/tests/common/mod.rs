#![allow(dead_code)]

use flight_core::geometry::make_domain;
use flight_core::{AnyDomain, Domain, DomainSpec};

pub fn planar(spec: DomainSpec) -> Domain<2> {
    match make_domain(&spec).expect("valid spec") {
        AnyDomain::Planar(d) => d,
        AnyDomain::Spatial(_) => panic!("expected a planar domain"),
    }
}

pub fn spatial(spec: DomainSpec) -> Domain<3> {
    match make_domain(&spec).expect("valid spec") {
        AnyDomain::Spatial(d) => d,
        AnyDomain::Planar(_) => panic!("expected a 3d domain"),
    }
}

/// Unit square `[0, 1]²`.
pub fn unit_square() -> Domain<2> {
    planar(DomainSpec::Square { side: 1.0, center: Some(vec![0.5, 0.5]) })
}

pub fn disk(radius: f64) -> Domain<2> {
    planar(DomainSpec::Disk { radius, center: None })
}

pub fn koch(generation: i64) -> Domain<2> {
    planar(DomainSpec::KochSnowflake { generation, side: 1.0, center: None })
}

pub fn unit_box() -> Domain<3> {
    spatial(DomainSpec::Box3d { a: 1.0, b: 1.0, c: 1.0, center: None })
}
