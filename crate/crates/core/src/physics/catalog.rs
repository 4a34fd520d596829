use alloc::vec;
use alloc::vec::Vec;

use crate::layout::BlockKind;
use crate::projection::ProjectionSpec;

/// One supported theory: its layout, projection and a short description.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CatalogEntry {
    pub tag: &'static str,
    pub layout: Vec<BlockKind>,
    pub gamma: ProjectionSpec,
    pub dims: Vec<usize>,
    pub description: &'static str,
}

fn entry(tag: &'static str, layout: Vec<BlockKind>, gamma: ProjectionSpec, dims: Vec<usize>, description: &'static str) -> CatalogEntry {
    CatalogEntry { tag, layout, gamma, dims, description }
}

/// Every theory with a builder, in a fixed order.
pub fn catalog() -> Vec<CatalogEntry> {
    use BlockKind::*;
    use ProjectionSpec as P;
    let compliance = || P::complement(P::Elastic);
    vec![
        entry("conductivity", vec![Vector], P::Grad, vec![2, 3], "conductivity, dielectrics, diffusion; E a gradient, J divergence free"),
        entry("magnetostatics", vec![Vector], P::DivFree, vec![2, 3], "magnetostatics in induction form; b divergence free, h' curl free"),
        entry("thermoelectric", vec![Vector, Vector], P::block(vec![P::Grad, P::Grad]), vec![2, 3], "thermoelectric and magnetoelectric coupled conduction"),
        entry(
            "dielectric-cg",
            vec![Vector, Vector],
            P::block(vec![P::DivFree, P::Grad]),
            vec![2, 3],
            "lossy quasistatic dielectric in the doubled Hermitian form on (-i d', e)",
        ),
        entry(
            "magnetotransport",
            vec![Vector, Vector],
            P::block(vec![P::DivFree, P::Grad]),
            vec![2, 3],
            "Hall conduction and convective diffusion with an antisymmetric conductivity, doubled real form",
        ),
        entry("elasticity", vec![SymMatrix], P::Elastic, vec![2, 3], "linear elasticity with body-force and polarization sources"),
        entry("compliance-elasticity", vec![SymMatrix], compliance(), vec![2, 3], "linear elasticity with stress as the field"),
        entry("torsion", vec![Vector], P::Grad, vec![2], "Saint-Venant torsion and antiplane shear of a cylinder"),
        entry(
            "thermoelasticity",
            vec![SymMatrix, Scalar],
            P::block(vec![compliance(), P::zero(Scalar)]),
            vec![2, 3],
            "thermoelasticity and poroelasticity with a uniform temperature or pressure increment",
        ),
        entry(
            "coupled-eme",
            vec![SymMatrix, Vector, Vector],
            P::block(vec![compliance(), P::Grad, P::Grad]),
            vec![2, 3],
            "coupled static elastic, electric and magnetic fields",
        ),
        entry(
            "viscoelastic-cg",
            vec![SymMatrix, SymMatrix],
            P::block(vec![compliance(), P::Elastic]),
            vec![2, 3],
            "quasistatic viscoelasticity in the doubled Hermitian form on (-i sigma', strain)",
        ),
        entry("oseen", vec![FullMatrix, Vector], P::Z, vec![2, 3], "steady Oseen flow past a slowly moving body, incompressibility by penalty"),
        entry("graphene", vec![FullMatrix, Vector], P::Z, vec![2], "viscous electron flow in a thin sheet, incompressibility by penalty"),
    ]
}
