//! Quadrature rules for triangles (reference coordinates) and edges.

/// A quadrature point on the reference triangle {(xi, eta): xi, eta >= 0, xi + eta <= 1}.
///
/// Weights sum to 1/2, the reference triangle area.
#[derive(Debug, Clone, Copy)]
pub struct TrianglePoint {
    pub xi: f64,
    pub eta: f64,
    pub weight: f64,
}

/// Symmetric 3-point rule, exact for polynomials of degree 2.
pub const TRI_3: [TrianglePoint; 3] = [
    TrianglePoint {
        xi: 0.5,
        eta: 0.0,
        weight: 1.0 / 6.0,
    },
    TrianglePoint {
        xi: 0.5,
        eta: 0.5,
        weight: 1.0 / 6.0,
    },
    TrianglePoint {
        xi: 0.0,
        eta: 0.5,
        weight: 1.0 / 6.0,
    },
];

/// Symmetric 7-point rule, exact for polynomials of degree 5.
pub const TRI_7: [TrianglePoint; 7] = {
    const A1: f64 = 0.059_715_871_789_77;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.066_197_076_394_253;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.062_969_590_272_413_5;
    [
        TrianglePoint {
            xi: 1.0 / 3.0,
            eta: 1.0 / 3.0,
            weight: 9.0 / 80.0,
        },
        TrianglePoint {
            xi: A1,
            eta: B1,
            weight: W1,
        },
        TrianglePoint {
            xi: B1,
            eta: A1,
            weight: W1,
        },
        TrianglePoint {
            xi: B1,
            eta: B1,
            weight: W1,
        },
        TrianglePoint {
            xi: A2,
            eta: B2,
            weight: W2,
        },
        TrianglePoint {
            xi: B2,
            eta: A2,
            weight: W2,
        },
        TrianglePoint {
            xi: B2,
            eta: B2,
            weight: W2,
        },
    ]
};

/// A Gauss point on the reference edge [-1, 1]; weights sum to 2.
#[derive(Debug, Clone, Copy)]
pub struct EdgePoint {
    pub s: f64,
    pub weight: f64,
}

/// 2-point Gauss rule, exact for degree 3.
pub const EDGE_2: [EdgePoint; 2] = {
    const P: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
    [
        EdgePoint { s: -P, weight: 1.0 },
        EdgePoint { s: P, weight: 1.0 },
    ]
};

/// 3-point Gauss rule, exact for degree 5.
pub const EDGE_3: [EdgePoint; 3] = {
    const P: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
    [
        EdgePoint {
            s: -P,
            weight: 5.0 / 9.0,
        },
        EdgePoint {
            s: 0.0,
            weight: 8.0 / 9.0,
        },
        EdgePoint {
            s: P,
            weight: 5.0 / 9.0,
        },
    ]
};
