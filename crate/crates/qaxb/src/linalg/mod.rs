//! Finite-dimensional operator substrate.

pub mod calc;
pub mod defect;
pub mod lattice;
pub mod legs;
pub mod op;
pub mod packet;

use thiserror::Error;

pub use calc::{func_calc, hermitian_eigen, inverse_z, joint_calc, z_transform, JointEntry, JointSpectrum, PhiSupport};
pub use defect::{defect, relative_defect, DefectStats};
pub use lattice::{canonical_pair, LatticeLine};
pub use legs::{leg_embed, LegOp};
pub use op::{LinOp, Operator};
pub use packet::{gaussian_packet, Packet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("lattice size must be a power of two and at least 4, got {0}")]
    LatticeSize(usize),
    #[error("lattice spacing must be positive and finite, got {0}")]
    LatticeSpacing(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("operator of dimension {0} is too large to materialize densely")]
    TooLarge(usize),
    #[error("operator is not selfadjoint (relative asymmetry {0:e})")]
    NotSelfadjoint(f64),
    #[error("z-transform inverse needs norm < 1, got {0}")]
    NormTooLarge(f64),
    #[error("operators do not commute (defect {0:e})")]
    Commutation(f64),
    #[error("phi squared is not the declared projection (defect {0:e})")]
    NotProjection(f64),
    #[error("phi eigenvalue {0} is not near -1, 0 or 1")]
    RhoAmbiguous(f64),
    #[error("packet centre {centre} is closer than 4 widths to the lattice end")]
    PacketCentre { centre: f64 },
    #[error("packet width must be positive and finite, got {0}")]
    PacketWidth(f64),
    #[error("packet mass near the lattice ends is {0:e}")]
    PacketBoundary(f64),
    #[error("invalid leg specification: {0}")]
    Legs(String),
}
