//! Linear-algebra primitives shared by the solver modules.

pub mod dense;
pub mod shifted;

pub use dense::{
    cond2, economy_qr_r, eigenvalues, fro_norm, full_qr, hermitian_eig, hermitian_part, lu_solve, numerical_rank,
    orth_complement_basis, ordered_schur, schur, singular_values, spectral_norm, spectral_radius, thin_qr, DenseLu,
    HermitianEig, OrderedSchur, ThinQr, RANK_TOL,
};
pub use shifted::{make_shifted_factorization, ShiftedFactorization, SparseLu};
