//! GHZ-like states and the uniqueness of their stabilizer eigenspace.
//!
//! `|Psi(alpha)>` is `(1/d) sum_{s+t+u = alpha} |s_a>|t_b>|u_c>` where the
//! per-slot bases are named by the form tag (`XYY` means Alice's slot in the
//! X basis, the receivers' slots in the Y basis). In the computational basis
//! the XYY form collapses to `d^(-1/2) sum_j w^(j(j-1-alpha)) |jjj>` for odd
//! `d` and `w^(j(j-2-alpha))` for even `d`; the XXX form is
//! `d^(-1/2) sum_j w^(-j alpha) |jjj>`.
//!
//! [`CommonEigenspace`] builds the product of the three group-average
//! projectors of `X(x)Y(x)Y`, `Y(x)X(x)Y`, `Y(x)Y(x)X` and ranks it. Because
//! it works on the full `d^3` register, a rank of one also rules out any
//! environment that stays entangled with a state passing all three checks.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, QssError, Result};
use crate::math::{Dim, Operator, PureState, Tensor, ZMod, EQ_TOL};
use crate::mub::{self, basis, BasisLabel};

/// Default largest `d` accepted by the eigenspace solver.
pub const SOLVER_LIMIT: usize = 16;
/// Singular values above this count towards the eigenspace rank.
pub const RANK_THRESHOLD: f64 = 1e-7;

/// Per-slot basis assignment of a GHZ-like state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GhzForm {
    XYY,
    YXY,
    YYX,
    XXX,
}

impl GhzForm {
    pub fn slot_labels(self) -> [BasisLabel; 3] {
        use BasisLabel::{X, Y};
        match self {
            GhzForm::XYY => [X, Y, Y],
            GhzForm::YXY => [Y, X, Y],
            GhzForm::YYX => [Y, Y, X],
            GhzForm::XXX => [X, X, X],
        }
    }
}

impl fmt::Display for GhzForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Identifies `|Psi(alpha)>` in a given form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GhzSpec {
    pub d: Dim,
    pub alpha: ZMod,
    pub form: GhzForm,
}

impl GhzSpec {
    pub fn new(d: Dim, alpha: ZMod, form: GhzForm) -> Result<Self> {
        if alpha.dim() != d {
            return contract(format!("alpha is a residue mod {}, state has d={d}", alpha.dim()));
        }
        Ok(GhzSpec { d, alpha, form })
    }

    pub fn xyy(d: Dim, alpha: usize) -> Self {
        GhzSpec {
            d,
            alpha: d.residue(alpha as i64),
            form: GhzForm::XYY,
        }
    }
}

/// `(1/d) sum_{s+t+u=alpha} b1|s> (x) b2|t> (x) b3|u>`.
pub fn ghz_sum_form(spec: &GhzSpec) -> PureState {
    let d = spec.d.get();
    let [b1, b2, b3] = spec.form.slot_labels().map(|l| basis(spec.d, l));
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d * d];
    let scale = 1.0 / d as f64;
    for s in 0..d {
        for t in 0..d {
            let u = (spec.alpha.value() + 2 * d - s - t) % d;
            let (vs, vt, vu) = (b1.vector(s), b2.vector(t), b3.vector(u));
            for a in 0..d {
                let pa = vs.amplitude(a) * scale;
                for b in 0..d {
                    let pab = pa * vt.amplitude(b);
                    for (c, amp) in vu.amplitudes().iter().enumerate() {
                        amps[(a * d + b) * d + c] += pab * amp;
                    }
                }
            }
        }
    }
    PureState::from_amplitudes(&[d, d, d], amps).expect("GHZ-like sum form is normalized")
}

/// The computational-basis closed forms, available for XYY and XXX.
pub fn ghz_closed_form(spec: &GhzSpec) -> Result<PureState> {
    let d = spec.d;
    let n = d.get();
    let alpha = spec.alpha.value() as i64;
    let phase = |j: i64| -> Complex64 {
        match spec.form {
            GhzForm::XXX => d.omega_pow(-j * alpha),
            _ if d.is_even() => d.omega_pow(j * (j - 2 - alpha)),
            _ => d.omega_pow(j * (j - 1 - alpha)),
        }
    };
    if !matches!(spec.form, GhzForm::XYY | GhzForm::XXX) {
        return contract(format!("no closed form for {}", spec.form));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); n * n * n];
    for j in 0..n {
        amps[(j * n + j) * n + j] = phase(j as i64) * norm;
    }
    PureState::from_amplitudes(&[n, n, n], amps)
}

/// Checks `(U (x) I (x) I) Psi_XXX = Psi_XYY` up to phase.
pub fn check_u_relation(d: Dim, alpha: ZMod) -> bool {
    let xxx = GhzSpec {
        d,
        alpha,
        form: GhzForm::XXX,
    };
    let xyy = GhzSpec {
        d,
        alpha,
        form: GhzForm::XYY,
    };
    let (Ok(xxx), Ok(xyy)) = (ghz_closed_form(&xxx), ghz_closed_form(&xyy)) else {
        return false;
    };
    match xxx.apply_local(&mub::unitary_u(d), 0) {
        Ok(rotated) => rotated.equal_up_to_phase(&xyy, EQ_TOL),
        Err(_) => false,
    }
}

/// The XYY, YXY and YYX sum forms agree pairwise up to phase.
pub fn form_equivalence(d: Dim, alpha: ZMod) -> bool {
    let states: Vec<PureState> = [GhzForm::XYY, GhzForm::YXY, GhzForm::YYX]
        .into_iter()
        .map(|form| ghz_sum_form(&GhzSpec { d, alpha, form }))
        .collect();
    states
        .iter()
        .enumerate()
        .all(|(i, a)| states[i + 1..].iter().all(|b| a.equal_up_to_phase(b, EQ_TOL)))
}

/// The eigenvalue shared by the three stabilizers on `Psi(alpha)`: `w^alpha`
/// for odd `d`, `w^(alpha+1)` for even `d` (each Y factor adds `sqrt(w)`).
pub fn stabilizer_eigenvalue(d: Dim, alpha: ZMod) -> Complex64 {
    let extra = if d.is_even() { 1 } else { 0 };
    d.omega_pow(alpha.value() as i64 + extra)
}

/// Single-qudit factors of the three stabilizers, in slot order.
pub fn stabilizer_factors(d: Dim) -> [[Operator; 3]; 3] {
    let (x, y) = (mub::pauli_x(d), mub::pauli_y(d));
    [
        [x.clone(), y.clone(), y.clone()],
        [y.clone(), x.clone(), y.clone()],
        [y.clone(), y, x],
    ]
}

/// Applies stabilizer `which` (0: XYY, 1: YXY, 2: YYX) to a three-qudit state.
pub fn apply_stabilizer(state: &PureState, which: usize) -> Result<Vec<Complex64>> {
    let d = Dim::new(state.dims()[0])?;
    let factors = &stabilizer_factors(d)[which];
    let mut out = state.clone();
    for (slot, f) in factors.iter().enumerate() {
        let raw = out.apply_local_raw(f, slot)?;
        out = PureState::normalized(state.dims(), raw)?;
    }
    Ok(out.amplitudes().to_vec())
}

/// Largest `||M psi - lambda psi||` over the three stabilizers.
pub fn stabilizer_residual(state: &PureState, lambda: Complex64) -> Result<f64> {
    let mut worst = 0.0f64;
    for which in 0..3 {
        let image = apply_stabilizer(state, which)?;
        let r = image
            .iter()
            .zip(state.amplitudes())
            .map(|(a, b)| (a - lambda * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Dense full-register stabilizer, for small-`d` cross checks.
pub fn stabilizer_operator(d: Dim, which: usize) -> Result<Operator> {
    let [a, b, c] = &stabilizer_factors(d)[which];
    a.tensor(b)?.tensor(c)
}

/// Result of a common eigenspace computation.
#[derive(Debug, Clone)]
pub struct Eigenspace {
    pub rank: usize,
    /// Orthonormal basis of the eigenspace.
    pub basis: Vec<PureState>,
    pub eigenvalue: Complex64,
    /// Largest singular value that fell below the rank threshold.
    pub largest_discarded: f64,
}

/// Precomputed projector data for one `d`, reusable across all `alpha`.
///
/// With `M_i^d = I` and eigenvalue `lambda`, the eigenprojector of `M_i` is
/// `(1/d) sum_m lambda^(-m) M_i^m`. All three stabilizers share `lambda`, so
/// the product of the projectors is
/// `d^-3 sum_r lambda^(-r) Q_r` with `Q_r` the sum of
/// `M_0^m0 M_1^m1 M_2^m2` over `m0 + m1 + m2 = r (mod d)`. Only `Q_r`
/// depends on the operators; it is stored sparsely because every term is a
/// tensor product of monomial matrices.
pub struct CommonEigenspace {
    d: Dim,
    positions: Vec<(usize, usize)>,
    /// `coeffs[p * d + r]` is entry `positions[p]` of `Q_r`.
    coeffs: Vec<Complex64>,
}

impl CommonEigenspace {
    pub fn new(d: Dim) -> Result<Self> {
        Self::with_limit(d, SOLVER_LIMIT)
    }

    pub fn with_limit(d: Dim, limit: usize) -> Result<Self> {
        let n = d.get();
        if n > limit {
            return Err(QssError::Resource(format!(
                "common eigenspace solver supports d <= {limit}, got d={n}"
            )));
        }
        let factors = stabilizer_factors(d);
        // powers[i][slot][m] = (factor of stabilizer i at slot)^m
        let powers: Vec<Vec<Vec<DMatrix<Complex64>>>> = factors
            .iter()
            .map(|ops| {
                ops.iter()
                    .map(|op| (0..n).map(|m| op.pow(m).matrix().clone()).collect())
                    .collect()
            })
            .collect();

        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut positions = Vec::new();
        let mut coeffs: Vec<Complex64> = Vec::new();
        for m0 in 0..n {
            for m1 in 0..n {
                for m2 in 0..n {
                    let r = (m0 + m1 + m2) % n;
                    let slots: Vec<Vec<(usize, usize, Complex64)>> = (0..3)
                        .map(|slot| {
                            let prod = &powers[0][slot][m0] * &powers[1][slot][m1] * &powers[2][slot][m2];
                            nonzeros(&prod)
                        })
                        .collect();
                    for &(r0, c0, v0) in &slots[0] {
                        for &(r1, c1, v1) in &slots[1] {
                            let v01 = v0 * v1;
                            for &(r2, c2, v2) in &slots[2] {
                                let key = ((r0 * n + r1) * n + r2, (c0 * n + c1) * n + c2);
                                let p = *index.entry(key).or_insert_with(|| {
                                    positions.push(key);
                                    coeffs.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), n));
                                    positions.len() - 1
                                });
                                coeffs[p * n + r] += v01 * v2;
                            }
                        }
                    }
                }
            }
        }
        Ok(CommonEigenspace { d, positions, coeffs })
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    /// Ranks the projector product at `alpha` block by block. Rows and
    /// columns that never share a nonzero entry are independent, so the
    /// rank is the sum of the ranks of the connected blocks.
    pub fn solve(&self, alpha: ZMod) -> Result<Eigenspace> {
        if alpha.dim() != self.d {
            return contract("alpha residue has the wrong modulus");
        }
        let n = self.d.get();
        let total = n * n * n;
        let lambda = stabilizer_eigenvalue(self.d, alpha);
        let inv_powers: Vec<Complex64> = (0..n).map(|r| lambda.powu(r as u32).conj()).collect();
        let scale = 1.0 / (total as f64);

        let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
        let mut uf = UnionFind::new(total);
        for (p, &(row, col)) in self.positions.iter().enumerate() {
            let v: Complex64 = self.coeffs[p * n..(p + 1) * n]
                .iter()
                .zip(&inv_powers)
                .map(|(c, l)| c * l)
                .sum::<Complex64>()
                * scale;
            if v.norm() > 1e-13 {
                entries.push((row, col, v));
                uf.union(row, col);
            }
        }

        let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(row, col, _) in &entries {
            for i in [row, col] {
                let root = uf.find(i);
                let list = members.entry(root).or_default();
                if !list.contains(&i) {
                    list.push(i);
                }
            }
        }
        let mut blocks: Vec<Vec<usize>> = members.into_values().collect();
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable();

        let mut local = vec![usize::MAX; total];
        let mut block_of = vec![usize::MAX; total];
        for (bi, b) in blocks.iter().enumerate() {
            for (li, &i) in b.iter().enumerate() {
                local[i] = li;
                block_of[i] = bi;
            }
        }
        let mut mats: Vec<DMatrix<Complex64>> = blocks.iter().map(|b| DMatrix::zeros(b.len(), b.len())).collect();
        for &(row, col, v) in &entries {
            mats[block_of[row]][(local[row], local[col])] += v;
        }

        let mut basis = Vec::new();
        let mut largest_discarded = 0.0f64;
        for (b, m) in blocks.iter().zip(mats) {
            // Singular values and left singular vectors of m, taken from the
            // Hermitian eigendecomposition of m m^H. nalgebra's complex SVD
            // misreports some small blocks.
            let gram = &m * m.adjoint();
            let eig = gram.symmetric_eigen();
            for (k, &sq) in eig.eigenvalues.iter().enumerate() {
                let sigma = sq.max(0.0).sqrt();
                if sigma > RANK_THRESHOLD {
                    let mut amps = vec![Complex64::new(0.0, 0.0); total];
                    for (li, &i) in b.iter().enumerate() {
                        amps[i] = eig.eigenvectors[(li, k)];
                    }
                    basis.push(PureState::normalized(&[n, n, n], amps)?);
                } else {
                    largest_discarded = largest_discarded.max(sigma);
                }
            }
        }
        Ok(Eigenspace {
            rank: basis.len(),
            basis,
            eigenvalue: lambda,
            largest_discarded,
        })
    }
}

/// One-shot form of [`CommonEigenspace::solve`] with the default limit.
pub fn common_eigenspace(d: Dim, alpha: ZMod) -> Result<Eigenspace> {
    CommonEigenspace::new(d)?.solve(alpha)
}

fn nonzeros(m: &DMatrix<Complex64>) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let v = m[(row, col)];
            if v.norm() > 1e-14 {
                out.push((row, col, v));
            }
        }
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::c;

    fn dim(d: usize) -> Dim {
        Dim::new(d).unwrap()
    }

    fn ghz_from(n: usize, phases: &[Complex64]) -> PureState {
        let mut amps = vec![c(0.0, 0.0); n * n * n];
        for (j, p) in phases.iter().enumerate() {
            amps[(j * n + j) * n + j] = *p / (n as f64).sqrt();
        }
        PureState::from_amplitudes(&[n, n, n], amps).unwrap()
    }

    #[test]
    fn qubit_sum_forms() {
        let d = dim(2);
        let plain = ghz_from(2, &[c(1.0, 0.0), c(1.0, 0.0)]);
        let xyy1 = ghz_sum_form(&GhzSpec::xyy(d, 1));
        assert!(xyy1.equal_up_to_phase(&plain, 1e-9));
        let xxx0 = ghz_sum_form(&GhzSpec::new(d, d.residue(0), GhzForm::XXX).unwrap());
        assert!(xxx0.distance(&plain) < 1e-9);
    }

    #[test]
    fn qutrit_sum_form_alpha_zero() {
        let d = dim(3);
        let w = d.omega();
        let expected = ghz_from(3, &[c(1.0, 0.0), c(1.0, 0.0), w * w]);
        assert!(ghz_sum_form(&GhzSpec::xyy(d, 0)).equal_up_to_phase(&expected, 1e-9));
    }

    #[test]
    fn closed_forms() {
        let d2 = dim(2);
        let minus = ghz_from(2, &[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(ghz_closed_form(&GhzSpec::xyy(d2, 0)).unwrap().distance(&minus) < 1e-12);

        let d3 = dim(3);
        let w = d3.omega();
        let spec = GhzSpec::new(d3, d3.residue(1), GhzForm::XXX).unwrap();
        let expected = ghz_from(3, &[c(1.0, 0.0), w.inv(), w.inv() * w.inv()]);
        assert!(ghz_closed_form(&spec).unwrap().distance(&expected) < 1e-12);

        for n in 2..8 {
            let d = dim(n);
            let spec = GhzSpec::new(d, d.residue(0), GhzForm::XXX).unwrap();
            let uniform = ghz_from(n, &vec![c(1.0, 0.0); n]);
            assert!(ghz_closed_form(&spec).unwrap().distance(&uniform) < 1e-12);
        }
    }

    #[test]
    fn closed_form_rejects_other_forms() {
        let d = dim(3);
        let spec = GhzSpec::new(d, d.residue(0), GhzForm::YXY).unwrap();
        assert!(matches!(ghz_closed_form(&spec), Err(QssError::Contract(_))));
    }

    #[test]
    fn ghz_spec_rejects_mismatched_alpha() {
        assert!(GhzSpec::new(dim(3), dim(4).residue(1), GhzForm::XYY).is_err());
    }

    #[test]
    fn sum_equals_closed_for_all_dims() {
        for n in 2..=16 {
            let d = dim(n);
            for alpha in d.residues() {
                let spec = GhzSpec::new(d, alpha, GhzForm::XYY).unwrap();
                let a = ghz_sum_form(&spec);
                let b = ghz_closed_form(&spec).unwrap();
                assert!(a.equal_up_to_phase(&b, 1e-9), "d={n} alpha={alpha}");
            }
        }
    }

    #[test]
    fn u_relation_and_form_equivalence() {
        assert!(check_u_relation(dim(2), dim(2).residue(0)));
        assert!(check_u_relation(dim(3), dim(3).residue(0)));
        assert!(form_equivalence(dim(2), dim(2).residue(0)));
        assert!(form_equivalence(dim(3), dim(3).residue(2)));
        assert!(form_equivalence(dim(4), dim(4).residue(1)));
    }

    #[test]
    fn stabilizers_fix_the_state() {
        for n in 2..=9 {
            let d = dim(n);
            for alpha in d.residues() {
                let psi = ghz_closed_form(&GhzSpec::new(d, alpha, GhzForm::XYY).unwrap()).unwrap();
                let r = stabilizer_residual(&psi, stabilizer_eigenvalue(d, alpha)).unwrap();
                assert!(r < 1e-7, "d={n} alpha={alpha} residual={r}");
            }
        }
    }

    #[test]
    fn local_and_dense_stabilizers_agree() {
        let d = dim(3);
        let psi = ghz_sum_form(&GhzSpec::xyy(d, 1));
        for which in 0..3 {
            let dense = stabilizer_operator(d, which).unwrap();
            let via_dense = psi.apply(&dense).unwrap();
            let local = apply_stabilizer(&psi, which).unwrap();
            for (a, b) in via_dense.amplitudes().iter().zip(&local) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn stabilizers_commute() {
        for n in [2, 3, 4] {
            let d = dim(n);
            let ops: Vec<Operator> = (0..3).map(|i| stabilizer_operator(d, i).unwrap()).collect();
            for a in &ops {
                for b in &ops {
                    let ab = a.compose(b).unwrap();
                    let ba = b.compose(a).unwrap();
                    assert!(ab.max_abs_diff(&ba) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eigenspace_examples() {
        let d3 = dim(3);
        let es = common_eigenspace(d3, d3.residue(0)).unwrap();
        assert_eq!(es.rank, 1);
        let target = ghz_closed_form(&GhzSpec::xyy(d3, 0)).unwrap();
        assert!(es.basis[0].equal_up_to_phase(&target, 1e-9));

        let d2 = dim(2);
        for alpha in d2.residues() {
            assert_eq!(common_eigenspace(d2, alpha).unwrap().rank, 1);
        }

        let d5 = dim(5);
        let es = common_eigenspace(d5, d5.residue(3)).unwrap();
        assert_eq!(es.rank, 1);
        let target = ghz_closed_form(&GhzSpec::xyy(d5, 3)).unwrap();
        assert!(es.basis[0].equal_up_to_phase(&target, 1e-9));
    }

    #[test]
    fn every_generator_is_the_ghz_state() {
        for n in 2..=8 {
            let d = dim(n);
            let solver = CommonEigenspace::new(d).unwrap();
            for alpha in d.residues() {
                let es = solver.solve(alpha).unwrap();
                assert_eq!(es.rank, 1, "d={n} alpha={alpha}");
                let target = ghz_closed_form(&GhzSpec::xyy(d, alpha.value())).unwrap();
                assert!(es.basis[0].equal_up_to_phase(&target, 1e-9), "d={n} alpha={alpha}");
                assert!(stabilizer_residual(&es.basis[0], es.eigenvalue).unwrap() < 1e-9);
            }
        }
    }

    /// Dense oracle: multiply the three explicit projectors and compute the
    /// trace, which equals the rank of a product of commuting projectors.
    #[test]
    fn eigenspace_matches_dense_projector_trace() {
        for n in [2, 3, 4] {
            let d = dim(n);
            for alpha in d.residues() {
                let lambda = stabilizer_eigenvalue(d, alpha);
                let total = n * n * n;
                let mut prod = Operator::identity(&[n, n, n]);
                for which in 0..3 {
                    let m = stabilizer_operator(d, which).unwrap();
                    let mut proj = DMatrix::<Complex64>::zeros(total, total);
                    for k in 0..n {
                        proj += m.pow(k).matrix() * lambda.powu(k as u32).inv();
                    }
                    let proj = Operator::from_matrix(&[n, n, n], proj / Complex64::new(n as f64, 0.0)).unwrap();
                    prod = prod.compose(&proj).unwrap();
                }
                let trace = prod.matrix().trace();
                let es = common_eigenspace(d, alpha).unwrap();
                assert!((trace - c(es.rank as f64, 0.0)).norm() < 1e-9, "d={n}");
            }
        }
    }

    #[test]
    fn wrong_eigenvalue_gives_empty_space() {
        // For odd d, w^(alpha+1) belongs to Psi(alpha+1) only, so asking the
        // solver at alpha = 0 must not return Psi(1).
        let d = dim(3);
        let es = common_eigenspace(d, d.residue(0)).unwrap();
        let other = ghz_closed_form(&GhzSpec::xyy(d, 1)).unwrap();
        assert!(!es.basis[0].equal_up_to_phase(&other, 1e-3));
    }

    #[test]
    fn solver_limit_enforced() {
        assert!(matches!(
            CommonEigenspace::with_limit(dim(5), 4),
            Err(QssError::Resource(_))
        ));
        assert!(matches!(
            common_eigenspace(dim(17), dim(17).residue(0)),
            Err(QssError::Resource(_))
        ));
    }
}
