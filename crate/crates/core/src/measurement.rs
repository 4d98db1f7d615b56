//! Projective measurement with collapse, Alice's basis rule and the outcome
//! correlation.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, QssError, Result};
use crate::math::{strides, Dim, PureState, Sampler, ZMod, EQ_TOL};
use crate::mub::{self, BasisLabel, Direction, MeasBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One party's recorded outcome: an index into the named basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasOutcome {
    pub value: usize,
    pub basis_label: BasisLabel,
    pub party: Party,
}

impl MeasOutcome {
    pub fn residue(&self, d: Dim) -> ZMod {
        d.residue(self.value as i64)
    }
}

/// Born probabilities of each basis outcome on subsystem `slot`.
pub fn outcome_probabilities(state: &PureState, slot: usize, basis: &MeasBasis) -> Result<Vec<f64>> {
    Ok(project_all(state, slot, basis)?.into_iter().map(|(p, _)| p).collect())
}

/// For each outcome `k`, the probability and the unnormalized reduced
/// vector `(<v_k| at slot) psi` over the remaining subsystems.
fn project_all(state: &PureState, slot: usize, basis: &MeasBasis) -> Result<Vec<(f64, Vec<Complex64>)>> {
    if slot >= state.num_subsystems() {
        return contract(format!(
            "slot {slot} out of range for {} subsystems",
            state.num_subsystems()
        ));
    }
    let (high, d, low) = strides(state.dims(), slot);
    if basis.dim().get() != d {
        return contract(format!(
            "basis dimension {} does not match slot dimension {d}",
            basis.dim()
        ));
    }
    let amps = state.amplitudes();
    let mut out = Vec::with_capacity(d);
    for v in basis.vectors() {
        let bra: Vec<Complex64> = v.amplitudes().iter().map(|a| a.conj()).collect();
        let mut reduced = vec![Complex64::new(0.0, 0.0); high * low];
        for h in 0..high {
            for (j, &b) in bra.iter().enumerate() {
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let base = (h * d + j) * low;
                for l in 0..low {
                    reduced[h * low + l] += b * amps[base + l];
                }
            }
        }
        let p = reduced.iter().map(|a| a.norm_sqr()).sum();
        out.push((p, reduced));
    }
    Ok(out)
}

/// Measures subsystem `slot` in `basis`. Returns the outcome index, its
/// probability and the collapsed, renormalized state.
pub fn measure_subsystem(
    state: &PureState,
    slot: usize,
    basis: &MeasBasis,
    sampler: &mut Sampler,
) -> Result<(usize, f64, PureState)> {
    let branches = project_all(state, slot, basis)?;
    let probs: Vec<f64> = branches.iter().map(|(p, _)| *p).collect();
    let total: f64 = probs.iter().sum();
    if probs.iter().all(|&p| p < 1e-12) {
        return Err(QssError::Numerical("every projection norm vanished".into()));
    }
    if (total - 1.0).abs() > EQ_TOL {
        return Err(QssError::Numerical(format!("outcome probabilities sum to {total}")));
    }
    let k = sampler.categorical(&probs);
    let (p, reduced) = &branches[k];
    let (high, d, low) = strides(state.dims(), slot);
    let v = basis.vector(k).amplitudes();
    let scale = 1.0 / p.sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); state.total_dim()];
    for h in 0..high {
        for (j, vj) in v.iter().enumerate() {
            let base = (h * d + j) * low;
            for l in 0..low {
                amps[base + l] = vj * reduced[h * low + l] * scale;
            }
        }
    }
    Ok((k, *p, PureState::normalized(state.dims(), amps)?))
}

/// Alice's basis label as a function of the receivers' announced directions.
pub fn alice_basis_label(bob: Direction, charlie: Direction) -> BasisLabel {
    match (bob, charlie) {
        (Direction::Y, Direction::Y) => BasisLabel::X,
        (Direction::Y, Direction::X) | (Direction::X, Direction::Y) => BasisLabel::Y,
        (Direction::X, Direction::X) => BasisLabel::UXUdag,
    }
}

pub fn alice_basis_for(bob: Direction, charlie: Direction, d: Dim) -> Arc<MeasBasis> {
    mub::basis(d, alice_basis_label(bob, charlie))
}

/// `s + t + u = alpha (mod d)`.
pub fn correlation_holds(s: ZMod, t: ZMod, u: ZMod, alpha: ZMod) -> bool {
    s + t + u == alpha
}

/// Exact Born probabilities over `(s, t, u)` for a three-qudit state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    d: usize,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn get(&self, s: usize, t: usize, u: usize) -> f64 {
        self.probs[(s * self.d + t) * self.d + u]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability that the outcomes satisfy the correlation for `alpha`.
    pub fn correlation_mass(&self, alpha: usize) -> f64 {
        let d = self.d;
        let mut mass = 0.0;
        for s in 0..d {
            for t in 0..d {
                mass += self.get(s, t, (alpha + 2 * d - s - t) % d);
            }
        }
        mass
    }
}

/// Computes `|<v_s (x) v_t (x) v_u | psi>|^2` for every outcome triple.
pub fn joint_distribution(state: &PureState, bases: [&MeasBasis; 3]) -> Result<JointTable> {
    if state.num_subsystems() != 3 {
        return contract("joint distribution needs a three-qudit state");
    }
    let mut current = state.amplitudes().to_vec();
    let dims = state.dims().to_vec();
    for (slot, b) in bases.iter().enumerate() {
        if b.dim().get() != dims[slot] {
            return contract(format!("basis for slot {slot} has the wrong dimension"));
        }
        let raw = PureState::from_amplitudes(&dims, current)?;
        current = raw.apply_local_raw(&b.analysis_operator(), slot)?;
    }
    let probs: Vec<f64> = current.iter().map(|a| a.norm_sqr()).collect();
    Ok(JointTable { d: dims[0], probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghz::{ghz_sum_form, GhzSpec};
    use crate::math::rng_stream;
    use crate::mub::{uxu_basis, x_basis, y_basis};

    fn dim(d: usize) -> Dim {
        Dim::new(d).unwrap()
    }

    #[test]
    fn basis_state_measures_deterministically() {
        let d = dim(2);
        let state = PureState::basis(&[2, 2, 2], 0).unwrap();
        let comp = computational(d);
        let mut s = rng_stream(1, "m");
        let (k, p, after) = measure_subsystem(&state, 1, &comp, &mut s).unwrap();
        assert_eq!(k, 0);
        assert!((p - 1.0).abs() < 1e-12);
        assert!(after.distance(&state) < 1e-12);
    }

    fn computational(d: Dim) -> MeasBasis {
        let n = d.get();
        let vectors: Vec<PureState> = (0..n).map(|k| PureState::basis(&[n], k).unwrap()).collect();
        crate::mub::tests_support::basis_from_vectors(vectors, BasisLabel::X, d)
    }

    #[test]
    fn alice_marginal_is_uniform() {
        for n in [2, 3, 5] {
            let d = dim(n);
            let psi = ghz_sum_form(&GhzSpec::xyy(d, 1));
            let probs = outcome_probabilities(&psi, 0, &x_basis(d)).unwrap();
            for p in probs {
                assert!((p - 1.0 / n as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn collapse_fixes_alice_outcome() {
        let d = dim(5);
        let alpha = 3;
        let psi = ghz_sum_form(&GhzSpec::xyy(d, alpha));
        let mut s = rng_stream(4, "collapse");
        for _ in 0..50 {
            let (t, _, after_b) = measure_subsystem(&psi, 1, &y_basis(d), &mut s).unwrap();
            let (u, _, after_c) = measure_subsystem(&after_b, 2, &y_basis(d), &mut s).unwrap();
            let probs = outcome_probabilities(&after_c, 0, &x_basis(d)).unwrap();
            let expected = (alpha + 10 - t - u) % 5;
            assert!((probs[expected] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn repeated_measurement_is_stable() {
        let d = dim(4);
        let psi = ghz_sum_form(&GhzSpec::xyy(d, 2));
        let mut s = rng_stream(9, "repeat");
        for _ in 0..20 {
            let (k, _, after) = measure_subsystem(&psi, 2, &y_basis(d), &mut s).unwrap();
            let (k2, p2, _) = measure_subsystem(&after, 2, &y_basis(d), &mut s).unwrap();
            assert_eq!(k, k2);
            assert!((p2 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn table_rule() {
        use Direction::{X, Y};
        assert_eq!(alice_basis_label(Y, Y), BasisLabel::X);
        assert_eq!(alice_basis_label(X, X), BasisLabel::UXUdag);
        assert_eq!(alice_basis_label(Y, X), BasisLabel::Y);
        assert_eq!(alice_basis_label(X, Y), BasisLabel::Y);
        assert_eq!(alice_basis_for(X, X, dim(3)).label(), BasisLabel::UXUdag);
    }

    #[test]
    fn correlation_predicate() {
        let d5 = dim(5);
        let r = |v| d5.residue(v);
        assert!(correlation_holds(r(1), r(2), r(2), r(0)));
        let d2 = dim(2);
        let q = |v| d2.residue(v);
        assert!(!correlation_holds(q(0), q(1), q(1), q(1)));
    }

    #[test]
    fn joint_support_for_every_table_row() {
        for n in 2..=8 {
            let d = dim(n);
            for alpha in 0..n {
                let psi = ghz_sum_form(&GhzSpec::xyy(d, alpha));
                for bob in Direction::ALL {
                    for charlie in Direction::ALL {
                        let a = alice_basis_for(bob, charlie, d);
                        let (b, c) = (mub::basis_for(d, bob), mub::basis_for(d, charlie));
                        let table = joint_distribution(&psi, [&a, &b, &c]).unwrap();
                        assert!((table.total() - 1.0).abs() < 1e-9);
                        for s in 0..n {
                            for t in 0..n {
                                for u in 0..n {
                                    let expected = if (s + t + u) % n == alpha {
                                        1.0 / (n * n) as f64
                                    } else {
                                        0.0
                                    };
                                    assert!((table.get(s, t, u) - expected).abs() < 1e-9);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mismatched_bases_are_uniform_for_qubits() {
        let d = dim(2);
        let psi = ghz_sum_form(&GhzSpec::xyy(d, 0));
        let table = joint_distribution(&psi, [&x_basis(d), &x_basis(d), &y_basis(d)]).unwrap();
        for p in table.probs() {
            assert!((p - 0.125).abs() < 1e-9);
        }
    }

    #[test]
    fn uxu_row_via_u_relation() {
        let d = dim(3);
        let psi = ghz_sum_form(&GhzSpec::xyy(d, 1));
        let table = joint_distribution(&psi, [&uxu_basis(d), &x_basis(d), &x_basis(d)]).unwrap();
        assert!((table.correlation_mass(1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn measurement_order_does_not_change_the_distribution() {
        // Sampling Bob, Charlie, Alice in either order gives the same exact
        // joint probabilities: compare the chain rule in two orders.
        let d = dim(3);
        let psi = ghz_sum_form(&GhzSpec::xyy(d, 2));
        let bases = [x_basis(d), y_basis(d), x_basis(d)];
        let table = joint_distribution(&psi, [&bases[0], &bases[1], &bases[2]]).unwrap();
        for order in [[1usize, 2, 0], [0, 2, 1], [2, 0, 1]] {
            let mut chain = vec![0.0; 27];
            for (idx, slot) in chain.iter_mut().enumerate() {
                let outcome = [idx / 9, (idx / 3) % 3, idx % 3];
                let mut state = psi.clone();
                let mut p = 1.0;
                for &slot_i in &order {
                    let branches = project_all(&state, slot_i, &bases[slot_i]).unwrap();
                    let (pk, _) = &branches[outcome[slot_i]];
                    p *= pk;
                    if *pk < 1e-15 {
                        break;
                    }
                    let v = bases[slot_i].vector(outcome[slot_i]);
                    let proj = crate::mub::tests_support::projector(v);
                    let raw = state.apply_local_raw(&proj, slot_i).unwrap();
                    state = PureState::normalized(state.dims(), raw).unwrap();
                }
                *slot = p;
            }
            for (a, b) in chain.iter().zip(table.probs()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn errors() {
        let d = dim(3);
        let psi = ghz_sum_form(&GhzSpec::xyy(d, 0));
        let mut s = rng_stream(0, "err");
        assert!(measure_subsystem(&psi, 3, &x_basis(d), &mut s).is_err());
        assert!(measure_subsystem(&psi, 0, &x_basis(dim(2)), &mut s).is_err());
    }
}
