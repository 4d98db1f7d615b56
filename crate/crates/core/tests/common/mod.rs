//! Reference linear algebra written from the defining formulas, without
//! going through the library's basis or state constructors.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64 as C;

pub const X: usize = 0;
pub const Y: usize = 1;

pub fn phase(d: usize, half_turns: i64) -> C {
    let e = half_turns.rem_euclid(2 * d as i64) as f64;
    C::from_polar(1.0, PI * e / d as f64)
}

pub fn x_vec(d: usize, k: usize) -> Vec<C> {
    let n = 1.0 / (d as f64).sqrt();
    (0..d as i64).map(|j| phase(d, -2 * k as i64 * j) * n).collect()
}

pub fn y_vec(d: usize, k: usize) -> Vec<C> {
    let n = 1.0 / (d as f64).sqrt();
    let lin = if d.is_multiple_of(2) { 2 } else { 1 };
    (0..d as i64)
        .map(|j| phase(d, j * j - 2 * k as i64 * j - lin * j) * n)
        .collect()
}

/// `U |k_x>` with `U = diag(w^(j(j-1)))` for odd `d`, `diag(w^(j(j-2)))` for even.
pub fn ux_vec(d: usize, k: usize) -> Vec<C> {
    let shift = if d.is_multiple_of(2) { 2 } else { 1 };
    x_vec(d, k)
        .into_iter()
        .enumerate()
        .map(|(j, a)| a * phase(d, 2 * (j as i64) * (j as i64 - shift)))
        .collect()
}

pub fn dir_basis(d: usize, dir: usize) -> Vec<Vec<C>> {
    (0..d)
        .map(|k| if dir == X { x_vec(d, k) } else { y_vec(d, k) })
        .collect()
}

/// Alice's measurement basis for the receivers' directions.
pub fn alice_basis(d: usize, bob: usize, charlie: usize) -> Vec<Vec<C>> {
    (0..d)
        .map(|k| match (bob, charlie) {
            (Y, Y) => x_vec(d, k),
            (X, X) => ux_vec(d, k),
            _ => y_vec(d, k),
        })
        .collect()
}

pub fn kron(a: &[C], b: &[C]) -> Vec<C> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// `(1/d) sum_{t,u} |alpha-t-u>_x |t>_y |u>_y`.
pub fn ghz(d: usize, alpha: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); d * d * d];
    for t in 0..d {
        for u in 0..d {
            let s = (alpha + 2 * d - t - u) % d;
            let term = kron(&kron(&x_vec(d, s), &y_vec(d, t)), &y_vec(d, u));
            for (o, v) in out.iter_mut().zip(term) {
                *o += v / d as f64;
            }
        }
    }
    out
}

pub fn bell(d: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); d * d];
    for j in 0..d {
        out[j * d + j] = C::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    out
}

/// Replaces qudit `slot` of an `m`-qudit vector by `|v><v|` applied to it.
pub fn project(state: &[C], d: usize, m: usize, slot: usize, v: &[C]) -> Vec<C> {
    let low = d.pow((m - slot - 1) as u32);
    let mut out = vec![C::new(0.0, 0.0); state.len()];
    for (i, _) in state.iter().enumerate() {
        let j = (i / low) % d;
        let base = i - j * low;
        let overlap: C = (0..d).map(|jj| v[jj].conj() * state[base + jj * low]).sum();
        out[i] = v[j] * overlap;
    }
    out
}

/// Joint outcome distribution for one basis per qudit; index is row-major
/// over the outcomes.
pub fn joint(state: &[C], d: usize, bases: &[Vec<Vec<C>>]) -> Vec<f64> {
    let m = bases.len();
    let cells = d.pow(m as u32);
    (0..cells)
        .map(|cell| {
            let mut amp = C::new(0.0, 0.0);
            for (i, psi) in state.iter().enumerate() {
                let mut coef = C::new(1.0, 0.0);
                for (slot, basis) in bases.iter().enumerate() {
                    let shift = d.pow((m - slot - 1) as u32);
                    let k = (cell / shift) % d;
                    let j = (i / shift) % d;
                    coef *= basis[k][j].conj();
                }
                amp += coef * psi;
            }
            amp.norm_sqr()
        })
        .collect()
}

pub fn digits(cell: usize, d: usize, m: usize) -> Vec<usize> {
    (0..m).map(|slot| (cell / d.pow((m - slot - 1) as u32)) % d).collect()
}

pub fn norm_sqr(v: &[C]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}
