//! Jacobian of the collision terms that involve the boson ground level.
//!
//! Each of these terms carries a factor `b₀` or `1 + b₀`, so once a
//! condensate forms they set the fastest time scales of the system. Their
//! derivative is the `W` matrix of the linearly implicit integrator. The
//! terms form a subset of the collision sums that is closed under the
//! collision symmetries, so `W` has the same conservation laws as the full
//! right-hand side.
//!
//! Layout of the unknowns: bosons `0..m_b`, then fermions `m_b..m_b+m_f`.
//! All terms have kernel weight `g(0) = 1`.

use faer::MatMut;

use crate::trap::level_degeneracy as g;

/// Sum of the ground-level terms per state, the function whose derivative
/// [`condensate_jacobian`] returns.
pub fn condensate_rhs(b: &[f64], f: &[f64], alpha_b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut db = vec![0.0; b.len()];
    let mut df = vec![0.0; f.len()];
    visit(b, f, alpha_b, |row, value, _| match row {
        Row::Boson(i) => db[i] += value,
        Row::Fermion(i) => df[i] += value,
    });
    for (e, x) in db.iter_mut().enumerate() {
        *x /= g(e);
    }
    for (e, x) in df.iter_mut().enumerate() {
        *x /= g(e);
    }
    (db, df)
}

/// Adds the derivative of [`condensate_rhs`] into `w`.
pub fn condensate_jacobian(b: &[f64], f: &[f64], alpha_b: f64, mut w: MatMut<'_, f64>) {
    let m_b = b.len();
    visit(b, f, alpha_b, |row, _, partials| {
        let (r, e) = match row {
            Row::Boson(i) => (i, i),
            Row::Fermion(i) => (m_b + i, i),
        };
        let inv = 1.0 / g(e);
        for (var, d) in partials {
            let c = match var {
                Row::Boson(x) => x,
                Row::Fermion(x) => m_b + x,
            };
            w[(r, c)] += d * inv;
        }
    });
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Row {
    Boson(usize),
    Fermion(usize),
}

/// Calls `sink(row, term, partials)` for every ground-level term of every
/// row, with the term's derivative by each of its four occupations.
fn visit(b: &[f64], f: &[f64], alpha: f64, mut sink: impl FnMut(Row, f64, [(Row, f64); 4])) {
    use Row::{Boson as B, Fermion as F};
    let (m_b, m_f) = (b.len(), f.len());
    if m_b == 0 {
        return;
    }

    // Boson row i, boson partners j, k, l with i + j = k + l.
    let mut bb = |i: usize, j: usize, k: usize, l: usize| {
        let (bi, bj, bk, bl) = (b[i], b[j], b[k], b[l]);
        let gain = bk * bl * (1.0 + bi) * (1.0 + bj);
        let loss = bi * bj * (1.0 + bk) * (1.0 + bl);
        let partials = [
            (B(i), alpha * (bk * bl * (1.0 + bj) - bj * (1.0 + bk) * (1.0 + bl))),
            (B(j), alpha * (bk * bl * (1.0 + bi) - bi * (1.0 + bk) * (1.0 + bl))),
            (B(k), alpha * (bl * (1.0 + bi) * (1.0 + bj) - bi * bj * (1.0 + bl))),
            (B(l), alpha * (bk * (1.0 + bi) * (1.0 + bj) - bi * bj * (1.0 + bk))),
        ];
        sink(B(i), alpha * (gain - loss), partials);
    };
    // Row 0: every j, k with l = j - k.
    for j in 0..m_b {
        for k in 0..=j {
            bb(0, j, k, j - k);
        }
    }
    for i in 1..m_b {
        // j = 0.
        for k in 0..=i {
            bb(i, 0, k, i - k);
        }
        // j > 0, k = 0.
        for j in 1..m_b.saturating_sub(i) {
            bb(i, j, 0, i + j);
        }
        // j > 0, k > 0, l = 0.
        for j in 1..m_b.saturating_sub(i) {
            bb(i, j, i + j, 0);
        }
    }

    // Boson row i with fermion j: boson i + fermion j <-> boson k + fermion l.
    let mut bf = |i: usize, j: usize, k: usize, l: usize| {
        let (bi, fj, bk, fl) = (b[i], f[j], b[k], f[l]);
        let gain = bk * fl * (1.0 + bi) * (1.0 - fj);
        let loss = bi * fj * (1.0 + bk) * (1.0 - fl);
        let partials = [
            (B(i), bk * fl * (1.0 - fj) - fj * (1.0 + bk) * (1.0 - fl)),
            (F(j), -bk * fl * (1.0 + bi) - bi * (1.0 + bk) * (1.0 - fl)),
            (B(k), fl * (1.0 + bi) * (1.0 - fj) - bi * fj * (1.0 - fl)),
            (F(l), bk * (1.0 + bi) * (1.0 - fj) + bi * fj * (1.0 + bk)),
        ];
        sink(B(i), gain - loss, partials);
    };
    // i = 0: l = j - k.
    for j in 0..m_f {
        for k in 0..=j.min(m_b - 1) {
            bf(0, j, k, j - k);
        }
    }
    // i > 0, k = 0: l = i + j.
    for i in 1..m_b {
        for j in 0..m_f.saturating_sub(i) {
            bf(i, j, 0, i + j);
        }
    }

    // Fermion row i with boson j: fermion i + boson j <-> fermion k + boson l.
    let mut fb = |i: usize, j: usize, k: usize, l: usize| {
        let (fi, bj, fk, bl) = (f[i], b[j], f[k], b[l]);
        let gain = bl * fk * (1.0 - fi) * (1.0 + bj);
        let loss = fi * bj * (1.0 - fk) * (1.0 + bl);
        let partials = [
            (F(i), -bl * fk * (1.0 + bj) - bj * (1.0 - fk) * (1.0 + bl)),
            (B(j), bl * fk * (1.0 - fi) - fi * (1.0 - fk) * (1.0 + bl)),
            (F(k), bl * (1.0 - fi) * (1.0 + bj) + fi * bj * (1.0 + bl)),
            (B(l), fk * (1.0 - fi) * (1.0 + bj) - fi * bj * (1.0 - fk)),
        ];
        sink(F(i), gain - loss, partials);
    };
    for i in 0..m_f {
        // j = 0: fermion k, boson l = i - k.
        for k in i.saturating_sub(m_b - 1)..=i {
            fb(i, 0, k, i - k);
        }
        // j > 0, l = 0: fermion k = i + j.
        for j in 1..m_b.min(m_f.saturating_sub(i)) {
            fb(i, j, i + j, 0);
        }
    }
}
