//! Exact rational matrices: fraction-free Bareiss determinant, solve, rank,
//! adjugate rows, and the edge-length matrix of a gluing datum.
//!
//! Signs are meaningful only relative to the row/column labellings, which are
//! always explicit.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::datum::{GluingDatum, Labelling, Quotient};
use crate::error::{Error, Result};
use crate::util::Q;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub entries: Vec<Vec<Q>>,
}

impl QMatrix {
    pub fn zero(row_labels: Vec<String>, col_labels: Vec<String>) -> QMatrix {
        let entries = vec![vec![Q::zero(); col_labels.len()]; row_labels.len()];
        QMatrix { row_labels, col_labels, entries }
    }

    pub fn identity(n: usize) -> QMatrix {
        let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let mut m = QMatrix::zero(labels.clone(), labels);
        for i in 0..n {
            m.entries[i][i] = Q::one();
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.entries.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows() == self.n_cols()
    }

    /// Integer matrix after clearing denominators row by row, with the product
    /// of the scaling factors (det(self) = det(int)/scale).
    fn cleared(&self) -> (Vec<Vec<BigInt>>, Q) {
        let mut scale = Q::one();
        let mut rows = Vec::with_capacity(self.n_rows());
        for row in &self.entries {
            let mut lcm = BigInt::one();
            for x in row {
                lcm = num_integer::lcm(lcm, x.denom().clone());
            }
            scale *= Q::from(lcm.clone());
            rows.push(row.iter().map(|x| (x * Q::from(lcm.clone())).to_integer()).collect());
        }
        (rows, scale)
    }

    /// Exact determinant by fraction-free Bareiss elimination.
    pub fn determinant(&self) -> Result<Q> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.n_rows(), self.n_cols()));
        }
        let n = self.n_rows();
        if n == 0 {
            return Ok(Q::one());
        }
        let (mut m, scale) = self.cleared();
        let mut sign = 1i32;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                    Some(i) => {
                        m.swap(k, i);
                        sign = -sign;
                    }
                    None => return Ok(Q::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = num / &prev; // exact division (Bareiss)
                }
                m[i][k] = BigInt::zero();
            }
            prev = m[k][k].clone();
        }
        let det_int = m[n - 1][n - 1].clone() * BigInt::from(sign);
        Ok(Q::from(det_int) / scale)
    }

    /// Rank by fraction-free elimination with column pivoting.
    pub fn rank(&self) -> usize {
        let (mut m, _) = self.cleared();
        let rows = self.n_rows();
        let cols = self.n_cols();
        let mut rank = 0;
        let mut prev = BigInt::one();
        let mut col = 0;
        while rank < rows && col < cols {
            if m[rank][col].is_zero() {
                if let Some(i) = (rank + 1..rows).find(|&i| !m[i][col].is_zero()) {
                    m.swap(rank, i);
                } else {
                    col += 1;
                    continue;
                }
            }
            for i in rank + 1..rows {
                for j in col + 1..cols {
                    let num = &m[i][j] * &m[rank][col] - &m[i][col] * &m[rank][j];
                    m[i][j] = num / &prev;
                }
                m[i][col] = BigInt::zero();
            }
            prev = m[rank][col].clone();
            rank += 1;
            col += 1;
        }
        rank
    }

    /// Exact solution of `self * x = y` for nonsingular square `self`.
    pub fn solve(&self, y: &[Q]) -> Result<Vec<Q>> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.n_rows(), self.n_cols()));
        }
        let n = self.n_rows();
        assert_eq!(y.len(), n, "rhs length must match");
        // Gauss-Jordan over Q on the augmented matrix; sizes here are tiny and
        // Bareiss keeps the determinant path exact where signs matter.
        let mut a: Vec<Vec<Q>> = self.entries.clone();
        let mut b: Vec<Q> = y.to_vec();
        for k in 0..n {
            let pivot = (k..n).find(|&i| !a[i][k].is_zero()).ok_or(Error::Singular)?;
            a.swap(k, pivot);
            b.swap(k, pivot);
            let p = a[k][k].clone();
            for j in k..n {
                a[k][j] = &a[k][j] / &p;
            }
            b[k] = &b[k] / &p;
            for i in 0..n {
                if i != k && !a[i][k].is_zero() {
                    let f = a[i][k].clone();
                    for j in k..n {
                        let sub = &f * &a[k][j];
                        a[i][j] = &a[i][j] - sub;
                    }
                    let sub = &f * &b[k];
                    b[i] = &b[i] - sub;
                }
            }
        }
        Ok(b)
    }

    pub fn mul_vec(&self, x: &[Q]) -> Vec<Q> {
        assert_eq!(x.len(), self.n_cols());
        self.entries
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> QMatrix {
        let entries: Vec<Vec<Q>> = self
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip_row)
            .map(|(_, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != skip_col)
                    .map(|(_, x)| x.clone())
                    .collect()
            })
            .collect();
        QMatrix {
            row_labels: (0..self.n_rows() - 1).map(|i| i.to_string()).collect(),
            col_labels: (0..self.n_cols() - 1).map(|i| i.to_string()).collect(),
            entries,
        }
    }

    /// Row `k` (0-based) of the adjugate matrix: x_i = (-1)^{i+k} det(minor_{i,k}).
    pub fn adjugate_row(&self, k: usize) -> Result<Vec<Q>> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.n_rows(), self.n_cols()));
        }
        let n = self.n_rows();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let c = self.minor(i, k).determinant()?;
            out.push(if (i + k) % 2 == 0 { c } else { -c });
        }
        Ok(out)
    }

    pub fn adjugate_first_row(&self) -> Result<Vec<Q>> {
        self.adjugate_row(0)
    }
}

/// Edge-length matrix of a quotient: `a[h][t] = sum over edges e of h above t
/// of 1/|e|`, rows/columns ordered by the labelling.
pub fn edge_length_matrix_of(qt: &Quotient, lab: &Labelling) -> Result<QMatrix> {
    let mut h_order: Vec<(usize, String)> =
        lab.skel.iter().map(|(id, &l)| (l, id.clone())).collect();
    h_order.sort();
    let mut t_order: Vec<(usize, String)> =
        lab.tree.iter().map(|(id, &l)| (l, id.clone())).collect();
    t_order.sort();
    let row_labels: Vec<String> = h_order.iter().map(|(_, id)| id.clone()).collect();
    let col_labels: Vec<String> = t_order.iter().map(|(_, id)| id.clone()).collect();
    let row_of: std::collections::BTreeMap<&str, usize> =
        row_labels.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let col_of: std::collections::BTreeMap<&str, usize> =
        col_labels.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut m = QMatrix::zero(row_labels.clone(), col_labels.clone());
    for e in qt.graph.edges() {
        if qt.dangling_edges.contains(e) {
            continue;
        }
        let h = qt
            .membership
            .get(e)
            .ok_or_else(|| Error::InvalidDatum(format!("no skeleton edge for {e}")))?;
        let t = &qt.to_base[e];
        let (&ri, &ci) = match (row_of.get(h.as_str()), col_of.get(t.as_str())) {
            (Some(r), Some(c)) => (r, c),
            _ => {
                return Err(Error::InvalidDatum(format!(
                    "labelling does not cover skeleton edge {h} or tree edge {t}"
                )))
            }
        };
        let idx = qt.index[e] as i64;
        m.entries[ri][ci] += crate::util::q(1, idx);
    }
    Ok(m)
}

pub fn edge_length_matrix(datum: &GluingDatum, lab: &Labelling) -> Result<QMatrix> {
    let qt = datum.quotient()?;
    if qt.skeleton_genus()? < 2 {
        return Err(Error::GenusTooSmall("edge-length matrix needs genus >= 2".into()));
    }
    edge_length_matrix_of(&qt, lab)
}

/// Full-dimensional: A_M is a nonsingular (3g-3) x (3g-3) matrix. Implies g
/// even and d = g/2 + 1, which is asserted.
pub fn is_full_dimensional(datum: &GluingDatum) -> Result<bool> {
    let qt = datum.quotient()?;
    let g = match qt.skeleton_genus() {
        Ok(g) => g,
        Err(_) => return Ok(false),
    };
    if g < 2 {
        return Ok(false);
    }
    let lab = datum.canonical_labelling(&qt)?;
    let m = edge_length_matrix_of(&qt, &lab)?;
    if m.n_rows() != 3 * g - 3 || m.n_cols() != 3 * g - 3 {
        return Ok(false);
    }
    let full = !m.determinant()?.is_zero();
    if full {
        assert_eq!(g % 2, 0, "full-dimensional forces even genus");
        assert_eq!(datum.degree, g / 2 + 1, "full-dimensional forces d = g/2 + 1");
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{q, qi};

    fn from_i64(rows: &[&[i64]]) -> QMatrix {
        let n = rows.len();
        let mut m = QMatrix::identity(n);
        m.entries = rows
            .iter()
            .map(|r| r.iter().map(|&x| qi(x)).collect())
            .collect();
        m
    }

    #[test]
    fn determinant_small() {
        assert_eq!(QMatrix::identity(9).determinant().unwrap(), qi(1));
        let m = from_i64(&[&[1, 0, 1], &[1, 1, 0], &[0, 1, 1]]);
        assert_eq!(m.determinant().unwrap(), qi(2));
        let singular = from_i64(&[&[1, 2], &[2, 4]]);
        assert_eq!(singular.determinant().unwrap(), qi(0));
        assert_eq!(singular.rank(), 1);
    }

    #[test]
    fn determinant_with_rationals() {
        let mut m = from_i64(&[&[0, 1], &[1, 0]]);
        m.entries[0][1] = q(1, 2);
        assert_eq!(m.determinant().unwrap(), q(-1, 2));
    }

    #[test]
    fn determinant_matches_cofactor_on_random_matrices() {
        use rand::Rng;
        let mut rng = crate::util::rng_from_seed(7);
        for _ in 0..20 {
            let n = rng.gen_range(1..=5);
            let entries: Vec<Vec<Q>> = (0..n)
                .map(|_| (0..n).map(|_| qi(rng.gen_range(-4..=4))).collect())
                .collect();
            let mut m = QMatrix::identity(n);
            m.entries = entries;
            // cofactor expansion oracle
            fn cof(m: &QMatrix) -> Q {
                let n = m.n_rows();
                if n == 0 {
                    return qi(1);
                }
                let mut acc = qi(0);
                for j in 0..n {
                    if m.entries[0][j].is_zero() {
                        continue;
                    }
                    let sub = m.minor(0, j);
                    let term = &m.entries[0][j] * cof(&sub);
                    acc = if j % 2 == 0 { acc + term } else { acc - term };
                }
                acc
            }
            assert_eq!(m.determinant().unwrap(), cof(&m));
        }
    }

    #[test]
    fn solve_and_adjugate() {
        let m = from_i64(&[&[1, 0, 1], &[1, 1, 0], &[0, 1, 1]]);
        let y = vec![qi(1), qi(1), qi(1)];
        let x = m.solve(&y).unwrap();
        assert_eq!(m.mul_vec(&x), y);
        // identity adjugate row
        let id = QMatrix::identity(4);
        assert_eq!(id.adjugate_first_row().unwrap(), vec![qi(1), qi(0), qi(0), qi(0)]);
        // adj(A) * A = det(A) * I, checked on the first row
        let det = m.determinant().unwrap();
        let c = m.adjugate_first_row().unwrap();
        for j in 0..3 {
            let dot: Q = (0..3).map(|i| &c[i] * &m.entries[i][j]).sum();
            assert_eq!(dot, if j == 0 { det.clone() } else { qi(0) });
        }
    }
}
