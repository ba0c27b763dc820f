use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::SymMatrix;

/// One coefficient of a linear matrix map: decision variable `var`
/// contributes `coef` at `(row, col)` and, off the diagonal, at `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdEntry {
    pub var: usize,
    pub row: usize,
    pub col: usize,
    pub coef: f64,
}

/// Sparse linear equality `sum_k terms[k].1 * x[terms[k].0] = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// A semidefinite program over a flat decision vector `x`:
///
/// ```text
/// minimize    c . x + c0
/// subject to  A x = b
///             F_k(x) = sum_v x_v F_{k,v} + G_k  is PSD for every block k
/// ```
///
/// In the moment relaxations `x` holds pseudo-moments and the blocks are
/// moment and localizing matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    num_vars: usize,
    block_dims: Vec<usize>,
    objective: Vec<(usize, f64)>,
    objective_constant: f64,
    constraints: Vec<LinearConstraint>,
    psd_maps: Vec<Vec<PsdEntry>>,
    psd_constants: Vec<Vec<(usize, usize, f64)>>,
}

impl SdpProblem {
    pub fn new(num_vars: usize) -> Self {
        SdpProblem {
            num_vars,
            block_dims: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            constraints: Vec::new(),
            psd_maps: Vec::new(),
            psd_constants: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn psd_map(&self, block: usize) -> &[PsdEntry] {
        &self.psd_maps[block]
    }

    pub fn psd_constant(&self, block: usize) -> &[(usize, usize, f64)] {
        &self.psd_constants[block]
    }

    pub fn set_objective(&mut self, terms: Vec<(usize, f64)>, constant: f64) {
        self.objective = terms;
        self.objective_constant = constant;
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.constraints.push(LinearConstraint { terms, rhs });
        self.constraints.len() - 1
    }

    /// Appends a PSD block of size `dim`, returning its index.
    pub fn add_block(&mut self, dim: usize) -> usize {
        self.block_dims.push(dim);
        self.psd_maps.push(Vec::new());
        self.psd_constants.push(Vec::new());
        self.block_dims.len() - 1
    }

    /// Adds `coef * x[var]` at `(row, col)` of `block`. Only one triangle
    /// needs to be supplied; the entry is mirrored.
    pub fn add_psd_entry(&mut self, block: usize, var: usize, row: usize, col: usize, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.psd_maps[block].push(PsdEntry { var, row, col, coef });
    }

    pub fn add_psd_constant(&mut self, block: usize, row: usize, col: usize, value: f64) {
        if value == 0.0 {
            return;
        }
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.psd_constants[block].push((row, col, value));
    }

    /// Checks index bounds of every stored entry.
    pub fn validate(&self) -> Result<()> {
        let var_ok = |v: usize| v < self.num_vars;
        if !self.objective.iter().all(|(v, _)| var_ok(*v)) {
            return Err(Error::Usage("objective references an unknown variable".into()));
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if !c.terms.iter().all(|(v, _)| var_ok(*v)) {
                return Err(Error::Usage(format!("constraint {k} references an unknown variable")));
            }
        }
        for (b, &dim) in self.block_dims.iter().enumerate() {
            for e in &self.psd_maps[b] {
                if !var_ok(e.var) || e.row >= dim || e.col >= dim {
                    return Err(Error::Usage(format!("block {b} has an out-of-range entry {e:?}")));
                }
            }
            for &(r, c, _) in &self.psd_constants[b] {
                if r >= dim || c >= dim {
                    return Err(Error::Usage(format!("block {b} has an out-of-range constant")));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|(v, c)| c * x[*v]).sum::<f64>()
    }

    pub fn constraint_residuals(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.terms.iter().map(|(v, a)| a * x[*v]).sum::<f64>() - c.rhs)
            .collect()
    }

    /// Evaluates every PSD block at `x`.
    pub fn blocks_at(&self, x: &[f64]) -> Vec<SymMatrix> {
        self.block_dims
            .iter()
            .enumerate()
            .map(|(b, &dim)| {
                let mut m = SymMatrix::zeros(dim);
                for e in &self.psd_maps[b] {
                    m.add_to(e.row, e.col, e.coef * x[e.var]);
                }
                for &(r, c, v) in &self.psd_constants[b] {
                    m.add_to(r, c, v);
                }
                m
            })
            .collect()
    }

    /// `<F_{k,v}, X_k>` summed over blocks, for every variable `v`.
    pub fn adjoint(&self, duals: &[SymMatrix]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars];
        for (b, entries) in self.psd_maps.iter().enumerate() {
            for e in entries {
                let w = if e.row == e.col { 1.0 } else { 2.0 };
                out[e.var] += w * e.coef * duals[b].get(e.row, e.col);
            }
        }
        out
    }

    /// `<G_k, X_k>` summed over blocks.
    pub fn constant_inner(&self, duals: &[SymMatrix]) -> f64 {
        let mut acc = 0.0;
        for (b, consts) in self.psd_constants.iter().enumerate() {
            for &(r, c, v) in consts {
                let w = if r == c { 1.0 } else { 2.0 };
                acc += w * v * duals[b].get(r, c);
            }
        }
        acc
    }

    /// The same problem in variables `w` with `x = C w`. `rows[v]` lists the
    /// nonzero `(index into w, coefficient)` pairs of row `v` of `C`.
    pub fn substitute(&self, num_new: usize, rows: &[Vec<(usize, f64)>]) -> SdpProblem {
        let mut dense = vec![0.0; num_new];
        let mut seen = vec![false; num_new];
        let mut touched = Vec::new();
        let mut expand = |terms: &mut dyn Iterator<Item = (usize, f64)>| -> Vec<(usize, f64)> {
            for (v, a) in terms {
                for &(w, c) in &rows[v] {
                    if !seen[w] {
                        seen[w] = true;
                        touched.push(w);
                    }
                    dense[w] += a * c;
                }
            }
            touched.sort_unstable();
            let out = touched.iter().filter(|&&w| dense[w] != 0.0).map(|&w| (w, dense[w])).collect();
            for &w in &touched {
                dense[w] = 0.0;
                seen[w] = false;
            }
            touched.clear();
            out
        };
        let objective = expand(&mut self.objective.iter().copied());
        let constraints = self
            .constraints
            .iter()
            .map(|c| LinearConstraint {
                terms: expand(&mut c.terms.iter().copied()),
                rhs: c.rhs,
            })
            .collect();
        let psd_maps = self
            .psd_maps
            .iter()
            .map(|entries| {
                let mut sorted: Vec<&PsdEntry> = entries.iter().collect();
                sorted.sort_by_key(|e| (e.row, e.col));
                let mut out = Vec::new();
                for group in sorted.chunk_by(|a, b| (a.row, a.col) == (b.row, b.col)) {
                    let (row, col) = (group[0].row, group[0].col);
                    let mapped = expand(&mut group.iter().map(|e| (e.var, e.coef)));
                    out.extend(mapped.into_iter().map(|(var, coef)| PsdEntry { var, row, col, coef }));
                }
                out
            })
            .collect();
        SdpProblem {
            num_vars: num_new,
            block_dims: self.block_dims.clone(),
            objective,
            objective_constant: self.objective_constant,
            constraints,
            psd_maps,
            psd_constants: self.psd_constants.clone(),
        }
    }

    /// Dense coefficient matrix of the equality constraints.
    pub(crate) fn constraint_matrix(&self) -> (DMatrix<f64>, Vec<f64>) {
        let p = self.constraints.len();
        let mut a = DMatrix::zeros(p, self.num_vars);
        let mut b = vec![0.0; p];
        for (r, c) in self.constraints.iter().enumerate() {
            for (v, coef) in &c.terms {
                a[(r, *v)] += coef;
            }
            b[r] = c.rhs;
        }
        (a, b)
    }

    /// Plain-text sparse dump for cross-checking with external solvers.
    ///
    /// ```text
    /// vars <N>
    /// blocks <d_1> <d_2> ...
    /// objective <c0>
    /// c <var> <value>
    /// eq <constraint> <rhs>
    /// a <constraint> <var> <value>
    /// <constraint index>, <block>, <row>, <col>, <value>
    /// ```
    ///
    /// Block lines reuse the constraint column for the decision variable:
    /// index `0` is the constant term and `v + 1` the coefficient of `x_v`.
    pub fn debug_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vars {}", self.num_vars);
        let dims: Vec<String> = self.block_dims.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "blocks {}", dims.join(" "));
        let _ = writeln!(s, "objective {:.17e}", self.objective_constant);
        for (v, c) in &self.objective {
            let _ = writeln!(s, "c {v} {c:.17e}");
        }
        for (k, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(s, "eq {k} {:.17e}", c.rhs);
            for (v, a) in &c.terms {
                let _ = writeln!(s, "a {k} {v} {a:.17e}");
            }
        }
        for b in 0..self.block_dims.len() {
            for &(r, c, v) in &self.psd_constants[b] {
                let _ = writeln!(s, "0, {b}, {r}, {c}, {v:.17e}");
            }
            for e in &self.psd_maps[b] {
                let _ = writeln!(s, "{}, {b}, {}, {}, {:.17e}", e.var + 1, e.row, e.col, e.coef);
            }
        }
        s
    }
}
