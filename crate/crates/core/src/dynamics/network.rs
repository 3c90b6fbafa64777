use ndarray::{Array1, Array2};
use ndarray_linalg::{FactorizeInto, LUFactorized, Solve};
use ndarray::OwnedRepr;
use num_complex::Complex64;

use crate::case::{build_ybus, NetworkCase};
use crate::error::{Error, Result};

/// Shunt admittance used for a bolted three-phase fault.
pub fn bolted_fault() -> Complex64 {
    Complex64::new(0.0, -1e6)
}

/// Switching state of the AC network.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// In-service flag per branch, in case order.
    pub branch_status: Vec<bool>,
    /// Fault shunts as `(bus position, admittance)`.
    pub faults: Vec<(usize, Complex64)>,
}

impl Topology {
    pub fn of(case: &NetworkCase) -> Self {
        Self {
            branch_status: case.branches.iter().map(|b| b.status).collect(),
            faults: Vec::new(),
        }
    }

    pub fn with_fault(mut self, bus: usize, y: Complex64) -> Self {
        self.faults.retain(|(b, _)| *b != bus);
        self.faults.push((bus, y));
        self
    }

    pub fn without_fault(mut self, bus: usize) -> Self {
        self.faults.retain(|(b, _)| *b != bus);
        self
    }

    pub fn with_branch_out(mut self, branch: usize) -> Self {
        self.branch_status[branch] = false;
        self
    }
}

/// Factorized augmented admittance matrix. Buses in `fixed` are ideal
/// voltage sources; the rest are solved from current injections.
#[derive(Clone)]
pub struct Network {
    n: usize,
    free: Vec<usize>,
    fixed: Vec<(usize, Complex64)>,
    lu: Option<LUFactorized<OwnedRepr<Complex64>>>,
    y_fx: Array2<Complex64>,
}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("n", &self.n)
            .field("fixed", &self.fixed)
            .finish_non_exhaustive()
    }
}

impl Network {
    /// `shunts` holds one extra shunt admittance per bus (loads, machine
    /// Norton admittances); fault shunts come from `topology`.
    pub fn new(
        case: &NetworkCase,
        topology: &Topology,
        shunts: &[Complex64],
        fixed: Vec<(usize, Complex64)>,
    ) -> Result<Self> {
        let mut switched = case.clone();
        for (b, s) in switched.branches.iter_mut().zip(&topology.branch_status) {
            b.status = *s;
        }
        let mut y = build_ybus(&switched)?;
        let n = y.nrows();
        for (i, s) in shunts.iter().enumerate() {
            y[[i, i]] += s;
        }
        for &(i, s) in &topology.faults {
            y[[i, i]] += s;
        }
        let free: Vec<usize> = (0..n).filter(|i| !fixed.iter().any(|(f, _)| f == i)).collect();
        let nf = free.len();
        let mut y_ff = Array2::zeros((nf, nf));
        let mut y_fx = Array2::zeros((nf, fixed.len()));
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                y_ff[[r, c]] = y[[i, j]];
            }
            for (c, &(j, _)) in fixed.iter().enumerate() {
                y_fx[[r, c]] = y[[i, j]];
            }
        }
        let lu = if nf > 0 {
            Some(y_ff.factorize_into().map_err(|e| Error::SingularNetwork(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { n, free, fixed, lu, y_fx })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Bus voltages for the given current injections.
    pub fn solve(&self, injection: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.n];
        for &(i, vf) in &self.fixed {
            v[i] = vf;
        }
        let Some(lu) = &self.lu else { return Ok(v) };
        let mut rhs: Array1<Complex64> = self.free.iter().map(|&i| injection[i]).collect();
        for (c, &(_, vf)) in self.fixed.iter().enumerate() {
            for r in 0..self.free.len() {
                rhs[r] -= self.y_fx[[r, c]] * vf;
            }
        }
        let x = lu.solve(&rhs)?;
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::SingularNetwork("non-finite bus voltage".into()));
        }
        for (r, &i) in self.free.iter().enumerate() {
            v[i] = x[r];
        }
        Ok(v)
    }
}
