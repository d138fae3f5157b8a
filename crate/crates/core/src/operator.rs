use crate::basis::{FockBasis, ParticleKind};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistics {
    HardcoreBoson,
    SoftcoreBoson(u8),
    Fermion,
}

impl Statistics {
    pub fn of(kind: ParticleKind) -> Self {
        match kind {
            ParticleKind::HardcoreBoson | ParticleKind::SpinHalf => Statistics::HardcoreBoson,
            ParticleKind::SoftcoreBoson(n) => Statistics::SoftcoreBoson(n),
            ParticleKind::SpinlessFermion | ParticleKind::SpinfulFermion => Statistics::Fermion,
        }
    }
}

/// amp · c†_i c_j + h.c.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hop {
    pub i: usize,
    pub j: usize,
    pub amp: C64,
}

/// Second-quantized Hamiltonian as a list of one- and two-body terms on modes.
#[derive(Clone, Debug)]
pub struct Terms {
    pub statistics: Statistics,
    pub n_modes: usize,
    pub hops: Vec<Hop>,
    pub onsite: Vec<f64>,
    /// (U/2) Σ n(n−1)
    pub hubbard: f64,
    /// V n_i n_j
    pub density: Vec<(usize, usize, f64)>,
}

impl Terms {
    pub fn new(statistics: Statistics, n_modes: usize) -> Self {
        Terms { statistics, n_modes, hops: vec![], onsite: vec![0.0; n_modes], hubbard: 0.0, density: vec![] }
    }

    pub fn hop(&mut self, i: usize, j: usize, amp: C64) {
        assert!(i != j && i < self.n_modes && j < self.n_modes);
        if amp != C64::new(0.0, 0.0) {
            self.hops.push(Hop { i, j, amp });
        }
    }

    pub fn hop_real(&mut self, i: usize, j: usize, amp: f64) {
        self.hop(i, j, C64::new(amp, 0.0));
    }

    pub fn is_real(&self) -> bool {
        self.hops.iter().all(|h| h.amp.im == 0.0)
    }

    fn check_basis(&self, basis: &FockBasis) -> Result<()> {
        if basis.lattice.n_modes() != self.n_modes || Statistics::of(basis.lattice.particle) != self.statistics {
            return Err(Error::Mismatch(format!(
                "terms on {} modes ({:?}) vs basis with {} modes ({:?})",
                self.n_modes,
                self.statistics,
                basis.lattice.n_modes(),
                basis.lattice.particle
            )));
        }
        Ok(())
    }

    pub fn diagonal(&self, basis: &FockBasis, code: u64) -> f64 {
        let mut e = 0.0;
        for (m, &mu) in self.onsite.iter().enumerate() {
            if mu != 0.0 {
                e += mu * basis.occ(code, m) as f64;
            }
        }
        if self.hubbard != 0.0 {
            for m in 0..self.n_modes {
                let n = basis.occ(code, m) as f64;
                e += self.hubbard * 0.5 * n * (n - 1.0);
            }
        }
        for &(i, j, v) in &self.density {
            e += v * (basis.occ(code, i) * basis.occ(code, j)) as f64;
        }
        e
    }

    /// Pushes H|code⟩ as (code', amplitude) pairs; the diagonal comes first.
    pub fn act(&self, basis: &FockBasis, code: u64, out: &mut Vec<(u64, C64)>) {
        let d = self.diagonal(basis, code);
        if d != 0.0 {
            out.push((code, C64::new(d, 0.0)));
        }
        for h in &self.hops {
            if let Some((c, a)) = self.hop_one(basis, code, h.i, h.j) {
                out.push((c, h.amp * a));
            }
            if let Some((c, a)) = self.hop_one(basis, code, h.j, h.i) {
                out.push((c, h.amp.conj() * a));
            }
        }
    }

    /// c†_i c_j |code⟩
    fn hop_one(&self, basis: &FockBasis, code: u64, i: usize, j: usize) -> Option<(u64, f64)> {
        let nj = basis.occ(code, j);
        let ni = basis.occ(code, i);
        match self.statistics {
            Statistics::HardcoreBoson => {
                (nj == 1 && ni == 0).then(|| (code ^ (1 << i) ^ (1 << j), 1.0))
            }
            Statistics::Fermion => {
                if nj == 1 && ni == 0 {
                    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                    let between = if hi - lo > 1 { (code >> (lo + 1)) & ((1u64 << (hi - lo - 1)) - 1) } else { 0 };
                    let sign = if between.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    Some((code ^ (1 << i) ^ (1 << j), sign))
                } else {
                    None
                }
            }
            Statistics::SoftcoreBoson(nmax) => {
                if nj == 0 || ni >= nmax {
                    return None;
                }
                let r = nmax as u64 + 1;
                let c = code + r.pow(i as u32) - r.pow(j as u32);
                Some((c, ((nj as f64) * (ni as f64 + 1.0)).sqrt()))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Values {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

/// Hermitian operator in compressed sparse row form.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pub dim: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Values,
}

impl SparseOperator {
    pub fn from_terms(basis: &FockBasis, terms: &Terms) -> Result<Self> {
        terms.check_basis(basis)?;
        let real = terms.is_real();
        let dim = basis.dim();
        let mut rows = RowBuilder::new(dim, real);
        let mut buf = Vec::new();
        let mut row: Vec<(u32, C64)> = Vec::new();
        for r in 0..dim {
            buf.clear();
            row.clear();
            terms.act(basis, basis.state(r), &mut buf);
            // H is Hermitian: row r is the conjugate of column r
            for &(c, a) in &buf {
                let k = basis
                    .index(c)
                    .ok_or_else(|| Error::Mismatch("operator leaves the basis sector".into()))?;
                row.push((k as u32, a.conj()));
            }
            rows.push_row(&mut row);
        }
        Ok(rows.finish())
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        let real = trip.iter().all(|t| t.2.im == 0.0);
        trip.sort_by_key(|t| (t.0, t.1));
        let mut rows = RowBuilder::new(dim, real);
        let mut row = Vec::new();
        let mut k = 0;
        for r in 0..dim {
            row.clear();
            while k < trip.len() && trip[k].0 == r {
                row.push((trip[k].1 as u32, trip[k].2));
                k += 1;
            }
            rows.push_row(&mut row);
        }
        rows.finish()
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        SparseOperator {
            dim,
            indptr: (0..=dim).collect(),
            indices: (0..dim as u32).collect(),
            values: Values::Real(values.to_vec()),
        }
    }

    pub fn zero(dim: usize) -> Self {
        SparseOperator { dim, indptr: vec![0; dim + 1], indices: vec![], values: Values::Real(vec![]) }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_real(&self) -> bool {
        matches!(self.values, Values::Real(_))
    }

    pub fn value(&self, k: usize) -> C64 {
        match &self.values {
            Values::Real(v) => C64::new(v[k], 0.0),
            Values::Complex(v) => v[k],
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k] as usize, self.value(k)))
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        match &self.values {
            Values::Real(v) => {
                for r in 0..self.dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in self.indptr[r]..self.indptr[r + 1] {
                        acc += x[self.indices[k] as usize] * v[k];
                    }
                    y[r] = acc;
                }
            }
            Values::Complex(v) => {
                for r in 0..self.dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in self.indptr[r]..self.indptr[r + 1] {
                        acc += v[k] * x[self.indices[k] as usize];
                    }
                    y[r] = acc;
                }
            }
        }
    }

    /// Real matvec; only valid for real-valued operators.
    pub fn matvec_real(&self, x: &[f64], y: &mut [f64]) {
        let Values::Real(v) = &self.values else { panic!("matvec_real on a complex operator") };
        for r in 0..self.dim {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += v[k] * x[self.indices[k] as usize];
            }
            y[r] = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut y);
        y
    }

    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let hp = self.apply(psi);
        psi.iter().zip(&hp).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).flat_map(|r| self.row(r).filter(move |&(c, _)| c == r)).map(|(_, v)| v.re).sum()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let n = self.dim;
        let mut d = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for (c, v) in self.row(r) {
                d[r * n + c] += v;
            }
        }
        d
    }

    pub fn to_dense_real(&self) -> Option<Vec<f64>> {
        if !self.is_real() {
            return None;
        }
        Some(self.to_dense().into_iter().map(|z| z.re).collect())
    }

    /// max |H_rc − conj(H_cr)|
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                let back: C64 = self.row(c).filter(|&(cc, _)| cc == r).map(|(_, w)| w).sum();
                worst = worst.max((v - back.conj()).norm());
            }
        }
        worst
    }

    /// a·self + b·other
    pub fn combine(&self, a: f64, other: &SparseOperator, b: f64) -> SparseOperator {
        assert_eq!(self.dim, other.dim);
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.dim {
            trip.extend(self.row(r).map(|(c, v)| (r, c, v * a)));
            trip.extend(other.row(r).map(|(c, v)| (r, c, v * b)));
        }
        SparseOperator::from_triplets(self.dim, trip)
    }

    /// Max-norm of [A, B] computed densely; for tests on small operators.
    pub fn commutator_max(&self, other: &SparseOperator) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for col in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[col] = C64::new(1.0, 0.0);
            let ab = self.apply(&other.apply(&e));
            let ba = other.apply(&self.apply(&e));
            for (x, y) in ab.iter().zip(&ba) {
                worst = worst.max((x - y).norm());
            }
        }
        worst
    }
}

struct RowBuilder {
    real: bool,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    re: Vec<f64>,
    cx: Vec<C64>,
}

impl RowBuilder {
    fn new(dim: usize, real: bool) -> Self {
        let mut indptr = Vec::with_capacity(dim + 1);
        indptr.push(0);
        RowBuilder { real, indptr, indices: vec![], re: vec![], cx: vec![] }
    }

    fn push_row(&mut self, row: &mut Vec<(u32, C64)>) {
        row.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < row.len() {
            let c = row[k].0;
            let mut v = C64::new(0.0, 0.0);
            while k < row.len() && row[k].0 == c {
                v += row[k].1;
                k += 1;
            }
            if v.norm() != 0.0 {
                self.indices.push(c);
                if self.real {
                    self.re.push(v.re);
                } else {
                    self.cx.push(v);
                }
            }
        }
        self.indptr.push(self.indices.len());
    }

    fn finish(self) -> SparseOperator {
        let dim = self.indptr.len() - 1;
        let values = if self.real { Values::Real(self.re) } else { Values::Complex(self.cx) };
        SparseOperator { dim, indptr: self.indptr, indices: self.indices, values }
    }
}
