use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Ladder(usize),
    Chain(usize),
    Rectangle(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleKind {
    HardcoreBoson,
    SoftcoreBoson(u8),
    SpinHalf,
    SpinlessFermion,
    SpinfulFermion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub geometry: Geometry,
    pub boundary: Boundary,
    pub particle: ParticleKind,
}

impl LatticeSpec {
    pub fn ladder(l: usize, particle: ParticleKind) -> Self {
        LatticeSpec { geometry: Geometry::Ladder(l), boundary: Boundary::Open, particle }
    }

    pub fn chain(l: usize, particle: ParticleKind) -> Self {
        LatticeSpec { geometry: Geometry::Chain(l), boundary: Boundary::Open, particle }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.geometry {
            Geometry::Ladder(l) | Geometry::Chain(l) => l >= 1,
            Geometry::Rectangle(x, y) => x >= 1 && y >= 1,
        };
        if !ok {
            return Err(Error::Invalid("lattice needs at least one site".into()));
        }
        if let ParticleKind::SoftcoreBoson(0) = self.particle {
            return Err(Error::Invalid("n_max must be at least 1".into()));
        }
        if self.n_modes() > 63 {
            return Err(Error::Invalid("more than 63 modes".into()));
        }
        Ok(())
    }

    /// Number of rungs for a ladder, number of sites otherwise.
    pub fn length(&self) -> usize {
        match self.geometry {
            Geometry::Ladder(l) | Geometry::Chain(l) => l,
            Geometry::Rectangle(x, _) => x,
        }
    }

    pub fn n_sites(&self) -> usize {
        match self.geometry {
            Geometry::Ladder(l) => 2 * l,
            Geometry::Chain(l) => l,
            Geometry::Rectangle(x, y) => x * y,
        }
    }

    /// Fermions carry two modes per site: 2i is spin up, 2i+1 spin down.
    pub fn n_modes(&self) -> usize {
        match self.particle {
            ParticleKind::SpinfulFermion => 2 * self.n_sites(),
            _ => self.n_sites(),
        }
    }

    pub fn n_max(&self) -> u8 {
        match self.particle {
            ParticleKind::SoftcoreBoson(n) => n,
            _ => 1,
        }
    }

    fn radix(&self) -> u64 {
        self.n_max() as u64 + 1
    }
}

/// Ladder sites follow the snake order: top row 0 3 4 7 8 ..., bottom row 1 2 5 6 9 ...
pub fn ladder_site(rung: usize, leg: usize) -> usize {
    if rung % 2 == 0 {
        2 * rung + leg
    } else {
        2 * rung + 1 - leg
    }
}

/// (rung, leg) of a snake-ordered ladder site; leg 0 is the top.
pub fn ladder_coords(site: usize) -> (usize, usize) {
    let rung = site / 2;
    let low = site % 2;
    (rung, if rung % 2 == 0 { low } else { 1 - low })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorConstraint {
    pub total_particles: Option<usize>,
    /// Twice the total S^z.
    pub total_sz2: Option<i32>,
}

impl SectorConstraint {
    pub fn particles(n: usize) -> Self {
        SectorConstraint { total_particles: Some(n), total_sz2: None }
    }
}

#[derive(Clone, Debug)]
pub struct FockBasis {
    pub lattice: LatticeSpec,
    pub constraint: SectorConstraint,
    states: Vec<u64>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

impl FockBasis {
    pub fn enumerate(lattice: LatticeSpec, constraint: SectorConstraint) -> Result<Self> {
        lattice.validate()?;
        let modes = lattice.n_modes();
        let binary = lattice.n_max() == 1;
        if constraint.total_sz2.is_some() && !binary {
            return Err(Error::Invalid("S^z constraint needs two-level modes".into()));
        }
        if let Some(n) = constraint.total_particles {
            if n > modes * lattice.n_max() as usize {
                return Err(Error::EmptySector(format!("{n} particles on {modes} modes")));
            }
        }
        let mut states = Vec::new();
        if binary {
            let sz_ok = |s: u64| match constraint.total_sz2 {
                None => true,
                Some(sz2) => sz2_of(&lattice, s) == sz2,
            };
            match constraint.total_particles {
                Some(n) => {
                    let mut s: u64 = if n == 0 { 0 } else { (1u64 << n) - 1 };
                    let limit = 1u64 << modes;
                    loop {
                        if s >= limit {
                            break;
                        }
                        if sz_ok(s) {
                            states.push(s);
                        }
                        if n == 0 {
                            break;
                        }
                        // Gosper's hack: next word with the same popcount
                        let c = s & s.wrapping_neg();
                        let r = s + c;
                        s = (((r ^ s) >> 2) / c) | r;
                    }
                }
                None => {
                    if modes > 30 {
                        return Err(Error::Invalid("unconstrained basis too large".into()));
                    }
                    states.extend((0..1u64 << modes).filter(|&s| sz_ok(s)));
                }
            }
        } else {
            let radix = lattice.radix();
            let mut digits = vec![0u8; modes];
            fill_softcore(&mut digits, 0, 0, lattice.n_max(), constraint.total_particles, radix, &mut states);
            states.sort_unstable();
        }
        if states.is_empty() {
            return Err(Error::EmptySector("no configuration satisfies the constraint".into()));
        }
        Ok(FockBasis { lattice, constraint, states })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn index(&self, code: u64) -> Option<usize> {
        self.states.binary_search(&code).ok()
    }

    /// Occupation of one mode in an encoded configuration.
    pub fn occ(&self, code: u64, mode: usize) -> u8 {
        if self.lattice.n_max() == 1 {
            ((code >> mode) & 1) as u8
        } else {
            let r = self.lattice.radix();
            ((code / r.pow(mode as u32)) % r) as u8
        }
    }

    pub fn word(&self, i: usize) -> Vec<u8> {
        let code = self.states[i];
        (0..self.lattice.n_modes()).map(|m| self.occ(code, m)).collect()
    }

    pub fn encode(&self, word: &[u8]) -> Result<u64> {
        if word.len() != self.lattice.n_modes() {
            return Err(Error::Mismatch(format!(
                "word has {} entries, lattice has {} modes",
                word.len(),
                self.lattice.n_modes()
            )));
        }
        let r = self.lattice.radix();
        let mut code = 0u64;
        for &n in word.iter().rev() {
            if n as u64 >= r {
                return Err(Error::NotFound);
            }
            code = code * r + n as u64;
        }
        Ok(code)
    }

    pub fn configuration_index(&self, word: &[u8]) -> Result<usize> {
        let code = self.encode(word)?;
        self.index(code).ok_or(Error::NotFound)
    }

    /// Closed-form dimension implied by the constraint.
    pub fn expected_dim(lattice: &LatticeSpec, constraint: &SectorConstraint) -> u128 {
        let modes = lattice.n_modes();
        let nmax = lattice.n_max() as usize;
        if nmax == 1 {
            match (constraint.total_particles, constraint.total_sz2) {
                (None, None) => 1u128 << modes,
                (Some(n), None) => binomial(modes, n),
                (n, Some(sz2)) => count_sz(lattice, n, sz2),
            }
        } else {
            match constraint.total_particles {
                None => ((nmax + 1) as u128).pow(modes as u32),
                Some(n) => {
                    // inclusion-exclusion over modes exceeding n_max
                    let mut total: i128 = 0;
                    for k in 0..=modes {
                        let rest = n as i128 - (k * (nmax + 1)) as i128;
                        if rest < 0 {
                            break;
                        }
                        let term = binomial(modes, k) as i128
                            * binomial(rest as usize + modes - 1, modes - 1) as i128;
                        total += if k % 2 == 0 { term } else { -term };
                    }
                    total as u128
                }
            }
        }
    }
}

fn count_sz(lattice: &LatticeSpec, n: Option<usize>, sz2: i32) -> u128 {
    match lattice.particle {
        ParticleKind::SpinfulFermion => {
            let l = lattice.n_sites();
            let mut c = 0;
            for up in 0..=l {
                for dn in 0..=l {
                    if up as i32 - dn as i32 == sz2 && n.map_or(true, |n| up + dn == n) {
                        c += binomial(l, up) * binomial(l, dn);
                    }
                }
            }
            c
        }
        _ => {
            let l = lattice.n_modes() as i32;
            if (sz2 + l) % 2 != 0 {
                return 0;
            }
            let up = ((sz2 + l) / 2) as usize;
            if n.map_or(false, |n| n != up) {
                return 0;
            }
            binomial(l as usize, up)
        }
    }
}

/// Twice the total S^z of a two-level configuration.
pub fn sz2_of(lattice: &LatticeSpec, s: u64) -> i32 {
    match lattice.particle {
        ParticleKind::SpinfulFermion => {
            let even = 0x5555_5555_5555_5555u64;
            (s & even).count_ones() as i32 - (s & !even).count_ones() as i32
        }
        _ => 2 * s.count_ones() as i32 - lattice.n_modes() as i32,
    }
}

fn fill_softcore(
    digits: &mut [u8],
    pos: usize,
    used: usize,
    nmax: u8,
    target: Option<usize>,
    radix: u64,
    out: &mut Vec<u64>,
) {
    if pos == digits.len() {
        if target.map_or(true, |t| t == used) {
            let code = digits.iter().rev().fold(0u64, |acc, &d| acc * radix + d as u64);
            out.push(code);
        }
        return;
    }
    for n in 0..=nmax {
        let u = used + n as usize;
        if let Some(t) = target {
            let remaining = (digits.len() - pos - 1) * nmax as usize;
            if u > t || u + remaining < t {
                continue;
            }
        }
        digits[pos] = n;
        fill_softcore(digits, pos + 1, u, nmax, target, radix, out);
    }
    digits[pos] = 0;
}
