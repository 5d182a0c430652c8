//! Molecular integrals and the FCIDUMP interchange format.
//!
//! Integrals are kept exactly as FCIDUMP stores them: a symmetric one-electron
//! matrix `h` and two-electron integrals in chemist notation `(ij|kl)`. Spin
//! orbitals are laid out with the α block first (`0..m`) followed by the β
//! block (`m..2m`).

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MolecularIntegrals {
    /// Number of spatial orbitals.
    pub m_spatial: usize,
    pub n_electrons: usize,
    /// Twice the spin projection, `n_alpha - n_beta`.
    pub ms2: i64,
    /// One-electron integrals, Hartree.
    pub h: DMatrix<f64>,
    /// Two-electron integrals `(ij|kl)`, flattened row-major over `m^4`.
    pub v: Vec<f64>,
    /// Constant shift, Hartree (nuclear repulsion plus any frozen core).
    pub e_core: f64,
}

#[inline]
pub fn idx4(m: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * m + j) * m + k) * m + l
}

impl MolecularIntegrals {
    /// All-zero integrals for `m` spatial orbitals.
    pub fn zeros(m_spatial: usize, n_electrons: usize, ms2: i64) -> Self {
        Self {
            m_spatial,
            n_electrons,
            ms2,
            h: DMatrix::zeros(m_spatial, m_spatial),
            v: vec![0.0; m_spatial.pow(4)],
            e_core: 0.0,
        }
    }

    #[inline]
    pub fn eri(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.v[idx4(self.m_spatial, i, j, k, l)]
    }

    /// Store `value` at `(ij|kl)` and all seven permutational partners.
    pub fn set_eri(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        let m = self.m_spatial;
        for (a, b, c, d) in eightfold(i, j, k, l) {
            self.v[idx4(m, a, b, c, d)] = value;
        }
    }

    pub fn set_h(&mut self, i: usize, j: usize, value: f64) {
        self.h[(i, j)] = value;
        self.h[(j, i)] = value;
    }

    pub fn spin_orbital_count(&self) -> usize {
        2 * self.m_spatial
    }

    pub fn n_alpha(&self) -> usize {
        ((self.n_electrons as i64 + self.ms2) / 2) as usize
    }

    pub fn n_beta(&self) -> usize {
        ((self.n_electrons as i64 - self.ms2) / 2) as usize
    }

    /// Largest violation of the `h` symmetry and the 8-fold `(ij|kl)` symmetry.
    pub fn symmetry_violation(&self) -> f64 {
        let m = self.m_spatial;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                worst = worst.max((self.h[(i, j)] - self.h[(j, i)]).abs());
            }
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let x = self.eri(i, j, k, l);
                        for (a, b, c, d) in eightfold(i, j, k, l) {
                            worst = worst.max((x - self.eri(a, b, c, d)).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Integrals restricted to the first `n` spatial orbitals.
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = Self::zeros(n, self.n_electrons, self.ms2);
        out.e_core = self.e_core;
        out.h = self.h.view((0, 0), (n, n)).into_owned();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out.v[idx4(n, i, j, k, l)] = self.eri(i, j, k, l);
                    }
                }
            }
        }
        out
    }

    /// Integrals in the orbital basis `ψ_p = Σ_i φ_i b_ip` for an `m × n` block `b`.
    /// The core energy is carried over unchanged.
    pub fn rotated(&self, b: &DMatrix<f64>) -> Self {
        assert_eq!(b.nrows(), self.m_spatial, "orbital block rows must equal m_spatial");
        let n = b.ncols();
        let mut out = Self::zeros(n, self.n_electrons, self.ms2);
        out.e_core = self.e_core;
        out.h = b.transpose() * &self.h * b;
        let x = half_transformed_eri(&self.v, self.m_spatial, b);
        // g̃[p,r,q,s] = Σ_a b[a,p] X[a,r,q,s]
        let n3 = n * n * n;
        for p in 0..n {
            for rest in 0..n3 {
                let mut acc = 0.0;
                for a in 0..self.m_spatial {
                    acc += b[(a, p)] * x[a * n3 + rest];
                }
                out.v[p * n3 + rest] = acc;
            }
        }
        out
    }

    /// Copy of the integrals with the constant shift removed.
    pub fn electronic(&self) -> Self {
        let mut out = self.clone();
        out.e_core = 0.0;
        out
    }

    /// Serialise to FCIDUMP text, one line per symmetry-unique nonzero entry.
    pub fn to_fcidump(&self) -> String {
        let m = self.m_spatial;
        let mut s = String::new();
        let _ = writeln!(
            s,
            " &FCI NORB={m},NELEC={},MS2={},",
            self.n_electrons, self.ms2
        );
        let _ = writeln!(s, "  ORBSYM={}", vec!["1"; m].join(","));
        let _ = writeln!(s, "  ISYM=1,");
        let _ = writeln!(s, " &END");
        for i in 0..m {
            for j in 0..=i {
                let ij = i * (i + 1) / 2 + j;
                for k in 0..m {
                    for l in 0..=k {
                        let kl = k * (k + 1) / 2 + l;
                        if kl > ij {
                            continue;
                        }
                        let x = self.eri(i, j, k, l);
                        if x != 0.0 {
                            let _ = writeln!(s, "{:.17e} {} {} {} {}", x, i + 1, j + 1, k + 1, l + 1);
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..=i {
                let x = self.h[(i, j)];
                if x != 0.0 {
                    let _ = writeln!(s, "{:.17e} {} {} 0 0", x, i + 1, j + 1);
                }
            }
        }
        let _ = writeln!(s, "{:.17e} 0 0 0 0", self.e_core);
        s
    }
}

/// The eight index permutations that leave a real `(ij|kl)` invariant.
pub fn eightfold(i: usize, j: usize, k: usize, l: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (i, j, k, l),
        (j, i, k, l),
        (i, j, l, k),
        (j, i, l, k),
        (k, l, i, j),
        (l, k, i, j),
        (k, l, j, i),
        (l, k, j, i),
    ]
}

/// `X[a,r,q,s] = Σ_{jkl} (aj|kl) b[j,r] b[k,q] b[l,s]`, laid out as `m × n³`.
///
/// Three quarter-transformations; the fourth index is left in the original
/// basis so the same intermediate serves both the energy and its gradient.
pub fn half_transformed_eri(v: &[f64], m: usize, b: &DMatrix<f64>) -> Vec<f64> {
    let n = b.ncols();
    // t1[a,j,k,s] = Σ_l v[a,j,k,l] b[l,s]
    let mut t1 = vec![0.0; m * m * m * n];
    for ajk in 0..m * m * m {
        let row = &v[ajk * m..(ajk + 1) * m];
        let out = &mut t1[ajk * n..(ajk + 1) * n];
        for (l, &x) in row.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for s in 0..n {
                out[s] += x * b[(l, s)];
            }
        }
    }
    // t2[a,j,q,s] = Σ_k t1[a,j,k,s] b[k,q]
    let mut t2 = vec![0.0; m * m * n * n];
    for aj in 0..m * m {
        for k in 0..m {
            let src = &t1[(aj * m + k) * n..(aj * m + k + 1) * n];
            for q in 0..n {
                let bkq = b[(k, q)];
                if bkq == 0.0 {
                    continue;
                }
                let dst = &mut t2[(aj * n + q) * n..(aj * n + q + 1) * n];
                for s in 0..n {
                    dst[s] += bkq * src[s];
                }
            }
        }
    }
    // x[a,r,q,s] = Σ_j t2[a,j,q,s] b[j,r]
    let nn = n * n;
    let mut x = vec![0.0; m * n * nn];
    for a in 0..m {
        for j in 0..m {
            let src = &t2[(a * m + j) * nn..(a * m + j + 1) * nn];
            for r in 0..n {
                let bjr = b[(j, r)];
                if bjr == 0.0 {
                    continue;
                }
                let dst = &mut x[(a * n + r) * nn..(a * n + r + 1) * nn];
                for t in 0..nn {
                    dst[t] += bjr * src[t];
                }
            }
        }
    }
    x
}

/// Parse FCIDUMP text into symmetrised integrals.
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals> {
    let (header, body_start) = split_header(text)?;
    let fields = parse_namelist(&header)?;
    let get = |key: &'static str| -> Result<i64> {
        let raw = fields.get(key).ok_or(Error::MissingHeaderKey(key))?;
        raw.trim()
            .parse::<i64>()
            .map_err(|_| Error::MalformedHeader(format!("{key} = `{raw}` is not an integer")))
    };
    let norb = get("NORB")?;
    let nelec = get("NELEC")?;
    let ms2 = get("MS2")?;
    if norb <= 0 || nelec < 0 {
        return Err(Error::MalformedHeader(format!("NORB={norb}, NELEC={nelec}")));
    }
    let m = norb as usize;
    let mut ints = MolecularIntegrals::zeros(m, nelec as usize, ms2);

    let mut one: HashMap<(usize, usize), f64> = HashMap::new();
    let mut two: HashMap<[usize; 4], f64> = HashMap::new();
    let mut core: Option<f64> = None;

    for (offset, raw) in text.lines().enumerate().skip(body_start) {
        let line_no = offset + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `value i j k l`, found {} fields", toks.len()),
            });
        }
        let value = parse_real(toks[0]).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("`{}` is not a number", toks[0]),
        })?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&toks[1..]) {
            *slot = tok.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{tok}` is not a non-negative integer index"),
            })?;
            if *slot > m {
                return Err(Error::IndexOutOfRange {
                    line: line_no,
                    index: *slot,
                    norb: m,
                });
            }
        }
        let [i, j, k, l] = idx;
        let check = |prev: Option<f64>, key: [usize; 4]| -> Result<()> {
            match prev {
                Some(p) if (p - value).abs() > 1e-12 => Err(Error::InconsistentEntry {
                    line: line_no,
                    indices: key,
                    value,
                    previous: p,
                }),
                _ => Ok(()),
            }
        };
        match (i, j, k, l) {
            (0, 0, 0, 0) => {
                check(core, idx)?;
                core = Some(value);
            }
            (i, j, 0, 0) if i > 0 && j > 0 => {
                let key = (i.max(j) - 1, i.min(j) - 1);
                check(one.get(&key).copied(), idx)?;
                one.insert(key, value);
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                let key = canonical_eri_key(i - 1, j - 1, k - 1, l - 1);
                check(two.get(&key).copied(), idx)?;
                two.insert(key, value);
            }
            // Orbital-energy lines (`e i 0 0 0`) carry no Hamiltonian content.
            (_, 0, 0, 0) => {}
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unrecognised index pattern {idx:?}"),
                })
            }
        }
    }

    for ((i, j), x) in one {
        ints.set_h(i, j, x);
    }
    for ([i, j, k, l], x) in two {
        ints.set_eri(i, j, k, l, x);
    }
    ints.e_core = core.unwrap_or(0.0);
    Ok(ints)
}

fn canonical_eri_key(i: usize, j: usize, k: usize, l: usize) -> [usize; 4] {
    let (i, j) = (i.max(j), i.min(j));
    let (k, l) = (k.max(l), k.min(l));
    if (i, j) >= (k, l) {
        [i, j, k, l]
    } else {
        [k, l, i, j]
    }
}

fn parse_real(tok: &str) -> Option<f64> {
    tok.parse::<f64>()
        .ok()
        .or_else(|| tok.replace(['D', 'd'], "E").parse::<f64>().ok())
}

/// Returns the header contents (between `&FCI` and `&END` or `/`) and the
/// index of the first body line.
fn split_header(text: &str) -> Result<(String, usize)> {
    let mut header = String::new();
    let mut started = false;
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        let upper = trimmed.to_ascii_uppercase();
        if !started {
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = upper.strip_prefix("&FCI") {
                started = true;
                let rest_orig = &trimmed[trimmed.len() - rest.len()..];
                if let Some(end) = header_terminator(rest_orig) {
                    header.push_str(&rest_orig[..end]);
                    return Ok((header, n + 1));
                }
                header.push_str(rest_orig);
                header.push(',');
                continue;
            }
            return Err(Error::MalformedHeader("file does not start with `&FCI`".into()));
        }
        if let Some(end) = header_terminator(trimmed) {
            header.push_str(&trimmed[..end]);
            return Ok((header, n + 1));
        }
        header.push_str(trimmed);
        header.push(',');
    }
    Err(Error::MalformedHeader("missing `&END` or `/` terminator".into()))
}

fn header_terminator(s: &str) -> Option<usize> {
    let upper = s.to_ascii_uppercase();
    upper.find("&END").or_else(|| upper.find('/'))
}

fn parse_namelist(header: &str) -> Result<HashMap<String, String>> {
    let mut out: HashMap<String, String> = HashMap::new();
    let mut current: Option<String> = None;
    for tok in header.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        if let Some((k, v)) = tok.split_once('=') {
            let key = k.trim().to_ascii_uppercase();
            out.insert(key.clone(), v.trim().to_string());
            current = Some(key);
        } else if let Some(key) = &current {
            // continuation of a list-valued key such as ORBSYM
            let entry = out.get_mut(key).expect("current key present");
            entry.push(',');
            entry.push_str(tok);
        } else {
            return Err(Error::MalformedHeader(format!("stray token `{tok}`")));
        }
    }
    Ok(out)
}
