//! Molecular integrals, orbital partitions and embedded fragment problems.
//!
//! Integrals are spatial and real. Two-electron integrals use chemist notation
//! `(uv|xy)` and carry the full 8-fold permutational symmetry.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::simulator::Bitstring;

/// One- and two-electron integrals over spatial orbitals plus the constant core energy.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    pub n_orb: usize,
    pub n_elec: usize,
    /// Twice the spin projection.
    pub ms2: i32,
    pub core_energy: f64,
    h: Vec<f64>,
    g: Vec<f64>,
    pub orbsym: Option<Vec<u32>>,
}

impl IntegralSet {
    /// All-zero integrals for `n_orb` orbitals.
    pub fn zeros(n_orb: usize, n_elec: usize, ms2: i32) -> Self {
        Self {
            n_orb,
            n_elec,
            ms2,
            core_energy: 0.0,
            h: vec![0.0; n_orb * n_orb],
            g: vec![0.0; n_orb.pow(4)],
            orbsym: None,
        }
    }

    #[inline]
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.n_orb + q]
    }

    /// Chemist-notation `(pq|rs)`.
    #[inline]
    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_orb;
        self.g[((p * n + q) * n + r) * n + s]
    }

    /// Sets `h[p][q]` and `h[q][p]`.
    pub fn set_h(&mut self, p: usize, q: usize, value: f64) {
        let n = self.n_orb;
        self.h[p * n + q] = value;
        self.h[q * n + p] = value;
    }

    /// Sets `(pq|rs)` and its 7 symmetry partners.
    pub fn set_g(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let n = self.n_orb;
        let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.g[idx(a, b, c, d)] = value;
        }
    }

    pub fn h_table(&self) -> &[f64] {
        &self.h
    }

    pub fn g_table(&self) -> &[f64] {
        &self.g
    }

    /// Checks the type invariants: symmetric `h`, 8-fold symmetric `g`, electron count
    /// and finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_orb;
        if self.n_elec > 2 * n {
            return Err(Error::Validation(format!(
                "{} electrons do not fit in {} spatial orbitals",
                self.n_elec, n
            )));
        }
        if !self.core_energy.is_finite()
            || self.h.iter().chain(&self.g).any(|v| !v.is_finite())
        {
            return Err(Error::Validation("non-finite integral".into()));
        }
        for p in 0..n {
            for q in 0..n {
                if self.h(p, q) != self.h(q, p) {
                    return Err(Error::Validation(format!("h is not symmetric at ({p},{q})")));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.g(p, q, r, s);
                        if v != self.g(q, p, r, s) || v != self.g(r, s, p, q) || v != self.g(p, q, s, r)
                        {
                            return Err(Error::Validation(format!(
                                "g lacks 8-fold symmetry at ({p}{q}|{r}{s})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of alpha and beta electrons.
    pub fn spin_counts(&self) -> Result<(usize, usize)> {
        let n = self.n_elec as i64;
        let ms2 = self.ms2 as i64;
        if (n + ms2) % 2 != 0 || ms2.abs() > n {
            return Err(Error::Validation(format!(
                "NELEC={} is incompatible with MS2={}",
                self.n_elec, self.ms2
            )));
        }
        Ok((((n + ms2) / 2) as usize, ((n - ms2) / 2) as usize))
    }
}

/// Parses FCIDUMP text.
///
/// The namelist header must provide `NORB` and `NELEC`; it ends at a line holding
/// `&END`, `$END` or `/`, or implicitly at the first integral line. Integral lines are
/// `value i j k l` with 1-based indices.
pub fn parse_fcidump(text: &str) -> Result<IntegralSet> {
    let mut header = String::new();
    let mut lines = text.lines().enumerate().peekable();
    let mut header_done = false;

    while let Some(&(lineno, raw)) = lines.peek() {
        let line = raw.trim();
        let upper = line.to_ascii_uppercase();
        let terminator = ["&END", "$END", "/"]
            .iter()
            .find_map(|t| upper.find(t).map(|pos| (pos, t.len())));
        if let Some((pos, _)) = terminator {
            header.push_str(&line[..pos]);
            header.push(',');
            lines.next();
            header_done = true;
            break;
        }
        if !header.trim().is_empty() && looks_like_integral_line(line) {
            header_done = true;
            break;
        }
        if line.is_empty() && header.is_empty() {
            lines.next();
            continue;
        }
        header.push_str(line);
        header.push(',');
        lines.next();
        let _ = lineno;
    }
    if !header_done {
        return Err(Error::parse(1, "unterminated FCIDUMP header"));
    }

    let fields = parse_namelist(&header)?;
    let get = |key: &str| fields.iter().find(|(k, _)| k == key).map(|(_, v)| v);
    let single = |key: &str| -> Result<Option<i64>> {
        match get(key) {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(Error::parse(1, format!("{key} must be a single integer"))),
        }
    };
    let norb = single("NORB")?.ok_or_else(|| Error::Schema("missing NORB".into()))?;
    let nelec = single("NELEC")?.ok_or_else(|| Error::Schema("missing NELEC".into()))?;
    let ms2 = single("MS2")?.unwrap_or(0);
    if norb < 0 || nelec < 0 {
        return Err(Error::Schema("NORB and NELEC must be non-negative".into()));
    }
    let n = norb as usize;
    let mut ints = IntegralSet::zeros(n, nelec as usize, ms2 as i32);
    if let Some(sym) = get("ORBSYM") {
        if sym.len() != n {
            return Err(Error::Schema(format!("ORBSYM has {} entries, NORB={}", sym.len(), n)));
        }
        ints.orbsym = Some(sym.iter().map(|&s| s as u32).collect());
    }

    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(Error::parse(lineno + 1, format!("expected 5 fields, found {}", tokens.len())));
        }
        let value = parse_float(tokens[0])
            .ok_or_else(|| Error::parse(lineno + 1, format!("non-numeric value '{}'", tokens[0])))?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&tokens[1..]) {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno + 1, format!("non-integer index '{tok}'")))?;
            if v < 0 || v > norb {
                return Err(Error::parse(lineno + 1, format!("index {v} out of range 0..={norb}")));
            }
            *slot = v as usize;
        }
        match idx {
            [0, 0, 0, 0] => ints.core_energy = value,
            [i, j, 0, 0] if i > 0 && j > 0 => ints.set_h(i - 1, j - 1, value),
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                ints.set_g(i - 1, j - 1, k - 1, l - 1, value)
            }
            // orbital energies ("e i 0 0 0") carry no information we need
            [_, 0, 0, 0] => {}
            _ => {
                return Err(Error::parse(
                    lineno + 1,
                    format!("unrecognised index pattern {:?}", idx),
                ))
            }
        }
    }
    Ok(ints)
}

fn looks_like_integral_line(line: &str) -> bool {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    tokens.len() == 5 && parse_float(tokens[0]).is_some() && tokens[1..].iter().all(|t| t.parse::<i64>().is_ok())
}

fn parse_float(tok: &str) -> Option<f64> {
    tok.parse::<f64>()
        .ok()
        .or_else(|| tok.replace(['D', 'd'], "E").parse::<f64>().ok())
}

fn parse_namelist(header: &str) -> Result<Vec<(String, Vec<i64>)>> {
    let body = header.replace("&FCI", "").replace("&fci", "").replace("$FCI", "");
    let mut fields: Vec<(String, Vec<i64>)> = Vec::new();
    for item in body.split([',', ' ', '\t', '\n']).filter(|s| !s.trim().is_empty()) {
        let item = item.trim();
        if let Some((key, value)) = item.split_once('=') {
            let key = key.trim().to_ascii_uppercase();
            let mut values = Vec::new();
            if !value.trim().is_empty() {
                values.push(parse_header_int(value.trim())?);
            }
            fields.push((key, values));
        } else {
            let last = fields
                .last_mut()
                .ok_or_else(|| Error::parse(1, format!("malformed header token '{item}'")))?;
            last.1.push(parse_header_int(item)?);
        }
    }
    Ok(fields)
}

fn parse_header_int(tok: &str) -> Result<i64> {
    tok.parse::<i64>()
        .or_else(|_| tok.trim_end_matches('.').parse::<i64>())
        .map_err(|_| Error::parse(1, format!("malformed header value '{tok}'")))
}

/// Serializes integrals in FCIDUMP form. Only symmetry-unique nonzero entries are
/// written; values use the shortest representation that round-trips exactly.
pub fn write_fcidump(ints: &IntegralSet) -> String {
    let n = ints.n_orb;
    let mut out = String::new();
    let _ = writeln!(out, "&FCI NORB={},NELEC={},MS2={},", n, ints.n_elec, ints.ms2);
    if let Some(sym) = &ints.orbsym {
        let list: Vec<String> = sym.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "  ORBSYM={},", list.join(","));
    }
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, "&END");
    let pair = |a: usize, b: usize| a * (a + 1) / 2 + b;
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if pair(i, j) < pair(k, l) {
                        continue;
                    }
                    let v = ints.g(i, j, k, l);
                    if v != 0.0 {
                        let _ = writeln!(out, "{:e} {} {} {} {}", v, i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = ints.h(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "{:e} {} {} 0 0", v, i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{:e} 0 0 0 0", ints.core_energy);
    out
}

/// Dense real square matrix in row-major order, used for orbital rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalRotation {
    pub n: usize,
    pub data: Vec<f64>,
}

impl OrbitalRotation {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rotation matrix must be square".into()));
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    /// Whitespace-separated rows, one matrix row per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| parse_float(t).ok_or_else(|| Error::parse(lineno + 1, format!("bad number '{t}'"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.get(r, c);
            }
        }
        Self { n, data }
    }

    /// max |(UᵀU − I)_ij|
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|k| self.get(k, a) * self.get(k, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn is_exact_identity(&self) -> bool {
        let n = self.n;
        (0..n).all(|r| (0..n).all(|c| self.get(r, c) == if r == c { 1.0 } else { 0.0 }))
    }
}

/// Rotates orbitals: new orbital `m` is `Σ_n φ_n U[n][m]`. Returns `h' = Uᵀ h U` and the
/// four-index transform of `g`.
pub fn rotate_orbitals(ints: &IntegralSet, u: &OrbitalRotation) -> Result<IntegralSet> {
    let n = ints.n_orb;
    if u.n != n {
        return Err(Error::Dimension(format!("rotation is {}x{}, integrals have {} orbitals", u.n, u.n, n)));
    }
    let err = u.orthogonality_error();
    if err > 1e-10 {
        return Err(Error::Validation(format!("rotation is not orthogonal (max |UᵀU-I| = {err:.3e})")));
    }
    if u.is_exact_identity() {
        return Ok(ints.clone());
    }

    let mut out = ints.clone();
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for p in 0..n {
                for q in 0..n {
                    acc += u.get(p, a) * ints.h(p, q) * u.get(q, b);
                }
            }
            out.h[a * n + b] = acc;
        }
    }
    // symmetrize to keep h exactly symmetric after rounding
    for a in 0..n {
        for b in 0..a {
            let v = 0.5 * (out.h[a * n + b] + out.h[b * n + a]);
            out.h[a * n + b] = v;
            out.h[b * n + a] = v;
        }
    }

    // four successive quarter transforms, each contracting one index
    let mut cur = ints.g.clone();
    let mut next = vec![0.0; cur.len()];
    let n2 = n * n;
    let n3 = n2 * n;
    for axis in 0..4 {
        let stride = [n3, n2, n, 1][axis];
        for idx in 0..cur.len() {
            let digit = (idx / stride) % n;
            let base = idx - digit * stride;
            let mut acc = 0.0;
            for p in 0..n {
                acc += u.get(p, digit) * cur[base + p * stride];
            }
            next[idx] = acc;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    out.g = cur;
    symmetrize_g(&mut out);
    out.orbsym = None;
    Ok(out)
}

fn symmetrize_g(ints: &mut IntegralSet) {
    let n = ints.n_orb;
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for s in 0..=r {
                    if p * (p + 1) / 2 + q < r * (r + 1) / 2 + s {
                        continue;
                    }
                    let vals = [
                        ints.g(p, q, r, s),
                        ints.g(q, p, r, s),
                        ints.g(p, q, s, r),
                        ints.g(q, p, s, r),
                        ints.g(r, s, p, q),
                        ints.g(s, r, p, q),
                        ints.g(r, s, q, p),
                        ints.g(s, r, q, p),
                    ];
                    let mean = vals.iter().sum::<f64>() / 8.0;
                    ints.set_g(p, q, r, s, mean);
                }
            }
        }
    }
}

/// One fragment of a [`Partition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub orbitals: Vec<usize>,
    pub n_elec: usize,
}

/// Assignment of spatial orbitals and electrons to fragments.
///
/// The qubit register is fragment-major: for each fragment in order, for each of its
/// orbitals in order, the alpha spin orbital followed by the beta spin orbital.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    fragments: Vec<Fragment>,
    qubit_of_orbital: Vec<usize>,
    fragment_of_orbital: Vec<usize>,
}

impl Partition {
    pub fn new(fragments: Vec<Fragment>) -> Result<Self> {
        if fragments.is_empty() {
            return Err(Error::Validation("partition has no fragments".into()));
        }
        let n_orb: usize = fragments.iter().map(|f| f.orbitals.len()).sum();
        let mut qubit_of_orbital = vec![usize::MAX; n_orb];
        let mut fragment_of_orbital = vec![usize::MAX; n_orb];
        let mut next = 0;
        for (fid, frag) in fragments.iter().enumerate() {
            if frag.orbitals.is_empty() {
                return Err(Error::Validation(format!("fragment {fid} has no orbitals")));
            }
            if frag.n_elec % 2 != 0 {
                return Err(Error::Validation(format!(
                    "fragment {fid} has an odd electron count ({})",
                    frag.n_elec
                )));
            }
            if frag.n_elec > 2 * frag.orbitals.len() {
                return Err(Error::Validation(format!("fragment {fid} holds too many electrons")));
            }
            for &p in &frag.orbitals {
                if p >= n_orb {
                    return Err(Error::Validation(format!(
                        "orbital {p} out of range; fragments cover {n_orb} orbitals"
                    )));
                }
                if qubit_of_orbital[p] != usize::MAX {
                    return Err(Error::Validation(format!("orbital {p} appears in two fragments")));
                }
                qubit_of_orbital[p] = 2 * next;
                fragment_of_orbital[p] = fid;
                next += 1;
            }
        }
        Ok(Self { fragments, qubit_of_orbital, fragment_of_orbital })
    }

    /// A single fragment holding orbitals `0..n_orb` in order.
    pub fn single(n_orb: usize, n_elec: usize) -> Self {
        Self::new(vec![Fragment { orbitals: (0..n_orb).collect(), n_elec }])
            .expect("single-fragment partition is always valid for even electron counts")
    }

    /// Parses `"0,2;1,3"` with electron counts `"2,2"`.
    pub fn parse(orbitals: &str, electrons: &str) -> Result<Self> {
        let groups: Vec<Vec<usize>> = orbitals
            .split(';')
            .map(|grp| {
                grp.split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| {
                        s.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Config(format!("bad orbital index '{s}'")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let elec: Vec<usize> = electrons
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad electron count '{s}'"))))
            .collect::<Result<_>>()?;
        if elec.len() != groups.len() {
            return Err(Error::Config(format!(
                "{} fragments but {} electron counts",
                groups.len(),
                elec.len()
            )));
        }
        Self::new(
            groups
                .into_iter()
                .zip(elec)
                .map(|(orbitals, n_elec)| Fragment { orbitals, n_elec })
                .collect(),
        )
    }

    /// Checks that the partition covers exactly the orbitals and electrons of `ints`.
    pub fn check_against(&self, ints: &IntegralSet) -> Result<()> {
        if self.n_orb() != ints.n_orb {
            return Err(Error::Validation(format!(
                "partition covers {} orbitals, integrals have {}",
                self.n_orb(),
                ints.n_orb
            )));
        }
        let total: usize = self.fragments.iter().map(|f| f.n_elec).sum();
        if total != ints.n_elec {
            return Err(Error::Validation(format!(
                "fragment electrons sum to {total}, integrals have {}",
                ints.n_elec
            )));
        }
        Ok(())
    }

    pub fn fragments(&self) -> &[Fragment] {
        &self.fragments
    }

    pub fn n_fragments(&self) -> usize {
        self.fragments.len()
    }

    pub fn n_orb(&self) -> usize {
        self.qubit_of_orbital.len()
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orb()
    }

    /// Qubit holding spatial orbital `p` with spin `beta`.
    #[inline]
    pub fn qubit(&self, p: usize, beta: bool) -> usize {
        self.qubit_of_orbital[p] + beta as usize
    }

    pub fn fragment_of_orbital(&self, p: usize) -> usize {
        self.fragment_of_orbital[p]
    }

    /// Fragment owning a qubit of the fragment-major register.
    pub fn fragment_of_qubit(&self, q: usize) -> usize {
        let mut start = 0;
        for (fid, f) in self.fragments.iter().enumerate() {
            let end = start + 2 * f.orbitals.len();
            if q < end {
                return fid;
            }
            start = end;
        }
        usize::MAX
    }

    /// First qubit of fragment `fid`.
    pub fn qubit_offset(&self, fid: usize) -> usize {
        self.fragments[..fid].iter().map(|f| 2 * f.orbitals.len()).sum()
    }

    /// Same fragments with the given order.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        Self::new(order.iter().map(|&i| self.fragments[i].clone()).collect())
    }
}

/// Flat `key = value` text. `[section]` headers prefix the keys that follow with
/// `section.`; lines starting with `#` are comments. Keys repeat at most once.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(i + 1, "unterminated section header"))?
                .trim();
            section = if name.is_empty() { String::new() } else { format!("{name}.") };
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected 'key = value', got '{line}'")))?;
        let key = format!("{section}{}", k.trim());
        if k.trim().is_empty() {
            return Err(Error::parse(i + 1, "empty key"));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::parse(i + 1, format!("duplicate key '{key}'")));
        }
    }
    Ok(out)
}

/// `foo.fcidump` → `foo.meta`
pub fn sidecar_path(fcidump: &Path) -> PathBuf {
    fcidump.with_extension("meta")
}

/// Provenance sidecar of an FCIDUMP file.
pub fn read_sidecar(fcidump: &Path) -> Result<BTreeMap<String, String>> {
    let path = sidecar_path(fcidump);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read sidecar {}: {e}", path.display())))?;
    parse_key_values(&text)
}

impl Partition {
    /// Partition from the `fragments` and `fragment_electrons` keys of a sidecar.
    pub fn from_sidecar(meta: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| meta.get(k).ok_or_else(|| Error::Config(format!("sidecar has no '{k}' key")));
        Self::parse(get("fragments")?, get("fragment_electrons")?)
    }
}

/// Which doubly occupied orbitals enter the embedding sum of the fragment Fock operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbedOccupied {
    /// Every doubly occupied orbital of the reference determinant, including the
    /// fragment's own.
    #[default]
    AllOcc,
    /// Only occupied orbitals outside the fragment (inactive-Fock embedding).
    EnvOcc,
}

/// Prefactor in front of the Coulomb/exchange sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FockPrefactor {
    #[default]
    Half,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmbedConfig {
    pub occupied: EmbedOccupied,
    pub prefactor: FockPrefactor,
}

impl EmbedConfig {
    /// The conventional inactive-Fock embedding.
    pub fn inactive_fock() -> Self {
        Self { occupied: EmbedOccupied::EnvOcc, prefactor: FockPrefactor::One }
    }
}

/// An embedded fragment Hamiltonian in the fragment's local orbital order.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentProblem {
    pub fragment_id: usize,
    /// One-body part is the embedded Fock matrix, two-body part the fragment block of `g`.
    pub integrals: IntegralSet,
    /// Constant added to fragment energies. Never summed across fragments.
    pub constant_shift: f64,
    pub n_qubits: usize,
}

/// Doubly occupied orbitals of the aufbau reference: the first `n_elec / 2` orbitals.
pub fn reference_occupied(ints: &IntegralSet) -> Vec<usize> {
    (0..ints.n_elec / 2).collect()
}

/// Builds the embedded problem for one fragment.
///
/// `F_uv = h_uv + c · Σ_i (2 (ii|uv) − (iv|ui))` with `c` set by `cfg.prefactor` and
/// `i` running over the reference occupied set selected by `cfg.occupied`.
pub fn embed_fragment(
    ints: &IntegralSet,
    part: &Partition,
    fragment_id: usize,
    cfg: &EmbedConfig,
) -> Result<FragmentProblem> {
    part.check_against(ints)?;
    let frag = part
        .fragments()
        .get(fragment_id)
        .ok_or_else(|| Error::Validation(format!("no fragment {fragment_id}")))?;
    let orbs = &frag.orbitals;
    let m = orbs.len();
    if m == 0 {
        return Err(Error::Validation(format!("fragment {fragment_id} has no orbitals")));
    }
    let occupied: Vec<usize> = reference_occupied(ints)
        .into_iter()
        .filter(|i| cfg.occupied == EmbedOccupied::AllOcc || !orbs.contains(i))
        .collect();
    let c = match cfg.prefactor {
        FockPrefactor::Half => 0.5,
        FockPrefactor::One => 1.0,
    };

    let mut local = IntegralSet::zeros(m, frag.n_elec, 0);
    for (a, &u) in orbs.iter().enumerate() {
        for (b, &v) in orbs.iter().enumerate() {
            let field: f64 = occupied
                .iter()
                .map(|&i| 2.0 * ints.g(i, i, u, v) - ints.g(i, v, u, i))
                .sum();
            local.h[a * m + b] = ints.h(u, v) + c * field;
        }
    }
    for a in 0..m {
        for b in 0..a {
            let v = 0.5 * (local.h[a * m + b] + local.h[b * m + a]);
            local.h[a * m + b] = v;
            local.h[b * m + a] = v;
        }
    }
    for (a, &p) in orbs.iter().enumerate() {
        for (b, &q) in orbs.iter().enumerate() {
            for (cc, &r) in orbs.iter().enumerate() {
                for (d, &s) in orbs.iter().enumerate() {
                    local.g[((a * m + b) * m + cc) * m + d] = ints.g(p, q, r, s);
                }
            }
        }
    }
    local.core_energy = ints.core_energy;
    if let Some(sym) = &ints.orbsym {
        local.orbsym = Some(orbs.iter().map(|&p| sym[p]).collect());
    }
    Ok(FragmentProblem {
        fragment_id,
        constant_shift: ints.core_energy,
        n_qubits: 2 * m,
        integrals: local,
    })
}

/// Aufbau determinant in the source orbital order, permuted onto the fragment-major
/// qubit register of `part`.
pub fn hf_reference(ints: &IntegralSet, part: &Partition) -> Result<Bitstring> {
    part.check_against(ints)?;
    if ints.ms2 == 0 && ints.n_elec % 2 == 1 {
        return Err(Error::Validation("odd electron count with MS2=0".into()));
    }
    let (n_alpha, n_beta) = ints.spin_counts()?;
    if n_alpha > ints.n_orb || n_beta > ints.n_orb {
        return Err(Error::Validation("too many electrons of one spin".into()));
    }
    let mut bits = Bitstring::zeros(part.n_qubits());
    for p in 0..n_alpha {
        bits.set(part.qubit(p, false), true);
    }
    for p in 0..n_beta {
        bits.set(part.qubit(p, true), true);
    }
    Ok(bits)
}
