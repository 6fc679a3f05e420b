//! Single-point runs and scans.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Method, RunConfig};
use crate::adapt::{adapt_vqe, build_pool, uccgsd_vqe, AdaptResult};
use crate::error::{Error, Result};
use crate::fermion::hamiltonian_to_pauli;
use crate::hea::{assemble_mrps, build_hea, fragment_hamiltonian, fragment_vqe_all, FragmentState};
use crate::integrals::{embed_fragment, hf_reference, parse_fcidump, read_sidecar, rotate_orbitals, IntegralSet, OrbitalRotation, Partition};
use crate::oracle::{exact_ground_state, fidelity, ground_state_in_sector, natural_occupations, npe, one_rdm, shannon_entropy, EntropyConvention, SpectrumResult};
use crate::pauli::PauliSum;
use crate::simulator::{count_cnots, expectation, prepare_basis, QuantumState};

/// Tolerance below the exact energy tolerated before a result is called non-variational.
const VARIATIONAL_SLACK: f64 = 1e-9;

/// One loaded geometry.
#[derive(Debug, Clone)]
pub struct Problem {
    pub tag: String,
    pub integrals: IntegralSet,
    pub partition: Partition,
    pub hamiltonian: PauliSum,
}

pub fn load_problem(path: &Path, rotation: Option<&OrbitalRotation>, partition: Option<&(String, String)>) -> Result<Problem> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut ints = parse_fcidump(&text)?;
    if let Some(u) = rotation {
        ints = rotate_orbitals(&ints, u)?;
    }
    let part = match partition {
        Some((o, e)) => Partition::parse(o, e)?,
        None => Partition::from_sidecar(&read_sidecar(path)?)?,
    };
    part.check_against(&ints)?;
    let hamiltonian = hamiltonian_to_pauli(&ints, &part)?;
    let tag = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Problem { tag, integrals: ints, partition: part, hamiltonian })
}

/// A row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub tag: String,
    pub method: String,
    pub energy: f64,
    pub exact: f64,
    pub cnots: usize,
    pub converged: bool,
}

impl SummaryRow {
    pub fn error(&self) -> f64 {
        self.energy - self.exact
    }
}

pub const SUMMARY_HEADER: &str = "tag,method,energy,exact,error,cnots,converged";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{:.12},{:.12},{:.6e},{},{}",
            r.tag,
            r.method,
            r.energy,
            r.exact,
            r.error(),
            r.cnots,
            r.converged
        )
        .unwrap();
    }
    s
}

/// Everything computed at one geometry.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub tag: String,
    pub method: Method,
    pub energy: f64,
    pub exact: SpectrumResult,
    pub hf_state: QuantumState,
    pub partition: Partition,
    pub fragments: Vec<FragmentState>,
    /// Fragment oracle energies (Fock-space ground state of each embedded fragment).
    pub fragment_exact: Vec<f64>,
    pub mrps: Option<QuantumState>,
    pub ansatz: Option<AdaptResult>,
    pub cnots: usize,
    pub converged: bool,
}

impl PointResult {
    pub fn error(&self) -> f64 {
        self.energy - self.exact.energy
    }

    pub fn fidelity_hf(&self) -> Result<f64> {
        fidelity(&self.exact.state, &self.hf_state)
    }

    pub fn fidelity_mrps(&self) -> Result<Option<f64>> {
        self.mrps.as_ref().map(|m| fidelity(&self.exact.state, m)).transpose()
    }

    /// Shannon entropy of the exact state's natural occupations.
    pub fn entropy(&self, convention: EntropyConvention) -> Result<f64> {
        let n_orb = self.partition.n_orb();
        shannon_entropy(&natural_occupations(&one_rdm(&self.exact.state, n_orb, &self.partition)?), convention)
    }

    pub fn rows(&self) -> Vec<SummaryRow> {
        if self.method == Method::FragmentVqe {
            return self
                .fragments
                .iter()
                .zip(&self.fragment_exact)
                .map(|(f, &e)| SummaryRow {
                    tag: format!("{}/fragment{}", self.tag, f.fragment_id),
                    method: self.method.to_string(),
                    energy: f.energy,
                    exact: e,
                    cnots: 0,
                    converged: self.converged,
                })
                .collect();
        }
        vec![SummaryRow {
            tag: self.tag.clone(),
            method: self.method.to_string(),
            energy: self.energy,
            exact: self.exact.energy,
            cnots: self.cnots,
            converged: self.converged,
        }]
    }
}

pub fn exact_reference(problem: &Problem, sector: bool) -> Result<SpectrumResult> {
    if sector {
        ground_state_in_sector(&problem.hamiltonian, problem.integrals.n_elec)
    } else {
        exact_ground_state(&problem.hamiltonian)
    }
}

/// Optimizes every fragment and returns the states, their oracle energies and the MRPS.
pub fn build_mrps(problem: &Problem, cfg: &RunConfig) -> Result<(Vec<FragmentState>, Vec<f64>, QuantumState)> {
    let problems = (0..problem.partition.n_fragments())
        .map(|k| embed_fragment(&problem.integrals, &problem.partition, k, &cfg.embed))
        .collect::<Result<Vec<_>>>()?;
    let frags = fragment_vqe_all(&problems, &cfg.hea, &cfg.optimizer)?;
    let oracle = problems
        .iter()
        .map(|p| Ok(exact_ground_state(&fragment_hamiltonian(p)?)?.energy))
        .collect::<Result<Vec<f64>>>()?;
    let mrps = assemble_mrps(&frags, &problem.partition)?;
    Ok((frags, oracle, mrps))
}

/// Runs `method` at one geometry. MRPS fragments are optimized when the method needs them
/// or when `with_mrps` asks for the MRPS diagnostics anyway.
pub fn evaluate(problem: &Problem, cfg: &RunConfig, method: Method, with_mrps: bool) -> Result<PointResult> {
    let exact = exact_reference(problem, cfg.sector)?;
    let hf_state = prepare_basis(hf_reference(&problem.integrals, &problem.partition)?);
    let (fragments, fragment_exact, mrps) = if method.needs_mrps() || with_mrps {
        let (f, o, m) = build_mrps(problem, cfg)?;
        (f, o, Some(m))
    } else {
        (Vec::new(), Vec::new(), None)
    };
    let hea_cnots: usize = problem
        .partition
        .fragments()
        .iter()
        .map(|f| build_hea(2 * f.orbitals.len(), &cfg.hea).map(|c| count_cnots(&c)))
        .sum::<Result<usize>>()?;
    let h = &problem.hamiltonian;
    let reference = |m: Method| -> &QuantumState {
        match m {
            Method::HfAdapt | Method::HfUccgsd => &hf_state,
            _ => mrps.as_ref().expect("MRPS built for MRPS-referenced methods"),
        }
    };

    let (energy, cnots, converged, ansatz) = match method {
        Method::Exact => (exact.energy, 0, true, None),
        Method::FragmentVqe | Method::Mrps => (expectation(reference(method), h)?, hea_cnots, true, None),
        Method::MrpsAdapt | Method::HfAdapt => {
            let pool = build_pool(&problem.partition, problem.partition.n_qubits(), cfg.pool)?;
            let r = adapt_vqe(h, reference(method), &pool, &cfg.adapt, &cfg.optimizer)?;
            (r.final_energy, r.cnots(), r.converged, Some(r))
        }
        Method::MrpsUccgsd | Method::HfUccgsd => {
            let r = uccgsd_vqe(h, reference(method), &problem.partition, &cfg.optimizer)?;
            (r.final_energy, r.cnots(), r.converged, Some(r))
        }
        Method::Scan => return Err(Error::Config("scan is not a point method".into())),
    };
    if energy < exact.energy - VARIATIONAL_SLACK {
        log::error!("{}: {} energy {energy:.12} lies below the exact {:.12}", problem.tag, method, exact.energy);
    }
    Ok(PointResult {
        tag: problem.tag.clone(),
        method,
        energy,
        exact,
        hf_state,
        partition: problem.partition.clone(),
        fragments,
        fragment_exact,
        mrps,
        ansatz,
        cnots,
        converged,
    })
}

pub const SCAN_HEADER: &str = "geometry_tag,E_method,E_exact,error,fidelity_HF,fidelity_MRPS,entropy,cumulative_cnots";

/// Scan CSV with an NPE footer.
pub fn scan_csv(points: &[PointResult], cfg: &RunConfig) -> Result<String> {
    let mut s = format!("{SCAN_HEADER}\n");
    let mut errors = Vec::with_capacity(points.len());
    for p in points {
        let entropy = p.entropy(cfg.entropy)?;
        let f_mrps = p.fidelity_mrps()?.map(|f| format!("{f:.10}")).unwrap_or_default();
        writeln!(
            s,
            "{},{:.12},{:.12},{:.6e},{:.10},{},{:.10},{}",
            p.tag,
            p.energy,
            p.exact.energy,
            p.error(),
            p.fidelity_hf()?,
            f_mrps,
            entropy,
            p.cnots
        )
        .unwrap();
        errors.push(p.error());
    }
    writeln!(s, "# npe = {:.6e}", npe(&errors)?).unwrap();
    Ok(s)
}


/// What a run left on disk.
#[derive(Debug)]
pub struct RunOutcome {
    pub points: Vec<PointResult>,
    pub files: Vec<PathBuf>,
    /// False when any optimization stopped short of its convergence criterion.
    pub converged: bool,
}

/// Writes through a temporary file so readers never see a half-written artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs a configuration and writes `summary.csv`, per-point trajectories and fragment
/// records, `scan.csv` for scans, and `run.log` (the only file carrying wall times).
///
/// When some geometries fail, the artifacts of the others are still written before the
/// first error is returned.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    fs::create_dir_all(&cfg.out)?;
    let rotation = match &cfg.rotation {
        Some(p) => Some(OrbitalRotation::parse(&fs::read_to_string(p)?)?),
        None => None,
    };
    let problems = cfg
        .integrals
        .iter()
        .map(|p| load_problem(p, rotation.as_ref(), cfg.partition.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let method = cfg.point_method();
    let scan = cfg.method == Method::Scan;

    let results: Vec<(Result<PointResult>, f64)> = problems
        .par_iter()
        .map(|p| {
            let t = Instant::now();
            (evaluate(p, cfg, method, scan), t.elapsed().as_secs_f64())
        })
        .collect();

    let mut log = format!("method = {}\nout = {}\n", cfg.method, cfg.out.display());
    let mut files = Vec::new();
    let mut points = Vec::new();
    let mut first_error = None;
    for ((res, secs), prob) in results.into_iter().zip(&problems) {
        match res {
            Ok(p) => {
                writeln!(log, "{} {} wall_time_s = {secs:.3}", p.tag, p.method).unwrap();
                for f in &p.fragments {
                    let path = cfg.out.join(format!("{}.fragment{}.txt", p.tag, f.fragment_id));
                    write_atomic(&path, &f.to_record())?;
                    files.push(path);
                }
                if let Some(a) = &p.ansatz {
                    let path = cfg.out.join(format!("{}.{}.trajectory.csv", p.tag, p.method));
                    write_atomic(&path, &a.trajectory_csv())?;
                    files.push(path);
                }
                if !p.converged {
                    writeln!(log, "{} {} NOT CONVERGED", p.tag, p.method).unwrap();
                }
                points.push(p);
            }
            Err(e) => {
                writeln!(log, "{} FAILED: {e}", prob.tag).unwrap();
                log::error!("{}: {e}", prob.tag);
                first_error.get_or_insert(e);
            }
        }
    }

    let rows: Vec<SummaryRow> = points.iter().flat_map(|p| p.rows()).collect();
    let summary = cfg.out.join("summary.csv");
    write_atomic(&summary, &summary_csv(&rows))?;
    files.push(summary);
    if scan && first_error.is_none() {
        let path = cfg.out.join("scan.csv");
        write_atomic(&path, &scan_csv(&points, cfg)?)?;
        files.push(path);
    }
    writeln!(log, "total wall_time_s = {:.3}", start.elapsed().as_secs_f64()).unwrap();
    let log_path = cfg.out.join("run.log");
    write_atomic(&log_path, &log)?;
    files.push(log_path);

    if let Some(e) = first_error {
        return Err(e);
    }
    let converged = points.iter().all(|p| p.converged);
    Ok(RunOutcome { points, files, converged })
}
