//! Desk-scale saddle-point test systems and the on-disk problem directory.
//!
//! The MAC generators use an N×N grid of pressure cells on the unit square
//! with mesh width h = 1/N and homogeneous Dirichlet velocity:
//!
//! * `u` lives on the (N−1)·N interior vertical faces, `v` on the N·(N−1)
//!   interior horizontal faces, so n = 2N(N−1) and m = N².
//! * `G` applies the 5-point Laplacian to each component. A wall parallel to
//!   a velocity component sits half a cell away; it is handled with a ghost
//!   value `−u`, which adds one extra `1/h²` to the diagonal and keeps `G`
//!   symmetric.
//! * `B` is the discrete gradient `(p_right − p_left)/h`, so `Bᵀ` is minus the
//!   divergence and constant pressures span `Null(B)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{self, linalg};
use crate::error::{Error, Result};
use crate::mmio;
use crate::sparse::SparseMatrix;
use crate::system::SaddleSystem;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    StokesMac { grid: usize, nu: f64 },
    OseenMac { grid: usize, nu: f64, wind: [f64; 2] },
    Random { n: usize, m: usize, rank: usize, shift: f64 },
    /// The 2×2 matrix `[[1, 2], [−2, 1]]` as a plain square system (m = 0).
    Bb1Counterexample,
    Import(PathBuf),
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::StokesMac { .. } => "stokes_mac",
            ProblemKind::OseenMac { .. } => "oseen_mac",
            ProblemKind::Random { .. } => "random",
            ProblemKind::Bb1Counterexample => "bb1_counterexample",
            ProblemKind::Import(_) => "import",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn stokes(grid: usize, nu: f64) -> Self {
        Self::new(ProblemKind::StokesMac { grid, nu }, 1)
    }

    pub fn oseen(grid: usize, nu: f64, wind: [f64; 2]) -> Self {
        Self::new(ProblemKind::OseenMac { grid, nu, wind }, 1)
    }

    pub fn random(n: usize, m: usize, rank: usize, shift: f64) -> Self {
        Self::new(ProblemKind::Random { n, m, rank, shift }, 1)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Short identifier used in result tables, e.g. `stokes_mac_N8_nu1`.
    pub fn id(&self) -> String {
        match &self.kind {
            ProblemKind::StokesMac { grid, nu } => format!("stokes_mac_N{grid}_nu{nu}"),
            ProblemKind::OseenMac { grid, nu, wind } => {
                format!("oseen_mac_N{grid}_nu{nu}_w{}_{}", wind[0], wind[1])
            }
            ProblemKind::Random { n, m, rank, shift } => {
                format!("random_n{n}_m{m}_s{rank}_shift{shift}_seed{}", self.seed)
            }
            ProblemKind::Bb1Counterexample => "bb1_counterexample".into(),
            ProblemKind::Import(p) => p.display().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match &self.kind {
            ProblemKind::StokesMac { grid, nu } | ProblemKind::OseenMac { grid, nu, .. } => {
                if *grid < 2 {
                    return bad(format!("grid must be at least 2, got {grid}"));
                }
                if !(*nu > 0.0) || !nu.is_finite() {
                    return bad(format!("viscosity must be positive, got {nu}"));
                }
                if let ProblemKind::OseenMac { wind, .. } = &self.kind {
                    if wind.iter().any(|w| !w.is_finite()) {
                        return bad("wind components must be finite".into());
                    }
                }
            }
            ProblemKind::Random { n, m, rank, shift } => {
                if !(1 <= *rank && rank <= m && m <= n) {
                    return bad(format!(
                        "random problem needs 1 <= rank <= m <= n, got n={n}, m={m}, rank={rank}"
                    ));
                }
                if !shift.is_finite() {
                    return bad("shift must be finite".into());
                }
            }
            ProblemKind::Bb1Counterexample | ProblemKind::Import(_) => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemProperties {
    pub g_is_upd: bool,
    pub b_rank: usize,
    /// `λ_min((G + Gᵀ)/2)`; NaN when the problem is above the dense cap.
    pub h_min_eig: f64,
}

#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub system: SaddleSystem,
    pub reference_solution: Option<Vec<f64>>,
    /// `None` for imported problems above the dense cap.
    pub properties: Option<ProblemProperties>,
}

pub fn generate(spec: &ProblemSpec) -> Result<GeneratedProblem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (gmat, bmat, known_rank, nu) = match &spec.kind {
        ProblemKind::StokesMac { grid, nu } => {
            let (g, b) = mac_blocks(*grid, *nu, None);
            (g, b, Some(grid * grid - 1), Some(*nu))
        }
        ProblemKind::OseenMac { grid, nu, wind } => {
            let (g, b) = mac_blocks(*grid, *nu, Some(*wind));
            (g, b, Some(grid * grid - 1), Some(*nu))
        }
        ProblemKind::Random { n, m, rank, shift } => {
            let (g, b) = random_blocks(&mut rng, *n, *m, *rank, *shift);
            (g, b, Some(*rank), None)
        }
        ProblemKind::Bb1Counterexample => {
            let g = SparseMatrix::from_triplets(
                2,
                2,
                &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, -2.0), (1, 1, 1.0)],
            )?;
            (g, SparseMatrix::zeros(2, 0), Some(0), None)
        }
        ProblemKind::Import(dir) => return load(dir),
    };

    let (n, m) = (gmat.rows(), bmat.cols());
    let zstar: Vec<f64> = (0..n + m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut system = SaddleSystem::new(gmat, bmat, vec![0.0; n], vec![0.0; m], None)?;
    let ell = system.apply_a(&zstar)?;
    let (f, g) = ell.split_at(n);
    system = system.with_rhs(f.to_vec(), g.to_vec())?;

    let properties = if n + m <= analysis::dense_cap() {
        dense_properties(&system)?
    } else {
        // analytic values for the structured generators
        ProblemProperties {
            g_is_upd: true,
            b_rank: known_rank.unwrap_or(m),
            h_min_eig: f64::NAN,
        }
    };
    system.set_b_rank(Some(properties.b_rank));
    system.labels.insert("kind".into(), spec.kind.name().into());
    system.labels.insert("seed".into(), spec.seed.to_string());
    if let Some(nu) = nu {
        system.labels.insert("nu".into(), nu.to_string());
    }
    match &spec.kind {
        ProblemKind::StokesMac { grid, .. } => {
            system.labels.insert("grid".into(), grid.to_string());
        }
        ProblemKind::OseenMac { grid, wind, .. } => {
            system.labels.insert("grid".into(), grid.to_string());
            system
                .labels
                .insert("wind".into(), format!("{},{}", wind[0], wind[1]));
        }
        _ => {}
    }
    Ok(GeneratedProblem {
        system,
        reference_solution: Some(zstar),
        properties: Some(properties),
    })
}

/// Rank of `B`, UPD-ness and `λ_min(H)` from dense decompositions.
pub fn dense_properties(sys: &SaddleSystem) -> Result<ProblemProperties> {
    let g = linalg::sparse_to_na(sys.g_matrix());
    let h = (&g + g.transpose()) * 0.5;
    let h_min_eig = linalg::lambda_min(&h);
    let b_rank = linalg::numerical_rank(&linalg::sparse_to_na(sys.b_matrix()))?;
    Ok(ProblemProperties {
        g_is_upd: h_min_eig > 0.0,
        b_rank,
        h_min_eig,
    })
}

struct MacLayout {
    n: usize,
}

impl MacLayout {
    fn u(&self, i: usize, j: usize) -> usize {
        j * (self.n - 1) + i
    }

    fn v(&self, i: usize, j: usize) -> usize {
        self.n * (self.n - 1) + j * self.n + i
    }

    fn p(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }
}

/// Velocity block `νL (+ C)` and gradient `B` on the staggered grid.
fn mac_blocks(grid: usize, nu: f64, wind: Option<[f64; 2]>) -> (SparseMatrix, SparseMatrix) {
    let lay = MacLayout { n: grid };
    let nn = grid;
    let h = 1.0 / nn as f64;
    let ih2 = nu / (h * h);
    let nvel = 2 * nn * (nn - 1);
    let npres = nn * nn;
    let mut gt: Vec<(usize, usize, f64)> = Vec::new();
    let mut bt: Vec<(usize, usize, f64)> = Vec::new();

    // one velocity component on an (nx × ny) array of unknowns; `along` is the
    // direction normal to the faces (walls there carry the zero normal velocity)
    let component = |nx: usize,
                         ny: usize,
                         idx: &dyn Fn(usize, usize) -> usize,
                         gt: &mut Vec<(usize, usize, f64)>,
                         normal_is_x: bool| {
        for j in 0..ny {
            for i in 0..nx {
                let row = idx(i, j);
                let mut diag = 4.0;
                let neighbours = [
                    (i.checked_sub(1).map(|a| (a, j)), true, -1.0),
                    ((i + 1 < nx).then_some((i + 1, j)), true, 1.0),
                    (j.checked_sub(1).map(|b| (i, b)), false, -1.0),
                    ((j + 1 < ny).then_some((i, j + 1)), false, 1.0),
                ];
                for (nb, in_x, sign) in neighbours {
                    match nb {
                        Some((a, b)) => {
                            let col = idx(a, b);
                            gt.push((row, col, -ih2));
                            if let Some(w) = wind {
                                let wc = if in_x { w[0] } else { w[1] };
                                gt.push((row, col, sign * wc / (2.0 * h)));
                            }
                        }
                        None => {
                            // a wall crossing this stencil direction
                            if in_x != normal_is_x {
                                diag += 1.0;
                            }
                        }
                    }
                }
                gt.push((row, row, diag * ih2));
            }
        }
    };
    component(nn - 1, nn, &|i, j| lay.u(i, j), &mut gt, true);
    component(nn, nn - 1, &|i, j| lay.v(i, j), &mut gt, false);

    for j in 0..nn {
        for i in 0..nn - 1 {
            let row = lay.u(i, j);
            bt.push((row, lay.p(i + 1, j), 1.0 / h));
            bt.push((row, lay.p(i, j), -1.0 / h));
        }
    }
    for j in 0..nn - 1 {
        for i in 0..nn {
            let row = lay.v(i, j);
            bt.push((row, lay.p(i, j + 1), 1.0 / h));
            bt.push((row, lay.p(i, j), -1.0 / h));
        }
    }
    let g = SparseMatrix::from_triplets_summed(nvel, nvel, &gt).expect("indices in range");
    let b = SparseMatrix::from_triplets(nvel, npres, &bt).expect("indices in range");
    (g, b)
}

/// `G = shift·I + R + K` with `R` symmetric PSD and `K` skew; `B = U F` with
/// orthonormal `U` (n×s) and a random s×m factor `F`.
fn random_blocks(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    s: usize,
    shift: f64,
) -> (SparseMatrix, SparseMatrix) {
    let mut uniform = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
    let c = uniform(n, n);
    let d = uniform(n, n);
    let r = &c * c.transpose() / n as f64;
    let k = (&d - d.transpose()) * 0.5;
    let g = DMatrix::identity(n, n) * shift + r + k;

    let raw = uniform(n, s);
    let u = raw.qr().q();
    let f = uniform(s, m);
    let b = u * f;
    (dense_to_sparse(&g), dense_to_sparse(&b))
}

fn dense_to_sparse(a: &DMatrix<f64>) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                t.push((i, j, a[(i, j)]));
            }
        }
    }
    SparseMatrix::from_triplets(a.nrows(), a.ncols(), &t).expect("unique entries")
}

/// Writes `G.mtx`, `B.mtx`, `f.vec`, `g.vec` and `meta.txt` into `dir`.
pub fn save(problem: &GeneratedProblem, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let sys = &problem.system;
    mmio::write_matrix_market(sys.g_matrix(), dir.join("G.mtx"))?;
    mmio::write_matrix_market(sys.b_matrix(), dir.join("B.mtx"))?;
    mmio::write_vector(sys.f(), dir.join("f.vec"))?;
    mmio::write_vector(sys.g(), dir.join("g.vec"))?;
    let mut meta = BTreeMap::new();
    for (k, v) in &sys.labels {
        meta.insert(k.clone(), v.clone());
    }
    meta.insert("n".into(), sys.n().to_string());
    meta.insert("m".into(), sys.m().to_string());
    if let Some(s) = sys.b_rank() {
        meta.insert("b_rank".into(), s.to_string());
    }
    let mut text = String::new();
    for (k, v) in &meta {
        let _ = writeln!(text, "{k}={v}");
    }
    let path = dir.join("meta.txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn read_meta(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut meta = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: format!("expected key=value, got `{line}`"),
        })?;
        meta.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(meta)
}

/// Reads a problem directory written by [`save`] (or by hand).
///
/// `meta.txt` is optional. Dense properties are computed only when
/// `n + m` is within the analysis cap.
pub fn load(dir: impl AsRef<Path>) -> Result<GeneratedProblem> {
    let dir = dir.as_ref();
    let g = mmio::read_matrix_market(dir.join("G.mtx"))?;
    let b = mmio::read_matrix_market(dir.join("B.mtx"))?;
    let f = mmio::read_vector(dir.join("f.vec"))?;
    let gv = mmio::read_vector(dir.join("g.vec"))?;
    let meta = read_meta(&dir.join("meta.txt"))?;
    let b_rank = match meta.get("b_rank") {
        Some(v) => Some(v.parse::<usize>().map_err(|_| Error::Parse {
            path: dir.join("meta.txt").display().to_string(),
            line: 0,
            msg: format!("bad b_rank `{v}`"),
        })?),
        None => None,
    };
    let mut system = SaddleSystem::new(g, b, f, gv, b_rank)?;
    for (k, v) in meta {
        if k != "n" && k != "m" && k != "b_rank" {
            system.labels.insert(k, v);
        }
    }
    let properties = if system.dim() <= analysis::dense_cap() {
        let p = dense_properties(&system)?;
        if system.b_rank().is_none() {
            system.set_b_rank(Some(p.b_rank));
        }
        Some(p)
    } else {
        None
    };
    Ok(GeneratedProblem {
        system,
        reference_solution: None,
        properties,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecops;

    #[test]
    fn stokes_counts_and_symmetry() {
        let p = generate(&ProblemSpec::stokes(4, 1.0)).unwrap();
        assert_eq!(p.system.n(), 24);
        assert_eq!(p.system.m(), 16);
        let props = p.properties.unwrap();
        assert_eq!(props.b_rank, 15);
        assert!(props.g_is_upd);
        assert_eq!(p.system.g_matrix().max_asymmetry(), 0.0);
    }

    #[test]
    fn constants_are_in_null_b() {
        let p = generate(&ProblemSpec::stokes(5, 0.3)).unwrap();
        let ones = vec![1.0; p.system.m()];
        let bp = p.system.b_matrix().spmv(&ones).unwrap();
        assert!(vecops::inf_norm(&bp) < 1e-12);
    }

    #[test]
    fn oseen_symmetric_part_is_laplacian() {
        let s = generate(&ProblemSpec::oseen(4, 0.1, [1.0, 0.5])).unwrap();
        let l = generate(&ProblemSpec::stokes(4, 0.1)).unwrap();
        let g = linalg::sparse_to_na(s.system.g_matrix());
        let lap = linalg::sparse_to_na(l.system.g_matrix());
        let h = (&g + g.transpose()) * 0.5;
        assert!((h - &lap).amax() < 1e-12);
        assert!((&g - &lap).amax() > 0.1);
        assert!(s.properties.unwrap().h_min_eig > 0.0);
    }

    #[test]
    fn manufactured_rhs_is_consistent() {
        for spec in [
            ProblemSpec::stokes(4, 1.0),
            ProblemSpec::oseen(4, 0.1, [1.0, 0.0]),
            ProblemSpec::random(6, 3, 2, 1.0),
        ] {
            let p = generate(&spec).unwrap();
            let z = p.reference_solution.as_ref().unwrap();
            let r = p.system.residual(z).unwrap();
            assert!(vecops::norm2(&r) <= 1e-12 * vecops::norm2(&p.system.rhs()));
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = generate(&ProblemSpec::random(8, 4, 3, 0.5).with_seed(11)).unwrap();
        let b = generate(&ProblemSpec::random(8, 4, 3, 0.5).with_seed(11)).unwrap();
        assert_eq!(a.system, b.system);
        let c = generate(&ProblemSpec::random(8, 4, 3, 0.5).with_seed(12)).unwrap();
        assert_ne!(a.system, c.system);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&ProblemSpec::stokes(1, 1.0)).is_err());
        assert!(generate(&ProblemSpec::stokes(4, 0.0)).is_err());
        assert!(generate(&ProblemSpec::random(3, 4, 2, 1.0)).is_err());
        assert!(generate(&ProblemSpec::random(4, 3, 0, 1.0)).is_err());
    }
}
