use std::path::Path;
use std::process::ExitCode;

use cartanflow::dynamics::{compare_with_oracle, integrate_reduced, sample_generic_start, uniform_grid, PhasePoint};
use cartanflow::linalg::{frob, matrix_from_json, MatrixJson};
use cartanflow::random::random_p;
use cartanflow::reduction::{closed_form_density, density_constant, jacobian_density, reduce};
use cartanflow::sampling::{histogram_rows, radial_histogram, verify_density as run_verify, RadialTheory};
use cartanflow::slice::{exact_slice_reduce, radial_decompose, reassemble, slice_contains, slice_of};
use cartanflow::spaces::SpaceSummary;
use cartanflow::{make_space, Error, Kind, SpaceDescriptor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{emit, emit_csv, emit_json, CliError, CliResult, Meta};
use crate::{DecomposeArgs, DensityArgs, FlowArgs, Format, Method, SampleArgs, SpaceArgs, VerifyArgs};

/// Distance from the walls kept by random flow starts.
const FLOW_GAP: f64 = 1e-3;

fn space_of(a: &SpaceArgs) -> CliResult<SpaceDescriptor> {
    let kind: Kind = a.class.parse()?;
    Ok(make_space(kind, a.m, a.n)?)
}

fn check_threads(threads: usize) -> CliResult<()> {
    if threads == 0 {
        return Err(Error::Validation("--threads must be at least 1".into()).into());
    }
    Ok(())
}

/// Sizes used by `spaces list`.
fn listed_spaces() -> Vec<SpaceDescriptor> {
    Kind::ALL
        .iter()
        .map(|&k| match k {
            Kind::Aiii | Kind::Bdi | Kind::Cii => make_space(k, 2, 1),
            Kind::Diii => make_space(k, 0, 4),
            Kind::Ci => make_space(k, 0, 2),
            _ => make_space(k, 0, 3),
        })
        .map(|s| s.expect("listed sizes are valid"))
        .collect()
}

pub fn spaces_list(format: Format) -> CliResult<ExitCode> {
    let rows: Vec<SpaceSummary> = listed_spaces().iter().map(|s| s.summary()).collect();
    match format {
        Format::Json => emit_json(None, &rows)?,
        Format::Text => {
            let mut out = format!(
                "{:<5} {:<30} {:>6} {:>4} {:>6} {:>5} {:>6}  {}\n",
                "kind", "name", "(m,n)", "N", "dim p", "rank", "dim M", "positive roots"
            );
            for r in &rows {
                let roots: Vec<String> = r.roots.iter().map(|x| format!("{}:{}", x.root, x.multiplicity)).collect();
                out.push_str(&format!(
                    "{:<5} {:<30} {:>6} {:>4} {:>6} {:>5} {:>6}  {}\n",
                    r.kind.as_str(),
                    r.name,
                    format!("({},{})", r.m, r.n),
                    r.ambient_dim,
                    r.dim_p,
                    r.real_rank,
                    r.dim_m,
                    roots.join(" ")
                ));
            }
            emit(None, out.as_bytes())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DecomposeOut {
    meta: Meta,
    q: Vec<f64>,
    k: MatrixJson,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_slice: Option<ExactSliceOut>,
}

#[derive(Serialize)]
struct ExactSliceOut {
    p: Vec<f64>,
    r_canonical: MatrixJson,
    m_element: MatrixJson,
    non_generic: bool,
    contained: bool,
}

fn read_matrix(path: &Path) -> CliResult<cartanflow::Cmat> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    let m = matrix_from_json(&text)?;
    Ok(m)
}

pub fn decompose(a: &DecomposeArgs) -> CliResult<ExitCode> {
    let space = space_of(&a.space)?;
    let (x, y) = match (&a.input, a.seed) {
        (Some(path), _) => {
            let x = read_matrix(path)?;
            let y = a.momentum.as_deref().map(read_matrix).transpose()?;
            (x, y)
        }
        (None, Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_p(&space, &mut rng);
            let y = random_p(&space, &mut rng);
            (x, Some(y))
        }
        (None, None) => return Err(Error::Validation("one of --seed or --input is required".into()).into()),
    };
    if x.nrows() != space.ambient_dim() || x.ncols() != space.ambient_dim() {
        return Err(Error::Validation(format!(
            "{}: expected a {}x{} matrix, got {}x{}",
            space.label(),
            space.ambient_dim(),
            space.ambient_dim(),
            x.nrows(),
            x.ncols()
        ))
        .into());
    }
    let dec = radial_decompose(&space, &x)?;
    let residual = frob(&(reassemble(&space, &dec.q, &dec.k) - &x)) / frob(&x).max(1e-14);
    let exact = if a.exact_slice {
        let y = y.ok_or_else(|| Error::Validation("--exact-slice with --input needs --momentum".into()))?;
        let (sc, _) = slice_of(&space, &x, &y)?;
        let (canon, m) = exact_slice_reduce(&space, &sc)?;
        let contained = slice_contains(&space, &canon.coords).contained;
        Some(ExactSliceOut {
            p: canon.coords.p.clone(),
            r_canonical: MatrixJson::from_matrix(&canon.coords.r),
            m_element: MatrixJson::from_matrix(&m),
            non_generic: canon.non_generic,
            contained,
        })
    } else {
        None
    };
    let out = DecomposeOut {
        meta: Meta::new(&space, a.seed),
        q: dec.q,
        k: MatrixJson::from_matrix(&dec.k),
        residual,
        exact_slice: exact,
    };
    emit_json(a.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DensityOut {
    meta: Meta,
    q: Vec<f64>,
    numeric: Option<f64>,
    closed: Option<f64>,
    ratio: Option<f64>,
    constant: f64,
}

pub fn density(a: &DensityArgs) -> CliResult<ExitCode> {
    let space = space_of(&a.space)?;
    let q = &a.q;
    if q.len() != space.coord_len() {
        return Err(Error::Validation(format!(
            "{}: --q needs {} coordinates, got {}",
            space.label(),
            space.coord_len(),
            q.len()
        ))
        .into());
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("--q has a non-finite entry".into()).into());
    }
    if space.kind().traceless_coordinates() {
        let sum: f64 = q.iter().sum();
        let scale = q.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if sum.abs() > 1e-12 * scale {
            return Err(Error::Validation(format!("{}: coordinates must sum to zero, got {sum}", space.label())).into());
        }
    }
    let constant = density_constant(&space)?;
    let numeric = matches!(a.method, Method::Numeric | Method::Both).then(|| jacobian_density(&space, q));
    let closed = matches!(a.method, Method::Closed | Method::Both).then(|| closed_form_density(&space, q));
    let ratio = match (numeric, closed) {
        (Some(x), Some(y)) if y != 0.0 => Some(x / y),
        _ => None,
    };
    let out = DensityOut { meta: Meta::new(&space, None), q: q.clone(), numeric, closed, ratio, constant };
    emit_json(a.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn sample(a: &SampleArgs) -> CliResult<ExitCode> {
    let space = space_of(&a.space)?;
    check_threads(a.threads)?;
    let hist = radial_histogram(&space, a.count, a.bins, a.seed, a.threads)?;
    let theory = match RadialTheory::new(&space) {
        Ok(t) => Some(t),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let rows: Vec<Vec<Option<f64>>> = histogram_rows(&hist, theory.as_ref())?
        .into_iter()
        .map(|r| {
            vec![
                Some(r.coord as f64),
                Some(r.bin_lo),
                Some(r.bin_hi),
                Some(r.count as f64),
                Some(r.empirical_density),
                r.theoretical_density,
            ]
        })
        .collect();
    let header: Vec<String> = ["coord", "bin_lo", "bin_hi", "count", "empirical_density", "theoretical_density"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    emit_csv(a.out.as_deref(), &Meta::new(&space, Some(a.seed)), &header, &rows)?;
    Ok(ExitCode::SUCCESS)
}

pub fn flow(a: &FlowArgs) -> CliResult<ExitCode> {
    let space = space_of(&a.space)?;
    if !(a.t_max.is_finite() && a.t_max > 0.0) || a.steps == 0 {
        return Err(Error::Validation("--t-max must be positive and --steps at least 1".into()).into());
    }
    let grid = uniform_grid(a.t_max, a.steps);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let start: PhasePoint = sample_generic_start(&space, &mut rng, &grid, FLOW_GAP)?;
    let (state, _) = reduce(&space, &start.x, &start.y)?;
    let traj = integrate_reduced(&space, &state, a.t_max, a.steps)?;
    let deviation = if a.compare { Some(compare_with_oracle(&space, &start, &grid)?) } else { None };
    if let Some(reason) = traj.abort.as_ref().or(deviation.as_ref().and_then(|d| d.truncated.as_ref())) {
        eprintln!("{}", serde_json::json!({ "warning": "truncated", "message": reason }));
    }
    let nq = space.coord_len();
    let nl = traj.l_spectrum.first().map_or(0, |v| v.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=nq).map(|i| format!("q_{i}")));
    header.push("H".into());
    header.extend((1..=nl).map(|i| format!("l_spec_{i}")));
    if a.compare {
        header.push("deviation".into());
    }
    let rows: Vec<Vec<Option<f64>>> = (0..traj.times.len())
        .map(|i| {
            let mut row = vec![Some(traj.times[i])];
            row.extend(traj.q[i].iter().map(|&v| Some(v)));
            row.push(Some(traj.energy[i]));
            row.extend(traj.l_spectrum[i].iter().map(|&v| Some(v)));
            if let Some(d) = &deviation {
                row.push(d.deviation.get(i).copied());
            }
            row
        })
        .collect();
    emit_csv(a.out.as_deref(), &Meta::new(&space, Some(a.seed)), &header, &rows)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyOut {
    meta: Meta,
    count: u64,
    bins: usize,
    constant_ratio_ok: bool,
    constant: Option<f64>,
    normalization: f64,
    ks_statistic: f64,
    threshold: f64,
    pass: bool,
}

pub fn verify_density(a: &VerifyArgs) -> CliResult<ExitCode> {
    let space = space_of(&a.space)?;
    check_threads(a.threads)?;
    let r = run_verify(&space, a.count, a.bins, a.seed, a.threads)?;
    let out = VerifyOut {
        meta: Meta::new(&space, Some(a.seed)),
        count: a.count,
        bins: a.bins,
        constant_ratio_ok: r.constant_ratio_ok,
        constant: r.constant,
        normalization: r.normalization,
        ks_statistic: r.ks_statistic,
        threshold: r.threshold,
        pass: r.pass,
    };
    emit_json(a.out.as_deref(), &out)?;
    if !r.pass {
        let e = CliError::Lib(Error::Consistency(format!("{}: density verification failed", space.label())));
        eprintln!("{}", e.to_json_line());
        return Ok(ExitCode::from(e.exit_code()));
    }
    Ok(ExitCode::SUCCESS)
}
