use std::path::PathBuf;

use hitchin_core::combinatorics::{r_and_s, trace_psi, TraceOptions, TraceOutcome};
use hitchin_core::degeneration::{
    compute_k, compute_l, entropy_upper_bound, fuchsian_boundary, fuchsian_invariants, internal_sequence_scan,
    length_lower_bound, triangle_ray,
};
use hitchin_core::params::{check_closed_leaf, xi_forward, xi_inverse, HitchinParams, InternalParams, PantsDecomposition, PantsInvariants};
use hitchin_core::{Backend, WeylChamberPoint};

use crate::config::{read_vec, ConfigScalar, Direction, Loaded, ParametersSection, RunConfig, SlotEntry};
use crate::error::{CliError, CliResult};
use crate::table::{cell_f64, cell_opt, emit, render, Provenance, ResultTable};

/// Everything a command needs besides its own arguments.
pub struct Context {
    pub loaded: Option<Loaded>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Context {
    pub fn config(&self) -> CliResult<&RunConfig> {
        self.loaded
            .as_ref()
            .map(|l| &l.config)
            .ok_or_else(|| CliError::Input("this command needs --config".into()))
    }

    fn provenance(&self, command: &str, backend: Backend) -> Provenance {
        Provenance {
            command: command.into(),
            config_sha256: self.loaded.as_ref().map(|l| l.sha256.clone()),
            backend: backend_name(backend).into(),
            seed: self.seed,
        }
    }

    fn write_table(&self, command: &str, backend: Backend, table: &ResultTable) -> CliResult<()> {
        emit(&render(table, &self.provenance(command, backend))?, self.out.as_deref())
    }

    fn write_config(&self, config: &RunConfig) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(config)?;
        text.push('\n');
        emit(text.as_bytes(), self.out.as_deref())
    }
}

pub fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::Exact => "exact",
        Backend::Float64 => "float64",
    }
}

/// Residual table of the closed-leaf relations; fails naming the first
/// relation outside tolerance.
pub fn invariants<S: ConfigScalar>(ctx: &Context) -> CliResult<()> {
    let c = ctx.config()?;
    let d = c.decomposition()?;
    let p = c.parameters()?;
    let inv = p.invariants::<S>(c.n)?;
    let boundary = p.boundary::<S>()?;
    let report = check_closed_leaf(&d, &inv, boundary.as_deref())?;
    let mut table = ResultTable::new(&["pants_id", "relation", "k", "residual"]);
    for r in report.rows() {
        table.push(vec![r.pants_id.to_string(), r.relation, r.k.to_string(), cell_f64(r.residual)]);
    }
    ctx.write_table("invariants", S::BACKEND, &table)?;
    let tol = match S::BACKEND {
        Backend::Exact => 0.0,
        Backend::Float64 => c.residual_tol(),
    };
    match report.first_failure(tol) {
        Some(f) => Err(CliError::Relation(format!("relation failed: {f}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReparamDirection {
    /// invariants and gluing values to coordinates
    Forward,
    /// coordinates to invariants
    Inverse,
}

/// Rewrites the parameters section in the other coordinate system; every
/// other section is copied through.
pub fn reparam<S: ConfigScalar>(ctx: &Context, direction: ReparamDirection) -> CliResult<()> {
    let c = ctx.config()?;
    let d = c.decomposition()?;
    let p = c.parameters()?;
    let section = match direction {
        ReparamDirection::Forward => {
            let inv = p.invariants::<S>(c.n)?;
            let coords = xi_forward(&d, &inv, p.gluing(c.n, d.num_curves())?)?;
            ParametersSection::from_coordinates(&coords)
        }
        ReparamDirection::Inverse => {
            let coords: HitchinParams<S> = p.coordinates(c)?;
            let (inv, gluing) = xi_inverse(&coords)?;
            ParametersSection::from_invariants(&inv, Some(&coords.boundary), &gluing)
        }
    };
    let mut out = c.clone();
    out.parameters = Some(section);
    ctx.write_config(&out)
}

struct FloatData {
    decomposition: PantsDecomposition,
    invariants: Vec<PantsInvariants<f64>>,
    boundary: Vec<WeylChamberPoint<f64>>,
    gluing: Vec<Vec<f64>>,
}

/// Invariants and boundary in floating point, from coordinates, from
/// invariants, or from the Fuchsian surface, in that order of preference.
fn float_data(c: &RunConfig) -> CliResult<FloatData> {
    if let Some(p) = &c.parameters {
        let d = c.decomposition()?;
        if p.internal.is_some() {
            let coords: HitchinParams<f64> = p.coordinates(c)?;
            let (invariants, gluing) = xi_inverse(&coords)?;
            return Ok(FloatData {
                decomposition: d,
                invariants,
                boundary: coords.boundary,
                gluing,
            });
        }
        if p.invariants.is_some() {
            let invariants = p.invariants::<f64>(c.n)?;
            let gluing = p.gluing(c.n, d.num_curves())?;
            let boundary = match p.boundary::<f64>()? {
                Some(b) => b,
                None => xi_forward(&d, &invariants, gluing.clone())?.boundary,
            };
            return Ok(FloatData {
                decomposition: d,
                invariants,
                boundary,
                gluing,
            });
        }
    }
    if c.surface.is_some() {
        let s = c.surface()?;
        return Ok(FloatData {
            decomposition: s.decomposition(),
            invariants: fuchsian_invariants(&s, c.n)?,
            boundary: fuchsian_boundary(&s, c.n)?,
            gluing: vec![vec![0.0; c.n - 1]; 3],
        });
    }
    Err(CliError::Input("config needs parameters or a surface".into()))
}

/// K, L and the entropy bound, with the K value of every edge.
pub fn kbound(ctx: &Context) -> CliResult<()> {
    let c = ctx.config()?;
    let data = float_data(c)?;
    let (k, per_edge) = compute_k(&data.decomposition, &data.invariants)?;
    let l = compute_l(&data.boundary)?;
    let h = entropy_upper_bound(k, l, data.decomposition.genus as u64)?;
    let mut table = ResultTable::new(&["quantity", "edge_id", "value"]);
    table.push(vec!["K".into(), String::new(), cell_f64(k)]);
    table.push(vec!["L".into(), String::new(), cell_f64(l)]);
    table.push(vec!["entropy_bound".into(), String::new(), cell_f64(h)]);
    for (e, v) in &per_edge {
        table.push(vec!["k_edge".into(), e.to_string(), cell_f64(*v)]);
    }
    ctx.write_table("kbound", Backend::Float64, &table)
}

/// Share of scan rows that must succeed for a zero exit.
pub const SCAN_SUCCESS_SHARE: f64 = 0.9;

pub fn entropy_scan(ctx: &Context) -> CliResult<()> {
    let c = ctx.config()?;
    let scan = c.scan.as_ref().ok_or_else(|| CliError::Input("config has no scan section".into()))?;
    let base = match c.parameters.as_ref().filter(|p| p.internal.is_some()) {
        Some(p) => p.coordinates::<f64>(c)?,
        None => {
            let data = float_data(c)?;
            xi_forward(&data.decomposition, &data.invariants, data.gluing)?
        }
    };
    let pants = base.decomposition.num_pants();
    let direction = match &scan.direction {
        Direction::Named(name) if name == "triangle" => triangle_ray(c.n, pants),
        Direction::Named(_) => vec![vec![0.0; InternalParams::<f64>::count(c.n)]; pants],
        Direction::Explicit(v) => v.iter().map(|d| read_vec(d)).collect::<CliResult<_>>()?,
    };
    let rows = internal_sequence_scan(&base, &direction, scan.steps)?;
    let mut table = ResultTable::new(&[
        "step",
        "n",
        "g",
        "K",
        "L",
        "entropy_bound",
        "min_edge_id",
        "flags_ok",
        "error",
    ]);
    for r in &rows {
        table.push(vec![
            r.step.to_string(),
            r.n.to_string(),
            r.genus.to_string(),
            cell_opt(r.k),
            cell_opt(r.l),
            cell_opt(r.entropy_bound),
            r.min_edge_id.map(|e| e.to_string()).unwrap_or_default(),
            r.flags_ok.to_string(),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    ctx.write_table("entropy-scan", Backend::Float64, &table)?;
    let ok = rows.iter().filter(|r| r.flags_ok).count();
    if (ok as f64) < SCAN_SUCCESS_SHARE * rows.len() as f64 {
        return Err(CliError::Relation(format!("only {ok} of {} scan rows succeeded", rows.len())));
    }
    Ok(())
}

/// The encoding as CSV rows; the outcome, r, s and the length bound go to
/// stderr as one line.
pub fn psi_trace(ctx: &Context, word: Option<&str>) -> CliResult<()> {
    let c = ctx.config()?;
    let word = word
        .map(str::to_string)
        .or_else(|| c.tracer.as_ref().and_then(|t| t.word.clone()))
        .ok_or_else(|| CliError::Input("no word given (use --word or tracer.word)".into()))?;
    if word.is_empty() || !word.chars().all(|ch| "abstABST".contains(ch)) {
        return Err(CliError::Input(format!("word {word:?} is not over a, b, s, t and their inverses")));
    }
    let s = c.surface()?;
    let opts = TraceOptions {
        max_steps: c.tracer.as_ref().and_then(|t| t.max_steps),
    };
    let outcome = trace_psi(&s, &word, c.n, opts)?;
    let (k, _) = compute_k(&s.decomposition(), &fuchsian_invariants(&s, c.n)?)?;
    let l = compute_l(&fuchsian_boundary(&s, c.n)?)?;
    let mut table = ResultTable::new(&["position", "pred", "edge", "succ", "kind", "t"]);
    let summary = match &outcome {
        TraceOutcome::ClosedLeaf { length, .. } => {
            format!("outcome=closed-leaf r=0 s=0 length={} K={} L={}", cell_f64(*length), cell_f64(k), cell_f64(l))
        }
        TraceOutcome::Encoded(tr) => {
            for (i, t) in tr.psi.tuples.iter().enumerate() {
                table.push(vec![
                    i.to_string(),
                    t.pred.number().to_string(),
                    t.edge.number().to_string(),
                    t.succ.number().to_string(),
                    t.kind.to_string(),
                    t.t.to_string(),
                ]);
            }
            let counts = r_and_s(&tr.psi)?;
            let bound = length_lower_bound(counts.r, counts.s, k, l)?;
            format!(
                "outcome=encoded r={} s={} length={} bound={} K={} L={}",
                counts.r,
                counts.s,
                cell_f64(tr.length),
                cell_f64(bound),
                cell_f64(k),
                cell_f64(l)
            )
        }
    };
    ctx.write_table("psi-trace", Backend::Float64, &table)?;
    eprintln!("{summary}");
    Ok(())
}

/// A config holding the Fuchsian invariants of the surface at the configured n.
pub fn fuchsian_gen(ctx: &Context) -> CliResult<()> {
    let c = ctx.config()?;
    let s = c.surface()?;
    let d = s.decomposition();
    let inv = fuchsian_invariants(&s, c.n)?;
    let boundary = fuchsian_boundary(&s, c.n)?;
    let gluing = vec![vec![0.0; c.n - 1]; d.num_curves()];
    let table = d
        .pants
        .iter()
        .map(|row| row.map(|b| SlotEntry { curve: b.curve, agrees: b.agrees }))
        .collect();
    let out = RunConfig {
        backend: Some(crate::config::BackendName::Float64),
        decomposition: Some(table),
        parameters: Some(ParametersSection::from_invariants(&inv, Some(&boundary), &gluing)),
        output: None,
        ..c.clone()
    };
    ctx.write_config(&out)
}
