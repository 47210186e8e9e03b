use anyhow::{bail, Context, Result};
use freelight::fock::default_n_max;
use freelight::{
    cat_closed_form, coherence_factor, emission_stats, emit_exact, emit_from_cf, emit_no_filter, emit_single_window,
    expectation_field, fidelity, iels_modulate, optimize, prefilter_cf, ring_coefficients, CfOrders, Complex64,
    ElectronPulse, Error, FilterOutcome, IelsStage, Observable, PhotonicState, PreFilter, PrefilterForm,
    SynthesisProblem, SynthesisResult, TargetState,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    CatConfig, CfConfig, EmitConfig, EmitFilter, EmitScan, OptimizeConfig, PulseConfig, StatsConfig, WignerConfig,
    WignerSource,
};
use crate::output::{Cell, Sink, Table};

const NAN: f64 = f64::NAN;

fn pairs(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn triples(a: &[f64], b: &[f64], c: &[f64]) -> Vec<(f64, f64, f64)> {
    pairs(a, b).into_iter().flat_map(|(x, y)| c.iter().map(move |&z| (x, y, z))).collect()
}

fn form_of(sigma_t: Option<f64>, delta_t: f64) -> PrefilterForm {
    match sigma_t {
        None => PrefilterForm::Lattice,
        Some(sigma_t) => PrefilterForm::Finite { sigma_t, delta_t },
    }
}

/// Wigner function on `xs × ps`, rows ordered by `x` then `p`.
fn wigner_table(name: &str, state: &PhotonicState, xs: &[f64], ps: &[f64]) -> Result<Table> {
    let rows: Vec<freelight::WignerGrid> = xs
        .par_iter()
        .map(|&x| state.wigner(&[x], ps))
        .collect::<std::result::Result<_, _>>()
        .context("evaluating the Wigner function")?;
    let mut table = Table::new(name, &["x", "p", "w"]);
    for (row, &x) in rows.iter().zip(xs) {
        for (j, &p) in ps.iter().enumerate() {
            table.push(vec![x.into(), p.into(), row.values[(0, j)].into()]);
        }
    }
    Ok(table)
}

fn column_max(table: &Table, column: &str) -> f64 {
    let idx = table.columns.iter().position(|c| c == column).expect("known column");
    table
        .rows
        .iter()
        .filter_map(|r| match r[idx] {
            Cell::Real(v) if v.is_finite() => Some(v),
            _ => None,
        })
        .fold(NAN, f64::max)
}

pub fn cf(cfg: &CfConfig, sink: &Sink) -> Result<Value> {
    let betas = cfg.beta_abs.values()?;
    let drifts = cfg.drift.values()?;
    if cfg.orders.is_empty() {
        bail!("at least one order is required");
    }
    if let Some(sigma) = cfg.sigma_t {
        if !(sigma > 0.0) {
            bail!("sigma_t must be positive");
        }
    }
    let stage = |beta: f64, drift: f64| IelsStage::new(beta, cfg.beta_phase, drift).with_harmonic(cfg.harmonic);

    let table = match &cfg.prefilter {
        None => {
            let points = pairs(&betas, &drifts);
            eprintln!("cf: {} grid points, {} orders", points.len(), cfg.orders.len());
            let rows: Vec<Vec<Vec<Cell>>> = points
                .par_iter()
                .map(|&(beta, drift)| -> Result<Vec<Vec<Cell>>> {
                    let spec = iels_modulate(&stage(beta, drift))?;
                    let pulse = ElectronPulse::new(spec, cfg.sigma_t.unwrap_or(f64::INFINITY), cfg.delta_t)?;
                    Ok(cfg
                        .orders
                        .iter()
                        .map(|&m| {
                            let v = coherence_factor(&pulse, m);
                            vec![beta.into(), drift.into(), m.into(), v.re.into(), v.im.into(), v.norm_sqr().into()]
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            let mut table = Table::new("cf", &["beta_abs", "drift", "m", "re", "im", "abs2"]);
            rows.into_iter().flatten().for_each(|r| table.push(r));
            table
        }
        Some(scan) => {
            let widths = scan.delta_d.values()?;
            let points = triples(&betas, &widths, &drifts);
            eprintln!("cf: {} pre-filtered grid points, {} orders", points.len(), cfg.orders.len());
            let form = form_of(cfg.sigma_t, cfg.delta_t);
            let rows: Vec<Vec<Vec<Cell>>> = points
                .par_iter()
                .map(|&(beta, width, drift)| -> Result<Vec<Vec<Cell>>> {
                    let spec = iels_modulate(&stage(beta, drift))?;
                    let filter = PreFilter::new(scan.delta_max, width)?;
                    let mut out = Vec::with_capacity(cfg.orders.len());
                    for &m in &cfg.orders {
                        let (v, success) = match prefilter_cf(&spec, &filter, m, form) {
                            Ok(r) => (r.cf, r.success),
                            Err(Error::EmptyPreFilter { .. }) => (Complex64::new(NAN, NAN), 0.0),
                            Err(e) => return Err(e.into()),
                        };
                        out.push(vec![
                            beta.into(),
                            width.into(),
                            drift.into(),
                            m.into(),
                            v.re.into(),
                            v.im.into(),
                            v.norm_sqr().into(),
                            success.into(),
                        ]);
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            let mut table = Table::new(
                "cf_prefilter",
                &["beta_abs", "delta_d", "drift", "m", "re", "im", "abs2", "success"],
            );
            rows.into_iter().flatten().for_each(|r| table.push(r));
            table
        }
    };

    let m_idx = table.columns.iter().position(|c| c == "m").expect("m column");
    let a_idx = table.columns.iter().position(|c| c == "abs2").expect("abs2 column");
    let mut maxima = Vec::new();
    for &m in &cfg.orders {
        let best = table
            .rows
            .iter()
            .filter(|r| matches!(r[m_idx], Cell::Int(k) if k == m))
            .filter_map(|r| match r[a_idx] {
                Cell::Real(a) if a.is_finite() => Some((a, r)),
                _ => None,
            })
            .fold(None::<(f64, &Vec<Cell>)>, |acc, (a, r)| match acc {
                Some((b, _)) if b >= a => acc,
                _ => Some((a, r)),
            });
        let mut entry = json!({ "m": m, "max_abs2": best.map(|b| b.0) });
        if let Some((_, row)) = best {
            for (i, col) in table.columns.iter().enumerate().take(m_idx) {
                entry[col] = row[i].json();
            }
        }
        maxima.push(entry);
    }
    let outputs = sink.table(&table)?;
    Ok(json!({ "rows": table.rows.len(), "maxima": maxima, "outputs": outputs }))
}

fn pulses(electrons: &[PulseConfig]) -> Result<Vec<ElectronPulse>> {
    if electrons.is_empty() {
        bail!("at least one electron is required");
    }
    electrons.iter().map(|e| e.pulse()).collect()
}

fn run_emit(cfg: &EmitConfig) -> Result<FilterOutcome> {
    match &cfg.filter {
        EmitFilter::Exact { s } => {
            if cfg.electrons.is_empty() {
                bail!("at least one electron is required");
            }
            let spectra = cfg.electrons.iter().map(|e| e.spectrum()).collect::<Result<Vec<_>>>()?;
            Ok(emit_exact(&spectra, cfg.beta0, s, cfg.n_max)?)
        }
        EmitFilter::Window { s, delta_d } => {
            let [pulse] = pulses(&cfg.electrons)?.try_into().map_err(|_| anyhow::anyhow!("the window filter takes exactly one electron"))?;
            Ok(emit_single_window(&pulse, cfg.beta0, *s, *delta_d, cfg.n_max)?)
        }
        EmitFilter::None => {
            let state = emit_no_filter(&pulses(&cfg.electrons)?, cfg.beta0, cfg.n_max)?;
            Ok(FilterOutcome { state, p_success: 1.0 })
        }
    }
}

/// One point of an emission scan; `None` when the filter keeps nothing.
fn emit_scan_point(cfg: &EmitConfig, scan: &EmitScan, pulse: &ElectronPulse, width: f64) -> Result<Option<FilterOutcome>> {
    match scan {
        EmitScan::Window { s, .. } => match emit_single_window(pulse, cfg.beta0, *s, width, cfg.n_max) {
            Ok(out) => Ok(Some(out)),
            Err(Error::EmptyPostSelection { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        },
        EmitScan::Prefilter { delta_max, .. } => {
            let electron = &cfg.electrons[0];
            let spec = electron.spectrum()?;
            let filter = PreFilter::new(*delta_max, width)?;
            let form = form_of(electron.sigma_t, electron.delta_t);
            let n_max = cfg.n_max.unwrap_or_else(|| default_n_max(cfg.beta0));
            let mut cfs = Vec::with_capacity(n_max + 1);
            let mut success = 1.0;
            for k in 0..=n_max as i64 {
                match prefilter_cf(&spec, &filter, k, form) {
                    Ok(r) => {
                        success = r.success;
                        cfs.push(r.cf);
                    }
                    Err(Error::EmptyPreFilter { .. }) => return Ok(None),
                    Err(e) => return Err(e.into()),
                }
            }
            let state = emit_from_cf(cfg.beta0, n_max, |k| {
                let c = cfs[k.unsigned_abs() as usize];
                if k < 0 {
                    c.conj()
                } else {
                    c
                }
            })?;
            Ok(Some(FilterOutcome { state, p_success: success }))
        }
    }
}

fn summarize(out: &FilterOutcome) -> (f64, f64, Complex64) {
    (out.state.purity(), out.state.expectation(Observable::Number).re, expectation_field(out))
}

pub fn emit(cfg: &EmitConfig, sink: &Sink) -> Result<Value> {
    let Some(scan) = &cfg.scan else {
        eprintln!("emit: {} electron(s)", cfg.electrons.len());
        let out = run_emit(cfg)?;
        out.state.validate()?;
        let rho = out.state.density();
        let mut table = Table::new("rho", &["n", "n_prime", "re", "im"]);
        for n in 0..rho.nrows() {
            for np in 0..rho.ncols() {
                table.push(vec![n.into(), np.into(), rho[(n, np)].re.into(), rho[(n, np)].im.into()]);
            }
        }
        let mut pops = Table::new("populations", &["n", "p"]);
        for (n, p) in out.state.populations().iter().enumerate() {
            pops.push(vec![n.into(), (*p).into()]);
        }
        let mut outputs = sink.table(&table)?;
        outputs.extend(sink.table(&pops)?);
        if let Some(w) = &cfg.wigner {
            outputs.extend(sink.table(&wigner_table("wigner", &out.state, &w.x.values()?, &w.p.values()?)?)?);
        }
        let (purity, mean, field) = summarize(&out);
        return Ok(json!({
            "p_success": out.p_success,
            "purity": purity,
            "mean_photons": mean,
            "field": [field.re, field.im],
            "n_max": out.state.n_max(),
            "outputs": outputs,
        }));
    };

    if !matches!(cfg.filter, EmitFilter::None) {
        bail!("a scan sets its own filter; leave `filter` unset");
    }
    let [pulse] = pulses(&cfg.electrons)?.try_into().map_err(|_| anyhow::anyhow!("scans take exactly one electron"))?;
    let (name, widths) = match scan {
        EmitScan::Window { delta_d, .. } => ("emit_window_scan", delta_d.values()?),
        EmitScan::Prefilter { delta_d, .. } => ("emit_prefilter_scan", delta_d.values()?),
    };
    eprintln!("emit: {} scan points", widths.len());
    let rows: Vec<Vec<Cell>> = widths
        .par_iter()
        .map(|&width| -> Result<Vec<Cell>> {
            let mut row: Vec<Cell> = vec![width.into()];
            match emit_scan_point(cfg, scan, &pulse, width)? {
                Some(out) => {
                    out.state.validate()?;
                    let (purity, mean, field) = summarize(&out);
                    row.extend([out.p_success, purity, mean, field.re, field.im, field.norm()].map(Cell::from));
                }
                None => row.extend([0.0, NAN, NAN, NAN, NAN, NAN].map(Cell::from)),
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut table =
        Table::new(name, &["delta_d", "p_success", "purity", "mean_photons", "field_re", "field_im", "field_abs"]);
    rows.into_iter().for_each(|r| table.push(r));
    let mut outputs = sink.table(&table)?;
    if let Some(w) = &cfg.wigner {
        let (xs, ps) = (w.x.values()?, w.p.values()?);
        for (i, &width) in w.at.iter().enumerate() {
            let Some(out) = emit_scan_point(cfg, scan, &pulse, width)? else {
                bail!("nothing passes the filter at delta_d = {width}");
            };
            outputs.extend(sink.table(&wigner_table(&format!("wigner_{i}"), &out.state, &xs, &ps)?)?);
        }
    }
    Ok(json!({
        "rows": table.rows.len(),
        "max_purity": column_max(&table, "purity"),
        "max_field_abs": column_max(&table, "field_abs"),
        "outputs": outputs,
    }))
}

const STATS_COLUMNS: [&str; 6] = ["intensity", "g_factor", "fluct", "g_ratio", "fano", "status"];

/// Statistics columns for `n` identical electrons; unphysical or invalid
/// coherence factors are masked with NaN.
fn stats_cells(cf: CfOrders, n: usize, beta0: f64) -> Result<(Vec<Cell>, bool)> {
    match emission_stats(&vec![cf; n], beta0) {
        Ok(s) => {
            let mut cells: Vec<Cell> = [s.intensity, s.g_factor, s.fluct, s.g_ratio(), s.fano()].map(Cell::from).into();
            cells.push("ok".into());
            Ok((cells, false))
        }
        Err(Error::UnphysicalCf { .. }) => {
            let mut cells: Vec<Cell> = [NAN; 5].map(Cell::from).into();
            cells.push("unphysical".into());
            Ok((cells, true))
        }
        Err(Error::InvalidParameter(_)) => {
            let mut cells: Vec<Cell> = [NAN; 5].map(Cell::from).into();
            cells.push("invalid".into());
            Ok((cells, true))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn stats(cfg: &StatsConfig, sink: &Sink) -> Result<Value> {
    if cfg.iels.is_none() && cfg.cf_plane.is_none() {
        bail!("set `iels`, `cf_plane` or both");
    }
    if cfg.n_electrons.is_empty() {
        bail!("at least one electron count is required");
    }
    let mut outputs = Vec::new();
    let mut summary = json!({});
    if let Some(grid) = &cfg.iels {
        let points = pairs(&grid.beta_abs.values()?, &grid.drift.values()?);
        eprintln!("stats: {} coupling and drift points", points.len());
        let cfs: Vec<CfOrders> = points
            .par_iter()
            .map(|&(beta, drift)| -> Result<CfOrders> {
                let spec = iels_modulate(&IelsStage::new(beta, 0.0, drift))?;
                let pulse = ElectronPulse::new(spec, grid.sigma_t.unwrap_or(f64::INFINITY), grid.delta_t)?;
                Ok(CfOrders::of_pulse(&pulse))
            })
            .collect::<Result<_>>()?;
        let mut columns = vec!["beta_abs", "drift", "n_electrons"];
        columns.extend(STATS_COLUMNS);
        let mut table = Table::new("stats_iels", &columns);
        let mut masked = 0usize;
        for (&(beta, drift), cf) in points.iter().zip(&cfs) {
            for &n in &cfg.n_electrons {
                let (cells, bad) = stats_cells(*cf, n, cfg.beta0)?;
                masked += bad as usize;
                let mut row: Vec<Cell> = vec![beta.into(), drift.into(), n.into()];
                row.extend(cells);
                table.push(row);
            }
        }
        outputs.extend(sink.table(&table)?);
        summary["iels"] = json!({ "rows": table.rows.len(), "masked": masked });
    }
    if let Some(plane) = &cfg.cf_plane {
        let points = pairs(&plane.m1_imag.values()?, &plane.m2_real.values()?);
        eprintln!("stats: {} coherence-factor plane points", points.len());
        let mut columns = vec!["m1_imag", "m2_real", "n_electrons"];
        columns.extend(STATS_COLUMNS);
        let mut table = Table::new("stats_plane", &columns);
        let mut masked = 0usize;
        for &(m1, m2) in &points {
            let cf = CfOrders::new(Complex64::new(0.0, m1), Complex64::new(m2, 0.0));
            for &n in &cfg.n_electrons {
                let (cells, bad) = stats_cells(cf, n, cfg.beta0)?;
                masked += bad as usize;
                let mut row: Vec<Cell> = vec![m1.into(), m2.into(), n.into()];
                row.extend(cells);
                table.push(row);
            }
        }
        outputs.extend(sink.table(&table)?);
        summary["cf_plane"] = json!({ "rows": table.rows.len(), "masked": masked });
    }
    summary["outputs"] = json!(outputs);
    Ok(summary)
}

pub fn cat(cfg: &CatConfig, sink: &Sink) -> Result<Value> {
    if cfg.s.is_empty() {
        bail!("at least one sideband is required");
    }
    let betas = cfg.beta_abs.values()?;
    let points: Vec<(f64, i64)> = betas.iter().flat_map(|&b| cfg.s.iter().map(move |&s| (b, s))).collect();
    eprintln!("cat: {} grid points", points.len());
    let exact_state = |beta: f64, s: i64| -> Result<Option<FilterOutcome>> {
        let spec = iels_modulate(&IelsStage::new(beta, cfg.beta_phase, 0.0))?;
        match emit_exact(&[spec], cfg.beta0, &[s], Some(cfg.n_max_trunc)) {
            Ok(out) => Ok(Some(out)),
            Err(Error::TruncationTooSmall { .. } | Error::EmptyPostSelection { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let rows: Vec<(Vec<Cell>, f64)> = points
        .par_iter()
        .map(|&(beta, s)| -> Result<(Vec<Cell>, f64)> {
            let closed = cat_closed_form(beta, cfg.beta_phase, s, cfg.n_max_trunc, cfg.beta0)?;
            let (fid, p) = match exact_state(beta, s)? {
                Some(out) => {
                    out.state.validate()?;
                    (fidelity(&out.state, &closed.state)?, out.p_success)
                }
                None => (NAN, NAN),
            };
            let gap = (closed.p_formula - closed.direct_sum).abs();
            let row = vec![
                beta.into(),
                s.into(),
                fid.into(),
                p.into(),
                closed.p_success.unwrap_or(NAN).into(),
                closed.p_formula.into(),
                closed.direct_sum.into(),
                closed.theta.into(),
            ];
            Ok((row, gap))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "cat_scan",
        &["beta_abs", "s", "fidelity", "p_success", "p_closed", "p_formula", "direct_sum", "theta"],
    );
    let mut max_gap: f64 = 0.0;
    for (row, gap) in rows {
        max_gap = max_gap.max(gap);
        table.push(row);
    }
    let mut outputs = sink.table(&table)?;
    if let Some(w) = &cfg.wigner {
        let (xs, ps) = (w.x.values()?, w.p.values()?);
        for (i, point) in w.points.iter().enumerate() {
            let Some(out) = exact_state(point.beta_abs, point.s)? else {
                bail!("no valid state at |beta| = {}, s = {}", point.beta_abs, point.s);
            };
            outputs.extend(sink.table(&wigner_table(&format!("cat_wigner_{i}"), &out.state, &xs, &ps)?)?);
        }
    }
    Ok(json!({
        "rows": table.rows.len(),
        "max_fidelity": column_max(&table, "fidelity"),
        "max_formula_gap": max_gap,
        "outputs": outputs,
    }))
}

/// Value of the swept parameter: `r` for squeezed vacuum, `|α|` for cats.
fn sweep_value(target: &TargetState) -> f64 {
    match target {
        TargetState::SqueezedVacuum { r } => *r,
        TargetState::Cat { alpha, .. } | TargetState::TriangularCat { alpha, .. } => alpha.norm(),
        TargetState::Custom { .. } => NAN,
    }
}

fn with_sweep_value(target: &TargetState, v: f64) -> Result<TargetState> {
    let rescale = |alpha: &Complex64| Complex64::from_polar(v, alpha.arg());
    Ok(match target {
        TargetState::SqueezedVacuum { .. } => TargetState::SqueezedVacuum { r: v },
        TargetState::Cat { alpha, theta } => TargetState::Cat { alpha: rescale(alpha), theta: *theta },
        TargetState::TriangularCat { alpha, theta } => TargetState::TriangularCat { alpha: rescale(alpha), theta: *theta },
        TargetState::Custom { .. } => bail!("custom targets cannot be swept"),
    })
}

fn achieved_state(problem: &SynthesisProblem, result: &SynthesisResult) -> Result<PhotonicState> {
    let spec = ring_coefficients(&result.best)?;
    Ok(emit_exact(&[spec], problem.beta0, &[result.s], Some(problem.working_n_max()))?.state)
}

pub fn synthesize(cfg: &OptimizeConfig, sink: &Sink) -> Result<Value> {
    let problems: Vec<SynthesisProblem> = match &cfg.sweep {
        None => vec![cfg.problem.clone()],
        Some(sweep) => {
            if sweep.values.is_empty() || sweep.rings.is_empty() {
                bail!("a sweep needs at least one value and one ring count");
            }
            let mut out = Vec::new();
            for &rings in &sweep.rings {
                for &v in &sweep.values {
                    out.push(SynthesisProblem { target: with_sweep_value(&cfg.problem.target, v)?, rings, ..cfg.problem.clone() });
                }
            }
            out
        }
    };
    let widest = problems.iter().map(|p| p.rings).max().unwrap_or(0);
    let mut columns: Vec<String> =
        ["sweep_param", "M", "fidelity", "p_success", "s", "drift"].iter().map(|c| c.to_string()).collect();
    columns.extend((1..=widest).map(|i| format!("beta_abs_{i}")));
    columns.extend((1..=widest).map(|i| format!("beta_phase_{i}")));
    let mut scan = Table::with_columns("fidelity_scan", columns);
    let mut results = Vec::with_capacity(problems.len());
    let mut runs = Vec::with_capacity(problems.len());
    let mut outputs = Vec::new();
    let wigner_axes = cfg.wigner.as_ref().map(|w| Ok::<_, anyhow::Error>((w.x.values()?, w.p.values()?))).transpose()?;

    for (i, problem) in problems.iter().enumerate() {
        let (lo, hi) = problem.sidebands();
        eprintln!(
            "optimize [{}/{}]: M = {}, parameter {}, sidebands {lo}..={hi}, {} restarts x {} iterations",
            i + 1,
            problems.len(),
            problem.rings,
            sweep_value(&problem.target),
            problem.restarts,
            problem.max_iters
        );
        let result = optimize(problem)?;
        let achieved = achieved_state(problem, &result)?;
        achieved.validate()?;
        let mut row: Vec<Cell> = vec![
            sweep_value(&problem.target).into(),
            problem.rings.into(),
            result.fidelity.into(),
            result.p_success.into(),
            result.s.into(),
            result.best.drift.into(),
        ];
        let pad = |f: fn(&freelight::Ring) -> f64| -> Vec<Cell> {
            (0..widest).map(|k| result.best.rings.get(k).map(f).unwrap_or(NAN).into()).collect()
        };
        row.extend(pad(|r| r.beta_abs));
        row.extend(pad(|r| r.beta_phase));
        scan.push(row);

        if let Some((xs, ps)) = &wigner_axes {
            let suffix = if cfg.sweep.is_some() { format!("_{i}") } else { String::new() };
            let target = problem.target.truncated(problem.n_max_coeff, problem.working_n_max() + 1)?;
            outputs.extend(sink.table(&wigner_table(&format!("wigner_target{suffix}"), &target, xs, ps)?)?);
            outputs.extend(sink.table(&wigner_table(&format!("wigner_achieved{suffix}"), &achieved, xs, ps)?)?);
        }
        if cfg.sweep.is_none() {
            let mut trace = Table::new("trace", &["restart", "best_fidelity"]);
            for (r, f) in result.trace.iter().enumerate() {
                trace.push(vec![r.into(), (*f).into()]);
            }
            outputs.extend(sink.table(&trace)?);
        }
        let max_beta = result.best.rings.iter().map(|r| r.beta_abs).fold(0.0, f64::max);
        runs.push(json!({
            "sweep_param": sweep_value(&problem.target),
            "M": problem.rings,
            "fidelity": result.fidelity,
            "p_success": result.p_success,
            "s": result.s,
            "max_beta_abs": max_beta,
        }));
        results.push(json!({ "problem": problem, "result": result }));
    }
    outputs.extend(sink.table(&scan)?);
    outputs.extend(sink.record("optimize_results", &results)?);
    Ok(json!({ "runs": runs, "outputs": outputs }))
}

pub fn wigner(cfg: &WignerConfig, sink: &Sink) -> Result<Value> {
    let state = match &cfg.source {
        WignerSource::Target { target, n_max } => target.state(*n_max)?,
        WignerSource::Emit { emit } => {
            if emit.scan.is_some() {
                bail!("a Wigner source cannot be a scan");
            }
            run_emit(emit)?.state
        }
    };
    state.validate()?;
    let xs = cfg.x.values()?;
    let ps = cfg.p.values()?;
    eprintln!("wigner: {} x {} grid, dimension {}", xs.len(), ps.len(), state.dim());
    let table = wigner_table("wigner", &state, &xs, &ps)?;
    let values: Vec<f64> = table.rows.iter().filter_map(|r| if let Cell::Real(w) = r[2] { Some(w) } else { None }).collect();
    let spacing = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 1.0 };
    let outputs = sink.table(&table)?;
    Ok(json!({
        "min": values.iter().copied().fold(f64::INFINITY, f64::min),
        "max": values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "normalization": 0.5 * spacing(&xs) * spacing(&ps) * values.iter().sum::<f64>(),
        "dimension": state.dim(),
        "outputs": outputs,
    }))
}
