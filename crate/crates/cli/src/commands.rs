use log::info;
use qar_core::damping::{damping_runs, damping_series, reference_expansion, Verdict};
use qar_core::dynamics::{initial_state, lep3_expansion, nonlep_expansion, InitialCoefficients, ModalExpansion};
use qar_core::jordan::{bi_eigensystem, jordan_chain, JordanChainSystem};
use qar_core::model::{build_blocks, vectorize, BasisTag, DensityMatrix3};
use qar_core::optimize::{
    best_coefficients, find_optimal_qc, grid, lep3_system, sweep_coefficient, sweep_gamma, trend, AffineCurrents,
    SweepRecord,
};
use qar_core::spectral::{classify, critical_damping_window, lep3_point, Lep3Point, DEFAULT_CLASSIFY_TOL};
use qar_core::thermo::{classify_machine, cop, heat_records, steady_heat_currents, HeatCurrents};
use qar_core::{SystemParams, C64};
use rayon::prelude::*;

use crate::config::{CommandKind, RunConfig};
use crate::error::Result;
use crate::output::{format_f64, Field, Report, Table};

const LEVELS: [char; 3] = ['g', 'c', 'h'];
const TREND_TOL: f64 = 1e-12;
const SIGN_TOL: f64 = 1e-12;

pub fn execute(kind: CommandKind, cfg: &RunConfig) -> Result<Report> {
    match kind {
        CommandKind::Spectrum => spectrum(cfg),
        CommandKind::Lep3 => lep3(cfg),
        CommandKind::Evolve => evolve(cfg),
        CommandKind::Heat => heat(cfg),
        CommandKind::Damping => damping(cfg),
        CommandKind::Optimize => optimize(cfg),
        CommandKind::Sweep => sweep(cfg),
    }
}

/// Component labels of a block basis, e.g. `ch` for `ρ_ch`.
pub fn component_names(basis: BasisTag) -> Vec<String> {
    basis
        .indices()
        .iter()
        .map(|&k| format!("{}{}", LEVELS[k / 3], LEVELS[k % 3]))
        .collect()
}

fn coefficients(cfg: &RunConfig) -> InitialCoefficients {
    InitialCoefficients::from_array(cfg.coeffs)
}

fn lep3_of(cfg: &RunConfig) -> Result<Lep3Point> {
    Ok(lep3_point(cfg.omega, cfg.gamma_minus, cfg.case.coupling())?)
}

fn chain_of(lep: &Lep3Point) -> Result<JordanChainSystem> {
    let (l5, _) = build_blocks(&lep.params()?, lep.case)?;
    Ok(jordan_chain(&l5, lep)?)
}

/// Parameters of the run: the third-order point (optionally with `g`
/// overridden) or the explicit rates.
fn system_params(cfg: &RunConfig) -> Result<SystemParams> {
    let case = cfg.case.coupling();
    if cfg.lep3 {
        let p = lep3_of(cfg)?.params()?;
        Ok(match cfg.g {
            Some(g) => p.with_coupling(case, g)?,
            None => p,
        })
    } else {
        Ok(SystemParams::one_coupling(
            case,
            cfg.omega,
            cfg.g.unwrap_or_default(),
            cfg.gamma_plus.unwrap_or_default(),
            cfg.gamma_minus,
        )?)
    }
}

/// Modal expansion of the configured run. At the third-order point the start
/// is built from chain coefficients; with a `g` override the same physical
/// state is propagated at that coupling. Explicit rates start from a diagonal
/// state with the configured populations.
fn expansion(cfg: &RunConfig) -> Result<ModalExpansion> {
    let case = cfg.case.coupling();
    if cfg.lep3 {
        let lep = lep3_of(cfg)?;
        let sys = chain_of(&lep)?;
        let coeffs = coefficients(cfg);
        return Ok(match cfg.g {
            Some(g) => reference_expansion(&lep, g, &initial_state(&coeffs, &sys))?,
            None => lep3_expansion(&sys, &coeffs),
        });
    }
    let params = system_params(cfg)?;
    let (l5, _) = build_blocks(&params, case)?;
    let mut m = DensityMatrix3::projector(0).0 * C64::new(cfg.populations[0], 0.0);
    for k in 1..3 {
        m += DensityMatrix3::projector(k).0 * C64::new(cfg.populations[k], 0.0);
    }
    let rho = DensityMatrix3::new(m);
    let rho0 = vectorize(&rho).extract(BasisTag::block5(case));
    Ok(nonlep_expansion(&bi_eigensystem(&l5)?, &rho0)?)
}

fn describe_params(report: &mut Report, cfg: &RunConfig, p: &SystemParams) -> Result<()> {
    let case = cfg.case.coupling();
    let (gp, gm) = p.reduction_rates(case)?;
    report.line("case", format!("{case:?}"));
    report.line("omega", cfg.omega);
    report.line("g", p.active_coupling(case));
    report.line("gamma_plus", gp);
    report.line("gamma_minus", gm);
    Ok(())
}

fn spectrum(cfg: &RunConfig) -> Result<Report> {
    let case = cfg.case.coupling();
    let params = system_params(cfg)?;
    let rep = classify(&params, case, DEFAULT_CLASSIFY_TOL)?;
    let mut report = Report::default();
    describe_params(&mut report, cfg, &params)?;
    report.line("classification", format!("{:?}", rep.classification));
    if cfg.lep3 && cfg.g.is_none() {
        report.line("lambda3", lep3_of(cfg)?.lambda3);
    }
    let mut table = Table::new(&["index", "re", "im", "abs"]);
    for (k, z) in rep.eigenvalues().iter().enumerate() {
        report.line(format!("lambda_{k}"), format_complex(*z));
        table.push(vec![k.into(), z.re.into(), z.im.into(), z.re.hypot(z.im).into()]);
    }
    report.line("delta", rep.discriminants.delta);
    report.line("delta0", rep.discriminants.delta0);
    report.line("delta1", rep.discriminants.delta1);
    report.line("delta_normalized", rep.delta_normalized);
    report.line("delta0_normalized", rep.delta0_normalized);
    report.line("delta1_normalized", rep.delta1_normalized);
    report.table = Some(table);
    Ok(report)
}

fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", format_f64(z.re), format_f64(z.im.abs()))
}

fn lep3(cfg: &RunConfig) -> Result<Report> {
    let case = cfg.case.coupling();
    let lep = lep3_of(cfg)?;
    let sys = chain_of(&lep)?;
    let (lo, hi) = critical_damping_window(cfg.omega, case);
    let mut report = Report::default();
    report.line("case", format!("{case:?}"));
    report.line("omega", lep.omega);
    report.line("gamma_minus", lep.gamma_minus);
    report.line("g3", lep.g3);
    report.line("gamma_plus3", lep.gamma_plus3);
    report.line("lambda3", lep.lambda3);
    report.line("lambda1", lep.lambda1());
    report.line("window_lo", lo);
    report.line("window_hi", hi);
    report.line("critically_damped", lep.gamma_minus > lo && lep.gamma_minus < hi);
    report.line("chain_residual", sys.chain_residual);
    let rights = sys.right_vectors();
    let lefts = sys.left_vectors();
    let mut bio = 0.0_f64;
    for (i, s) in lefts.iter().enumerate() {
        for (j, r) in rights.iter().enumerate() {
            let dot = s.transpose() * r.data();
            let target = if i == j { 1.0 } else { 0.0 };
            bio = bio.max((dot[(0, 0)] - C64::new(target, 0.0)).norm());
        }
    }
    report.line("biorthonormality", bio);

    let names = component_names(sys.basis);
    let labels = ["rho_ss", "rho_1", "rho_ep1", "rho_ep2", "rho_ep3"];
    let mut table = Table::new(&["vector", "component", "re", "im"]);
    for (label, v) in labels.iter().zip(rights) {
        for (name, z) in names.iter().zip(v.data().iter()) {
            table.push(vec![(*label).into(), name.as_str().into(), z.re.into(), z.im.into()]);
        }
    }
    report.table = Some(table);
    Ok(report)
}

fn evolve(cfg: &RunConfig) -> Result<Report> {
    let exp = expansion(cfg)?;
    let names = component_names(exp.basis);
    let mut columns = vec!["t".to_string()];
    for n in &names {
        columns.push(format!("re_{n}"));
        columns.push(format!("im_{n}"));
    }
    columns.push("trace".into());
    let pops: Vec<usize> = names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.as_bytes()[0] == n.as_bytes()[1])
        .map(|(k, _)| k)
        .collect();
    let times = cfg.times();
    let rows: Vec<Vec<Field>> = times
        .par_iter()
        .map(|&t| {
            let v = exp.state(t);
            let mut row: Vec<Field> = vec![t.into()];
            for z in v.data().iter() {
                row.push(z.re.into());
                row.push(z.im.into());
            }
            row.push(population_sum(&pops.iter().map(|&k| v.data()[k].re).collect::<Vec<_>>()).into());
            row
        })
        .collect();
    let mut report = Report::default();
    describe_params(&mut report, cfg, &exp.params)?;
    if let Some(rate) = exp.slowest_rate() {
        report.line("slowest_rate", rate);
    }
    report.line("samples", times.len());
    report.table = Some(Table { columns, rows });
    Ok(report)
}

/// Trace column of `evolve`: populations summed left to right.
pub fn population_sum(pops: &[f64]) -> f64 {
    pops.iter().fold(0.0, |acc, p| acc + p)
}

/// Derived columns of `heat`, computed from the written currents.
pub fn heat_derived(qdot: [f64; 3], q: [f64; 3]) -> (f64, Option<f64>, Option<f64>) {
    let [h, c, w] = qdot;
    (h + c + w, cop(c, w).ok(), cop(q[1], q[2]).ok())
}

fn heat(cfg: &RunConfig) -> Result<Report> {
    let exp = expansion(cfg)?;
    let times = cfg.times();
    let records = heat_records(&exp, &times)?;
    let mut table = Table::new(&[
        "t",
        "qdot_h",
        "qdot_c",
        "qdot_w",
        "q_h",
        "q_c",
        "q_w",
        "qdot_sum",
        "eta_inst",
        "eta_accum",
    ]);
    for r in &records {
        let qdot = [r.qdot.hot, r.qdot.cold, r.qdot.work];
        let q = [r.accumulated.hot, r.accumulated.cold, r.accumulated.work];
        let (sum, eta_i, eta_a) = heat_derived(qdot, q);
        let mut row: Vec<Field> = vec![r.t.into()];
        row.extend(qdot.iter().chain(q.iter()).map(|&x| Field::from(x)));
        row.extend([sum.into(), eta_i.into(), eta_a.into()]);
        table.push(row);
    }
    let mut report = Report::default();
    describe_params(&mut report, cfg, &exp.params)?;
    let qss = steady_heat_currents(&exp.params, cfg.case.coupling())?;
    currents_lines(&mut report, "steady", &qss);
    if let Some(first) = records.first() {
        currents_lines(&mut report, "initial", &first.qdot);
        report.line("initial_mode", format!("{:?}", classify_machine(&first.qdot, SIGN_TOL)));
        report.line("eta_inst_initial", opt(first.eta_inst));
    }
    report.line("eta_ss", opt(cop(qss.cold, qss.work).ok()));
    report.table = Some(table);
    Ok(report)
}

fn currents_lines(report: &mut Report, prefix: &str, q: &HeatCurrents) {
    report.line(format!("{prefix}_qdot_h"), q.hot);
    report.line(format!("{prefix}_qdot_c"), q.cold);
    report.line(format!("{prefix}_qdot_w"), q.work);
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), format_f64)
}

fn verdict_lines(report: &mut Report, prefix: &str, v: &Verdict) {
    report.line(format!("{prefix}_tau"), opt(v.tau));
    report.line(format!("{prefix}_holds"), v.holds);
    report.line(format!("{prefix}_excluded"), v.excluded);
}

fn damping(cfg: &RunConfig) -> Result<Report> {
    let lep = lep3_of(cfg)?;
    let coeffs = coefficients(cfg);
    let times = cfg.times();
    let mut report = Report::default();
    report.line("case", format!("{:?}", lep.case));
    report.line("gamma_minus", lep.gamma_minus);
    report.line("lambda3", lep.lambda3);
    let mut table = Table::new(&["g_ref", "t", "r_s", "r_c", "ln_r_s", "ln_r_c"]);
    for &g in &cfg.ref_g {
        let (num, den) = damping_runs(&lep, &coeffs, g)?;
        let series = damping_series(&num, &den, lep.lambda3, &times, cfg.norm.mode())?;
        info!(
            "g_ref {g}: state holds {}, heat holds {}",
            series.state.holds, series.heat.holds
        );
        verdict_lines(&mut report, &format!("g{g}_state"), &series.state);
        verdict_lines(&mut report, &format!("g{g}_heat"), &series.heat);
        for (k, &t) in series.times.iter().enumerate() {
            let (rs, rc) = (series.r_s[k], series.r_c[k]);
            table.push(vec![
                g.into(),
                t.into(),
                rs.into(),
                rc.into(),
                rs.map(f64::ln).into(),
                rc.map(f64::ln).into(),
            ]);
        }
    }
    report.table = Some(table);
    Ok(report)
}

const CURRENT_COLUMNS: [&str; 6] = [
    "qdot_h_i",
    "qdot_c_i",
    "qdot_w_i",
    "qdot_h_ss",
    "qdot_c_ss",
    "qdot_w_ss",
];

fn current_fields(qi: &HeatCurrents, qss: &HeatCurrents) -> Vec<Field> {
    [qi.hot, qi.cold, qi.work, qss.hot, qss.cold, qss.work]
        .into_iter()
        .map(Field::from)
        .collect()
}

fn optimize(cfg: &RunConfig) -> Result<Report> {
    let ocfg = cfg.optimize_config();
    let gammas = grid(cfg.gamma_min, cfg.gamma_max, cfg.gamma_step);
    let mut columns = vec!["gamma_minus", "feasible", "c1", "c2", "c3", "c4"];
    columns.extend(CURRENT_COLUMNS);
    columns.push("delta_c");
    let rows: Vec<Vec<Field>> = gammas
        .par_iter()
        .map(|&gm| {
            let sys = lep3_system(cfg.omega, gm, ocfg.case).ok();
            let best = sys.as_ref().and_then(|s| best_coefficients(s, &ocfg));
            let mut row: Vec<Field> = vec![gm.into(), best.is_some().into()];
            match (sys, best) {
                (Some(sys), Some((_, c))) => {
                    let affine = AffineCurrents::new(&sys);
                    let qi = affine.eval(&c);
                    row.extend(c.to_array().map(Field::from));
                    row.extend(current_fields(&qi, &affine.steady));
                    row.push((qi.cold - affine.steady.cold).into());
                }
                _ => row.extend(std::iter::repeat_n(Field::Opt(None), 11)),
            }
            row
        })
        .collect();
    let mut report = Report::default();
    let result = find_optimal_qc(&ocfg);
    let table = Table {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    };
    let opt = match result {
        Ok(r) => r,
        Err(e) => {
            info!("optimization failed over {} grid points: {e}", table.rows.len());
            return Err(e.into());
        }
    };
    report.line("case", format!("{:?}", opt.case));
    report.line("fixed", format!("c{}={}", cfg.fixed_index, cfg.fixed_value));
    report.line("gamma_minus", opt.gamma_minus);
    for (k, c) in opt.coeffs.to_array().iter().enumerate() {
        report.line(format!("c{}", k + 1), c);
    }
    report.line("qdot_c_i", opt.qdot_c_i);
    currents_lines(&mut report, "initial", &opt.qdot_i);
    currents_lines(&mut report, "steady", &opt.qdot_ss);
    report.line("constraints_all", opt.constraints.all());
    report.line("psd", opt.psd);
    report.line("evaluations", opt.evaluations);
    report.table = Some(table);
    Ok(report)
}

fn sweep(cfg: &RunConfig) -> Result<Report> {
    let case = cfg.case.coupling();
    let values = cfg.sweep_values();
    let records: Vec<SweepRecord> = match cfg.variable.coefficient() {
        Some(k) => sweep_coefficient(case, k, &values, cfg.omega, cfg.gamma_minus)?,
        None => sweep_gamma(case, &coefficients(cfg), &values, cfg.omega),
    };
    let mut columns = vec!["value", "gamma_minus", "c1", "c2", "c3", "c4"];
    columns.extend(CURRENT_COLUMNS);
    columns.extend(["delta_c", "more_transfer", "higher_cop", "refrigerator_signs", "psd"]);
    let mut table = Table::new(&columns);
    for r in &records {
        let mut row: Vec<Field> = vec![r.value.into(), r.gamma_minus.into()];
        row.extend(r.coeffs.to_array().map(Field::from));
        row.extend(current_fields(&r.qdot_i, &r.qdot_ss));
        row.push((r.qdot_i.cold - r.qdot_ss.cold).into());
        let c = r.constraints;
        row.extend([c.more_transfer, c.higher_cop, c.refrigerator_signs, r.psd].map(Field::from));
        table.push(row);
    }
    let mut report = Report::default();
    report.line("case", format!("{case:?}"));
    report.line("variable", cfg.variable.name());
    report.line("points", records.len());
    report.line("skipped", values.len() - records.len());
    let qc: Vec<f64> = records.iter().map(|r| r.qdot_i.cold).collect();
    report.line("qdot_c_i_trend", format!("{:?}", trend(&qc, TREND_TOL)));
    report.line("feasible", records.iter().filter(|r| r.constraints.all()).count());
    report.table = Some(table);
    Ok(report)
}
