//! Subcommand implementations. Sweeps evaluate grid points in parallel and
//! assemble rows in grid order.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use qfcs_core::fcs::{
    classify, fluctuation_symmetry_scan, mean_current, transport_checks, tur_point, FdSteps,
    TemperatureFamily,
};
use qfcs_core::generators::CountingField;
use qfcs_core::spectral::steady_state;
use qfcs_core::vmodel::LEFT;
use qfcs_core::{Method, OpenSystem, C64};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{v_system, Family, Source};
use crate::output::{json_text, Cell, Format, Table};
use crate::{Tolerances, UsageError};

pub struct Ctx {
    pub source: Source,
    pub methods: Vec<Method>,
    pub tol: Tolerances,
    pub params: String,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    check_range(lo, hi, n)?;
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect())
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    check_range(lo, hi, n)?;
    if !(lo > 0.0) {
        bail!(UsageError(format!(
            "log-spaced range needs a positive lower end, got {lo}"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect();
    v[0] = lo;
    v[n - 1] = hi;
    Ok(v)
}

fn check_range(lo: f64, hi: f64, n: usize) -> Result<()> {
    if n == 0 {
        bail!(UsageError("sweep ranges need at least one point".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        bail!(UsageError(format!("invalid range [{lo}, {hi}]")));
    }
    Ok(())
}

/// Explicit values when given, otherwise the generated range.
pub fn grid_or(explicit: &[f64], range: impl FnOnce() -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    if explicit.is_empty() {
        range()
    } else if explicit.iter().any(|v| !v.is_finite()) {
        bail!(UsageError("grid values must be finite".into()))
    } else {
        Ok(explicit.to_vec())
    }
}

fn par_rows<T: Sync>(
    items: &[T],
    f: impl Fn(&T) -> Result<Vec<Vec<Cell>>> + Sync,
) -> Result<Vec<Vec<Cell>>> {
    let blocks: Vec<Vec<Vec<Cell>>> = items.par_iter().map(&f).collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

fn method_names(methods: &[Method]) -> String {
    methods
        .iter()
        .map(|m| m.name())
        .collect::<Vec<_>>()
        .join("+")
}

impl Ctx {
    fn table(
        &self,
        command: &str,
        methods: &[Method],
        columns: Vec<&'static str>,
        rows: Vec<Vec<Cell>>,
    ) -> Table {
        Table {
            command: command.into(),
            methods: method_names(methods),
            params: self.params.clone(),
            columns,
            rows,
        }
    }

    fn steps(&self, family: &dyn TemperatureFamily) -> FdSteps {
        let mut s = family.steps();
        if let Some(h) = self.tol.chi_step {
            s.chi = h;
        }
        if let Some(h) = self.tol.beta_step_rel {
            s.beta_rel = h;
        }
        s
    }

    /// Δ values for V-model sweeps; the preset's own when none are given.
    fn deltas(&self, explicit: &[f64], command: &str) -> Result<Vec<Option<f64>>> {
        match &self.source {
            Source::Preset { params, .. } if explicit.is_empty() => Ok(vec![Some(params.delta)]),
            Source::Preset { .. } => Ok(explicit.iter().map(|&d| Some(d)).collect()),
            Source::File { .. } if explicit.is_empty() => Ok(vec![None]),
            Source::File { .. } => {
                bail!(UsageError(format!("`{command} --delta` needs --preset")))
            }
        }
    }

    fn system_at(&self, delta: Option<f64>) -> Result<OpenSystem> {
        match (delta, &self.source) {
            (
                Some(d),
                Source::Preset {
                    params, epsilon, ..
                },
            ) => v_system(&params.with_delta(d), *epsilon),
            _ => self.source.system(),
        }
    }

    pub fn cgf(
        &self,
        deltas: &[f64],
        points: usize,
        chi_max: Option<f64>,
        bath: Option<&str>,
    ) -> Result<Table> {
        let bath = self.source.bath(bath)?;
        let hi = chi_max.unwrap_or(2.0 * PI / self.source.energy_scale());
        let grid = linspace(0.0, hi, points)?;
        let mut blocks = Vec::new();
        for &m in &self.methods {
            for d in self.deltas(deltas, "cgf")? {
                blocks.push((m, d));
            }
        }
        let rows = par_rows(&blocks, |&(m, d)| {
            let sys = self.system_at(d)?;
            let r = fluctuation_symmetry_scan(&sys, m, bath, &grid)?;
            Ok(grid
                .iter()
                .enumerate()
                .map(|(k, &chi)| {
                    let (g, gs) = (r.direct[k], r.mirrored[k]);
                    vec![
                        m.name().into(),
                        d.unwrap_or(f64::NAN).into(),
                        chi.into(),
                        g.value.re.into(),
                        g.value.im.into(),
                        gs.value.re.into(),
                        gs.value.im.into(),
                        (g.value - gs.value).norm().into(),
                        (g.flag.code() | gs.flag.code()).into(),
                    ]
                })
                .collect())
        })?;
        let columns = vec![
            "method",
            "delta",
            "chi",
            "Re_G",
            "Im_G",
            "Re_G_shifted",
            "Im_G_shifted",
            "residual",
            "branch_flag",
        ];
        Ok(self.table("cgf", &self.methods, columns, rows))
    }

    pub fn transport(
        &self,
        deltas: &[f64],
        alpha_points: usize,
        t_bar: Option<f64>,
    ) -> Result<Table> {
        let base = self.source.v_params("transport")?;
        let t_bar = match t_bar {
            Some(t) => t,
            None => self.source.mean_temperature()?,
        };
        let alphas = linspace(-1.0, 1.0, alpha_points)?;
        let mut points = Vec::new();
        for d in self.deltas(deltas, "transport")? {
            let d = d.unwrap_or(base.delta);
            for &a in &alphas {
                for &m in &self.methods {
                    points.push((d, a, m));
                }
            }
        }
        let rows = par_rows(&points, |&(d, a, m)| {
            let family = Family {
                source: &self.source,
                params: Some(base.with_delta(d).with_alpha(a)),
            };
            let (gk, next) = transport_checks(&family, m, t_bar, self.steps(&family))?;
            Ok(vec![vec![
                d.into(),
                a.into(),
                m.name().into(),
                gk.lhs.into(),
                gk.rhs.into(),
                next.lhs.into(),
                next.rhs.into(),
            ]])
        })?;
        let columns = vec![
            "delta",
            "alpha",
            "method",
            "gk_lhs",
            "gk_rhs",
            "second_order_lhs",
            "second_order_rhs",
        ];
        Ok(self.table("transport", &self.methods, columns, rows))
    }

    pub fn crossover(&self, deltas: &[f64]) -> Result<Table> {
        let base = self.source.v_params("crossover")?;
        let eps = self.source.epsilon();
        let rows = par_rows(deltas, |&d| {
            let sys = v_system(&base.with_delta(d), eps)?;
            let j = |m| mean_current(&sys, m, LEFT);
            let (jr, ju, js) = (
                j(Method::Redfield)?,
                j(Method::Unified)?,
                j(Method::Secular)?,
            );
            let nearest = if (ju - jr).abs() <= (js - jr).abs() {
                Method::Unified
            } else {
                Method::Secular
            };
            Ok(vec![vec![
                d.into(),
                jr.into(),
                ju.into(),
                js.into(),
                nearest.name().into(),
                classify(jr, ju, js).name().into(),
            ]])
        })?;
        let columns = vec![
            "delta",
            "J_redfield",
            "J_unified",
            "J_secular",
            "closest_method",
            "regime",
        ];
        Ok(self.table("crossover", &Method::ALL, columns, rows))
    }

    pub fn coherence(&self, alpha_points: usize, deltas: &[f64]) -> Result<Table> {
        let base = self.source.v_params("coherence")?;
        let methods: Vec<Method> = self
            .methods
            .iter()
            .copied()
            .filter(|&m| m != Method::Secular)
            .collect();
        if methods.is_empty() {
            bail!(UsageError(
                "the secular steady state has no coherence between the excited levels; ρ23 is identically zero".into()
            ));
        }
        let eps = self.source.epsilon();
        let alphas = linspace(-1.0, 1.0, alpha_points)?;
        let mut points = Vec::new();
        for &a in &alphas {
            for &d in deltas {
                for &m in &methods {
                    points.push((a, d, m));
                }
            }
        }
        let rows = par_rows(&points, |&(a, d, m)| {
            let sys = v_system(&base.with_alpha(a).with_delta(d), eps)?;
            let l = sys.liouvillian(m)?;
            let rho = steady_state(&l.matrix, &l.basis)?;
            let z = l
                .basis
                .index_of(1, 2)
                .map_or(C64::new(0.0, 0.0), |k| rho[k]);
            Ok(vec![vec![
                a.into(),
                d.into(),
                m.name().into(),
                z.re.into(),
                z.im.into(),
            ]])
        })?;
        let columns = vec!["alpha", "delta", "method", "re_rho23", "im_rho23"];
        Ok(self.table("coherence", &methods, columns, rows))
    }

    pub fn tur(&self, grid: &[f64], t_bar: Option<f64>) -> Result<Table> {
        let t_bar = match t_bar {
            Some(t) => t,
            None => self.source.mean_temperature()?,
        };
        let family = Family {
            source: &self.source,
            params: None,
        };
        let steps = self.steps(&family);
        let mut points = Vec::new();
        for &m in &self.methods {
            for &dt in grid {
                if !(dt > 0.0) {
                    bail!(UsageError(format!("δT must be positive, got {dt}")));
                }
                points.push((m, dt));
            }
        }
        let rows = par_rows(&points, |&(m, dt)| {
            let p = tur_point(&family, m, t_bar, dt, steps)?;
            Ok(vec![vec![
                dt.into(),
                m.name().into(),
                p.mean.into(),
                p.variance.into(),
                p.ratio.into(),
            ]])
        })?;
        let columns = vec!["deltaT", "method", "mean_J", "var_J", "ratio"];
        Ok(self.table("tur", &self.methods, columns, rows))
    }

    pub fn rates(&self, format: Format) -> Result<String> {
        let sys = self.source.system()?;
        let mut omegas: Vec<f64> = sys
            .frequencies()
            .iter()
            .map(|f| f.value)
            .chain(sys.partition().clusters().iter().map(|c| c.center))
            .collect();
        omegas.sort_by(f64::total_cmp);
        omegas.dedup();
        let ids = self.source.bath_ids();
        let table = sys.rates();
        let mut rows = Vec::new();
        for (j, id) in ids.iter().enumerate() {
            for &w in &omegas {
                rows.push(vec![id.as_str().into(), w.into(), table.get(j, w).into()]);
            }
        }
        match format {
            Format::Csv => Ok(self
                .table("rates", &[], vec!["bath", "omega", "rate"], rows)
                .to_csv()),
            Format::Json => {
                let baths: Vec<Value> = table
                    .baths()
                    .iter()
                    .enumerate()
                    .map(|(j, b)| {
                        let rates: Vec<Value> = omegas
                            .iter()
                            .map(|&w| json!({"omega": w, "rate": table.get(j, w)}))
                            .collect();
                        json!({
                            "id": b.bath_id,
                            "temperature": b.temperature,
                            "ohmic_a": b.ohmic_a,
                            "rates": rates,
                        })
                    })
                    .collect();
                json_text(&json!({
                    "baths": baths,
                    "detailed_balance_error": table.detailed_balance_error(),
                }))
            }
        }
    }

    pub fn generator(&self, chi: &[String], format: Format) -> Result<String> {
        let sys = self.source.system()?;
        let n = sys.bath_count();
        if chi.len() > n {
            bail!(UsageError(format!(
                "{} counting fields given, system has {n} baths",
                chi.len()
            )));
        }
        let mut field = vec![C64::new(0.0, 0.0); n];
        for (slot, s) in field.iter_mut().zip(chi) {
            *slot = parse_complex(s)?;
        }
        let field = CountingField::new(field);
        let mut objects = Vec::new();
        let mut rows = Vec::new();
        for &m in &self.methods {
            let l = sys.generator(m, &field)?;
            let d = l.matrix.nrows();
            let matrix: Vec<Value> = (0..d)
                .map(|r| {
                    Value::Array(
                        (0..d)
                            .map(|c| {
                                let z = l.matrix[(r, c)];
                                json!([z.re, z.im])
                            })
                            .collect(),
                    )
                })
                .collect();
            for r in 0..d {
                for c in 0..d {
                    let z = l.matrix[(r, c)];
                    rows.push(vec![
                        m.name().into(),
                        Cell::Int(r as i64),
                        Cell::Int(c as i64),
                        z.re.into(),
                        z.im.into(),
                    ]);
                }
            }
            objects.push(json!({
                "method": m.name(),
                "chi": field.components().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "basis": l.basis.entries(),
                "dim": d,
                "matrix": matrix,
            }));
        }
        match format {
            Format::Csv => Ok(self
                .table(
                    "generator",
                    &self.methods,
                    vec!["method", "row", "col", "re", "im"],
                    rows,
                )
                .to_csv()),
            Format::Json => json_text(&single_or_array(objects)),
        }
    }

    pub fn steady_state(&self, format: Format) -> Result<String> {
        let sys = self.source.system()?;
        let ids = self.source.bath_ids();
        let mut objects = Vec::new();
        let mut rows = Vec::new();
        for &m in &self.methods {
            let l = sys.liouvillian(m)?;
            let rho = steady_state(&l.matrix, &l.basis)?;
            let currents = (0..sys.bath_count())
                .map(|j| Ok(json!({"bath": ids[j], "mean": mean_current(&sys, m, j)?})))
                .collect::<Result<Vec<_>>>()?;
            for (k, &(a, b)) in l.basis.entries().iter().enumerate() {
                rows.push(vec![
                    m.name().into(),
                    Cell::Int(a as i64),
                    Cell::Int(b as i64),
                    rho[k].re.into(),
                    rho[k].im.into(),
                ]);
            }
            objects.push(json!({
                "method": m.name(),
                "basis": l.basis.entries(),
                "rho": rho.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "currents": currents,
            }));
        }
        match format {
            Format::Csv => Ok(self
                .table(
                    "steady-state",
                    &self.methods,
                    vec!["method", "a", "b", "re", "im"],
                    rows,
                )
                .to_csv()),
            Format::Json => json_text(&single_or_array(objects)),
        }
    }
}

fn single_or_array(mut objects: Vec<Value>) -> Value {
    if objects.len() == 1 {
        objects.pop().expect("one element")
    } else {
        Value::Array(objects)
    }
}

/// `RE` or `RE:IM`.
fn parse_complex(s: &str) -> Result<C64> {
    let bad = || UsageError(format!("counting field `{s}` is not RE or RE:IM"));
    let (re, im) = match s.split_once(':') {
        Some((r, i)) => (r, i),
        None => (s, "0"),
    };
    let re: f64 = re.trim().parse().map_err(|_| bad())?;
    let im: f64 = im.trim().parse().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}
