//! Error norms, observed orders of convergence and table output.

use nalgebra::{DVector, Vector3};

use crate::assembly::{DofMap, ElementGeometry, LocalLayout, ReferenceData, SolutionFields, OVERKILL_DEGREE};
use crate::error::Error;
use crate::manufactured::ExactSolution;
use crate::mesh::{mesh_size, Mesh};
use crate::polyspace::simplex_quadrature;

/// Errors below this are treated as exact and get no order.
pub const EOC_FLOOR: f64 = 1e-14;

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub k: usize,
    pub h: f64,
    /// `||u - u_h||`.
    pub err_u: f64,
    /// `||w - w_h||`.
    pub err_w: f64,
    /// Broken `||w - curl u_h||`.
    pub err_curl_u: f64,
    /// Broken `||div u_h||`.
    pub err_div_u: f64,
    /// Global trace unknowns.
    pub dofs_global: usize,
    /// Seconds spent on the level.
    pub wall_time: f64,
}

/// Errors of `fields` against `exact`, integrated with the degree-14 rule.
pub fn compute_errors(mesh: &Mesh, fields: &SolutionFields, exact: &dyn ExactSolution) -> Result<ConvergenceRecord, Error> {
    compute_errors_with_degree(mesh, fields, exact, OVERKILL_DEGREE)
}

/// As [`compute_errors`] with an explicit quadrature degree.
pub fn compute_errors_with_degree(
    mesh: &Mesh,
    fields: &SolutionFields,
    exact: &dyn ExactSolution,
    degree: usize,
) -> Result<ConvergenceRecord, Error> {
    if fields.num_elements() != mesh.num_tets() {
        return Err(Error::Input(format!(
            "fields cover {} elements, mesh has {}",
            fields.num_elements(),
            mesh.num_tets()
        )));
    }
    let reference = ReferenceData::new(fields.k)?;
    let lay = reference.layout;
    let rule = simplex_quadrature(3, degree)?;
    let (mut eu, mut ew, mut ec, mut ed) = (0.0, 0.0, 0.0, 0.0);
    for e in 0..mesh.num_tets() {
        let geo = ElementGeometry::new(mesh, e);
        let tab = geo.tabulate(&reference.basis, &rule.points);
        let u: [DVector<f64>; 3] = std::array::from_fn(|c| DVector::from_column_slice(fields.u(e, c)));
        let w: [DVector<f64>; 3] = std::array::from_fn(|c| DVector::from_column_slice(fields.w(e, c)));
        let uq: [DVector<f64>; 3] = std::array::from_fn(|c| &tab.values * &u[c]);
        let wq: [DVector<f64>; 3] = std::array::from_fn(|c| tab.values.columns(0, lay.nk) * &w[c]);
        // du[a][c] = d u_c / d x_a
        let du: [[DVector<f64>; 3]; 3] = std::array::from_fn(|a| std::array::from_fn(|c| &tab.grads[a] * &u[c]));
        for (q, (xi, wt)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = geo.to_physical(xi);
            let ex = exact.eval(&x);
            let uh = Vector3::new(uq[0][q], uq[1][q], uq[2][q]);
            let wh = Vector3::new(wq[0][q], wq[1][q], wq[2][q]);
            let curl = Vector3::new(
                du[1][2][q] - du[2][1][q],
                du[2][0][q] - du[0][2][q],
                du[0][1][q] - du[1][0][q],
            );
            let div = du[0][0][q] + du[1][1][q] + du[2][2][q];
            let jw = wt * geo.det;
            eu += jw * (ex.u - uh).norm_squared();
            ew += jw * (ex.w - wh).norm_squared();
            ec += jw * (ex.w - curl).norm_squared();
            ed += jw * div * div;
        }
    }
    Ok(ConvergenceRecord {
        k: fields.k,
        h: mesh_size(mesh),
        err_u: eu.sqrt(),
        err_w: ew.sqrt(),
        err_curl_u: ec.sqrt(),
        err_div_u: ed.sqrt(),
        dofs_global: DofMap::new(mesh, &LocalLayout::new(fields.k)).ndofs(),
        wall_time: 0.0,
    })
}

/// Observed order between two levels, `None` when either error is at the
/// floor.
pub fn order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Option<f64> {
    (e_coarse > EOC_FLOOR && e_fine > EOC_FLOOR).then(|| (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
}

/// Orders per error column; entry `i` compares levels `i - 1` and `i`, so
/// the first entry is always `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Orders {
    pub u: Vec<Option<f64>>,
    pub w: Vec<Option<f64>>,
    pub curl_u: Vec<Option<f64>>,
    pub div_u: Vec<Option<f64>>,
}

/// Pairwise observed orders of consecutive records.
pub fn compute_eoc(records: &[ConvergenceRecord]) -> Result<Orders, Error> {
    if records.len() < 2 {
        return Err(Error::Input(format!("need at least 2 records, got {}", records.len())));
    }
    if let Some(i) = (1..records.len()).find(|&i| !(records[i].h < records[i - 1].h)) {
        return Err(Error::Input(format!(
            "h must strictly decrease: level {} has h = {}, level {} has h = {}",
            i - 1,
            records[i - 1].h,
            i,
            records[i].h
        )));
    }
    let column = |f: fn(&ConvergenceRecord) -> f64| {
        std::iter::once(None)
            .chain(records.windows(2).map(|p| order(f(&p[0]), f(&p[1]), p[0].h, p[1].h)))
            .collect()
    };
    Ok(Orders {
        u: column(|r| r.err_u),
        w: column(|r| r.err_w),
        curl_u: column(|r| r.err_curl_u),
        div_u: column(|r| r.err_div_u),
    })
}

/// Output table format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::Config(format!("unknown format '{other}' (expected csv or markdown)"))),
        }
    }
}

/// CSV column names.
pub const CSV_HEADER: [&str; 10] = [
    "k", "h", "err_u", "order_u", "err_w", "order_w", "err_curl_u", "err_div_u", "dofs", "seconds",
];

/// C-style `%.{digits}e` formatting: `4.990000e-02`.
pub fn format_sci(x: f64, digits: usize) -> String {
    let s = format!("{x:.digits$e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, mag) = match exp.strip_prefix('-') {
                Some(m) => ('-', m),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{mag:0>2}")
        }
        None => s,
    }
}

/// Orders for any number of records; a single record has no orders.
fn orders_or_blank(records: &[ConvergenceRecord]) -> Result<Orders, Error> {
    if records.len() < 2 {
        let blank = vec![None; records.len()];
        return Ok(Orders {
            u: blank.clone(),
            w: blank.clone(),
            curl_u: blank.clone(),
            div_u: blank,
        });
    }
    compute_eoc(records)
}

/// Renders records as CSV or as a markdown table.
pub fn render_table(records: &[ConvergenceRecord], format: TableFormat) -> Result<String, Error> {
    if records.is_empty() {
        return Err(Error::Input("no records to render".into()));
    }
    let orders = orders_or_blank(records)?;
    match format {
        TableFormat::Csv => render_csv(records, &orders),
        TableFormat::Markdown => Ok(render_markdown(records, &orders)),
    }
}

fn render_csv(records: &[ConvergenceRecord], orders: &Orders) -> Result<String, Error> {
    let sci = |x: f64| format_sci(x, 6);
    let opt = |o: Option<f64>| o.map(sci).unwrap_or_default();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            r.k.to_string(),
            sci(r.h),
            sci(r.err_u),
            opt(orders.u[i]),
            sci(r.err_w),
            opt(orders.w[i]),
            sci(r.err_curl_u),
            sci(r.err_div_u),
            r.dofs_global.to_string(),
            sci(r.wall_time),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}

fn render_markdown(records: &[ConvergenceRecord], orders: &Orders) -> String {
    let sci = |x: f64| {
        let s = format_sci(x, 2);
        s.replace('e', "E")
    };
    let opt = |o: Option<f64>| o.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
    let mut out = String::from("| k | h | ‖u − u_h‖ | order | ‖w − w_h‖ | order |\n|---|---|---|---|---|---|\n");
    for (i, r) in records.iter().enumerate() {
        let k = if i == 0 || records[i - 1].k != r.k {
            r.k.to_string()
        } else {
            String::new()
        };
        out += &format!(
            "| {k} | {} | {} | {} | {} | {} |\n",
            sci(r.h),
            sci(r.err_u),
            opt(orders.u[i]),
            sci(r.err_w),
            opt(orders.w[i])
        );
    }
    out
}

/// A parsed CSV row. Orders are `None` where the cell is blank.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub record: ConvergenceRecord,
    pub order_u: Option<f64>,
    pub order_w: Option<f64>,
}

/// Parses CSV written by [`render_table`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, Error> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let bad = |msg: String| Error::Input(msg);
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64, Error> {
            cell(i)
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: column {} is not a number: '{}'", line + 1, CSV_HEADER[i], cell(i))))
        };
        let int = |i: usize| -> Result<usize, Error> {
            cell(i)
                .parse::<usize>()
                .map_err(|_| bad(format!("row {}: column {} is not an integer: '{}'", line + 1, CSV_HEADER[i], cell(i))))
        };
        let opt = |i: usize| -> Result<Option<f64>, Error> {
            if cell(i).is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        rows.push(CsvRow {
            record: ConvergenceRecord {
                k: int(0)?,
                h: num(1)?,
                err_u: num(2)?,
                err_w: num(4)?,
                err_curl_u: num(6)?,
                err_div_u: num(7)?,
                dofs_global: int(8)?,
                wall_time: num(9)?,
            },
            order_u: opt(3)?,
            order_w: opt(5)?,
        });
    }
    Ok(rows)
}
