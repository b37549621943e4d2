//! Text formats: grid functions, sparse families, certificates, CSV tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bloomlab_core::dyadic::{DyadicTree, SparseFamily};
use bloomlab_core::lowerbound::LowerBoundCertificate;
use bloomlab_core::operators::SpherePoint;
use bloomlab_core::{Cube, Dim, Grid, GridFunction};

use crate::LabError;

fn parse_err(msg: impl Into<String>) -> LabError {
    LabError::Parse(msg.into())
}

fn grid_header(g: &Grid) -> String {
    let mut s = format!("{} {}", g.dim().get(), g.n());
    for c in &g.corner()[..g.dim().get()] {
        write!(s, " {c}").unwrap();
    }
    write!(s, " {}", g.side()).unwrap();
    s
}

fn parse_grid(tokens: &mut dyn Iterator<Item = &str>) -> Result<Grid, LabError> {
    let mut next = |what: &str| tokens.next().ok_or_else(|| parse_err(format!("missing {what}")));
    let dim: usize = next("dim")?.parse().map_err(|_| parse_err("bad dim"))?;
    let dim = Dim::new(dim)?;
    let n: usize = next("N")?.parse().map_err(|_| parse_err("bad N"))?;
    let mut corner = [0.0; 2];
    for c in corner.iter_mut().take(dim.get()) {
        *c = next("corner")?.parse().map_err(|_| parse_err("bad corner"))?;
    }
    let side: f64 = next("side")?.parse().map_err(|_| parse_err("bad side"))?;
    Ok(Grid::new(dim, &corner[..dim.get()], side, n)?)
}

/// Header `dim N corner... side`, then the samples in row-major order, one
/// row of the grid per line. Values use the shortest exact representation.
pub fn format_grid_function(f: &GridFunction) -> String {
    let g = f.grid();
    let mut s = grid_header(g);
    s.push('\n');
    let row = match g.dim() {
        Dim::One => g.len(),
        Dim::Two => g.n(),
    };
    for chunk in f.samples().chunks(row) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_grid_function(text: &str) -> Result<GridFunction, LabError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err("empty grid function file"))?;
    let grid = parse_grid(&mut header.split_whitespace())?;
    let samples = lines
        .flat_map(str::split_whitespace)
        .map(|t| t.parse::<f64>().map_err(|_| parse_err(format!("bad sample `{t}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if samples.len() != grid.len() {
        return Err(parse_err(format!("expected {} samples, found {}", grid.len(), samples.len())));
    }
    Ok(GridFunction::new(grid, samples)?)
}

pub fn read_grid_function(path: &Path) -> Result<GridFunction, LabError> {
    parse_grid_function(&fs::read_to_string(path)?)
}

pub fn write_grid_function(path: &Path, f: &GridFunction) -> Result<(), LabError> {
    Ok(fs::write(path, format_grid_function(f))?)
}

/// `grid dim N corner... side`, `tree origin... root_cells max_depth`, then
/// one line per cube: `corner... side alpha : cells of E_Q`.
pub fn format_sparse_family(s: &SparseFamily) -> String {
    let tree = s.tree();
    let d = tree.dim().get();
    let mut out = format!("grid {}\ntree", grid_header(tree.grid()));
    for o in tree.origin() {
        write!(out, " {o}").unwrap();
    }
    writeln!(out, " {} {}", tree.root_cells(), tree.max_depth()).unwrap();
    for (q, e) in s.cubes().iter().zip(s.carve_outs()) {
        let c = tree.cube(q);
        for x in &c.corner()[..d] {
            write!(out, "{x:?} ").unwrap();
        }
        write!(out, "{:?} {:?} :", c.side(), s.alpha()).unwrap();
        for cell in e {
            write!(out, " {cell}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_sparse_family(text: &str) -> Result<SparseFamily, LabError> {
    let mut lines = text.lines();
    let g = lines
        .next()
        .and_then(|l| l.strip_prefix("grid "))
        .ok_or_else(|| parse_err("missing grid line"))?;
    let grid = parse_grid(&mut g.split_whitespace())?;
    let d = grid.dim().get();
    let t: Vec<usize> = lines
        .next()
        .and_then(|l| l.strip_prefix("tree"))
        .ok_or_else(|| parse_err("missing tree line"))?
        .split_whitespace()
        .map(|x| x.parse().map_err(|_| parse_err("bad tree line")))
        .collect::<Result<_, _>>()?;
    if t.len() != d + 2 {
        return Err(parse_err("tree line needs origin, root size and depth"));
    }
    let tree = DyadicTree::new(grid, &t[..d], t[d])?.with_max_depth(t[d + 1] as u32)?;
    let mut cubes = Vec::new();
    let mut carve = Vec::new();
    let mut alpha = None;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let (head, cells) = line.split_once(':').ok_or_else(|| parse_err("cube line without `:`"))?;
        let h: Vec<f64> = head
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| parse_err("bad cube line")))
            .collect::<Result<_, _>>()?;
        if h.len() != d + 2 {
            return Err(parse_err("cube line needs corner, side and alpha"));
        }
        let cube = Cube::new(grid.dim(), &h[..d], h[d])?;
        let q = tree.find(&cube).ok_or_else(|| parse_err(format!("{cube:?} is not a cube of the tree")))?;
        alpha = Some(h[d + 1]);
        cubes.push(q);
        carve.push(
            cells
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| parse_err("bad cell index")))
                .collect::<Result<Vec<usize>, _>>()?,
        );
    }
    Ok(SparseFamily::new(tree, cubes, carve, alpha.unwrap_or(0.5))?)
}

fn sphere_text(p: SpherePoint) -> String {
    match p {
        SpherePoint::Line(s) => format!("{{\"line\": {s:?}}}"),
        SpherePoint::Circle(a) => format!("{{\"angle\": {a:?}}}"),
    }
}

fn list<T: std::fmt::Display>(v: impl IntoIterator<Item = T>) -> String {
    let items: Vec<String> = v.into_iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// JSON-like dump of every scalar and cell list of a certificate.
pub fn format_certificate(c: &LowerBoundCertificate) -> String {
    let d = c.q.dim().get();
    let mut s = String::from("{\n");
    let mut field = |k: &str, v: String| writeln!(s, "  \"{k}\": {v},").unwrap();
    field("q_corner", list(c.q.corner()[..d].iter().map(|x| format!("{x:?}"))));
    field("q_side", format!("{:?}", c.q.side()));
    field("theta0", sphere_text(c.theta0));
    field("eps0", format!("{:?}", c.eps0));
    field("alpha0", format!("{:?}", c.alpha0));
    field("delta", format!("{:?}", c.delta));
    field("k0", format!("{:?}", c.k0));
    field("xi0", format!("{:?}", c.xi0));
    field("bad_fraction", format!("{:?}", c.bad_fraction));
    field("sign_b", c.sign_b.to_string());
    field("sign_omega", c.sign_omega.to_string());
    field("oscillation", format!("{:?}", c.oscillation));
    field("median", format!("{:?}", c.median));
    field("cell_volume", format!("{:?}", c.cell_volume));
    field("q_cells", list(&c.q_cells));
    field("f_alpha", list(&c.f_alpha));
    field("e", list(&c.e));
    field("f", list(&c.f));
    s.push_str(&format!(
        "  \"removed\": {}\n}}\n",
        list(c.removed.iter().map(|(x, y)| format!("[{x}, {y}]")))
    ));
    s
}

/// One value of a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Text(String),
    Flag(bool),
}

impl From<f64> for Value {
    fn from(x: f64) -> Value {
        Value::Real(x)
    }
}
impl From<usize> for Value {
    fn from(x: usize) -> Value {
        Value::Int(x as i64)
    }
}
impl From<u32> for Value {
    fn from(x: u32) -> Value {
        Value::Int(i64::from(x))
    }
}
impl From<i64> for Value {
    fn from(x: i64) -> Value {
        Value::Int(x)
    }
}
impl From<bool> for Value {
    fn from(x: bool) -> Value {
        Value::Flag(x)
    }
}
impl From<&str> for Value {
    fn from(x: &str) -> Value {
        Value::Text(x.to_string())
    }
}
impl From<String> for Value {
    fn from(x: String) -> Value {
        Value::Text(x)
    }
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Real(x) => format!("{x:.12e}"),
            Value::Int(i) => i.to_string(),
            Value::Text(t) => t.clone(),
            Value::Flag(b) => b.to_string(),
        }
    }
}

/// A CSV table; every row is prefixed with the configuration hash.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Table {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self, hash: &str) -> Result<String, LabError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["config_hash".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![hash.to_string()];
            rec.extend(row.iter().map(Value::render));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Columns of a CSV text by name, as strings.
pub fn read_csv_columns(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), LabError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}
