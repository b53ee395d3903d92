//! File formats: CSV readers/writers for weights, embeddings, latent
//! samples, coordinates, distance matrices, and fitted models, plus the
//! binary `raw64` distance format.
//!
//! All floating-point output is rendered with 17 significant decimal digits
//! so CSV round-trips reproduce 64-bit values exactly. Provenance travels in
//! a single '#'-prefixed JSON header line.

use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::latent::mercer::MercerFeatures;
use crate::latent::{LatentSample, SupportSpec};
use crate::spectral::{Embedding, Provenance, ScreeReport, SpectralModel};
use crate::weights::{WeightStrategy, WeightVector};

/// Decimal rendering that round-trips 64-bit floats exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(tok: &str, path: &str, line: usize) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("expected a float, got {tok:?}"),
    })
}

fn parse_usize(tok: &str, path: &str, line: usize) -> Result<usize> {
    tok.trim().parse::<usize>().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("expected an index, got {tok:?}"),
    })
}

fn open_lines<P: AsRef<Path>>(path: P) -> Result<(String, Vec<String>)> {
    let display = path.as_ref().display().to_string();
    let file = std::fs::File::open(path.as_ref())?;
    let lines: std::result::Result<Vec<String>, _> =
        std::io::BufReader::new(file).lines().collect();
    Ok((display, lines?))
}

// ---------------------------------------------------------------------------
// weights

#[derive(Serialize, Deserialize)]
struct WeightsHeader {
    normalised: bool,
    #[serde(flatten)]
    strategy: WeightStrategy,
}

/// `index,weight` rows under a '#' JSON provenance header.
pub fn write_weights_csv<P: AsRef<Path>>(w: &WeightVector, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let header = WeightsHeader {
        normalised: w.is_normalised(),
        strategy: w.strategy().clone(),
    };
    writeln!(
        out,
        "# {}",
        serde_json::to_string(&header).map_err(json_err)?
    )?;
    writeln!(out, "index,weight")?;
    for (i, v) in w.values().iter().enumerate() {
        writeln!(out, "{},{}", i, fmt_f64(*v))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_weights_csv<P: AsRef<Path>>(path: P) -> Result<WeightVector> {
    let (display, lines) = open_lines(path)?;
    let mut strategy = WeightStrategy::Custom {
        name: "external".into(),
    };
    let mut normalised = false;
    let mut values = Vec::new();
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(json) = t.strip_prefix('#') {
            if let Ok(h) = serde_json::from_str::<WeightsHeader>(json.trim()) {
                strategy = h.strategy;
                normalised = h.normalised;
            }
            continue;
        }
        if t.starts_with("index") {
            continue;
        }
        let cols: Vec<&str> = t.split(',').collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: "expected index,weight".into(),
            });
        }
        let idx = parse_usize(cols[0], &display, lineno + 1)?;
        if idx != values.len() {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: format!("expected index {}, got {idx}", values.len()),
            });
        }
        values.push(parse_f64(cols[1], &display, lineno + 1)?);
    }
    WeightVector::from_parts(values, normalised, strategy)
}

// ---------------------------------------------------------------------------
// embeddings

/// `index,x1,..,xr` rows under a '#' JSON provenance header. Excluded nodes
/// are written with empty value fields, never silently zeroed.
pub fn write_embedding_csv<P: AsRef<Path>>(e: &Embedding, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(
        out,
        "# {}",
        serde_json::to_string(e.provenance()).map_err(json_err)?
    )?;
    let cols: Vec<String> = (1..=e.r()).map(|k| format!("x{k}")).collect();
    writeln!(out, "index,{}", cols.join(","))?;
    for i in 0..e.n() {
        if e.is_excluded(i) {
            writeln!(out, "{}{}", i, ",".repeat(e.r()))?;
        } else {
            let vals: Vec<String> = (0..e.r()).map(|k| fmt_f64(e.matrix()[(i, k)])).collect();
            writeln!(out, "{},{}", i, vals.join(","))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_embedding_csv<P: AsRef<Path>>(path: P) -> Result<Embedding> {
    let (display, lines) = open_lines(path)?;
    let mut provenance: Option<Provenance> = None;
    let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
    let mut r = 0usize;
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(json) = t.strip_prefix('#') {
            if let Ok(p) = serde_json::from_str::<Provenance>(json.trim()) {
                provenance = Some(p);
            }
            continue;
        }
        if t.starts_with("index") {
            continue;
        }
        let cols: Vec<&str> = t.split(',').collect();
        if cols.len() < 2 {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: "expected index,x1,...".into(),
            });
        }
        let idx = parse_usize(cols[0], &display, lineno + 1)?;
        if idx != rows.len() {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: format!("expected index {}, got {idx}", rows.len()),
            });
        }
        if r == 0 {
            r = cols.len() - 1;
        } else if cols.len() - 1 != r {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: format!("expected {r} embedding columns"),
            });
        }
        if cols[1..].iter().all(|c| c.trim().is_empty()) {
            rows.push(None);
        } else {
            let vals: Result<Vec<f64>> = cols[1..]
                .iter()
                .map(|c| parse_f64(c, &display, lineno + 1))
                .collect();
            rows.push(Some(vals?));
        }
    }
    let n = rows.len();
    let mut x = DMatrix::zeros(n, r);
    let mut excluded = vec![false; n];
    for (i, row) in rows.iter().enumerate() {
        match row {
            Some(vals) => {
                for (k, v) in vals.iter().enumerate() {
                    x[(i, k)] = *v;
                }
            }
            None => excluded[i] = true,
        }
    }
    let provenance = provenance.unwrap_or(Provenance {
        method: "external".into(),
        r,
        weight_strategy: None,
        seeds: vec![],
        excluded_count: excluded.iter().filter(|&&e| e).count(),
    });
    Embedding::from_parts(x, excluded, provenance)
}

// ---------------------------------------------------------------------------
// latent samples and coordinates

#[derive(Serialize, Deserialize)]
struct LatentHeader {
    seed: u64,
    support: SupportSpec,
}

/// `index,z1,..,zd` rows under a '#' JSON header recording seed and support.
pub fn write_latent_csv<P: AsRef<Path>>(s: &LatentSample, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let header = LatentHeader {
        seed: s.seed(),
        support: s.support().clone(),
    };
    writeln!(
        out,
        "# {}",
        serde_json::to_string(&header).map_err(json_err)?
    )?;
    let cols: Vec<String> = (1..=s.dim()).map(|k| format!("z{k}")).collect();
    writeln!(out, "index,{}", cols.join(","))?;
    for i in 0..s.n() {
        let vals: Vec<String> = s.row(i).iter().map(|v| fmt_f64(*v)).collect();
        writeln!(out, "{},{}", i, vals.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_latent_csv<P: AsRef<Path>>(path: P) -> Result<LatentSample> {
    let (display, lines) = open_lines(path)?;
    let mut header: Option<LatentHeader> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(json) = t.strip_prefix('#') {
            header = Some(serde_json::from_str(json.trim()).map_err(|e| Error::Parse {
                path: display.clone(),
                line: lineno + 1,
                msg: format!("bad latent header: {e}"),
            })?);
            continue;
        }
        if t.starts_with("index") {
            continue;
        }
        let cols: Vec<&str> = t.split(',').collect();
        let vals: Result<Vec<f64>> = cols[1..]
            .iter()
            .map(|c| parse_f64(c, &display, lineno + 1))
            .collect();
        rows.push(vals?);
    }
    let header = header.ok_or_else(|| {
        Error::Schema(format!(
            "{display}: latent CSV is missing its '#' JSON header"
        ))
    })?;
    if rows.is_empty() {
        return Err(Error::Degenerate(format!("{display}: no latent rows")));
    }
    let d = rows[0].len();
    let z = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    LatentSample::from_positions(z, header.support, header.seed)
}

/// Read a coordinates CSV: first column is a node label (matched against the
/// graph's node map) and remaining columns are coordinates. Every graph node
/// must appear exactly once. A header row is detected by a non-numeric
/// second field.
pub fn read_coords_csv<P: AsRef<Path>>(path: P, g: &Graph) -> Result<DMatrix<f64>> {
    let (display, lines) = open_lines(path)?;
    let n = g.node_count();
    let mut dim = 0usize;
    let mut coords: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut label_lookup = std::collections::HashMap::new();
    if let Some(ids) = g.node_ids() {
        for (i, l) in ids.iter().enumerate() {
            label_lookup.insert(l.as_str(), i);
        }
    }
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = t.split(',').map(str::trim).collect();
        if cols.len() < 2 {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: "expected label,coord[,coord...]".into(),
            });
        }
        if cols[1].parse::<f64>().is_err() {
            continue; // header row
        }
        let idx = match label_lookup.get(cols[0]) {
            Some(&i) => i,
            // labelled graphs skip coordinates for unknown labels (exports
            // may cover more nodes than the edge list retained)
            None if g.node_ids().is_some() => continue,
            None => parse_usize(cols[0], &display, lineno + 1)?,
        };
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
        let vals: Result<Vec<f64>> = cols[1..]
            .iter()
            .map(|c| parse_f64(c, &display, lineno + 1))
            .collect();
        let vals = vals?;
        if dim == 0 {
            dim = vals.len();
        } else if vals.len() != dim {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: format!("expected {dim} coordinates"),
            });
        }
        coords[idx] = Some(vals);
    }
    let mut out = DMatrix::zeros(n, dim);
    for (i, c) in coords.iter().enumerate() {
        match c {
            Some(vals) => {
                for (k, v) in vals.iter().enumerate() {
                    out[(i, k)] = *v;
                }
            }
            None => {
                return Err(Error::Schema(format!(
                    "{display}: no coordinates for node index {i}"
                )))
            }
        }
    }
    Ok(out)
}

/// Write coordinates keyed by node label (or index when unlabelled).
pub fn write_coords_csv<P: AsRef<Path>>(g: &Graph, coords: &DMatrix<f64>, path: P) -> Result<()> {
    if coords.nrows() != g.node_count() {
        return Err(Error::LengthMismatch {
            expected: g.node_count(),
            got: coords.nrows(),
        });
    }
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let cols: Vec<String> = (1..=coords.ncols()).map(|k| format!("c{k}")).collect();
    writeln!(out, "label,{}", cols.join(","))?;
    for i in 0..coords.nrows() {
        let vals: Vec<String> = (0..coords.ncols())
            .map(|k| fmt_f64(coords[(i, k)]))
            .collect();
        match g.node_id(i) {
            Some(l) => writeln!(out, "{},{}", l, vals.join(","))?,
            None => writeln!(out, "{},{}", i, vals.join(","))?,
        }
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// mercer features (long format for plotting)

/// Long-format rows `x[,y],k,lambda_k,phi_k` over the grid.
pub fn write_mercer_csv<P: AsRef<Path>>(f: &MercerFeatures, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let dim = f.grid().ncols();
    match dim {
        1 => writeln!(out, "x,k,lambda_k,phi_k")?,
        2 => writeln!(out, "x,y,k,lambda_k,phi_k")?,
        d => {
            return Err(Error::Config(format!(
                "mercer CSV export supports 1D/2D grids, got {d}D"
            )))
        }
    }
    for g in 0..f.grid().nrows() {
        for k in 0..f.truncation() {
            let coords: Vec<String> = (0..dim).map(|d| fmt_f64(f.grid()[(g, d)])).collect();
            writeln!(
                out,
                "{},{},{},{}",
                coords.join(","),
                k + 1,
                fmt_f64(f.eigenvalues()[k]),
                fmt_f64(f.features()[(g, k)])
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// scree

pub fn write_scree_csv<P: AsRef<Path>>(rep: &ScreeReport, path: P) -> Result<()> {
    let mut table = CsvTable::new(&[
        ("rank", ColType::Int),
        ("eigenvalue", ColType::Float),
        ("gap", ColType::OptFloat),
    ]);
    for (i, v) in rep.values.iter().enumerate() {
        table.push(vec![
            Cell::Int(i as i64 + 1),
            Cell::Float(*v),
            Cell::OptFloat(rep.gaps.get(i).copied()),
        ])?;
    }
    table.write(path)
}

// ---------------------------------------------------------------------------
// distance matrices

/// Dense CSV: a header row of node indices, then one row of values per node.
pub fn write_distance_csv<P: AsRef<Path>>(d: &DMatrix<f64>, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let n = d.nrows();
    let header: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..n {
        let vals: Vec<String> = (0..n).map(|j| fmt_f64(d[(i, j)])).collect();
        writeln!(out, "{}", vals.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_distance_csv<P: AsRef<Path>>(path: P) -> Result<DMatrix<f64>> {
    let (display, lines) = open_lines(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut n: Option<usize> = None;
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if n.is_none() {
            n = Some(t.split(',').count()); // header row of indices
            continue;
        }
        let vals: Result<Vec<f64>> = t
            .split(',')
            .map(|c| parse_f64(c, &display, lineno + 1))
            .collect();
        rows.push(vals?);
    }
    let n = n.ok_or_else(|| Error::Degenerate(format!("{display}: empty distance CSV")))?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Schema(format!(
            "{display}: expected a {n}x{n} matrix body"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Binary format: one little-endian u64 node count, then `n*n` little-endian
/// f64 values in row-major order.
pub fn write_distance_raw64<P: AsRef<Path>>(d: &DMatrix<f64>, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let n = d.nrows() as u64;
    out.write_all(&n.to_le_bytes())?;
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            out.write_all(&d[(i, j)].to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_distance_raw64<P: AsRef<Path>>(path: P) -> Result<DMatrix<f64>> {
    let mut file = std::fs::File::open(path.as_ref())?;
    let mut buf8 = [0u8; 8];
    file.read_exact(&mut buf8)?;
    let n = u64::from_le_bytes(buf8) as usize;
    let mut body = vec![0u8; n * n * 8];
    file.read_exact(&mut body)?;
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let off = (i * n + j) * 8;
            d[(i, j)] = f64::from_le_bytes(body[off..off + 8].try_into().unwrap());
        }
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// generic numeric matrices

/// Read a plain numeric CSV into a matrix. '#' comments and a non-numeric
/// header row are skipped; an `index,...` layout (as written by the
/// embedding writer) is detected and its index column stripped, with empty
/// (excluded) rows rejected.
pub fn read_matrix_csv<P: AsRef<Path>>(path: P) -> Result<DMatrix<f64>> {
    let (display, lines) = open_lines(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut indexed = false;
    let mut width = 0usize;
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = t.split(',').map(str::trim).collect();
        if cols[0].parse::<f64>().is_err() {
            // header row; remember whether the layout carries an index column
            indexed = cols[0] == "index";
            continue;
        }
        let data = if indexed { &cols[1..] } else { &cols[..] };
        if data.iter().all(|c| c.is_empty()) {
            return Err(Error::Schema(format!(
                "{display}:{}: row is excluded (empty values); dense input required",
                lineno + 1
            )));
        }
        let vals: Result<Vec<f64>> = data
            .iter()
            .map(|c| parse_f64(c, &display, lineno + 1))
            .collect();
        let vals = vals?;
        if width == 0 {
            width = vals.len();
        } else if vals.len() != width {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: format!("expected {width} columns"),
            });
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Degenerate(format!("{display}: no numeric rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

/// Write a plain numeric CSV with a `c1,..,cd` header.
pub fn write_matrix_csv<P: AsRef<Path>>(m: &DMatrix<f64>, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let cols: Vec<String> = (1..=m.ncols()).map(|k| format!("c{k}")).collect();
    writeln!(out, "{}", cols.join(","))?;
    for i in 0..m.nrows() {
        let vals: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        writeln!(out, "{}", vals.join(","))?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// node lists and connection vectors

/// One node index per line; '#' comments and blanks ignored.
pub fn read_node_list<P: AsRef<Path>>(path: P) -> Result<Vec<usize>> {
    let (display, lines) = open_lines(path)?;
    let mut out = Vec::new();
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_usize(t, &display, lineno + 1)?);
    }
    if out.is_empty() {
        return Err(Error::Degenerate(format!("{display}: empty node list")));
    }
    Ok(out)
}

/// Dense 0/1 connection vector, one value per line, ordered like the model's
/// active node list.
pub fn read_connections<P: AsRef<Path>>(path: P) -> Result<Vec<f64>> {
    let (display, lines) = open_lines(path)?;
    let mut out = Vec::new();
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t {
            "0" => out.push(0.0),
            "1" => out.push(1.0),
            other => {
                return Err(Error::Parse {
                    path: display,
                    line: lineno + 1,
                    msg: format!("expected 0 or 1, got {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// model persistence

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    method: String,
    r: usize,
    n: usize,
    active: Vec<usize>,
    warnings: Vec<String>,
    weight_scale: String,
}

/// Persist a fitted model as a directory `{meta.json, U_w.csv, lambda.csv,
/// weights.csv}`.
pub fn save_model<P: AsRef<Path>>(model: &SpectralModel, dir: P) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let meta = ModelMeta {
        method: model.method().to_string(),
        r: model.r(),
        n: model.n(),
        active: model.active().to_vec(),
        warnings: model.warnings().to_vec(),
        weight_scale: "canonical: largest active weight is 1; embeddings are scale-invariant"
            .into(),
    };
    write_json(&meta, dir.join("meta.json"))?;

    let file = std::fs::File::create(dir.join("U_w.csv"))?;
    let mut out = BufWriter::new(file);
    let cols: Vec<String> = (1..=model.r()).map(|k| format!("u{k}")).collect();
    writeln!(out, "index,{}", cols.join(","))?;
    for (j, &orig) in model.active().iter().enumerate() {
        let vals: Vec<String> = (0..model.r()).map(|k| fmt_f64(model.u()[(j, k)])).collect();
        writeln!(out, "{},{}", orig, vals.join(","))?;
    }
    out.flush()?;

    let file = std::fs::File::create(dir.join("lambda.csv"))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "k,lambda")?;
    for (k, l) in model.lambda().iter().enumerate() {
        writeln!(out, "{},{}", k + 1, fmt_f64(*l))?;
    }
    out.flush()?;

    write_weights_csv(model.weights(), dir.join("weights.csv"))
}

pub fn load_model<P: AsRef<Path>>(dir: P) -> Result<SpectralModel> {
    let dir = dir.as_ref();
    let meta: ModelMeta = read_json(dir.join("meta.json"))?;

    let (display, lines) = open_lines(dir.join("U_w.csv"))?;
    let mut u_rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("index") {
            continue;
        }
        let cols: Vec<&str> = t.split(',').collect();
        let vals: Result<Vec<f64>> = cols[1..]
            .iter()
            .map(|c| parse_f64(c, &display, lineno + 1))
            .collect();
        u_rows.push(vals?);
    }
    if u_rows.len() != meta.active.len() || u_rows.iter().any(|r| r.len() != meta.r) {
        return Err(Error::Schema(format!(
            "{display}: expected {} x {} eigenvector block",
            meta.active.len(),
            meta.r
        )));
    }
    let u = DMatrix::from_fn(u_rows.len(), meta.r, |i, j| u_rows[i][j]);

    let (display, lines) = open_lines(dir.join("lambda.csv"))?;
    let mut lambda = Vec::new();
    for (lineno, line) in lines.iter().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('k') {
            continue;
        }
        let cols: Vec<&str> = t.split(',').collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                path: display,
                line: lineno + 1,
                msg: "expected k,lambda".into(),
            });
        }
        lambda.push(parse_f64(cols[1], &display, lineno + 1)?);
    }
    if lambda.len() != meta.r {
        return Err(Error::Schema(format!(
            "{display}: expected {} eigenvalues",
            meta.r
        )));
    }

    let weights = read_weights_csv(dir.join("weights.csv"))?;
    if weights.len() != meta.n {
        return Err(Error::Schema(format!(
            "model weights cover {} nodes, expected {}",
            weights.len(),
            meta.n
        )));
    }
    Ok(SpectralModel::from_parts(
        u,
        lambda,
        weights,
        meta.active,
        meta.n,
        meta.method,
        meta.warnings,
    ))
}

// ---------------------------------------------------------------------------
// generic json + schema-validated tables

fn json_err(e: serde_json::Error) -> Error {
    Error::Schema(format!("json: {e}"))
}

pub fn write_json<T: Serialize, P: AsRef<Path>>(value: &T, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let body = serde_json::to_string_pretty(value).map_err(json_err)?;
    writeln!(out, "{body}")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>, P: AsRef<Path>>(path: P) -> Result<T> {
    let body = std::fs::read_to_string(path)?;
    serde_json::from_str(&body).map_err(json_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColType {
    Int,
    Float,
    OptFloat,
    Str,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    OptFloat(Option<f64>),
    Str(String),
}

/// In-memory CSV with a declared schema; every row is validated against the
/// column types before anything is written.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: Vec<(String, ColType)>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(columns: &[(&str, ColType)]) -> CsvTable {
        CsvTable {
            columns: columns.iter().map(|(n, t)| (n.to_string(), *t)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "row has {} cells, schema has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (cell, (name, ty)) in row.iter().zip(&self.columns) {
            let ok = matches!(
                (cell, ty),
                (Cell::Int(_), ColType::Int)
                    | (Cell::Float(_), ColType::Float)
                    | (Cell::OptFloat(_), ColType::OptFloat)
                    | (Cell::Str(_), ColType::Str)
            );
            if !ok {
                return Err(Error::Schema(format!(
                    "column {name:?} expects {ty:?}, got {cell:?}"
                )));
            }
            if let Cell::Float(v) = cell {
                if !v.is_finite() {
                    return Err(Error::Schema(format!(
                        "column {name:?} has a non-finite value"
                    )));
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = BufWriter::new(file);
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        writeln!(out, "{}", names.join(","))?;
        for row in &self.rows {
            let rendered: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Float(v) => fmt_f64(*v),
                    Cell::OptFloat(Some(v)) => fmt_f64(*v),
                    Cell::OptFloat(None) => String::new(),
                    Cell::Str(s) => s.clone(),
                })
                .collect();
            writeln!(out, "{}", rendered.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{attribute_weights, WeightStrategy};

    #[test]
    fn fmt_f64_round_trips() {
        for x in [
            0.0,
            -0.0,
            1.0,
            std::f64::consts::PI,
            1e-300,
            -3.1234567890123456e200,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn weights_csv_round_trip() {
        let coords = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let w = attribute_weights(&coords, &[1.5], 0.7).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_weights_csv(&w, f.path()).unwrap();
        let back = read_weights_csv(f.path()).unwrap();
        assert_eq!(w, back);
        assert!(matches!(back.strategy(), WeightStrategy::Attribute { .. }));
    }

    #[test]
    fn distance_raw64_round_trip_is_bitwise() {
        let d = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j) as f64).sqrt());
        let f = tempfile::NamedTempFile::new().unwrap();
        write_distance_raw64(&d, f.path()).unwrap();
        let back = read_distance_raw64(f.path()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(d[(i, j)].to_bits(), back[(i, j)].to_bits());
            }
        }
        let bytes = std::fs::metadata(f.path()).unwrap().len();
        assert_eq!(bytes, 8 + 8 * 25);
    }

    #[test]
    fn distance_csv_round_trip() {
        let d = DMatrix::from_fn(4, 4, |i, j| (i as f64 - j as f64).abs() * 0.37);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_distance_csv(&d, f.path()).unwrap();
        let back = read_distance_csv(f.path()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn embedding_csv_round_trips_with_exclusions() {
        use crate::graph::Graph;
        use crate::spectral::{eigen::EigenOptions, lase};
        use crate::weights::subgraph_weights;

        // the selected block is a path, whose second eigenvalue is positive
        let g = Graph::from_edges(8, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]).unwrap();
        let w = subgraph_weights(8, &[0, 1, 2, 3]).unwrap();
        let (emb, _) = lase(&g, &w, 2, &EigenOptions::default()).unwrap();
        assert!(emb.is_excluded(4));
        let f = tempfile::NamedTempFile::new().unwrap();
        write_embedding_csv(&emb, f.path()).unwrap();
        let back = read_embedding_csv(f.path()).unwrap();
        assert_eq!(emb, back);
    }

    #[test]
    fn latent_csv_round_trips() {
        use crate::latent::{sample_latent, SupportSpec};
        let support = SupportSpec::UniformBox {
            lo: vec![0.0, -1.0],
            hi: vec![4.0, 1.0],
        };
        let s = sample_latent(&support, 12, 3).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_latent_csv(&s, f.path()).unwrap();
        let back = read_latent_csv(f.path()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn model_directory_round_trips() {
        use crate::graph::Graph;
        use crate::spectral::{eigen::EigenOptions, lase};
        use crate::weights::{WeightStrategy, WeightVector};

        let g = Graph::from_edges(
            6,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 0),
                (0, 3),
                (1, 4),
            ],
        )
        .unwrap();
        let w = WeightVector::from_raw(
            vec![1.0, 0.5, 2.0, 1.5, 0.25, 1.0],
            WeightStrategy::Custom {
                name: "demo".into(),
            },
        )
        .unwrap();
        let (_, model) = lase(&g, &w, 2, &EigenOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path().join("m")).unwrap();
        let back = load_model(dir.path().join("m")).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn mercer_csv_is_long_format() {
        use crate::latent::mercer::{mercer_features_grid, GridMeasure};
        use crate::latent::KernelSpec;
        let m = GridMeasure::uniform_1d(0.0, 2.0, 10).unwrap();
        let f = mercer_features_grid(&KernelSpec::GaussianHalf, &m, 3).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        write_mercer_csv(&f, file.path()).unwrap();
        let body = std::fs::read_to_string(file.path()).unwrap();
        let mut lines = body.lines();
        assert_eq!(lines.next().unwrap(), "x,k,lambda_k,phi_k");
        assert_eq!(body.lines().count(), 1 + 10 * 3);
    }

    #[test]
    fn csv_table_validates_schema() {
        let mut t = CsvTable::new(&[("a", ColType::Int), ("b", ColType::Float)]);
        t.push(vec![Cell::Int(1), Cell::Float(0.5)]).unwrap();
        assert!(t.push(vec![Cell::Int(1)]).is_err());
        assert!(t.push(vec![Cell::Float(1.0), Cell::Float(0.5)]).is_err());
        assert!(t.push(vec![Cell::Int(1), Cell::Float(f64::NAN)]).is_err());
    }
}
