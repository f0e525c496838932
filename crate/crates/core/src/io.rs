//! Text formats: edge lists, DIMACS `.col`, vertex sets and the CSV/JSON
//! serialisations of labellings, colourings, assignments and embeddings.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder};

/// Parses a graph in either supported format.
///
/// * edge list: first non-comment line `n m`, then `m` lines `u v` (0-based);
/// * DIMACS: `c` comments, one `p edge n m` line, `e u v` lines (1-based).
///
/// Lines starting with `#` or `c ` are comments in both.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !is_comment(l)).unwrap_or("");
    if first.starts_with('p') {
        parse_dimacs(text)
    } else {
        parse_edge_list(text)
    }
}

fn is_comment(line: &str) -> bool {
    line.starts_with('#') || line == "c" || line.starts_with("c ")
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad {what}") })
}

fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut builder: Option<GraphBuilder> = None;
    let mut declared = 0;
    let mut seen = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || is_comment(line) {
            continue;
        }
        let mut toks = line.split_whitespace();
        match builder.as_mut() {
            None => {
                let n = parse_usize(toks.next(), lineno, "vertex count")?;
                declared = parse_usize(toks.next(), lineno, "edge count")?;
                builder = Some(GraphBuilder::new(n));
            }
            Some(b) => {
                let u = parse_usize(toks.next(), lineno, "endpoint")?;
                let v = parse_usize(toks.next(), lineno, "endpoint")?;
                b.add_edge(u, v).map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
                seen += 1;
            }
        }
    }
    let b = builder.ok_or(Error::Parse { line: 0, msg: "empty input".into() })?;
    if seen != declared {
        return Err(Error::Parse { line: 0, msg: format!("header declares {declared} edges, found {seen}") });
    }
    Ok(b.build())
}

fn parse_dimacs(text: &str) -> Result<Graph> {
    let mut builder: Option<GraphBuilder> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || is_comment(line) {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("p") => {
                let _format = toks.next();
                let n = parse_usize(toks.next(), lineno, "vertex count")?;
                builder = Some(GraphBuilder::new(n));
            }
            Some("e") => {
                let b = builder.as_mut().ok_or(Error::Parse { line: lineno, msg: "edge before problem line".into() })?;
                let u = parse_usize(toks.next(), lineno, "endpoint")?;
                let v = parse_usize(toks.next(), lineno, "endpoint")?;
                if u == 0 || v == 0 {
                    return Err(Error::Parse { line: lineno, msg: "DIMACS ids are 1-based".into() });
                }
                // DIMACS files often list both orientations; duplicates collapse.
                b.add_edge(u - 1, v - 1).map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
            }
            Some(other) => return Err(Error::Parse { line: lineno, msg: format!("unknown record '{other}'") }),
            None => {}
        }
    }
    builder.map(GraphBuilder::build).ok_or(Error::Parse { line: 0, msg: "missing problem line".into() })
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    parse_graph(&fs::read_to_string(path)?)
}

/// Writes the 0-based edge-list format.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", g.n(), g.edge_count())?;
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

pub fn edge_list_string(g: &Graph) -> String {
    let mut buf = Vec::new();
    write_edge_list(g, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

/// Reads a vertex set: whitespace/comma separated 0-based ids.
pub fn parse_vertex_set(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            out.push(tok.parse().map_err(|_| Error::Parse { line: idx + 1, msg: format!("bad id '{tok}'") })?);
        }
    }
    Ok(out)
}

pub fn read_vertex_set(path: &Path) -> Result<Vec<usize>> {
    parse_vertex_set(&fs::read_to_string(path)?)
}

/// Writes `header` then rows of `vertex,value` for every index of `values`.
pub fn write_vertex_values<W: Write>(header: (&str, &str), values: &[usize], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([header.0, header.1])?;
    for (v, val) in values.iter().enumerate() {
        w.write_record([v.to_string(), val.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a two-column `vertex,value` CSV with a header into a dense vector.
pub fn read_vertex_values<R: Read>(input: R) -> Result<Vec<usize>> {
    let mut r = csv::Reader::from_reader(input);
    let mut pairs = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| -> Result<usize> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse { line: pairs.len() + 2, msg: "bad vertex,value row".into() })
        };
        pairs.push((get(0)?, get(1)?));
    }
    let n = pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0);
    let mut out = vec![usize::MAX; n];
    for (v, val) in pairs {
        out[v] = val;
    }
    if out.contains(&usize::MAX) {
        return Err(Error::Parse { line: 0, msg: "vertex ids are not dense".into() });
    }
    Ok(out)
}

/// Header line of a cell file (`vertex,i,j`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellHeader {
    pub r: usize,
    pub k: usize,
    pub eps: Option<f64>,
    pub d: Option<f64>,
    pub p: Option<f64>,
    /// The special set `X` of an assignment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub special: Vec<usize>,
}

/// Writes a JSON header line, then `vertex,i,j` rows with 1-based `i, j`;
/// `None` (a vertex of `V_0`) is written as `0,0`.
pub fn write_cells<W: Write>(header: &CellHeader, cells: &[Option<(usize, usize)>], mut out: W) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string(header)?)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex", "i", "j"])?;
    for (v, c) in cells.iter().enumerate() {
        let (i, j) = c.map_or((0, 0), |(i, j)| (i + 1, j + 1));
        w.write_record([v.to_string(), i.to_string(), j.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_cells`]; cells come back 0-based.
pub fn read_cells<R: Read>(input: R) -> Result<(CellHeader, Vec<Option<(usize, usize)>>)> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    input.read_line(&mut first)?;
    let header: CellHeader =
        serde_json::from_str(first.trim()).map_err(|e| Error::Parse { line: 1, msg: format!("header: {e}") })?;
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (idx, rec) in r.deserialize::<(usize, usize, usize)>().enumerate() {
        let (v, i, j) = rec.map_err(|e| Error::Parse { line: idx + 3, msg: e.to_string() })?;
        let cell = match (i, j) {
            (0, 0) => None,
            (i, j) if (1..=header.r).contains(&i) && (1..=header.k).contains(&j) => Some((i - 1, j - 1)),
            _ => return Err(Error::Parse { line: idx + 3, msg: format!("cell ({i},{j}) outside [r]x[k]") }),
        };
        rows.push((v, cell));
    }
    let n = rows.len();
    let mut out = vec![None; n];
    let mut seen = vec![false; n];
    for (v, cell) in rows {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::Parse { line: 0, msg: "vertex ids are not dense".into() });
        }
        out[v] = cell;
    }
    Ok((header, out))
}

/// Writes `h_vertex,g_vertex` rows for the embedded vertices.
pub fn write_embedding<W: Write>(e: &Embedding, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h_vertex", "g_vertex"])?;
    for (x, v) in e.pairs() {
        w.write_record([x.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embedding<R: Read>(input: R, h_vertices: usize, g_vertices: usize) -> Result<Embedding> {
    let mut r = csv::Reader::from_reader(input);
    let mut pairs = Vec::new();
    for (idx, rec) in r.deserialize::<(usize, usize)>().enumerate() {
        pairs.push(rec.map_err(|e| Error::Parse { line: idx + 2, msg: e.to_string() })?);
    }
    Embedding::from_pairs(h_vertices, g_vertices, pairs)
}
