//! Dataset CSV format: header `menu,choice`, one observation per line, the
//! menu written as its labels sorted ascending and joined by `|`.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use ramkit::domain::{ChoiceDataset, GrandSet, Menu, MenuIndex, Observation};
use ramkit::estimation::observed_index;

#[derive(Debug, Clone)]
pub struct Ingested {
    pub grand: GrandSet,
    pub dataset: ChoiceDataset,
    /// Limited-mode index over the observed menus.
    pub index: Arc<MenuIndex>,
}

fn valid_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn ingest_csv(path: &Path) -> Result<Ingested> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    ingest_reader(file).with_context(|| format!("reading {}", path.display()))
}

/// Parses a dataset; the grand set is the sorted union of all labels seen.
pub fn ingest_reader<R: Read>(reader: R) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().context("missing header")?.clone();
    if headers.iter().collect::<Vec<_>>() != ["menu", "choice"] {
        bail!("line 1: expected header `menu,choice`, found `{}`", headers.iter().collect::<Vec<_>>().join(","));
    }
    let mut rows: Vec<(u64, Vec<String>, String)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| anyhow!("malformed row: {e}"))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            bail!("line {line}: expected 2 fields, found {}", rec.len());
        }
        let menu: Vec<String> = rec[0].split('|').map(|s| s.trim().to_string()).collect();
        let choice = rec[1].to_string();
        if let Some(bad) = menu.iter().chain(std::iter::once(&choice)).find(|l| !valid_label(l)) {
            bail!("line {line}: invalid label `{bad}`");
        }
        if menu.iter().collect::<BTreeSet<_>>().len() != menu.len() {
            bail!("line {line}: repeated label in menu `{}`", &rec[0]);
        }
        if menu.len() < 2 {
            bail!("line {line}: menu `{}` has fewer than two alternatives", &rec[0]);
        }
        if !menu.contains(&choice) {
            bail!("line {line}: choice not in menu (`{choice}` not in `{}`)", &rec[0]);
        }
        rows.push((line, menu, choice));
    }
    if rows.is_empty() {
        bail!("empty file: no observations");
    }
    let labels: BTreeSet<&str> = rows.iter().flat_map(|(_, m, _)| m.iter().map(String::as_str)).collect();
    let grand = GrandSet::new(labels.into_iter().map(str::to_string))?;
    let mut obs = Vec::with_capacity(rows.len());
    for (_, menu, choice) in &rows {
        let menu = Menu::from_ids(menu.iter().map(|l| grand.id_of(l)).collect::<ramkit::Result<Vec<_>>>()?);
        obs.push(Observation { menu, choice: grand.id_of(choice)? });
    }
    let dataset = ChoiceDataset::new(grand.size(), obs)?;
    let index = Arc::new(observed_index(&dataset, 1)?);
    Ok(Ingested { grand, dataset, index })
}

pub fn write_dataset<W: Write>(grand: &GrandSet, data: &ChoiceDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["menu", "choice"])?;
    for o in data.observations() {
        w.write_record([grand.format_menu(o.menu).as_str(), grand.label(o.choice)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(grand: &GrandSet, data: &ChoiceDataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_dataset(grand, data, std::io::BufWriter::new(file))
}
