//! Ensemble files: a CSV with a header row of grid times and one row per
//! path, plus a `key = value` metadata sidecar next to it (`<csv>.meta`).
//! Values are written in shortest round-trip form, so reading back gives
//! the same bits.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{generator_from_keys, generator_to_keys};
use crate::error::{Error, Result};
use crate::kv::{format_f64, KeyValues};
use crate::margins::MarginSpec;
use crate::processes::{EnsembleDescriptor, MixingDf, PathEnsemble, ProcessKind};

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

pub fn descriptor_to_keys(d: &EnsembleDescriptor) -> KeyValues {
    let mut kv = KeyValues::new();
    match d.kind {
        ProcessKind::MaxStable => kv.set("kind", "max_stable"),
        ProcessKind::Pareto { mixing, clip } => {
            kv.set("kind", "pareto");
            kv.set("mixing", mixing.name());
            kv.set("clip", format_f64(clip));
        }
    }
    generator_to_keys(&d.generator, &mut kv);
    kv.set("grid", d.grid_size);
    kv.set("paths", d.n_paths);
    kv.set("stream_key", d.stream_key);
    if let Some(cap) = d.mixing_cap {
        kv.set("mixing_cap", format_f64(cap));
    }
    if let Some(eps) = d.eps_trunc {
        kv.set("eps_trunc", format_f64(eps));
    }
    if let Some(m) = d.margin {
        kv.set("margin", m.name());
    }
    kv
}

pub fn descriptor_from_keys(kv: &KeyValues) -> Result<EnsembleDescriptor> {
    let kind = match kv.get("kind") {
        Some("max_stable") => ProcessKind::MaxStable,
        Some("pareto") => ProcessKind::Pareto {
            mixing: MixingDf::from_name(kv.get("mixing").unwrap_or("uniform"))?,
            clip: kv.require("clip")?,
        },
        other => return Err(Error::Parse(format!("unknown or missing ensemble kind {other:?}"))),
    };
    Ok(EnsembleDescriptor {
        kind,
        generator: generator_from_keys(kv)?,
        grid_size: kv.require("grid")?,
        n_paths: kv.require("paths")?,
        stream_key: kv.require("stream_key")?,
        mixing_cap: kv.get_parsed("mixing_cap")?,
        eps_trunc: kv.get_parsed("eps_trunc")?,
        margin: kv.get("margin").map(MarginSpec::from_name).transpose()?,
    })
}

/// Ensemble as CSV text (header row of `t_i`, then one row per path).
pub fn ensemble_to_csv(ens: &PathEnsemble) -> String {
    let mut out = String::new();
    let header: Vec<String> = ens.grid().points().into_iter().map(format_f64).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in ens.map_paths(|p| p.iter().map(|&v| format_f64(v)).collect::<Vec<_>>().join(",")) {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn ensemble_from_csv(text: &str, descriptor: EnsembleDescriptor) -> Result<PathEnsemble> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty ensemble file".into()))?;
    let times = parse_row(header)?;
    let expected = crate::grid::Grid::new(descriptor.grid_size)?.points();
    if times.len() != expected.len() {
        return Err(Error::GridMismatch { expected: expected.len(), got: times.len() });
    }
    if times.iter().zip(&expected).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err(Error::Parse("header times do not match the grid t_i = i/n".into()));
    }
    let paths = lines.filter(|l| !l.is_empty()).map(parse_row).collect::<Result<Vec<_>>>()?;
    PathEnsemble::from_paths(descriptor, paths)
}

fn parse_row(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("CSV entry '{v}': {e}"))))
        .collect()
}

pub fn write_ensemble(ens: &PathEnsemble, csv: &Path) -> Result<()> {
    fs::write(csv, ensemble_to_csv(ens))?;
    fs::write(sidecar_path(csv), descriptor_to_keys(ens.descriptor()).to_text())?;
    Ok(())
}

pub fn read_ensemble(csv: &Path) -> Result<PathEnsemble> {
    let meta = KeyValues::parse(&fs::read_to_string(sidecar_path(csv))?)?;
    ensemble_from_csv(&fs::read_to_string(csv)?, descriptor_from_keys(&meta)?)
}
