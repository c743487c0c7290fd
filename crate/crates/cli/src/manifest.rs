//! Pool manifests: a JSON array of `{pool_id, size, quality_rank,
//! description}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{input, CliResult};
use crate::output::read_text;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub pool_id: String,
    pub size: u64,
    /// 1 is the best bucket.
    pub quality_rank: u32,
    #[serde(default)]
    pub description: String,
}

/// Entries sorted by quality rank.
pub fn parse_manifest(text: &str) -> CliResult<Vec<ManifestEntry>> {
    let mut entries: Vec<ManifestEntry> =
        serde_json::from_str(text).map_err(|e| input(format!("manifest line {}: {e}", e.line())))?;
    if entries.is_empty() {
        return Err(input("manifest lists no pools"));
    }
    for (i, e) in entries.iter().enumerate() {
        if e.pool_id.is_empty() {
            return Err(input(format!("manifest entry {} has an empty pool_id", i + 1)));
        }
        if e.size == 0 {
            return Err(input(format!("pool {} has size 0", e.pool_id)));
        }
        if entries[..i].iter().any(|o| o.pool_id == e.pool_id) {
            return Err(input(format!("pool {} is listed twice", e.pool_id)));
        }
    }
    entries.sort_by_key(|e| e.quality_rank);
    for (i, e) in entries.iter().enumerate() {
        if e.quality_rank as usize != i + 1 {
            return Err(input(format!(
                "quality ranks must be unique and run 1..={} (pool {} has rank {})",
                entries.len(),
                e.pool_id,
                e.quality_rank
            )));
        }
    }
    Ok(entries)
}

pub fn read_manifest(path: &Path) -> CliResult<Vec<ManifestEntry>> {
    parse_manifest(&read_text(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_by_rank() {
        let m = parse_manifest(
            r#"[{"pool_id":"t20","size":12800000,"quality_rank":2,"description":"next"},
                {"pool_id":"t10","size":12800000,"quality_rank":1}]"#,
        )
        .unwrap();
        assert_eq!(m[0].pool_id, "t10");
        assert_eq!(m[1].description, "next");
    }

    #[test]
    fn rejects_bad_ranks_and_ids() {
        for text in [
            r#"[{"pool_id":"a","size":1,"quality_rank":1},{"pool_id":"b","size":1,"quality_rank":3}]"#,
            r#"[{"pool_id":"a","size":1,"quality_rank":1},{"pool_id":"b","size":1,"quality_rank":1}]"#,
            r#"[{"pool_id":"a","size":1,"quality_rank":1},{"pool_id":"a","size":1,"quality_rank":2}]"#,
            r#"[{"pool_id":"a","size":0,"quality_rank":1}]"#,
            r#"[{"pool_id":"a","size":1,"quality_rank":1,"colour":"red"}]"#,
            r#"[]"#,
            r#"{"pool_id":"a"}"#,
        ] {
            assert!(parse_manifest(text).is_err(), "{text}");
        }
    }
}
